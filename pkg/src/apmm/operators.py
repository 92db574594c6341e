"""Finite-volume operator blocks on the tensor (x, y) grid.

Fields come in two layouts: macro arrays of shape (nx,) on the spatial cell
centres, and micro arrays of shape (nx, ny) whose fast axis is periodic.
All operators act slice-by-slice in x and vectorise over the batch.

Dirichlet wall data enters through ghost values ``u_ghost = 2*u_wall -
u_first`` for the x-direction stencils.  The singular periodic solve in y
fixes its
nullspace with a Lagrange-multiplier border (no node pinning); the shifted
solves are nonsingular cyclic tridiagonal systems handled by a
Sherman-Morrison reduction to two ordinary tridiagonal sweeps, with the
factorizations cached on the coefficient tables across time steps.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .mesh import FloatArray
from .problem import CoefficientTables

_MEAN_PRE_TOL = 1e-10


def y_average(u: FloatArray) -> FloatArray:
    """Average over the periodic fast axis (exact trapezoid on equal nodes)."""
    return np.asarray(u, dtype=float).mean(axis=-1)


def remove_y_average(u: FloatArray) -> FloatArray:
    """Fluctuating part of a micro field: subtract the per-slice y-average."""
    u = np.asarray(u, dtype=float)
    return u - u.mean(axis=-1, keepdims=True)


class _CyclicTridiagonalFactor:
    """Reusable factorization of a batch of cyclic tridiagonal systems.

    Row j of a system couples unknowns j-1, j, j+1 modulo n, so the matrix
    is tridiagonal plus two corner entries: ``sub[:, 0]`` at (0, n-1) and
    ``sup[:, -1]`` at (n-1, 0).  The corners are removed by a rank-one
    Sherman-Morrison update; the remaining tridiagonal factor is stored as
    its forward-elimination coefficients so repeated solves cost one sweep.
    Batches of shape (1, n) broadcast over any number of right-hand sides.
    """

    def __init__(self, sub: FloatArray, diag: FloatArray, sup: FloatArray):
        m, n = diag.shape
        if n < 3:
            raise ValueError("cyclic tridiagonal systems need at least 3 unknowns")
        gamma = -diag[:, 0]
        d = diag.copy()
        d[:, 0] = 2.0 * diag[:, 0]
        d[:, -1] = diag[:, -1] - sup[:, -1] * sub[:, 0] / gamma

        cp = np.empty((m, n))
        den = np.empty((m, n))
        den[:, 0] = d[:, 0]
        cp[:, 0] = sup[:, 0] / den[:, 0]
        for j in range(1, n):
            den[:, j] = d[:, j] - sub[:, j] * cp[:, j - 1]
            cp[:, j] = sup[:, j] / den[:, j]
        self._sub = sub
        self._cp = cp
        self._den = den
        self._v_last = sub[:, 0] / gamma

        u = np.zeros((m, n))
        u[:, 0] = gamma
        u[:, -1] += sup[:, -1]
        z = self._tridiagonal_solve(u)
        self._z = z
        self._sm_denom = 1.0 + z[:, 0] + self._v_last * z[:, -1]

    def _tridiagonal_solve(self, rhs: FloatArray) -> FloatArray:
        n = self._den.shape[1]
        out = np.empty(np.broadcast_shapes(rhs.shape, self._den.shape))
        out[:, 0] = rhs[:, 0] / self._den[:, 0]
        for j in range(1, n):
            out[:, j] = (rhs[:, j] - self._sub[:, j] * out[:, j - 1]) / self._den[:, j]
        for j in range(n - 2, -1, -1):
            out[:, j] -= self._cp[:, j] * out[:, j + 1]
        return out

    def solve(self, rhs: FloatArray) -> FloatArray:
        y = self._tridiagonal_solve(rhs)
        v_dot_y = y[:, 0] + self._v_last * y[:, -1]
        return y - self._z * (v_dot_y / self._sm_denom)[:, None]


class GridOperators:
    """Discrete diffusion blocks bound to one set of coefficient tables.

    Holds the lazily built solver factorizations, so a time stepper reuses
    them for the whole run.  All ``bc`` arguments are ``(left, right)``
    Dirichlet wall data: scalars for macro fields, length-ny profiles (or
    scalars) for micro fields; ``None`` means homogeneous walls.
    """

    def __init__(self, tables: CoefficientTables):
        self.tables = tables
        self.xmesh = tables.xmesh
        self.ymesh = tables.ymesh
        self.nx = tables.xmesh.n_cells
        self.ny = tables.ymesh.n_points
        self.dx = tables.xmesh.dx
        self.dy = tables.ymesh.dy

    # -- helpers ------------------------------------------------------------

    def _as_micro(self, u: FloatArray) -> FloatArray:
        u = np.asarray(u, dtype=float)
        if u.ndim == 1:
            if u.shape != (self.nx,):
                raise ValueError(f"macro field has shape {u.shape}, expected ({self.nx},)")
            return np.broadcast_to(u[:, None], (self.nx, self.ny))
        if u.shape != (self.nx, self.ny):
            raise ValueError(
                f"micro field has shape {u.shape}, expected ({self.nx}, {self.ny})"
            )
        return u

    def _traces(self, bc) -> tuple[FloatArray, FloatArray]:
        if bc is None:
            zero = np.zeros(self.ny)
            return zero, zero
        left, right = bc
        left = np.broadcast_to(np.asarray(left, dtype=float), (self.ny,))
        right = np.broadcast_to(np.asarray(right, dtype=float), (self.ny,))
        return left, right

    def _with_ghosts(self, u: FloatArray, bc) -> FloatArray:
        """Pad a field with Dirichlet ghost rows (2*wall - first interior)."""
        u2 = self._as_micro(u)
        left, right = self._traces(bc)
        padded = np.empty((self.nx + 2, self.ny))
        padded[1:-1] = u2
        padded[0] = 2.0 * left - u2[0]
        padded[-1] = 2.0 * right - u2[-1]
        return padded

    # -- fast-direction (periodic) operators --------------------------------

    def apply_y_diffusion(self, u: FloatArray) -> FloatArray:
        """Flux-form periodic diffusion in y at frozen x: d/dy(a d/dy u)."""
        u = np.asarray(u, dtype=float)
        if u.shape != (self.nx, self.ny):
            raise ValueError(
                f"micro field has shape {u.shape}, expected ({self.nx}, {self.ny})"
            )
        ay = self.tables.y_interfaces
        flux = ay * (np.roll(u, -1, axis=1) - u) / self.dy**2
        return flux - np.roll(flux, 1, axis=1)

    def _ay_rows(self) -> FloatArray:
        ay = self.tables.y_interfaces
        return ay[:1] if self.tables.x_uniform else ay

    def solve_y_diffusion(self, rhs: FloatArray) -> FloatArray:
        """Solve the singular periodic y-diffusion problem per slice.

        The right-hand side must have (numerically) zero y-average per
        slice; the solution is returned with zero y-average.  The bordered
        Lagrange-multiplier system is LU-factored once per slice and cached.
        """
        rhs = np.asarray(rhs, dtype=float)
        if rhs.shape != (self.nx, self.ny):
            raise ValueError(
                f"right-hand side has shape {rhs.shape}, expected ({self.nx}, {self.ny})"
            )
        scale = float(np.max(np.abs(rhs)))
        if scale > 0.0:
            worst = float(np.max(np.abs(rhs.mean(axis=-1))))
            if worst > _MEAN_PRE_TOL * scale:
                raise ValueError(
                    "solve_y_diffusion requires zero-mean data per slice "
                    f"(worst slice mean {worst:.3e} vs scale {scale:.3e})"
                )

        factors = self.tables.solver_cache.get("bordered_lu")
        if factors is None:
            factors = [self._bordered_matrix_lu(row) for row in self._ay_rows()]
            self.tables.solver_cache["bordered_lu"] = factors

        n = self.ny
        if self.tables.x_uniform:
            stacked = np.zeros((n + 1, self.nx))
            stacked[:n] = rhs.T
            sol = lu_solve(factors[0], stacked)
            w = sol[:n].T
        else:
            w = np.empty_like(rhs)
            padded = np.zeros(n + 1)
            for i in range(self.nx):
                padded[:n] = rhs[i]
                w[i] = lu_solve(factors[i], padded)[:n]
        return w - w.mean(axis=-1, keepdims=True)

    def _bordered_matrix_lu(self, ay_row: FloatArray):
        n = self.ny
        inv_dy2 = 1.0 / self.dy**2
        ay_prev = np.roll(ay_row, 1)
        mat = np.zeros((n + 1, n + 1))
        idx = np.arange(n)
        mat[idx, idx] = -(ay_row + ay_prev) * inv_dy2
        mat[idx, (idx + 1) % n] += ay_row * inv_dy2
        mat[idx, (idx - 1) % n] += ay_prev * inv_dy2
        mat[:n, n] = 1.0
        mat[n, :n] = 1.0
        return lu_factor(mat)

    def solve_shifted(self, rhs: FloatArray, c: float) -> FloatArray:
        """Solve ``(I - c * Ly) w = rhs`` per slice for c >= 0.

        The system is cyclic tridiagonal and strictly diagonally dominant;
        its factorization is cached per value of c.  The y-average of the
        result is pinned to the y-average of the data, which the exact
        solve preserves identically.
        """
        rhs = np.asarray(rhs, dtype=float)
        if rhs.shape != (self.nx, self.ny):
            raise ValueError(
                f"right-hand side has shape {rhs.shape}, expected ({self.nx}, {self.ny})"
            )
        if not np.isfinite(c) or c < 0.0:
            raise ValueError(f"shift must be finite and non-negative, got {c}")
        key = ("shifted", float(c))
        factor = self.tables.solver_cache.get(key)
        if factor is None:
            ay = self._ay_rows()
            r = c / self.dy**2
            ay_prev = np.roll(ay, 1, axis=1)
            sub = -r * ay_prev
            sup = -r * ay
            diag = 1.0 + r * (ay + ay_prev)
            factor = _CyclicTridiagonalFactor(sub, diag, sup)
            self.tables.solver_cache[key] = factor
        w = factor.solve(rhs)
        w += (rhs.mean(axis=-1) - w.mean(axis=-1))[:, None]
        return w

    # -- slow-direction and mixed operators ----------------------------------

    def apply_x_diffusion(self, u: FloatArray, bc=None) -> FloatArray:
        """Flux-form diffusion in x: d/dx(a d/dx u), Dirichlet walls via ghosts.

        Macro input is broadcast across the fast axis; the result is always
        a micro field because the coefficient varies in y.
        """
        padded = self._with_ghosts(u, bc)
        ax = self.tables.x_interfaces
        flux = ax * (padded[1:] - padded[:-1]) / self.dx**2
        return flux[1:] - flux[:-1]

    def apply_mixed_derivatives(self, u: FloatArray, bc=None) -> FloatArray:
        """The cross-derivative block d/dx(a d/dy u) + d/dy(a d/dx u).

        The first term forms ``a * du/dy`` at cell centres (periodic centred
        differences in y) and differences it in x with centred stencils,
        falling back to one-sided second-order rows at the two boundary
        cells so no coefficient value outside the domain is ever needed.
        It vanishes identically for y-independent fields.  The second term
        differences ``a * du/dx`` between the periodic half-nodes, so its
        y-average telescopes to exactly zero for any input; Dirichlet traces
        enter it through the usual ghost rule.
        """
        u2 = self._as_micro(u)
        ay = self.tables.y_interfaces

        r = self.tables.centers * (np.roll(u2, -1, axis=1) - np.roll(u2, 1, axis=1)) / (
            2.0 * self.dy
        )
        term1 = np.empty_like(r)
        term1[1:-1] = (r[2:] - r[:-2]) / (2.0 * self.dx)
        term1[0] = (-3.0 * r[0] + 4.0 * r[1] - r[2]) / (2.0 * self.dx)
        term1[-1] = (3.0 * r[-1] - 4.0 * r[-2] + r[-3]) / (2.0 * self.dx)

        padded = self._with_ghosts(u, bc)
        dudx = (padded[2:] - padded[:-2]) / (2.0 * self.dx)
        s = ay * 0.5 * (dudx + np.roll(dudx, -1, axis=1))
        term2 = (s - np.roll(s, 1, axis=1)) / self.dy
        return term1 + term2

    def apply_effective(self, macro: FloatArray, bc=None) -> FloatArray:
        """Upscaled diffusion block acting on a macro field.

        Combines the y-averaged x-diffusion with the y-averaged
        cross-derivative of the periodic solve of the fluctuating
        cross-derivative data.  For a y-independent coefficient this reduces
        exactly to the averaged x-diffusion; in general it is a second-order
        discretisation of diffusion with the harmonic-average coefficient.
        No wall data is needed for the inner field: the only part of the
        cross operator that feels the traces has an exactly vanishing
        y-average.
        """
        macro = np.asarray(macro, dtype=float)
        if macro.shape != (self.nx,):
            raise ValueError(f"macro field has shape {macro.shape}, expected ({self.nx},)")
        cross = self.apply_mixed_derivatives(macro, bc)
        w = self.solve_y_diffusion(remove_y_average(cross))
        cross_w = self.apply_mixed_derivatives(w)
        diff = self.apply_x_diffusion(macro, bc)
        return y_average(diff) - y_average(cross_w)
