"""Experiment drivers: regime comparison, AP degeneracy, convergence orders.

Every CSV is written deterministically — fixed column order, floats rendered
with 17 significant digits, ``\\n`` line endings, no timestamps — so identical
configurations produce byte-identical files.  Wall-clock timings live only in
the in-memory report objects.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .mesh import FloatArray, SpatialMesh
from .problem import ConfigError, benchmark_problem, constant_coefficient, ProblemSpec
from .reconstruct import (
    derivative_on_fine,
    reconstruct_homogenized,
    reconstruct_micro_macro,
)
from .solvers import (
    MicroMacroSolver,
    run_homogenized,
    run_micro_macro,
    run_reference,
)


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def error_norms(
    u: FloatArray, v: FloatArray, mesh: SpatialMesh
) -> tuple[float, float]:
    """Max norm and normalized discrete L2 norm of u - v on the mesh.

    The L2 norm carries the cell-width weight, sqrt(dx * sum d**2), so a
    constant difference c gives (|c|, |c|) on the unit domain.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError(f"shape mismatch: {u.shape} vs {v.shape}")
    if u.shape != (mesh.n_cells,):
        raise ValueError(f"fields have shape {u.shape}, mesh has {mesh.n_cells} cells")
    d = u - v
    l_inf = float(np.max(np.abs(d)))
    l2 = float(math.sqrt(mesh.dx * float(np.dot(d, d))))
    return l_inf, l2


def reference_cells(
    epsilon: float, periods_per_oscillation: float = 20.0, floor: int = 1024
) -> int:
    """Fine-mesh size for the reference run: a power of two, at least `floor`
    cells and at least `periods_per_oscillation` cells per coefficient period."""
    needed = periods_per_oscillation / float(epsilon)
    n = int(floor)
    while n < needed:
        n *= 2
    return n


@dataclass(frozen=True)
class RegimeRecord:
    """Errors of both coarse schemes against the reference for one epsilon.

    All errors are absolute norms of the reconstructed fields on the
    reference mesh; the *_du_* entries compare the numerical x-derivatives.
    """

    epsilon: float
    n_ref: int
    n_x: int
    n_y: int
    t_end: float
    error_u_inf_emm: float
    error_u_l2_emm: float
    error_du_inf_emm: float
    error_du_l2_emm: float
    error_u_inf_hmm: float
    error_u_l2_hmm: float
    error_du_inf_hmm: float
    error_du_l2_hmm: float
    wall_time_ref: float
    wall_time_emm: float
    wall_time_hmm: float
    csv_path: str

    def __post_init__(self):
        pairs = [
            (self.error_u_inf_emm, self.error_u_l2_emm),
            (self.error_du_inf_emm, self.error_du_l2_emm),
            (self.error_u_inf_hmm, self.error_u_l2_hmm),
            (self.error_du_inf_hmm, self.error_du_l2_hmm),
        ]
        for l_inf, l2 in pairs:
            if not (np.isfinite(l_inf) and np.isfinite(l2)):
                raise ValueError("error norms must be finite")
            if l_inf < 0.0 or l2 < 0.0:
                raise ValueError("error norms must be nonnegative")
            if l2 > l_inf * (1.0 + 1e-12) + 1e-300:
                raise ValueError(f"L2 error {l2} exceeds max error {l_inf}")


@dataclass(frozen=True)
class RunReport:
    """Collected regime records plus the path of the summary CSV."""

    records: tuple[RegimeRecord, ...]
    summary_path: str | None

    def record_for(self, epsilon: float) -> RegimeRecord:
        for rec in self.records:
            if rec.epsilon == epsilon:
                return rec
        raise KeyError(f"no record for epsilon={epsilon}")


_REGIME_COLUMNS = ["x", "u_ref", "u_emm", "u_hmm", "du_ref", "du_emm", "du_hmm"]
_SUMMARY_COLUMNS = [
    "eps",
    "scheme",
    "error_u_inf",
    "error_u_l2",
    "error_du_inf",
    "error_du_l2",
]


def _write_rows(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _write_summary(path: Path, records) -> None:
    rows = []
    for rec in records:
        rows.append(
            [
                _fmt(rec.epsilon),
                "emm",
                _fmt(rec.error_u_inf_emm),
                _fmt(rec.error_u_l2_emm),
                _fmt(rec.error_du_inf_emm),
                _fmt(rec.error_du_l2_emm),
            ]
        )
        rows.append(
            [
                _fmt(rec.epsilon),
                "hmm",
                _fmt(rec.error_u_inf_hmm),
                _fmt(rec.error_u_l2_hmm),
                _fmt(rec.error_du_inf_hmm),
                _fmt(rec.error_du_l2_hmm),
            ]
        )
    _write_rows(path, _SUMMARY_COLUMNS, rows)


def regime_comparison(
    eps_values=(1.0, 0.1, 0.01),
    out_dir: str | Path = "figure1",
    t_end: float = 0.02,
    n_x: int = 64,
    n_y: int = 16,
    ref_cells: int | None = None,
    periods_per_oscillation: float = 20.0,
    bc_mode: str = "dirichlet_corrector",
) -> RunReport:
    """Run reference, splitting, and homogenized solvers across the regimes.

    For each epsilon the coarse solutions are reconstructed onto the
    reference mesh, the pointwise curves go to one CSV per regime, and the
    error norms are appended to summary.csv.  Files for completed regimes
    are flushed before later regimes run, so a failing case leaves the
    earlier results on disk.
    """
    eps_values = tuple(float(e) for e in eps_values)
    if not eps_values:
        return RunReport(records=(), summary_path=None)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary_path = out / "summary.csv"

    records: list[RegimeRecord] = []
    for eps in eps_values:
        problem = benchmark_problem(eps, t_end=t_end, bc_mode=bc_mode)
        n_ref = (
            reference_cells(eps, periods_per_oscillation)
            if ref_cells is None
            else int(ref_cells)
        )

        t0 = time.perf_counter()
        ref = run_reference(problem, n_ref)
        wall_ref = time.perf_counter() - t0

        t0 = time.perf_counter()
        emm = run_micro_macro(problem, n_x, n_y)
        wall_emm = time.perf_counter() - t0

        t0 = time.perf_counter()
        hmm = run_homogenized(problem, emm.hom)
        wall_hmm = time.perf_counter() - t0

        fine = ref.mesh
        u_ref = ref.final
        u_emm = reconstruct_micro_macro(
            emm.final_macro, emm.final_micro, eps, emm.xmesh, fine
        )
        u_hmm = reconstruct_homogenized(hmm.final, hmm.corrector, eps, hmm.mesh, fine)
        du_ref = derivative_on_fine(u_ref, fine)
        du_emm = derivative_on_fine(u_emm, fine)
        du_hmm = derivative_on_fine(u_hmm, fine)

        u_inf_e, u_l2_e = error_norms(u_emm, u_ref, fine)
        du_inf_e, du_l2_e = error_norms(du_emm, du_ref, fine)
        u_inf_h, u_l2_h = error_norms(u_hmm, u_ref, fine)
        du_inf_h, du_l2_h = error_norms(du_hmm, du_ref, fine)

        csv_path = out / f"regime_eps_{eps:g}.csv"
        columns = [fine.centers, u_ref, u_emm, u_hmm, du_ref, du_emm, du_hmm]
        rows = (
            [_fmt(col[i]) for col in columns] for i in range(fine.n_cells)
        )
        _write_rows(csv_path, _REGIME_COLUMNS, rows)

        records.append(
            RegimeRecord(
                epsilon=eps,
                n_ref=n_ref,
                n_x=n_x,
                n_y=n_y,
                t_end=t_end,
                error_u_inf_emm=u_inf_e,
                error_u_l2_emm=u_l2_e,
                error_du_inf_emm=du_inf_e,
                error_du_l2_emm=du_l2_e,
                error_u_inf_hmm=u_inf_h,
                error_u_l2_hmm=u_l2_h,
                error_du_inf_hmm=du_inf_h,
                error_du_l2_hmm=du_l2_h,
                wall_time_ref=wall_ref,
                wall_time_emm=wall_emm,
                wall_time_hmm=wall_hmm,
                csv_path=str(csv_path),
            )
        )
        # rewrite after every regime so an abort keeps what finished
        _write_summary(summary_path, records)

    return RunReport(records=tuple(records), summary_path=str(summary_path))


def ap_degeneracy_study(
    eps_values=(1e-2, 1e-3, 1e-4, 1e-5, 1e-6),
    n_steps: int = 100,
    n_x: int = 64,
    n_y: int = 16,
    dt_factor: float = 0.2,
    out_path: str | Path | None = None,
) -> tuple[tuple[float, float], ...]:
    """Deviation of the splitting's slow field from plain effective Euler.

    Both integrations start from the benchmark initial data and take exactly
    ``n_steps`` full steps of dt = dt_factor * dx**2; the reported deviation
    max|F - F_eff| measures how completely the splitting collapses onto the
    asymptotic scheme as epsilon shrinks.  The Euler comparison field does
    not depend on epsilon and is integrated once.
    """
    if n_steps < 1:
        raise ConfigError(f"n_steps must be >= 1, got {n_steps}")
    rows: list[tuple[float, float]] = []
    euler = None
    for eps in eps_values:
        problem = benchmark_problem(float(eps), t_end=1.0)
        solver = MicroMacroSolver(problem, n_x, n_y, dt_factor=dt_factor)
        if euler is None:
            u = np.asarray(problem.initial(solver.xmesh.centers), dtype=float)
            for _ in range(n_steps):
                u = u + solver.dt * solver.ops.apply_effective(u)
            euler = u
        result = solver.run(n_steps=n_steps)
        deviation = float(np.max(np.abs(result.final_macro - euler)))
        rows.append((float(eps), deviation))
    if out_path is not None:
        _write_rows(
            Path(out_path),
            ["eps", "deviation"],
            ([_fmt(e), _fmt(d)] for e, d in rows),
        )
    return tuple(rows)


@dataclass(frozen=True)
class ConvergenceReport:
    """One refinement study: per-level resolution, error, fitted order."""

    scheme: str
    resolutions: tuple[float, ...]  # dx for spatial studies, dt for temporal
    errors: tuple[float, ...]
    order: float


def convergence_study(scheme: str, levels: int = 4) -> ConvergenceReport:
    """Observed order of the reference (spatial) or splitting (temporal) run.

    ``ref`` refines space against the analytic solution of the constant
    coefficient heat equation; ``emm`` halves dt at epsilon = 0.5 on a fixed
    coarse grid and self-converges against a much finer-dt run.
    """
    if levels < 3:
        raise ConfigError(f"need at least 3 refinement levels, got {levels}")
    if scheme == "ref":
        return _spatial_study(levels)
    if scheme == "emm":
        return _temporal_study(levels)
    raise ConfigError(f"unknown convergence scheme {scheme!r} (use ref or emm)")


def _spatial_study(levels: int) -> ConvergenceReport:
    t_end = 0.1
    problem = ProblemSpec(
        coefficient=constant_coefficient(1.0),
        epsilon=1.0,
        initial=lambda x: np.sin(np.pi * x),
        source=None,
        bc_mode="dirichlet_homogeneous",
        t_end=t_end,
    )
    amplitude = math.exp(-math.pi**2 * t_end)
    sizes = [32 * 2**k for k in range(levels)]
    errors = []
    for n in sizes:
        result = run_reference(problem, n, dt_factor=0.05)
        exact = amplitude * np.sin(np.pi * result.mesh.centers)
        errors.append(float(np.max(np.abs(result.final - exact))))
    dxs = [1.0 / n for n in sizes]
    order = float(np.polyfit(np.log(dxs), np.log(errors), 1)[0])
    return ConvergenceReport(
        scheme="ref",
        resolutions=tuple(dxs),
        errors=tuple(errors),
        order=order,
    )


def _temporal_study(levels: int) -> ConvergenceReport:
    base = 0.2
    problem = benchmark_problem(0.5, t_end=0.02)
    # reference factor sits 8x below the finest level so its own bias is small
    ref_factor = base / 2 ** (levels + 2)
    reference = run_micro_macro(problem, 64, 16, dt_factor=ref_factor)
    dts, errors = [], []
    for k in range(levels):
        run = run_micro_macro(problem, 64, 16, dt_factor=base / 2**k)
        dts.append(run.dt)
        errors.append(float(np.max(np.abs(run.final_macro - reference.final_macro))))
    order = float(np.polyfit(np.log(dts), np.log(errors), 1)[0])
    return ConvergenceReport(
        scheme="emm",
        resolutions=tuple(dts),
        errors=tuple(errors),
        order=order,
    )
