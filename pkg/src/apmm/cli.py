"""Command-line entry points for runs, studies, and cell-problem data.

Exit codes: 0 on success, 1 on numerical failure (blow-up or lost
ellipticity), 2 on configuration problems; argparse's own usage errors
already exit with 2.  All CSV output is deterministic, matching the
harness conventions.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .harness import ap_degeneracy_study, convergence_study, regime_comparison
from .homogenization import build_homogenized, homogenized_coefficient, solve_cell_problem
from .mesh import make_cell_mesh, make_spatial_mesh
from .problem import (
    ConfigError,
    EllipticityError,
    coefficient_from_name,
    parse_config,
)
from .solvers import (
    StabilityError,
    run_homogenized,
    run_micro_macro,
    run_reference,
)


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _prepare_parent(path: str | Path) -> Path:
    path = Path(path)
    if path.parent != Path("."):
        path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = parse_config(args.config)
    problem = cfg.problem()
    dt_factor = cfg.resolved_dt_factor()
    _prepare_parent(cfg.output)

    micro = None
    y_nodes = None
    if cfg.scheme == "ref":
        result = run_reference(problem, cfg.nx, dt_factor=dt_factor)
        x = result.mesh.centers
        slow = result.final
    elif cfg.scheme == "emm":
        result = run_micro_macro(problem, cfg.nx, cfg.ny, dt_factor=dt_factor)
        x = result.xmesh.centers
        slow = result.final_macro
        micro = result.final_micro
        y_nodes = result.ymesh.nodes
    else:  # hmm: the oscillatory column holds the scaled corrector
        hom = build_homogenized(
            problem.coefficient, make_spatial_mesh(cfg.nx), make_cell_mesh(cfg.ny)
        )
        result = run_homogenized(problem, hom, dt_factor=dt_factor)
        x = result.mesh.centers
        slow = result.final
        micro = problem.epsilon * result.corrector
        y_nodes = hom.ymesh.nodes

    written = []
    f_path = Path(f"{cfg.output}_F.csv")
    with open(f_path, "w", newline="") as fh:
        fh.write("x,F\n")
        for xi, fi in zip(x, slow):
            fh.write(f"{_fmt(xi)},{_fmt(fi)}\n")
    written.append(f_path)

    if micro is not None:
        g_path = Path(f"{cfg.output}_G.csv")
        with open(g_path, "w", newline="") as fh:
            fh.write("x,y,G\n")
            for i, xi in enumerate(x):
                for j, yj in enumerate(y_nodes):
                    fh.write(f"{_fmt(xi)},{_fmt(yj)},{_fmt(micro[i, j])}\n")
        written.append(g_path)

    meta_path = Path(f"{cfg.output}_meta.txt")
    with open(meta_path, "w", newline="") as fh:
        fh.write(f"epsilon = {_fmt(cfg.epsilon)}\n")
        fh.write(f"nx = {cfg.nx}\n")
        fh.write(f"ny = {cfg.ny}\n")
        fh.write(f"t_end = {_fmt(cfg.t_end)}\n")
        fh.write(f"scheme = {cfg.scheme}\n")
        fh.write(f"coeff = {cfg.coeff}\n")
        fh.write(f"bc = {cfg.bc}\n")
        fh.write(f"dt_factor = {_fmt(dt_factor)}\n")
        fh.write(f"output = {cfg.output}\n")
        fh.write(f"steps = {result.steps}\n")
        fh.write(f"dt = {_fmt(result.dt)}\n")
    written.append(meta_path)

    for path in written:
        print(path)
    return 0


def _cmd_figure1(args: argparse.Namespace) -> int:
    periods = 40.0 if args.paper_scale else 20.0
    t_end = args.t_end
    if t_end is None:
        t_end = 1.0 if args.paper_scale else 0.02
    report = regime_comparison(
        eps_values=tuple(args.eps),
        out_dir=args.out,
        t_end=t_end,
        ref_cells=args.ref_cells,
        periods_per_oscillation=periods,
    )
    for rec in report.records:
        print(
            f"eps={rec.epsilon:g}: ref N={rec.n_ref}, max errors "
            f"emm={rec.error_u_inf_emm:.3e} hmm={rec.error_u_inf_hmm:.3e} "
            f"-> {rec.csv_path}"
        )
    if report.summary_path is not None:
        print(report.summary_path)
    return 0


def _cmd_ap_study(args: argparse.Namespace) -> int:
    out = _prepare_parent(args.out)
    rows = ap_degeneracy_study(n_steps=args.steps, out_path=out)
    for eps, deviation in rows:
        print(f"eps={eps:g}  deviation={deviation:.6e}")
    print(out)
    return 0


def _cmd_converge(args: argparse.Namespace) -> int:
    report = convergence_study(args.scheme, levels=args.levels)
    label = "dx" if report.scheme == "ref" else "dt"
    for resolution, err in zip(report.resolutions, report.errors):
        print(f"{label}={resolution:.6e}  error={err:.6e}")
    print(f"order = {report.order:.4f}")
    return 0


def _cmd_cell(args: argparse.Namespace) -> int:
    coeff = coefficient_from_name(args.coeff)
    ymesh = make_cell_mesh(args.ny)
    a0 = homogenized_coefficient(coeff, 0.5, ymesh)
    chi = solve_cell_problem(coeff, 0.5, ymesh)
    print(f"a0 = {_fmt(a0)}")
    out = _prepare_parent(args.out)
    with open(out, "w", newline="") as fh:
        fh.write("y,chi\n")
        for yj, cj in zip(ymesh.nodes, chi):
            fh.write(f"{_fmt(yj)},{_fmt(cj)}\n")
    print(out)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="apmm",
        description="Multiscale diffusion solvers: fine reference, "
        "homogenized, and micro-macro splitting.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="integrate one configured problem")
    p_run.add_argument("--config", required=True, help="key = value text file")
    p_run.set_defaults(func=_cmd_run)

    p_fig = sub.add_parser(
        "figure1", help="three-regime comparison against the fine reference"
    )
    p_fig.add_argument("--t-end", dest="t_end", type=float, default=None)
    p_fig.add_argument("--out", default="figure1")
    p_fig.add_argument("--eps", type=float, nargs="+", default=[1.0, 0.1, 0.01])
    p_fig.add_argument("--ref-cells", dest="ref_cells", type=int, default=None)
    p_fig.add_argument(
        "--paper-scale",
        dest="paper_scale",
        action="store_true",
        help="full horizon T=1 and 40 reference cells per oscillation",
    )
    p_fig.set_defaults(func=_cmd_figure1)

    p_ap = sub.add_parser(
        "ap-study", help="deviation from the effective Euler scheme as eps -> 0"
    )
    p_ap.add_argument("--steps", type=int, default=100)
    p_ap.add_argument("--out", default="ap_study.csv")
    p_ap.set_defaults(func=_cmd_ap_study)

    p_conv = sub.add_parser("converge", help="observed-order refinement study")
    p_conv.add_argument("--scheme", required=True, choices=("ref", "emm"))
    p_conv.add_argument("--levels", type=int, default=4)
    p_conv.set_defaults(func=_cmd_converge)

    p_cell = sub.add_parser(
        "cell", help="effective coefficient and corrector profile"
    )
    p_cell.add_argument("--ny", type=int, default=256)
    p_cell.add_argument("--coeff", default="paper")
    p_cell.add_argument("--out", default="cell_chi.csv")
    p_cell.set_defaults(func=_cmd_cell)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (StabilityError, EllipticityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
