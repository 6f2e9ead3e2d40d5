"""Command-line driver.

    mgetrans run PROBLEM [--eigen] [--precond on|off] [--weight W] [--relax R]
                 [--vcycles V] [--depth D|auto] [--pc-sn N|same] [--sets S]
                 [--solver gmres|gs] [--tol T] [--out DIR]
    mgetrans fixture [--groups G] [--upscatter U] [--boundary vacuum|reflect] ...

Exit status: 0 converged, 2 iteration cap reached, 1 configuration error.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys
import time
from pathlib import Path

from .output import emit_convergence_csv, write_flux_output, write_manifest
from .problem import ConfigurationError, fixture_problem
from .problem_file import ProblemFileError, format_problem, parse_problem_file
from .solvers import dominance_ratio_estimate, gauss_seidel_solve, power_iteration, \
    MultigroupSolver

EXIT_OK, EXIT_CONFIG, EXIT_MAXITER = 0, 1, 2


def _depth(text):
    return "auto" if text == "auto" else int(text)


def _pc_sn(text):
    return None if text == "same" else int(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mgetrans", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="solve a problem file")
    run.add_argument("problem", type=Path)
    run.add_argument("--eigen", action="store_true", default=None,
                     help="power iteration for k instead of a fixed-source solve")
    run.add_argument("--precond", choices=("on", "off"))
    run.add_argument("--weight", type=float)
    run.add_argument("--relax", type=int)
    run.add_argument("--vcycles", type=int)
    run.add_argument("--depth", type=_depth)
    run.add_argument("--pc-sn", type=_pc_sn, dest="pc_sn", default=argparse.SUPPRESS)
    run.add_argument("--sets", type=int)
    run.add_argument("--solver", choices=("gmres", "gs"), default="gmres")
    run.add_argument("--tol", type=float)
    run.add_argument("--out", type=Path, default=Path("."))

    fx = sub.add_parser("fixture", help="print the synthetic upscatter test problem")
    fx.add_argument("--groups", type=int, default=10)
    fx.add_argument("--upscatter", type=int, default=5)
    fx.add_argument("--n", type=int, default=3, help="cells per axis")
    fx.add_argument("--boundary", choices=("vacuum", "reflect"), default="vacuum")
    fx.add_argument("--sn", type=int, default=4)
    fx.add_argument("--fission", action="store_true")
    return p


# flag name -> SolverConfig field
_FLAG_FIELDS = {"weight": "weight", "relax": "relax", "vcycles": "vcycles", "depth": "depth",
                "sets": "num_sets", "tol": "tol"}


def _effective_config(spec, args):
    """File values overridden by any flags given on the command line."""
    overrides = {fld: getattr(args, flag) for flag, fld in _FLAG_FIELDS.items()
                 if getattr(args, flag) is not None}
    if hasattr(args, "pc_sn"):  # None is meaningful ("same"), so absence is the sentinel
        overrides["pc_sn"] = args.pc_sn
    if args.precond is not None:
        overrides["precond"] = args.precond == "on"
    return dataclasses.replace(spec.solver, **overrides)


def run(args) -> int:
    try:
        spec = parse_problem_file(args.problem.read_text())
        cfg = _effective_config(spec, args)
        spec.solver = cfg
        eigen = spec.eigen_enabled if args.eigen is None else True
        if eigen and args.solver == "gs":
            raise ConfigurationError("power iteration uses the GMRES multigroup solver")
        args.out.mkdir(parents=True, exist_ok=True)
        t0 = time.perf_counter()
        k = None
        if eigen:
            k, _, phi, rec = power_iteration(spec, cfg)
        elif args.solver == "gs":
            phi, rec = gauss_seidel_solve(spec, cfg.tol)
        else:
            solver = MultigroupSolver(spec, cfg)
            phi, rec = solver.solve(spec.source.density(spec.mesh.num_cells))
        elapsed = time.perf_counter() - t0
    except (ProblemFileError, ConfigurationError, OSError) as err:
        print(f"mgetrans: error: {err}", file=sys.stderr)
        return EXIT_CONFIG

    csv_path = emit_convergence_csv(rec, args.out / "convergence.csv")
    flux_path = write_flux_output(phi, spec.mesh, args.out / "flux.csv")
    manifest = {
        "problem": str(args.problem),
        "mode": "eigenvalue" if eigen else "fixed-source",
        "solver": args.solver,
        "sn_order": spec.sn_order,
        "num_groups": spec.num_groups,
        "mesh": list(spec.mesh.shape),
        "boundary": list(spec.mesh.boundary),
        "config": dataclasses.asdict(cfg),
        "eigen_config": dataclasses.asdict(spec.eigen) if eigen else None,
        "outputs": {"convergence": str(csv_path), "flux": str(flux_path)},
        "seconds": elapsed,
        "status": rec.status,
        "krylov_iterations": rec.krylov_iterations,
        "outer_iterations": rec.outer_iterations,
    }
    if eigen:
        manifest["k"] = k
        manifest["dominance_ratio"] = dominance_ratio_estimate(rec)
    write_manifest(manifest, args.out / "manifest.json")
    if not rec.converged:
        print(f"mgetrans: iteration cap reached ({rec.status})", file=sys.stderr)
        return EXIT_MAXITER
    return EXIT_OK


def fixture(args) -> int:
    spec = fixture_problem(args.groups, args.upscatter, n=args.n, boundary=args.boundary,
                           sn_order=args.sn, fission=args.fission)
    sys.stdout.write(format_problem(spec))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return {"run": run, "fixture": fixture}[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
