"""Batch command-line front end.

Two subcommands: `run` executes a scenario pipeline (evolution or one of
the diagnostic modes) and writes an output directory with a manifest;
`validate` loads a scenario, runs the embedded validation reports and
prints them without executing anything.

Exit codes: 0 completed, 2 validation failure, 3 breakdown (outputs are
still written), 4 internal error.
"""

import argparse
import os
import sys
import traceback

from ._version import __version__
from .errors import AdmissibilityError, ScenarioError, StripflowError
from .scenario import load_scenario, run
from .stepper import (STATUS_BOUNDARY, STATUS_COMPLETED, STATUS_NORM_BLOWUP,
                      STATUS_SOLVER_FAILURE)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_BREAKDOWN = 3
EXIT_INTERNAL = 4

MODES = ("evolve", "diagnose-frozen", "diagnose-coercivity",
         "diagnose-localization")


def _apply_thread_cap(deterministic):
    """Honor STRIPFLOW_THREADS (and clamp to one thread when deterministic)."""
    cap = os.environ.get("STRIPFLOW_THREADS")
    limit = None
    if cap is not None:
        try:
            limit = max(1, int(cap))
        except ValueError:
            print(f"warning: ignoring non-integer STRIPFLOW_THREADS={cap!r}",
                  file=sys.stderr)
    if deterministic and limit is None:
        limit = 1
    if limit is None:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        os.environ.setdefault(var, str(limit))
    try:
        import threadpoolctl
        threadpoolctl.threadpool_limits(limits=limit)
    except ImportError:
        pass


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="stripflow",
        description="one-phase free-boundary evolution on the flattened strip")
    parser.add_argument("--version", action="version",
                        version=f"stripflow {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a scenario pipeline")
    run_p.add_argument("scenario", help="path to a .scn scenario file")
    run_p.add_argument("--mode", default="evolve", choices=MODES,
                       help="pipeline to execute (default: evolve)")
    run_p.add_argument("--out", default=None,
                       help="output directory (default: scenario's setting)")
    run_p.add_argument("--deterministic", action="store_true",
                       help="single-threaded, zeroed wall-clock: "
                            "byte-identical reruns")
    run_p.add_argument("--seed", type=int, default=0,
                       help="seed for randomized diagnostic ensembles")

    val_p = sub.add_parser("validate",
                           help="load a scenario and print its reports")
    val_p.add_argument("scenario", help="path to a .scn scenario file")
    return parser


def _print_validation(scn):
    adm = scn.admissibility_report
    ell = scn.ellipticity_report
    sec = scn.sectorial_report
    print(f"scenario   : {scn.name} ({scn.path})")
    print(f"checksum   : {scn.checksum}")
    print(f"grid       : nx={scn.nx} ny={scn.ny} m={scn.m} L={scn.L:.6g}")
    print(f"sectorial  : passed={sec.passed} worst_ratio={sec.worst_ratio:.3e}")
    print(f"ellipticity: passed={ell.passed} margin={ell.margin:.3e} "
          f"floor_min={ell.floor:.3e}")
    print(f"W1 margin  : {adm.margin:.6g} (in_W1={adm.in_W1}) at "
          f"x={adm.margin_argmin:.6g}")
    print(f"V_nu       : in_Vnu={adm.in_Vnu} gap={adm.vnu_gap:.6g}")


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    _apply_thread_cap(getattr(args, "deterministic", False))
    try:
        scn = load_scenario(args.scenario)
    except (ScenarioError, StripflowError) as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    if args.command == "validate":
        _print_validation(scn)
        return EXIT_OK

    try:
        manifest, status = run(scn, mode=args.mode, out_dir=args.out,
                               deterministic=args.deterministic,
                               seed=args.seed)
    except AdmissibilityError as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ScenarioError as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception:
        print("internal error:", file=sys.stderr)
        traceback.print_exc()
        return EXIT_INTERNAL

    out = os.path.abspath(args.out if args.out is not None else scn.out_dir)
    print(f"status={status} mode={args.mode} out={out} "
          f"checksum={manifest.scenario_checksum[:12]}")
    if status == STATUS_COMPLETED:
        return EXIT_OK
    if status in (STATUS_BOUNDARY, STATUS_NORM_BLOWUP):
        return EXIT_BREAKDOWN
    if status == STATUS_SOLVER_FAILURE:
        return EXIT_INTERNAL
    return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
