"""Command-line front door.

Every subcommand prints one JSON report to stdout (machine-diffable; keys
sorted) and a one-line human summary to stderr.  Exit codes: 0 passed,
1 failed, 2 inconclusive (undecided inner verdicts), 3 input error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import fileio, fixtures
from .algebra import validate_algebra
from .algebroid import axiom_report
from .bundles import check_delta_continuity, validate_lab
from .connections import accordance, validate_connection
from .correspondence import f_map, g_map, verify_inverse
from .errors import CoverageError, InputError, PreconditionError
from .manifolds import partition_of_unity
from .tolerances import ACC_TOL, ALG_TOL, INNER_TOL, ODE_STEPS, TRANS_TOL

EXIT_PASSED = 0
EXIT_FAILED = 1
EXIT_INCONCLUSIVE = 2
EXIT_INPUT_ERROR = 3


def _emit(report: dict) -> int:
    json.dump(report, sys.stdout, sort_keys=True)
    sys.stdout.write("\n")
    state = "INCONCLUSIVE" if report["inconclusive"] else ("PASS" if report["passed"] else "FAIL")
    print(f"{report['command']}: {state}", file=sys.stderr)
    if report["inconclusive"]:
        return EXIT_INCONCLUSIVE
    return EXIT_PASSED if report["passed"] else EXIT_FAILED


def _report(command: str, passed: bool, residuals: dict, *, inconclusive: bool = False,
            artifacts=(), seed: int = 0, extra: dict | None = None) -> dict:
    report = {
        "command": command,
        "passed": bool(passed) and not bool(inconclusive),
        "inconclusive": bool(inconclusive),
        "residuals": {k: float(v) for k, v in residuals.items()},
        "artifacts": list(artifacts),
        "seed": int(seed),
    }
    if extra:
        report.update(extra)
    return report


def cmd_validate_algebra(args) -> int:
    g = fileio.load_algebra(args.algebra)
    rep = validate_algebra(g, tol=args.alg_tol)
    return _emit(_report("validate-algebra", rep.passed, rep.residuals(),
                         extra={"worst_jacobi_index": list(rep.worst_jacobi)}))


def cmd_validate_lab(args) -> int:
    t = fileio.load_bundle(args.bundle)
    rep = validate_lab(t, tol=args.tol)
    return _emit(_report("validate-lab", rep.passed, rep.residuals(), extra={"worst": rep.worst}))


def cmd_check_delta(args) -> int:
    t = fileio.load_bundle(args.bundle)
    lab = validate_lab(t, tol=args.tol)
    if not lab.passed:
        return _emit(_report("check-delta", False, lab.residuals(), extra={"worst": lab.worst}))
    rep = check_delta_continuity(t, inner_tol=args.inner_tol)
    return _emit(
        _report(
            "check-delta",
            rep.passed,
            {"max_inner": rep.max_inner_residual},
            inconclusive=rep.undecided,
            extra={"verdicts": rep.counts()},
        )
    )


def cmd_check_coupling(args) -> int:
    c = fileio.load_connection(args.connection)
    conn_rep = validate_connection(c, tol=args.alg_tol)
    result = accordance(c, tol=args.acc_tol)
    norms = [np.linalg.norm(grid, axis=-1) for grid in result.curvature.omega_form]
    stats = {
        "omega_norm_max": max(float(x.max(initial=0.0)) for x in norms),
        "omega_norm_mean": float(np.mean([x.mean() if x.size else 0.0 for x in norms])),
    }
    residuals = {"accordance": result.max_residual, **conn_rep.residuals()}
    return _emit(
        _report(
            "check-coupling",
            conn_rep.passed and result.passed,
            residuals,
            extra={"omega_stats": stats, "center_ambiguity_dim": result.center_dim},
        )
    )


def cmd_f_map(args) -> int:
    c = fileio.load_connection(args.connection)
    result = f_map(c, ode_steps=args.ode_steps, acc_tol=args.acc_tol,
                   aut_tol=args.trans_tol, inner_tol=args.inner_tol)
    artifacts = []
    if args.out:
        fileio.save_json(args.out, fileio.bundle_to_dict(result.trivialization))
        artifacts.append(args.out)
    return _emit(
        _report(
            "f-map",
            result.passed,
            {
                "transition_automorphism": result.lab_report.max_transition_residual,
                "max_inner": result.delta.max_inner_residual,
            },
            inconclusive=result.delta.undecided,
            artifacts=artifacts,
            extra={"verdicts": result.delta.counts()},
        )
    )


def cmd_g_map(args) -> int:
    t = fileio.load_bundle(args.bundle)
    h = partition_of_unity(t.manifold, sharpness=args.sharpness)
    c = g_map(t, h, inner_tol=args.inner_tol)
    rep = validate_connection(c, tol=args.alg_tol)
    result = accordance(c, tol=args.acc_tol)
    artifacts = []
    if args.out:
        fileio.save_json(args.out, fileio.connection_to_dict(c))
        artifacts.append(args.out)
    return _emit(
        _report(
            "g-map",
            rep.passed and result.passed,
            {"accordance": result.max_residual, **rep.residuals()},
            artifacts=artifacts,
        )
    )


def cmd_roundtrip(args) -> int:
    if bool(args.bundle) == bool(args.connection):
        raise InputError("provide exactly one of --bundle / --connection")
    kwargs = {"ode_steps": args.ode_steps, "coupling_tol": args.acc_tol, "inner_tol": args.inner_tol}
    if args.connection:
        rep = verify_inverse(c=fileio.load_connection(args.connection), **kwargs)
    else:
        rep = verify_inverse(t=fileio.load_bundle(args.bundle), **kwargs)
    directions = {
        name: {"passed": d.passed, "residual": d.residual, "undecided": d.undecided}
        for name, d in rep.directions.items()
    }
    residuals = {name: d.residual for name, d in rep.directions.items()}
    return _emit(
        _report(
            "roundtrip",
            rep.passed,
            residuals,
            inconclusive=rep.inconclusive,
            extra={"directions": directions, "note": rep.note},
        )
    )


def cmd_axioms(args) -> int:
    c = fileio.load_connection(args.connection)
    result = accordance(c, tol=args.acc_tol)
    if not result.passed:
        return _emit(
            _report("axioms", False, {"accordance": result.max_residual},
                    extra={"note": "not a coupling: accordance fails"})
        )
    rep = axiom_report(c, result.curvature, trials=args.trials, seed=args.seed)
    passed = rep.max_skew <= 1e-12 and rep.max_leibniz <= 1e-4
    return _emit(_report("axioms", passed, rep.residuals(), seed=args.seed))


def cmd_fixtures(args) -> int:
    if args.list:
        names = {
            "algebras": list(fixtures.ALGEBRA_NAMES),
            "manifolds": list(fixtures.MANIFOLD_NAMES),
            "bundles": list(fixtures.BUNDLE_NAMES),
            "connections": list(fixtures.CONNECTION_NAMES),
        }
        return _emit(_report("fixtures", True, {}, extra={"names": names}))
    out_dir = args.out_dir or os.environ.get("ALGEBROID_FIXTURE_DIR", ".")
    path = fileio.emit_fixture(args.emit, out_dir)
    return _emit(_report("fixtures", True, {}, artifacts=[str(path)]))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="labcoupling",
        description="Couplings between Lie algebra bundles and tangent bundles, at desk scale.",
    )
    tols = argparse.ArgumentParser(add_help=False)
    tols.add_argument("--alg-tol", type=float, default=ALG_TOL)
    tols.add_argument("--acc-tol", type=float, default=ACC_TOL)
    tols.add_argument("--trans-tol", type=float, default=TRANS_TOL)
    tols.add_argument("--inner-tol", type=float, default=INNER_TOL)

    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("validate-algebra", parents=[tols], help="check bracket axioms of an algebra file")
    p.add_argument("--algebra", required=True)
    p.set_defaults(func=cmd_validate_algebra)

    p = sub.add_parser("validate-lab", parents=[tols], help="check a bundle structure")
    p.add_argument("--bundle", required=True)
    p.add_argument("--tol", type=float, default=ALG_TOL)
    p.set_defaults(func=cmd_validate_lab)

    p = sub.add_parser("check-delta", parents=[tols], help="discrete-quotient continuity sweep")
    p.add_argument("--bundle", required=True)
    p.add_argument("--tol", type=float, default=ALG_TOL)
    p.set_defaults(func=cmd_check_delta)

    p = sub.add_parser("check-coupling", parents=[tols], help="curvature-vs-inner-span accordance")
    p.add_argument("--connection", required=True)
    p.set_defaults(func=cmd_check_coupling)

    p = sub.add_parser("f-map", parents=[tols], help="coupling -> bundle structure by ray transport")
    p.add_argument("--connection", required=True)
    p.add_argument("--out")
    p.add_argument("--ode-steps", type=int, default=ODE_STEPS)
    p.set_defaults(func=cmd_f_map)

    p = sub.add_parser("g-map", parents=[tols], help="bundle structure -> coupling connection")
    p.add_argument("--bundle", required=True)
    p.add_argument("--out")
    p.add_argument("--sharpness", type=float, default=1.0)
    p.set_defaults(func=cmd_g_map)

    p = sub.add_parser("roundtrip", parents=[tols], help="verify the two maps are mutually inverse")
    p.add_argument("--bundle")
    p.add_argument("--connection")
    p.add_argument("--ode-steps", type=int, default=ODE_STEPS)
    p.set_defaults(func=cmd_roundtrip)

    p = sub.add_parser("axioms", parents=[tols], help="bracket axiom residuals on random sections")
    p.add_argument("--connection", required=True)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_axioms)

    p = sub.add_parser("fixtures", help="list or emit canonical fixtures")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--list", action="store_true")
    group.add_argument("--emit")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_fixtures)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse prints usage itself; remap its code
        return EXIT_PASSED if exc.code in (0, None) else EXIT_INPUT_ERROR
    if not getattr(args, "func", None):
        parser.print_usage(sys.stderr)
        return EXIT_INPUT_ERROR
    try:
        return args.func(args)
    except (InputError, PreconditionError, CoverageError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
