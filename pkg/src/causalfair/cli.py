"""Command-line entry point.

Exit codes: 0 ok, 2 bad input, 3 unknown node, 4 missing role column,
5 impossibility-scan witness found.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from causalfair import __version__
from causalfair.dist import read_samples_csv, write_samples_csv
from causalfair.errors import MissingRoleError, SchemaError, UnknownNodeError, UnknownVariableError
from causalfair.fairness import (
    DEFAULT_EPSILON,
    DEFAULT_TAU,
    FairnessTriple,
    audit,
    dumps_fixed,
    graph_metric_verdicts,
    impossibility_scan,
)
from causalfair.graph import CANONICAL_KINDS, canonical_graph, d_separated, format_edge_list, parse_edge_list
from causalfair.scm import ancestral_sample, load_policy, load_scm, sweep_gate

EXIT_OK, EXIT_INPUT, EXIT_UNKNOWN_NODE, EXIT_MISSING_ROLE, EXIT_VIOLATION = 0, 2, 3, 4, 5
SCAN_EPSILON = 1e-6


class InputError(Exception):
    pass


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc


def _names(values) -> list[str]:
    out = []
    for v in values or []:
        out.extend(n.strip() for n in v.split(",") if n.strip())
    return out


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _triple(args) -> FairnessTriple:
    return FairnessTriple(args.sensitive, args.truth, args.prediction)


def cmd_dsep(args) -> int:
    dag = parse_edge_list(_read_text(args.graph))
    given = _names(args.given)
    if args.x == args.y or args.x in given or args.y in given:
        raise InputError("x, y and the conditioning set must be disjoint")
    verdict = d_separated(dag, args.x, args.y, given)
    print(f"d-separated: {'true' if verdict else 'false'}")
    return EXIT_OK


def cmd_verdicts(args) -> int:
    dag = parse_edge_list(_read_text(args.graph))
    v = graph_metric_verdicts(dag, _triple(args))
    doc = {
        "dp_implied": v.dp_implied,
        "eo_implied": v.eo_implied,
        "pp_implied": v.pp_implied,
        "calibration_possible": v.calibration_possible,
        "bias_possible": v.bias_possible,
    }
    _emit(json.dumps(doc, indent=2) + "\n", args.output)
    return EXIT_OK


def cmd_graph(args) -> int:
    _emit(format_edge_list(canonical_graph(args.kind)), args.output)
    return EXIT_OK


def cmd_audit(args) -> int:
    samples = read_samples_csv(args.csv)
    triple = _triple(args)
    for role in (triple.sensitive, triple.truth, triple.prediction):
        if role not in samples.names:
            raise MissingRoleError(role)
    report = audit(samples, triple, args.epsilon, args.tau, args.smoothing)
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        d = report.to_dict()
        cols = ["dp_gap", "eo_gap", "pp_gap", "calibration_dep", "bias_dep",
                "dp_satisfied", "eo_satisfied", "pp_satisfied", "preconditions_met", "epsilon", "tau"]
        w.writerow(cols)
        w.writerow([f"{d[c]:.6f}" for c in cols[:5]]
                   + [str(d["satisfied"][m]).lower() for m in ("dp", "eo", "pp")]
                   + [str(d["preconditions_met"]).lower(), f"{args.epsilon:.6f}", f"{args.tau:.6f}"])
        _emit(buf.getvalue(), args.output)
    else:
        _emit(report.to_json(), args.output)
    return EXIT_OK


def cmd_scan(args) -> int:
    verdict = impossibility_scan(args.resolution, args.epsilon, args.tau,
                                 exempt_perfect_prediction=not args.strict)
    _emit(verdict.to_json(), args.output)
    return EXIT_OK if verdict.multi_satisfying == 0 else EXIT_VIOLATION


def cmd_simulate(args) -> int:
    scm = load_scm(args.scm)
    samples = ancestral_sample(scm, args.n, args.seed)
    write_samples_csv(samples, args.output or sys.stdout, aggregate=args.aggregate)
    return EXIT_OK


def cmd_sweep(args) -> int:
    scm = load_scm(args.scm)
    policy = load_policy(args.policy)
    if args.grid is not None:
        grid = args.grid
    else:
        grid = [i / (args.steps - 1) for i in range(args.steps)]
    if any(not 0 <= q <= 1 for q in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise InputError("gate grid must be strictly increasing within [0, 1]")
    result = sweep_gate(scm, policy, grid, args.epsilon, args.tau, _triple(args))
    if args.format == "json":
        points = []
        for p in result.points:
            points.append({"gate": p.gate, "report": p.report.to_dict(),
                           "dp_given_c0": p.dp_given_c0, "eo_given_yc": p.eo_given_yc})
        _emit(dumps_fixed({"points": points}) + "\n", args.output)
    else:
        _emit(result.to_csv(), args.output)
    return EXIT_OK


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _non_negative(text: str) -> float:
    v = float(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _add_roles(p):
    p.add_argument("--sensitive", default="A")
    p.add_argument("--truth", default="Y")
    p.add_argument("--prediction", default="Yhat")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="causalfair", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dsep", help="d-separation query on an edge-list graph")
    p.add_argument("graph")
    p.add_argument("x")
    p.add_argument("y")
    p.add_argument("--given", action="append", default=[], help="comma-separated conditioning nodes")
    p.set_defaults(func=cmd_dsep)

    p = sub.add_parser("verdicts", help="metrics implied by a graph")
    p.add_argument("graph")
    _add_roles(p)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_verdicts)

    p = sub.add_parser("graph", help="print a canonical graph as an edge list")
    p.add_argument("kind", choices=CANONICAL_KINDS)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("audit", help="fairness metrics of a sample CSV")
    p.add_argument("csv")
    _add_roles(p)
    p.add_argument("--epsilon", type=_positive, default=DEFAULT_EPSILON)
    p.add_argument("--tau", type=_positive, default=DEFAULT_TAU)
    p.add_argument("--smoothing", type=_non_negative, default=0.0)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("scan", help="brute-force impossibility scan over the simplex grid")
    p.add_argument("--resolution", type=int, default=20)
    p.add_argument("--epsilon", type=_positive, default=SCAN_EPSILON)
    p.add_argument("--tau", type=_positive, default=DEFAULT_TAU)
    p.add_argument("--strict", action="store_true",
                   help="do not exempt perfect predictors (Y and Yhat determine each other)")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("simulate", help="ancestral sampling from an SCM file")
    p.add_argument("scm")
    p.add_argument("--n", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--aggregate", action="store_true", help="write one weighted row per distinct state")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="exact metrics across correction-gate settings")
    p.add_argument("scm")
    p.add_argument("policy")
    grid = p.add_mutually_exclusive_group()
    grid.add_argument("--grid", type=_floats, help="comma-separated gate values")
    grid.add_argument("--steps", type=int, default=11, help="evenly spaced values over [0, 1]")
    _add_roles(p)
    p.add_argument("--epsilon", type=_positive, default=DEFAULT_EPSILON)
    p.add_argument("--tau", type=_positive, default=DEFAULT_TAU)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "scan":
        if not 10 <= args.resolution <= 40:
            parser.error("--resolution must lie in [10, 40]")
        if not args.epsilon < args.tau / 2:
            parser.error("--epsilon must be below tau / 2")
    if args.command == "simulate" and args.n < 1:
        parser.error("--n must be >= 1")
    if args.command == "sweep" and args.grid is None and args.steps < 2:
        parser.error("--steps must be >= 2")
    try:
        return args.func(args)
    except UnknownNodeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNKNOWN_NODE
    except (MissingRoleError, UnknownVariableError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_ROLE
    except (SchemaError, InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
