#!/usr/bin/env python3
"""
ustlab - exact and Monte Carlo statistics of uniform spanning trees

Edge and degree probabilities from the transfer-current matrix, joint
degree cumulants, lattice constants and their continuum limit, with
brute-force, fermionic and Monte Carlo oracles.
"""

import argparse
import logging
import sys
from typing import Optional

import numpy as np

import config
from errors import GuardExceeded, UstlabError, ValidationError
from storage import Report, load_graph, write_report

logger = logging.getLogger("ustlab")

SUBCOMMANDS = (
    "green",
    "edge-prob",
    "degree-pmf",
    "cumulant",
    "constant",
    "converge",
    "sample",
    "wick-check",
    "perm-audit",
    "reproduce-table",
)


# Argument helpers


def _graph(args):
    """Graph from --graph, --complete or --lattice/--width/--height."""
    from graphs import build_grid, complete_graph
    from lattices import Box, lattice_by_name

    if getattr(args, "graph", None):
        return load_graph(args.graph)
    if getattr(args, "complete", None):
        return complete_graph(args.complete)
    if getattr(args, "lattice", None) and getattr(args, "width", None):
        return build_grid(lattice_by_name(args.lattice), Box((args.width, args.height or args.width)))
    raise ValidationError("give a graph: --graph PATH, --complete N or --lattice L --width W --height H")


def _vertex(graph, token: str) -> int:
    """A vertex by its label, or by dense index written as #i."""
    token = token.strip()
    if token.startswith("#"):
        try:
            v = int(token[1:])
        except ValueError:
            raise ValidationError(f"bad vertex index {token!r}")
        if not 0 <= v < graph.n:
            raise ValidationError(f"vertex index {v} out of range")
        return v
    for v in graph.vertices:
        if str(graph.label(v)) == token:
            return v
    raise ValidationError(f"no vertex labelled {token!r}")


def _edges(graph, text: Optional[str]) -> tuple:
    """'u-v,x-y' -> directed edges."""
    if not text:
        return ()
    out = []
    for token in text.split(","):
        parts = token.split("-")
        if len(parts) != 2:
            raise ValidationError(f"bad edge {token!r} (expected u-v)")
        out.append((_vertex(graph, parts[0]), _vertex(graph, parts[1])))
    return tuple(out)


def _targets(graph, text: str) -> list:
    """'v1:k1,v2:k2' -> [(vertex, k), ...]."""
    out = []
    for token in text.split(","):
        parts = token.split(":")
        if len(parts) != 2:
            raise ValidationError(f"bad point {token!r} (expected v:k)")
        try:
            k = int(parts[1])
        except ValueError:
            raise ValidationError(f"bad degree in {token!r}")
        out.append((_vertex(graph, parts[0]), k))
    return out


def _floats(text: str, sep: str = ",") -> list:
    try:
        return [float(x) for x in text.split(sep) if x.strip()]
    except ValueError:
        raise ValidationError(f"cannot parse numbers from {text!r}")


# Subcommands


def cmd_green(args, run: config.RunConfig) -> Report:
    from green import green_for, green_infinite, potential_kernel
    from lattices import lattice_by_name

    if args.kernel is not None:
        lattice = lattice_by_name(args.lattice or "Z2")
        point = tuple(int(x) for x in args.kernel)
        a = potential_kernel(lattice, point, run.quad_tol)
        G0 = green_infinite(lattice, lattice.origin(), point, run.quad_tol)
        return Report("green", {"lattice": lattice.name, "point": list(point), "a": a, "green": G0})

    graph = _graph(args)
    root = _vertex(graph, args.ground) if args.ground else None
    G = green_for(graph, root)
    return Report(
        "green",
        {"mode": G.mode, "root": G.root, "matrix": G.table.tolist(), "residual": G.residual()},
    )


def cmd_edge_prob(args, run: config.RunConfig) -> Report:
    from green import green_for
    from transfer import EdgeProbQuery, edge_probability, inclusion_exclusion_probability, transfer_matrix

    graph = _graph(args)
    q = EdgeProbQuery(_edges(graph, args.present), _edges(graph, args.absent))
    M = transfer_matrix(green_for(graph))
    p = edge_probability(M, q, run.det_clamp)
    check = inclusion_exclusion_probability(M, q, run.max_enum, run.det_clamp)
    return Report(
        "edge-prob",
        {
            "probability": p,
            "method": "det",
            "crosscheck": "incl-excl",
            "crosscheck_value": check,
            "abs_gap": abs(p - check),
            "tolerance": run.oracle_tol,
        },
    )


def cmd_degree_pmf(args, run: config.RunConfig) -> Report:
    from degrees import DegreeQuery, degree_pmf, degree_pmf_joint, kn_degree_closed_form, poisson_limit, poisson_limit_gap
    from graphs import edge_star
    from green import green_for
    from transfer import transfer_matrix

    if args.complete and not args.vertex:
        n = args.complete
        kmax = args.kmax or min(n - 1, 10)
        rows = []
        for k in range(1, kmax + 1):
            exact = kn_degree_closed_form(n, k) if k <= n - 1 else 0.0
            rows.append({"k": k, "probability": exact, "limit": poisson_limit(k), "gap": abs(exact - poisson_limit(k))})
        return Report("degree-pmf", {"n": n, "poisson_gap": poisson_limit_gap(n, kmax)}, rows=rows)

    graph = _graph(args)
    if args.vertex is None:
        raise ValidationError("--vertex is required")
    v = _vertex(graph, args.vertex)
    M = transfer_matrix(green_for(graph))
    if args.joint:
        others = _targets(graph, args.joint)
        rows = []
        for k in range(1, len(edge_star(graph, v)) + 1):
            q = DegreeQuery((v, *[w for w, _ in others]), (k, *[kw for _, kw in others]))
            rows.append({"k": k, "probability": degree_pmf_joint(M, q, run.max_enum_joint, run.threads)})
    else:
        pmf = degree_pmf(M, v, run.max_enum)
        rows = [{"k": k, "probability": p} for k, p in sorted(pmf.table.items())]
    return Report("degree-pmf", {"vertex": args.vertex, "joint": args.joint}, rows=rows)


def cmd_cumulant(args, run: config.RunConfig) -> Report:
    from cumulants import CumulantQuery, cumulant_direct, cumulant_via_moments, neighbor_joint_probability
    from green import green_for
    from transfer import transfer_matrix

    graph = _graph(args)
    points = _targets(graph, args.points)
    M = transfer_matrix(green_for(graph))

    if args.neighbor:
        if len(points) != 2:
            raise ValidationError("--neighbor takes exactly two adjacent points")
        (v, k_v), (w, k_w) = points
        split = neighbor_joint_probability(M, v, w, k_v, k_w, run.max_perm, args.method)
        return Report("cumulant", split.to_dict())

    q = CumulantQuery(tuple(v for v, _ in points), tuple(k for _, k in points))
    value = cumulant_direct(M, q, run.max_perm, args.method, run.threads)
    result = {"value": value, "method": args.method, "tolerance": run.oracle_tol}
    if args.oracle:
        oracle = cumulant_via_moments(M, q, run.max_enum_joint)
        result.update(oracle_value=oracle, abs_gap=abs(value - oracle))
    return Report("cumulant", result)


def cmd_constant(args, run: config.RunConfig) -> Report:
    from lattices import lattice_by_name
    from scaling import REFERENCE, constant_row, lattice_constant

    lattice = lattice_by_name(args.lattice or "Z2")
    if lattice.name in REFERENCE:
        row = constant_row(lattice, args.k, run.quad_tol).to_dict()
        row["value"] = row["computed"]
        return Report("constant", row)
    return Report("constant", lattice_constant(lattice, args.k, run.quad_tol).to_dict())


def cmd_converge(args, run: config.RunConfig) -> Report:
    from scaling import DiskDomain, convergence_study

    points = [tuple(_floats(p)) for p in args.points.split(";")]
    k = [int(x) for x in args.k.split(",")]
    ladder = _floats(args.eps) if args.eps else list(config.EPS_LADDER)
    report = convergence_study(DiskDomain(), points, k, ladder=ladder, threads=run.threads, method=args.method)
    return Report("converge", report.to_dict(), rows=report.rows())


def cmd_sample(args, run: config.RunConfig) -> Report:
    from degrees import DegreeQuery, degree_probability
    from green import green_for
    from sampler import mc_estimate
    from transfer import EdgeProbQuery, edge_probability, transfer_matrix

    graph = _graph(args)
    M = transfer_matrix(green_for(graph))
    if args.degree:
        points = _targets(graph, args.degree)
        query = DegreeQuery(tuple(v for v, _ in points), tuple(k for _, k in points))
        exact = degree_probability(M, query, max_enum=run.max_enum, max_enum_joint=run.max_enum_joint)
    else:
        query = EdgeProbQuery(_edges(graph, args.present), _edges(graph, args.absent))
        exact = edge_probability(M, query, run.det_clamp)
    stats = mc_estimate(graph, query, run.samples, run.seed or 0, run.threads)
    result = stats.to_dict()
    result.update(exact=exact, sigmas=stats.sigmas(exact))
    return Report("sample", result)


def cmd_wick_check(args, run: config.RunConfig) -> Report:
    from grassmann import wick_check, wick_check_bc

    rng = np.random.default_rng(run.seed or 0)
    worst = {"part1": 0.0, "part2": 0.0}
    for _ in range(args.trials):
        m = args.m
        A = m * np.eye(m) + rng.standard_normal((m, m))
        r = int(rng.integers(0, m + 1))
        I = [int(x) for x in rng.permutation(m)[:r]]
        J = [int(x) for x in rng.permutation(m)[:r]]
        lhs, rhs = wick_check(A, I, J)
        worst["part1"] = max(worst["part1"], abs(lhs - rhs) / max(1.0, abs(rhs)))
        r = int(rng.integers(1, m + 1))
        lhs, rhs = wick_check_bc(A, rng.standard_normal((r, m)), rng.standard_normal((m, r)))
        worst["part2"] = max(worst["part2"], abs(lhs - rhs) / max(1.0, abs(rhs)))
    passed = max(worst.values()) < run.oracle_tol
    return Report(
        "wick-check",
        {"m": args.m, "trials": args.trials, "max_deviation": worst, "tolerance": run.oracle_tol, "pass": passed},
    )


def cmd_perm_audit(args, run: config.RunConfig) -> Report:
    from permutations import audit, parse_stars

    reports = audit(parse_stars(args.stars), args.check, run.seed or 0)
    return Report("perm-audit", [r.to_dict() for r in reports])


def cmd_reproduce_table(args, run: config.RunConfig) -> Report:
    from scaling import constants_table

    rows = [row.to_dict() for row in constants_table(run.quad_tol)]
    return Report("reproduce-table", {"rows": len(rows), "all_pass": all(r["pass"] for r in rows)}, rows=rows)


HANDLERS = {
    "green": cmd_green,
    "edge-prob": cmd_edge_prob,
    "degree-pmf": cmd_degree_pmf,
    "cumulant": cmd_cumulant,
    "constant": cmd_constant,
    "converge": cmd_converge,
    "sample": cmd_sample,
    "wick-check": cmd_wick_check,
    "perm-audit": cmd_perm_audit,
    "reproduce-table": cmd_reproduce_table,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug logging")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--threads", type=int, default=None, help=f"worker threads (default: ${config.THREADS_ENV} or 1)")
    common.add_argument("--tol", type=float, default=None, help="oracle agreement tolerance")
    common.add_argument("--quad-tol", type=float, default=None)
    common.add_argument("--max-enum", type=int, default=None)
    common.add_argument("--max-perm", type=int, default=None)
    common.add_argument("--format", choices=config.FORMATS, default=None)
    common.add_argument("--out", default=None, help="write the report here instead of stdout")

    source = argparse.ArgumentParser(add_help=False)
    source.add_argument("--graph", help="JSON graph file")
    source.add_argument("--complete", type=int, help="use K_N")
    source.add_argument("--lattice", help="Z2, tri or hex")
    source.add_argument("--width", type=int)
    source.add_argument("--height", type=int)

    parser = argparse.ArgumentParser(prog="ustlab", description="Uniform spanning tree statistics.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("green", parents=[common, source], help="Green's function or potential kernel")
    p.add_argument("--ground", help="root vertex for a boundaryless graph")
    p.add_argument("--kernel", nargs="+", help="lattice point for the potential kernel")

    p = sub.add_parser("edge-prob", parents=[common, source], help="P(edges in T, others not in T)")
    p.add_argument("--in", dest="present", help="edges required in the tree, u-v,...")
    p.add_argument("--absent", help="edges required absent, x-y,...")

    p = sub.add_parser("degree-pmf", parents=[common, source], help="degree distribution")
    p.add_argument("--vertex")
    p.add_argument("--joint", help="other vertices with fixed degrees, v:k,...")
    p.add_argument("--kmax", type=int)

    p = sub.add_parser("cumulant", parents=[common, source], help="joint degree cumulant")
    p.add_argument("--points", required=True, help="v1:k1,v2:k2,...")
    p.add_argument("--oracle", action="store_true", help="also compute the moment-based value")
    p.add_argument("--neighbor", action="store_true", help="two adjacent points: split by the shared edge")
    p.add_argument("--method", choices=("partitions", "permutations", "auto"), default="partitions")

    p = sub.add_parser("constant", parents=[common], help="lattice constant C_L^(k)")
    p.add_argument("--lattice", default="Z2")
    p.add_argument("--k", type=int, required=True)

    p = sub.add_parser("converge", parents=[common], help="discrete cumulants against the disk limit")
    p.add_argument("--points", required=True, help="x1,y1;x2,y2")
    p.add_argument("--k", required=True, help="k1,k2")
    p.add_argument("--eps", help="decreasing ladder, e.g. 0.125,0.0833")
    p.add_argument("--method", choices=("partitions", "permutations", "auto"), default="partitions")

    p = sub.add_parser("sample", parents=[common, source], help="Monte Carlo estimate with Wilson's algorithm")
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--in", dest="present")
    p.add_argument("--absent")
    p.add_argument("--degree", help="degree query v:k,...")

    p = sub.add_parser("wick-check", parents=[common], help="Wick's theorem on random matrices")
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--trials", type=int, default=100)

    p = sub.add_parser("perm-audit", parents=[common], help="exhaustive permutation property suites")
    p.add_argument("--stars", default="2x3", help="e.g. 2x4 or 3,2,2")
    p.add_argument("--check", choices=("surgery", "bijection", "all"), default="all")

    sub.add_parser("reproduce-table", parents=[common], help="all 13 lattice constants against reference values")
    return parser


def _run_config(args) -> config.RunConfig:
    run = config.RunConfig(subcommand=args.subcommand, seed=args.seed, threads=config.get_thread_count(args.threads))
    overrides = {
        "oracle_tol": args.tol,
        "quad_tol": args.quad_tol,
        "max_enum": args.max_enum,
        "max_perm": args.max_perm,
        "format": args.format,
        "out": args.out,
        "samples": getattr(args, "samples", None),
    }
    for name, value in overrides.items():
        if value is not None:
            setattr(run, name, value)
    return run.validate()


def _configure_logging(verbosity: int):
    level = logging.WARNING if verbosity == 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s", force=True)


def _banner(run: config.RunConfig):
    print("=" * 50, file=sys.stderr)
    print("ustlab", file=sys.stderr)
    print("=" * 50, file=sys.stderr)
    print(f"Subcommand: {run.subcommand}", file=sys.stderr)
    print(f"Threads: {run.threads}", file=sys.stderr)
    print("=" * 50, file=sys.stderr)


def main(argv=None) -> int:
    """Main entry point; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    _configure_logging(args.verbose)

    try:
        run = _run_config(args)
        if args.verbose:
            _banner(run)
        report = HANDLERS[args.subcommand](args, run)
        report.settings = {
            "quad_tol": run.quad_tol,
            "det_clamp": run.det_clamp,
            "oracle_tol": run.oracle_tol,
            "max_enum": run.max_enum,
            "max_perm": run.max_perm,
            "seed": run.seed,
        }
        text = write_report(report, run.format, run.out)
        if run.out is None:
            sys.stdout.write(text)
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except GuardExceeded as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except UstlabError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1

    if args.subcommand == "reproduce-table" and not report.result["all_pass"]:
        return 1
    if args.subcommand == "wick-check" and not report.result["pass"]:
        return 1
    if args.subcommand == "perm-audit" and not all(r["passed"] for r in report.result):
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
