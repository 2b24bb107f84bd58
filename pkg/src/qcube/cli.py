"""``qcube`` command line.

Exit codes: 0 all checks pass, 1 a property was violated, 2 bad configuration.
"""

from __future__ import annotations

import argparse
import math
import sys
from fractions import Fraction
from pathlib import Path

from . import babyfock as bf
from . import experiments as ex
from .graphs import build_weighted_distance_k_graph, graph_to_text
from .qcomb import Q, limit_moment, moment_table_csv, symbolic_moment_table_csv
from .report import Report, emit_report, histogram_csv
from .signs import SignFunction, format_q, rng_for

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG = 0, 1, 2


def _ints(s: str) -> list[int]:
    try:
        return [int(x) for x in s.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}")


def _qs(s: str) -> list:
    if s.strip() == "q":
        return [Q]
    try:
        return [Fraction(x) for x in s.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated rationals, got {s!r}")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--n", type=_ints, default=[8], help="n or comma list of n")
    p.add_argument("--k", type=_ints, default=[1], help="k or comma list of k")
    p.add_argument("--q", type=_qs, default=[Fraction(0)], help="rational q or comma list")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=3)
    p.add_argument("--mmax", type=int, default=4)
    p.add_argument("--out", type=Path, default=None, help="output file (default stdout)")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--threads", type=int, default=None, help=f"worker threads (env {ex.THREADS_ENV})")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qcube", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common()

    def add(name, help_text):
        return sub.add_parser(name, parents=[common], help=help_text)

    add("sample-eps", "draw a sign function and print it")
    g = add("build-graph", "weighted distance-k graph as an edge list")
    g.add_argument("--eps", type=Path, default=None, help="read the sign function from a file")
    add("moments", "exact vacuum moments of X_{n,k} for one sample")
    add("limit-moments", "moments of G_q (use --q q for symbolic coefficients)")
    c = add("converge", "tau(X_{n,k}^m) against tau(H_k(G_q)^m)")
    c.add_argument("--aggregate", choices=sorted(ex.AGGREGATES), default="median")
    c.add_argument("--trends", action="store_true", help="emit the trend table instead of cells")
    j = add("converge-joint", "mixed moment of an X/Y word against its limit")
    j.add_argument("--word", default="1,2,1", help="e.g. 1,2,1 or X1,Y2,X1")
    j.add_argument("--aggregate", choices=sorted(ex.AGGREGATES), default="median")
    j.add_argument("--trends", action="store_true")
    add("recurrence-check", "exact q-free recurrence on all basis vectors")
    x = add("xy-gap", "||X_{n,k} - Y_{n,k}||_p against n")
    x.add_argument("--p", type=float, default=2.0)
    x.add_argument("--aggregate", choices=sorted(ex.AGGREGATES), default="median")
    x.add_argument("--trends", action="store_true")
    kh = add("khinchine", "Khinchine inequality on random homogeneous elements")
    kh.add_argument("--p", type=float, default=4.0)
    h = add("hypercontract", "||P_t X||_r <= ||X||_p on random elements")
    h.add_argument("--p", type=float, default=2.0)
    h.add_argument("--r", type=float, default=4.0)
    h.add_argument("--t", type=float, default=0.5 * math.log(3))
    add("clt-z", "central limit experiment for the Z statistic")
    s = add("spectrum", "eigenvalue histogram of X_{n,k}")
    s.add_argument("--bins", default="fd", help="numpy bin rule or bin count")
    return parser


def _write(text: str, out: Path | None):
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def _config(args, **extra) -> ex.ExperimentConfig:
    return ex.ExperimentConfig(
        qs=args.q, n_grid=args.n, k_values=args.k, m_max=args.mmax, samples=args.samples,
        seed=args.seed, threads=args.threads or ex.default_threads(), **extra,
    )


def _single(args):
    if len(args.n) != 1 or len(args.q) != 1:
        raise ex.ConfigError("this command takes a single --n and --q")
    return args.n[0], args.q[0]


def _emit(report: Report, args, trends=False) -> None:
    if trends and args.format == "csv":
        _write(report.trends_csv(), args.out)
    else:
        _write(emit_report(report, args.format), args.out)


def _rows_report(kind, rows, columns=None, **metadata) -> Report:
    columns = columns or (list(rows[0]) if rows else [])
    return Report(kind=kind, columns=columns, rows=rows, metadata=metadata)


def cmd_sample_eps(args):
    n, q = _single(args)
    _write(ex.sample_eps(n, q, args.seed, "cli").to_text(), args.out)
    return EXIT_OK


def cmd_build_graph(args):
    if args.eps is not None:
        eps = SignFunction.from_text(args.eps.read_text())
    else:
        n, q = _single(args)
        eps = ex.sample_eps(n, q, args.seed, "cli")
    _write(graph_to_text(build_weighted_distance_k_graph(eps, args.k[0])), args.out)
    return EXIT_OK


def cmd_moments(args):
    n, q = _single(args)
    eps = ex.sample_eps(n, q, args.seed, "cli")
    rows = []
    for k in args.k:
        for m, mom in enumerate(bf.power_moments(bf.build_Xnk(eps, k), args.mmax)):
            limit = limit_moment([k] * m, q)
            rows.append(dict(
                k=k, m=m, numerator=str(mom.numerator), h=mom.h, value=mom.decimal(),
                exact=ex.frac_str(mom.exact()), limit=ex.frac_str(limit),
            ))
    _emit(_rows_report("moments", rows, n=n, q=format_q(q), seed=args.seed), args)
    return EXIT_OK


def cmd_limit_moments(args):
    ms = list(range(args.mmax + 1))
    if args.q == [Q]:
        _write(symbolic_moment_table_csv(ms), args.out)
    else:
        _write(moment_table_csv(ms, args.q), args.out)
    return EXIT_OK


def cmd_converge(args):
    report = ex.run_convergence(_config(args, aggregate=args.aggregate))
    _emit(report, args, args.trends)
    return EXIT_OK if report.passed else EXIT_VIOLATION


def cmd_converge_joint(args):
    degrees = [d for _, d in ex.parse_word(args.word)]
    cfg = _config(args, aggregate=args.aggregate)
    cfg.k_values = sorted(set(degrees))
    report = ex.run_joint_convergence(cfg, args.word)
    _emit(report, args, args.trends)
    return EXIT_OK if report.passed else EXIT_VIOLATION


def cmd_recurrence_check(args):
    rows = []
    for q in args.q:
        for n in args.n:
            for s in range(args.samples):
                eps = ex.sample_eps(n, q, args.seed, "rec", s)
                for k in args.k:
                    if k <= n - 1:
                        rows.append(dict(
                            q=format_q(q), n=n, sample=s, k=k,
                            deviation=ex.check_recurrence(eps, k),
                        ))
    _emit(_rows_report("recurrence", rows, seed=args.seed), args)
    return EXIT_OK if all(r["deviation"] == 0 for r in rows) else EXIT_VIOLATION


def cmd_xy_gap(args):
    report = ex.check_xy_gap(_config(args, aggregate=args.aggregate), p=args.p)
    _emit(report, args, args.trends)
    return EXIT_OK if all(t["passed"] for t in report.trends) else EXIT_VIOLATION


def cmd_khinchine(args):
    rows = []
    for q in args.q:
        for n in args.n:
            eps = ex.sample_eps(n, q, args.seed, "khinchine")
            for k in args.k:
                rng = rng_for(args.seed, "khinchine", format_q(q), n, k, str(args.p))
                res = ex.check_khinchine(eps, k, args.p, args.samples, rng)
                rows.append(dict(
                    q=format_q(q), n=n, k=k, p=args.p, trials=res.trials,
                    worst_ratio=f"{res.worst_ratio:.15g}",
                    bound=f"{(args.p - 1) ** (k / 2):.15g}", passed=res.passed,
                ))
    _emit(_rows_report("khinchine", rows, seed=args.seed), args)
    return EXIT_OK if all(r["passed"] for r in rows) else EXIT_VIOLATION


def cmd_hypercontract(args):
    rows = []
    for q in args.q:
        for n in args.n:
            eps = ex.sample_eps(n, q, args.seed, "hyper")
            rng = rng_for(args.seed, "hyper", format_q(q), n, repr(args.t))
            res = ex.check_hypercontractivity(eps, args.p, args.r, args.t, args.samples, rng)
            rows.append(dict(
                q=format_q(q), n=n, p=args.p, r=args.r, t=repr(args.t), trials=res.trials,
                worst_ratio=f"{res.worst_ratio:.15g}", passed=res.passed,
            ))
    _emit(_rows_report("hypercontractivity", rows, seed=args.seed), args)
    return EXIT_OK if all(r["passed"] for r in rows) else EXIT_VIOLATION


def cmd_clt_z(args):
    rows = [
        ex.clt_z_experiment(k, q, n, args.samples, args.seed)
        for q in args.q for k in args.k for n in args.n
    ]
    _emit(_rows_report("clt-z", rows, seed=args.seed), args)
    return EXIT_OK if all(r["mean_ok"] and r["variance_ok"] for r in rows) else EXIT_VIOLATION


def cmd_spectrum(args):
    n, q = _single(args)
    eps = ex.sample_eps(n, q, args.seed, "cli")
    evals = bf.spectrum(bf.build_Xnk(eps, args.k[0]))
    bins = int(args.bins) if args.bins.isdigit() else args.bins
    _write(histogram_csv(bf.histogram(evals, bins=bins)), args.out)
    return EXIT_OK


COMMANDS = {
    "sample-eps": cmd_sample_eps,
    "build-graph": cmd_build_graph,
    "moments": cmd_moments,
    "limit-moments": cmd_limit_moments,
    "converge": cmd_converge,
    "converge-joint": cmd_converge_joint,
    "recurrence-check": cmd_recurrence_check,
    "xy-gap": cmd_xy_gap,
    "khinchine": cmd_khinchine,
    "hypercontract": cmd_hypercontract,
    "clt-z": cmd_clt_z,
    "spectrum": cmd_spectrum,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if any(isinstance(q, type(Q)) for q in args.q) and args.command != "limit-moments":
        print("qcube: symbolic q is only supported by limit-moments", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](args)
    except (ex.ConfigError, ValueError, IndexError, ZeroDivisionError) as exc:
        print(f"qcube: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
