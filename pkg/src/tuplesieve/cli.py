"""Command-line entry point.

Subcommands: tables, admissible, ap-error, bv-scan, smooth-scan,
integrals, functionals, rho, s-sums, hunt. Structured results go to
--out as JSON (with the run manifest embedded) plus CSV for per-cell
grids; scan and hunt reports also render PNG figures next to the CSV
unless --no-plot is given.

Exit codes: 2 usage, 3 capacity, 1 internal failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .admissible import AdmissibleTuple, greedy_admissible, is_admissible, w_trick
from .arith import CapacityError, load_or_build
from .divisor_ap import bv_scan, divisor_error, smooth_scan, twisted_error
from .hunt import density_report, hunt
from .reports import AP_CSV_HEADER, make_manifest, write_csv, write_json
from .sieve import (
    SieveConfig,
    WeightSystem,
    predict_s1,
    predict_s2,
    s1_direct,
    s2_direct,
    s_of_rho,
)
from .testfn import (
    SmoothedF,
    PolynomialF,
    TestFunction,
    c_integral,
    functionals_mc,
    gram_integrals,
    mu_ratio,
    polynomial_functionals,
    rho_asymptotic_constant,
    rho_bound,
)


def _parse_int_list(text: str) -> list[int]:
    return [int(x) for x in text.replace(" ", "").split(",") if x]


def _resolve_cache(args) -> str | None:
    return os.environ.get("TUPLESIEVE_CACHE") or args.table_cache


def _tables(limit: int, args):
    return load_or_build(limit, cache_dir=_resolve_cache(args))


def _admissible_or_die(parser, text: str) -> AdmissibleTuple:
    result = is_admissible(_parse_int_list(text))
    if not isinstance(result, AdmissibleTuple):
        parser.error(f"--h {text}: {result}")
    return result


def _manifest(args, started):
    params = {k: v for k, v in vars(args).items() if k not in ("func", "parser")}
    return make_manifest(
        subcommand=args.subcommand,
        parameters=params,
        seed=getattr(args, "seed", None),
        table_cache=_resolve_cache(args),
        started=started,
    )


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------

def cmd_tables(args) -> int:
    started = time.time()
    tables = _tables(args.limit, args)
    results = {
        "limit": tables.limit,
        "sum_tau": int(tables.tau[1:].sum(dtype=np.int64)),
        "sum_mu": int(tables.mu[1:].sum(dtype=np.int64)),
        "squarefree_count": int(np.count_nonzero(tables.mu[1:])),
    }
    path = write_json(_out(args) / "tables.json", _manifest(args, started), results)
    print(f"tables: limit={args.limit} squarefree={results['squarefree_count']} -> {path}")
    return 0


def cmd_admissible(args) -> int:
    started = time.time()
    if args.action == "check":
        if args.h is None:
            args.parser.error("admissible check requires --h")
        result = is_admissible(_parse_int_list(args.h))
        ok = isinstance(result, AdmissibleTuple)
        if ok:
            results = {"admissible": True, "h": list(result.h), "k": result.k,
                       "checked_up_to": result.checked_up_to,
                       "witnesses": dict(result.witnesses)}
            print(f"admissible: k={result.k} checked_up_to={result.checked_up_to}")
        else:
            results = {"admissible": False, "h": list(result.h), "prime": result.prime}
            print(str(result))
        write_json(_out(args) / "admissible.json", _manifest(args, started), results)
        return 0
    if args.k is None:
        args.parser.error("admissible make requires --k")
    tup = greedy_admissible(args.k, search_cap=args.cap)
    if args.d0 is not None:
        w, b = w_trick(tup, args.d0)
    else:
        w = b = None
    tuple_path = _out(args) / "tuple.json"
    tup.save(tuple_path)
    results = {"h": list(tup.h), "k": tup.k, "checked_up_to": tup.checked_up_to,
               "W": w, "b": b, "tuple_file": str(tuple_path)}
    path = write_json(_out(args) / "admissible.json", _manifest(args, started), results)
    print(f"admissible make: h={list(tup.h)} -> {path}")
    return 0


def cmd_ap_error(args) -> int:
    started = time.time()
    tables = _tables(int(math.floor(args.x)), args)
    if args.twisted:
        rep = twisted_error(args.x, args.q, args.a, tables)
        results = {
            "N": rep.N, "q": rep.q, "a": rep.a, "delta": rep.delta,
            "qprime": rep.qprime, "Eprime": rep.Eprime,
            "terms": [
                {"d": d, "a_d": ad, "x_d": xd, "E": e, "contribution": c}
                for d, ad, xd, e, c in rep.terms
            ],
        }
        print(f"ap-error twisted: E'({args.x:g},{args.q},{args.a}) = {float(rep.Eprime):.6f}")
        write_json(_out(args) / "ap_error.json", _manifest(args, started), results)
        return 0
    rep = divisor_error(args.x, args.q, args.a, tables)
    write_csv(
        _out(args) / "ap_error.csv",
        AP_CSV_HEADER,
        [(rep.x, rep.q, rep.a, rep.E, rep.weil_ratio, rep.linear_ratio)],
    )
    results = {
        "x": rep.x, "q": rep.q, "a": rep.a, "ap_sum": rep.ap_sum,
        "coprime_sum": rep.coprime_sum, "E": rep.E, "coprime": rep.coprime,
        "weil_ratio": rep.weil_ratio, "linear_ratio": rep.linear_ratio,
    }
    path = write_json(_out(args) / "ap_error.json", _manifest(args, started), results)
    print(f"ap-error: E({args.x:g},{args.q},{args.a}) = {float(rep.E):.6f} -> {path}")
    return 0


def cmd_bv_scan(args) -> int:
    started = time.time()
    tables = _tables(int(math.floor(args.x)), args)
    result = bv_scan(args.x, args.theta, tables, A=args.A, threads=args.threads)
    out = _out(args)
    write_csv(
        out / "bv_scan.csv",
        AP_CSV_HEADER + ("squarefree",),
        [
            (result.x, r.q, r.argmax_a, r.max_abs_e, r.weil_ratio, r.linear_ratio,
             int(r.squarefree))
            for r in result.rows
        ],
    )
    results = {
        "x": result.x, "theta": result.theta, "A": result.A, "q_max": result.q_max,
        "total": result.total, "total_squarefree": result.total_squarefree,
        "normalized_ratio": result.normalized_ratio,
        "normalized_ratio_squarefree": result.normalized_ratio_squarefree,
    }
    path = write_json(out / "bv_scan.json", _manifest(args, started), results)
    if not args.no_plot:
        from .plots import plot_bv_scan

        plot_bv_scan(result, out / "bv_scan.png")
    print(
        f"bv-scan: q<=x^{args.theta} sum={result.total:.3f} "
        f"normalized={result.normalized_ratio:.4f} -> {path}"
    )
    return 0


def cmd_smooth_scan(args) -> int:
    started = time.time()
    tables = _tables(int(math.floor(args.x)), args)
    result = smooth_scan(
        args.x, args.theta, args.eta, args.delta_prime, tables,
        flavor=args.flavor, threads=args.threads,
    )
    out = _out(args)
    scale = args.x ** (1.0 - args.delta_prime)
    write_csv(
        out / "smooth_scan.csv",
        AP_CSV_HEADER + ("ratio",),
        [
            (result.x, r.q, r.argmax_a, r.max_abs_e, r.weil_ratio, r.linear_ratio,
             r.max_abs_e * r.q / scale)
            for r in result.rows
        ],
    )
    results = {
        "x": result.x, "theta": result.theta, "eta": result.eta,
        "delta_prime": result.delta_prime, "flavor": result.flavor,
        "modulus_count": len(result.rows),
        "max_ratio": result.max_ratio, "argmax_q": result.argmax_q,
    }
    path = write_json(out / "smooth_scan.json", _manifest(args, started), results)
    if not args.no_plot:
        from .plots import plot_smooth_scan

        plot_smooth_scan(result, out / "smooth_scan.png")
    if result.max_ratio is None:
        print("smooth-scan: empty modulus set")
    else:
        print(f"smooth-scan: {len(result.rows)} moduli, max ratio "
              f"{result.max_ratio:.6f} at q={result.argmax_q} -> {path}")
    return 0


def cmd_integrals(args) -> int:
    started = time.time()
    upsilon, it_gp2, it_g2 = gram_integrals(args.T)
    results = {
        "T": args.T,
        "Upsilon": upsilon,
        "int_t_gprime_sq": it_gp2,
        "int_t_g_sq": it_g2,
        "mu_ratio": mu_ratio(args.T),
    }
    if args.poly is not None:
        k, a = args.poly
        f = PolynomialF(k, a)
        results["poly_c_integral_ones"] = c_integral(f, f, (1,) * k)
        exact = polynomial_functionals(k, a)
        results["poly_I_F_exact"] = exact.I_F.value
    path = write_json(_out(args) / "integrals.json", _manifest(args, started), results)
    print(f"integrals: T={args.T} Upsilon={upsilon:.12f} mu={results['mu_ratio']:.12f} -> {path}")
    return 0


def _test_function(args) -> TestFunction:
    return TestFunction(k=args.k, T=args.T, delta1=args.delta1, delta2=args.delta2)


def cmd_functionals(args) -> int:
    started = time.time()
    tf = _test_function(args)
    est = functionals_mc(tf, args.samples, args.seed)
    results = {
        "k": tf.k, "T": tf.T, "delta1": tf.delta1, "delta2": tf.delta2,
        "estimates": est,
    }
    path = write_json(_out(args) / "functionals.json", _manifest(args, started), results)
    print(
        f"functionals: k={tf.k} I(F)={est.I_F.value:.6g}(se {est.I_F.se:.2g}) "
        f"alpha={est.alpha_k.value:.6g}(se {est.alpha_k.se:.2g}) -> {path}"
    )
    return 0


def cmd_rho(args) -> int:
    started = time.time()
    if args.asymptotic:
        const = rho_asymptotic_constant()
        results = {"constant": const, "float": float(const)}
        path = write_json(_out(args) / "rho.json", _manifest(args, started), results)
        print(f"rho ~ {const.numerator}/{const.denominator} k^2 = {float(const):.6f} k^2 -> {path}")
        return 0
    if args.k is None:
        args.parser.error("rho requires --k unless --asymptotic is given")
    tf = _test_function(args)
    est = functionals_mc(tf, args.samples, args.seed)
    bound = rho_bound(args.k, args.varpi, args.delta, est)
    results = {"estimates": est, "rho": bound}
    path = write_json(_out(args) / "rho.json", _manifest(args, started), results)
    print(f"rho: k={args.k} rho={bound.value:.4f} (se {bound.se:.2g}) -> {path}")
    return 0


def _weight_system(args, h, N, parser) -> tuple[WeightSystem, object]:
    cfg = SieveConfig.from_r_exponent(
        k=h.k, N=N, h=h, D0=args.D0, r_exponent=args.r_exp, kappa=args.kappa
    )
    if args.F in ("smoothed", "paper"):  # "paper" kept as a compatibility alias
        tf = TestFunction(k=h.k, T=args.T, delta1=args.delta1, delta2=args.delta2)
        return WeightSystem(config=cfg, F=SmoothedF(tf)), tf
    if args.F.startswith("poly:"):
        a = int(args.F.split(":", 1)[1])
        return WeightSystem(config=cfg, F=PolynomialF(h.k, a)), None
    parser.error(f"unknown weight profile {args.F!r} (use smoothed or poly:a)")


def cmd_s_sums(args) -> int:
    started = time.time()
    parser = args.parser
    h = _admissible_or_die(parser, args.H)
    if args.k is not None and args.k != h.k:
        parser.error(f"--k {args.k} disagrees with --H of size {h.k}")
    tables = _tables(2 * args.N + max(h.h), args)
    ws, tf = _weight_system(args, h, args.N, parser)
    s1 = s1_direct(ws, h, tables)
    s2_per_m = [s2_direct(ws, h, tables, m=m) for m in range(h.k)]
    s2 = math.fsum(s2_per_m)
    break_even = s2 / s1 if s1 > 0 else float("nan")

    if args.rho:
        rho_grid = [float(x) for x in args.rho.split(",")]
    else:
        rho_grid = [round(break_even + d, 3) for d in (-2.0, -1.0, 0.0, 1.0, 2.0)]
    s_rows = [(r, s_of_rho(r, s1, s2)) for r in rho_grid]

    p1 = predict_s1(ws, tables)
    if tf is None:
        a = int(args.F.split(":", 1)[1])
        est = polynomial_functionals(h.k, a)
    else:
        est = functionals_mc(tf, args.samples, args.seed)
    p2_per_m = [predict_s2(m, ws, est, tables) for m in range(h.k)]
    p2 = math.fsum(p2_per_m)

    out = _out(args)
    results = {
        "k": h.k, "H": list(h.h), "N": args.N, "W": ws.config.W, "b": ws.config.b,
        "R": ws.config.R, "r_exponent": ws.config.r_exponent, "kappa": ws.config.kappa,
        "F": args.F,
        "s1": s1, "s2": s2, "s2_per_m": s2_per_m,
        "predict_s1": p1, "predict_s2": p2, "predict_s2_per_m": p2_per_m,
        "ratio_s1": s1 / p1 if p1 else None,
        "ratio_s2": s2 / p2 if p2 else None,
        "break_even_rho": break_even,
        "s_of_rho": [{"rho": r, "value": v} for r, v in s_rows],
    }
    path = write_json(out / "s_sums.json", _manifest(args, started), results)
    write_csv(out / "s_of_rho.csv", ("rho", "s_of_rho"), s_rows)
    if not args.no_plot:
        from .plots import plot_s_of_rho

        plot_s_of_rho([r for r, _ in s_rows], [v for _, v in s_rows], break_even,
                      out / "s_of_rho.png")
    print(
        f"s-sums: N={args.N} s1={s1:.6g} s2={s2:.6g} break-even rho={break_even:.3f} "
        f"ratios s1/pred={results['ratio_s1']:.3f} s2/pred={results['ratio_s2']:.3f} -> {path}"
    )
    return 0


def cmd_hunt(args) -> int:
    started = time.time()
    parser = args.parser
    h = _admissible_or_die(parser, args.H)
    xs = [args.x] if not args.grid else [float(v) for v in args.grid.split(",")]
    tables = _tables(int(math.floor(max(xs))) + max(h.h), args)
    results_list = [hunt(h, x, args.rho, tables) for x in xs]
    res = results_list[-1]
    out = _out(args)
    write_csv(
        out / "hunt_hits.csv",
        ("n",) + tuple(f"tau_n_plus_{hi}" for hi in h.h),
        [tuple([int(n)] + [int(tables.tau[n + hi]) for hi in h.h]) for n in res.hits],
    )
    results = {
        "H": list(h.h), "x": res.x, "rho": res.rho, "floor_rho": res.floor_rho,
        "hits": int(res.hits.size), "qualified": res.qualified_count,
        "min_sum": res.min_sum, "running_min": list(res.running_min),
        "histogram": res.histogram, "normalized_count": res.normalized_count,
    }
    if len(results_list) >= 2:
        results["density"] = density_report(results_list)
    path = write_json(out / "hunt.json", _manifest(args, started), results)
    if not args.no_plot:
        from .plots import plot_hunt

        plot_hunt(res, out / "hunt.png")
    print(f"hunt: x={res.x:g} hits={res.hits.size} min_sum={res.min_sum} -> {path}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="reports", help="report directory")
    common.add_argument("--table-cache", default=None,
                        help="table cache directory (env TUPLESIEVE_CACHE overrides)")
    common.add_argument("--threads", type=int, default=1, help="parallel scan width")
    common.add_argument("--seed", type=int, default=0, help="master RNG seed")
    common.add_argument("--no-plot", action="store_true", help="skip figure rendering")

    parser = argparse.ArgumentParser(
        prog="tuplesieve",
        description="divisor sums in progressions, sieve weights and almost-prime tuples",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("tables", parents=[common], help="build or load arithmetic tables")
    p.add_argument("--limit", type=int, required=True)
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("admissible", parents=[common], help="check or construct tuples")
    p.add_argument("action", choices=("check", "make"))
    p.add_argument("--h", help="comma-separated tuple for check")
    p.add_argument("--k", type=int, help="tuple size for make")
    p.add_argument("--cap", type=int, default=10_000, help="greedy scan cap")
    p.add_argument("--d0", type=float, default=None, help="also report the W-trick pair")
    p.set_defaults(func=cmd_admissible)

    p = sub.add_parser("ap-error", parents=[common], help="one divisor AP error cell")
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--a", type=int, required=True)
    p.add_argument("--twisted", action="store_true",
                   help="compute the gcd-split variant for squarefree q")
    p.set_defaults(func=cmd_ap_error)

    p = sub.add_parser("bv-scan", parents=[common], help="error sum over all moduli")
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--A", type=float, default=1.0, help="log power in the normalization")
    p.set_defaults(func=cmd_bv_scan)

    p = sub.add_parser("smooth-scan", parents=[common], help="scan smooth squarefree moduli")
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--delta-prime", type=float, default=0.05)
    p.add_argument("--flavor", choices=("x", "q"), default="x",
                   help="smoothness bound relative to x or to q")
    p.set_defaults(func=cmd_smooth_scan)

    p = sub.add_parser("integrals", parents=[common], help="profile integrals, closed forms")
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--poly", type=int, nargs=2, metavar=("K", "A"), default=None,
                   help="also evaluate the polynomial cross-integral")
    p.set_defaults(func=cmd_integrals)

    p = sub.add_parser("functionals", parents=[common], help="Monte Carlo functionals")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--T", type=float, default=None)
    p.add_argument("--delta1", type=float, default=None)
    p.add_argument("--delta2", type=float, default=1e-2)
    p.add_argument("--samples", type=int, default=100_000)
    p.set_defaults(func=cmd_functionals)

    p = sub.add_parser("rho", parents=[common], help="almost-prime threshold")
    p.add_argument("--asymptotic", action="store_true",
                   help="print the exact large-k constant")
    p.add_argument("--k", type=int)
    p.add_argument("--T", type=float, default=None)
    p.add_argument("--delta1", type=float, default=None)
    p.add_argument("--delta2", type=float, default=1e-2)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--varpi", type=float, default=0.004)
    p.add_argument("--delta", type=float, default=1e-3)
    p.set_defaults(func=cmd_rho)

    p = sub.add_parser("s-sums", parents=[common], help="direct sieve sums and predictions")
    p.add_argument("--k", type=int, default=None,
                   help="tuple size (consistency check against --H)")
    p.add_argument("--H", required=True, help="comma-separated admissible tuple")
    p.add_argument("--N", type=int, required=True, help="window is (N, 2N]")
    p.add_argument("--D0", type=float, default=3.0)
    p.add_argument("--R-exp", dest="r_exp", type=float, default=0.3248,
                   help="R = N^exponent")
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--F", default="poly:3", help="weight profile: smoothed or poly:a")
    p.add_argument("--T", type=float, default=None)
    p.add_argument("--delta1", type=float, default=None)
    p.add_argument("--delta2", type=float, default=1e-2)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--rho", default=None, help="comma-separated rho grid")
    p.set_defaults(func=cmd_s_sums)

    p = sub.add_parser("hunt", parents=[common], help="search for qualifying integers")
    p.add_argument("--H", required=True)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--grid", default=None, help="comma-separated x grid for density")
    p.set_defaults(func=cmd_hunt)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.parser = parser
    try:
        return args.func(args)
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
