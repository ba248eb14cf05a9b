"""Command-line front end: reproducible, machine-readable access to every
pipeline stage.

Exit codes: 0 success, 1 check failure, 2 usage/domain error, 3 resource
limit, 4 precision exhausted.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass

import mpmath
import numpy as np

from . import __version__
from .correlation import (CSV_HEADER, SpectralComparison, compare_spectral,
                          correlate_grid, fit_exponent, result_csv_row,
                          results_json)
from .diophantine import (ContinuedFraction, Theta, construct_jarnik,
                          construct_tau_beta, convergent_invariants,
                          convergents, legendre_hits, nearest_distance,
                          theta_parse)
from .divisor import delta, mean_square, sieve_tau, tong_ratio_oracle
from .errors import (ConstructionInfeasible, PrecisionExhausted, PsiParseError,
                     ResourceLimit, ThetaParseError)
from .realfield import psi_parse
from .voronoi import SpectralParams, lambda_kernel, osc_integral, q_n, spectral_j

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_RESOURCE = 3
EXIT_PRECISION = 4


@dataclass(frozen=True)
class RunConfig:
    precision_bits: int
    threads: int
    out_format: str
    seed: int

    def header(self, command: str) -> str:
        return (f"# divcorr v{__version__} precision_bits={self.precision_bits} "
                f"threads={self.threads} out_format={self.out_format} "
                f"seed={self.seed} command={command}")


def _fmt(x) -> str:
    if isinstance(x, mpmath.mpf):
        return mpmath.nstr(x, 17)
    return format(float(x), ".17g")


def _emit(line=""):
    sys.stdout.write(line + "\n")


# ---------------------------------------------------------------------------
# delta
# ---------------------------------------------------------------------------


def cmd_delta(cfg: RunConfig, args) -> int:
    x = args.x
    if x < 1:
        raise ValueError("x must be >= 1")
    d = delta(x)
    _emit(cfg.header("delta"))
    if args.voronoi_n:
        N = args.voronoi_n
        table = sieve_tau(N)
        q = q_n(x, N, table)
        _emit("x,delta,q_N,N,gap")
        _emit(f"{_fmt(x)},{_fmt(d)},{_fmt(q)},{N},{_fmt(abs(d - q))}")
    else:
        _emit("x,delta")
        _emit(f"{_fmt(x)},{_fmt(d)}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# cf
# ---------------------------------------------------------------------------


def _print_cf_table(cfg: RunConfig, theta: Theta | None, cf: ContinuedFraction):
    convs = convergents(cf)
    _emit("k,a_k,n_k,m_k,dist_mk_theta")
    for c in convs:
        ak = cf.quotients[c.k]
        dist = ""
        if theta is not None:
            try:
                dist = _fmt(nearest_distance(theta, c.m))
            except PrecisionExhausted:
                dist = "unresolved"
        _emit(f"{c.k},{ak},{c.n},{c.m},{dist}")


def cmd_cf(cfg: RunConfig, args) -> int:
    _emit(cfg.header("cf"))
    if args.construct:
        spec = args.construct
        head = spec.partition(":")[0]
        if head == "taubeta":
            body = spec.partition(":")[2]
            ab, _, depth = body.rpartition(":")
            a, _, b = ab.partition("/")
            num = construct_tau_beta(int(a), int(b) if b else 1, int(depth))
            _emit("beta,depth,value,tail_log2")
            _emit(f"{num.a}/{num.b},{num.depth},{_fmt(num.value(cfg.precision_bits))},"
                  f"{_fmt(num.tail_log2)}")
            _emit("term,exponent")
            for i, e in enumerate(num.exponents, 1):
                _emit(f"{i},{e}")
            return EXIT_OK
        if head == "jarnik":
            body = spec.partition(":")[2]
            psi_text, _, K = body.rpartition(":")
            psi = psi_parse(psi_text)
            try:
                cf = construct_jarnik(psi, int(K))
            except PrecisionExhausted as e:
                if e.partial is None:
                    raise
                _emit(f"# note: {e}")
                cf = e.partial
            theta = theta_parse(spec)
            _print_cf_table(cfg, theta, cf)
            # a-posteriori approximability of the constructed convergents:
            # ||m_k theta|| < 1/m_{k+1} <= 1/psi(m_k) for k >= 2; for the
            # last index m_{k+1} is bounded below by psi(m_k) by construction
            _emit("k,m_k,log2_m_next,log2_psi_mk,target_met")
            convs = convergents(cf)
            for k in range(2, len(convs)):
                l2p = psi.log2(convs[k].m)
                if k + 1 < len(convs):
                    l2n = math.log2(convs[k + 1].m)
                else:
                    l2n = max(l2p, math.log2(convs[k].m))
                _emit(f"{k},{convs[k].m},{_fmt(l2n)},{_fmt(l2p)},{l2n >= l2p}")
            return EXIT_OK
        raise ValueError(f"unknown constructor {head!r} (taubeta/jarnik)")

    if not args.theta:
        raise ValueError("cf needs --theta or --construct")
    theta = theta_parse(args.theta)
    if theta.is_rational:
        raise ValueError("cf requires an irrational theta "
                         f"(got {theta.spec}); rationals are only legal for "
                         "the correlation integral")
    K = args.terms - 1
    if K < 0:
        raise ValueError("--terms must be >= 1")
    try:
        cf = theta.continued_fraction(K) if isinstance(theta, Theta) else None
    except PrecisionExhausted as e:
        _emit(f"# note: {e}")
        if e.partial is None:
            return EXIT_PRECISION
        cf = e.partial
    _print_cf_table(cfg, theta, cf)
    rep = convergent_invariants(theta, len(cf) - 1)
    _emit("invariant,ok")
    _emit(f"determinant,{rep.determinant_ok}")
    _emit(f"alternation,{rep.alternation_ok}")
    _emit(f"sandwich,{rep.sandwich_ok}")
    _emit(f"fibonacci,{rep.fibonacci_ok}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# correlate
# ---------------------------------------------------------------------------


def cmd_correlate(cfg: RunConfig, args) -> int:
    theta = theta_parse(args.theta)
    psi = psi_parse(args.psi) if args.psi else None
    results = correlate_grid(theta, args.xmin, args.xmax, args.points,
                             threads=cfg.threads)
    fit = fit_exponent(results) if args.fit else None
    if cfg.out_format == "json":
        _emit(cfg.header("correlate"))
        _emit(results_json(results, fit=fit, psi=psi))
        return EXIT_OK
    _emit(cfg.header("correlate"))
    header = CSV_HEADER + (",psi_normalized" if psi else "")
    _emit(header)
    for r in results:
        _emit(result_csv_row(r, psi))
    if fit is not None:
        _emit("fit_slope,fit_intercept,rms_residual,points_used,sign_changes")
        _emit(f"{_fmt(fit.slope)},{_fmt(fit.intercept)},{_fmt(fit.rms_residual)},"
              f"{fit.points_used},{fit.sign_changes}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def _check(name: str, measured, threshold, ok: bool, lines: list) -> bool:
    lines.append(f"{name}: measured={measured} threshold={threshold} "
                 f"{'PASS' if ok else 'FAIL'}")
    return ok


def _verify_cf(lines: list) -> bool:
    ok = True
    for spec in ("surd:2", "surd:3", "golden"):
        rep = convergent_invariants(theta_parse(spec), 50)
        ok &= _check(f"cf invariants {spec} K=50", rep.all_ok, True, rep.all_ok, lines)
        if spec == "golden":
            ok &= _check("golden m_k = F_(k+1) exactly",
                         rep.fibonacci_all_equal, True,
                         rep.fibonacci_all_equal, lines)
    jt = theta_parse("jarnik:expexp:6")
    rep = convergent_invariants(jt, len(jt.cf) - 1)
    ok &= _check(f"cf invariants jarnik:expexp (K={len(jt.cf) - 1} within budget)",
                 rep.all_ok, True, rep.all_ok, lines)
    return ok


def _verify_legendre(lines: list) -> bool:
    ok = True
    expected_sqrt2 = [1, 2, 5, 12, 29, 70, 169, 408, 985, 2378, 5741,
                      13860, 33461, 80782]
    M = 10**5
    for spec in ("surd:2", "surd:3", "golden"):
        theta = theta_parse(spec)
        hits = legendre_hits(theta, M)
        cf = theta.continued_fraction(60)
        convs = [c for c in convergents(cf) if c.m <= M]
        dens = sorted({c.m for c in convs})
        subset = set(hits) <= set(dens)
        ok &= _check(f"legendre criterion {spec}: hits are convergent "
                     f"denominators", subset, True, subset, lines)
        # independent route: which convergents actually satisfy the bound
        qualify = sorted({c.m for c in convs
                          if nearest_distance(theta, c.m) < 1.0 / (2 * c.m)})
        exact = hits == qualify
        ok &= _check(f"legendre hit set {spec} matches per-convergent "
                     f"distances", exact, True, exact, lines)
        if spec in ("surd:2", "golden"):
            eq = hits == dens
            ok &= _check(f"{spec}: every convergent denominator qualifies",
                         eq, True, eq, lines)
        if spec == "surd:2":
            good2 = hits == expected_sqrt2
            ok &= _check("sqrt2 denominator list", good2, True, good2, lines)
    return ok


def _verify_lambda(cfg: RunConfig, lines: list) -> bool:
    ok = True
    exact0 = lambda_kernel(0.0) == 1.0 / 3.0
    ok &= _check("lambda(0) = 1/3 exactly", exact0, True, exact0, lines)
    rng = np.random.default_rng(cfg.seed)
    worst = 0.0
    for _ in range(100):
        a = float(10.0 ** rng.uniform(-2, 2))
        X = float(10.0 ** rng.uniform(0.1, 4))
        lhs = lambda_kernel(a * math.sqrt(X))
        rhs = osc_integral(a, X, "cos") / X**1.5 + lambda_kernel(a) / X**1.5
        worst = max(worst, abs(lhs - rhs) / max(abs(lhs), 1e-30))
    ok &= _check("kernel/integral identity rel err", f"{worst:.3g}", "1e-10",
                 worst < 1e-10, lines)
    xs = np.linspace(1.0, 500.0, 20001)
    decay = float(np.max(np.abs(lambda_kernel(xs) * xs)))
    ok &= _check("kernel decay |L(x) x| on [1,500]", f"{decay:.4g}", "3.1",
                 decay <= 3.1, lines)
    return ok


def _verify_spectral(lines: list) -> bool:
    theta = theta_parse("surd:2")
    th = math.sqrt(2)
    X = 16.0
    table = sieve_tau(16)
    rep = spectral_j(theta, SpectralParams.default(X), table)
    brute = 0.0
    N = 8
    for m in range(1, N + 1):
        for n in range(1, N + 1):
            u = 4 * math.pi * (math.sqrt(m * th) - math.sqrt(n)) * math.sqrt(X)
            brute += (table.tau(m) * table.tau(n) / (m * n) ** 0.75
                      * lambda_kernel(u))
    brute *= X**1.5 / (2 * math.pi**2)
    rel = abs(rep.J_total - brute) / abs(brute)
    return _check("spectral sum vs naive double loop X=16", f"{rel:.3g}",
                  "1e-9", rel < 1e-9, lines)


def _verify_tong(lines: list) -> bool:
    est, low, high = tong_ratio_oracle(2_000_000)
    X = 10.0**6
    ratio = mean_square(X) / X**1.5
    rel = abs(ratio - est) / est
    ok = rel < 0.10 and low * 0.9 < ratio < high * 1.1
    return _check("mean square ratio vs series oracle", f"{ratio:.6f}",
                  f"{est:.6f} +-10%", ok, lines)


_SUITES = {
    "cf": lambda cfg, lines: _verify_cf(lines),
    "legendre": lambda cfg, lines: _verify_legendre(lines),
    "lambda": _verify_lambda,
    "spectral": lambda cfg, lines: _verify_spectral(lines),
    "tong": lambda cfg, lines: _verify_tong(lines),
}


def cmd_verify(cfg: RunConfig, args) -> int:
    _emit(cfg.header("verify"))
    if args.suite not in _SUITES:
        raise ValueError(f"unknown suite {args.suite!r}; "
                         f"choose from {sorted(_SUITES)}")
    lines: list[str] = []
    ok = _SUITES[args.suite](cfg, lines)
    for ln in lines:
        _emit(ln)
    _emit(f"suite {args.suite}: {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


# ---------------------------------------------------------------------------
# compare (exact vs spectral)
# ---------------------------------------------------------------------------


def cmd_compare(cfg: RunConfig, args) -> int:
    _emit(cfg.header("compare"))
    psi = psi_parse(args.psi) if args.psi else None
    cmp = compare_spectral(args.theta, args.x, psi=psi, threads=cfg.threads,
                           N=args.n, T=args.t)
    _emit("X,N,T,I_exact,J_total,D_lower,D_upper,discrepancy,disc_over_X118")
    p = cmp.report.params
    _emit(",".join([_fmt(cmp.X), str(p.N), _fmt(p.T), _fmt(cmp.I_exact),
                    _fmt(cmp.report.J_total), _fmt(cmp.report.D_lower),
                    _fmt(cmp.report.D_upper), _fmt(cmp.discrepancy),
                    _fmt(cmp.ratio_x118)]))
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="divcorr",
        description="Divisor error term, Diophantine machinery, and "
                    "correlation experiments")
    p.add_argument("--precision-bits", type=int,
                   default=int(os.environ.get("DIVCORR_PRECISION_BITS", "256")))
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--format", choices=("csv", "json"), default="csv",
                   dest="out_format")
    p.add_argument("--seed", type=int, default=0,
                   help="seed for sampled property checks")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("delta", help="exact error term, optionally vs the "
                                     "truncated oscillating sum")
    d.add_argument("--x", type=float, required=True)
    d.add_argument("--voronoi-n", type=int, default=0)

    c = sub.add_parser("cf", help="continued fraction tables and constructions")
    c.add_argument("--theta", type=str)
    c.add_argument("--terms", type=int, default=10)
    c.add_argument("--construct", type=str,
                   help="taubeta:a/b:depth or jarnik:<psi>:K")

    r = sub.add_parser("correlate", help="correlation integral over a grid")
    r.add_argument("--theta", type=str, required=True)
    r.add_argument("--xmin", type=float, required=True)
    r.add_argument("--xmax", type=float, required=True)
    r.add_argument("--points", type=int, required=True)
    r.add_argument("--fit", action="store_true")
    r.add_argument("--psi", type=str, default=None)

    m = sub.add_parser("compare", help="exact integral vs spectral sum")
    m.add_argument("--theta", type=str, required=True)
    m.add_argument("--x", type=float, required=True)
    m.add_argument("--psi", type=str, default=None)
    m.add_argument("--n", type=int, default=None, help="override N")
    m.add_argument("--t", type=float, default=None, help="override T")

    v = sub.add_parser("verify", help="invariant suites")
    v.add_argument("--suite", type=str, required=True,
                   choices=sorted(_SUITES))
    return p


_COMMANDS = {
    "delta": cmd_delta,
    "cf": cmd_cf,
    "correlate": cmd_correlate,
    "compare": cmd_compare,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = RunConfig(precision_bits=args.precision_bits, threads=args.threads,
                    out_format=args.out_format, seed=args.seed)
    if cfg.precision_bits < 53 or cfg.threads < 1:
        parser.error("precision-bits must be >= 53 and threads >= 1")
    try:
        return _COMMANDS[args.command](cfg, args)
    except ResourceLimit as e:
        print(f"resource error: {e}", file=sys.stderr)
        return EXIT_RESOURCE
    except PrecisionExhausted as e:
        print(f"precision exhausted: {e}", file=sys.stderr)
        return EXIT_PRECISION
    except ConstructionInfeasible as e:
        print(f"construction infeasible: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, PsiParseError, ThetaParseError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
