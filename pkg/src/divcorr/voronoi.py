"""Truncated Voronoi series Q_N, the oscillatory kernel Lambda, closed-form
oscillatory integrals, and the spectral double sum J with its diagonal split.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .diophantine import Theta
from .divisor import DivisorTable
from .errors import ResourceLimit

#: below this |x| the kernel switches to its Taylor polynomial; the direct
#: formula loses all significant digits as x -> 0
_LAMBDA_SWITCH = 1e-3

_SQRT2_PI = math.sqrt(2.0) * math.pi
_4PI = 4.0 * math.pi


def lambda_kernel(x):
    """Continuous bounded kernel: 1/3 at 0, else
    sin(x)/x + 2 cos(x)/x^2 - 2 sin(x)/x^3.

    Near zero a degree-4 Taylor polynomial (1/3 - x^2/10 + x^4/168) replaces
    the catastrophically cancelling direct form.  Accepts scalars or arrays.
    """
    arr = np.asarray(x, dtype=np.float64)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    out = np.empty_like(arr)
    small = np.abs(arr) < _LAMBDA_SWITCH
    xs = arr[small]
    out[small] = (1.0 / 3.0) - xs * xs / 10.0 + xs**4 / 168.0
    xl = arr[~small]
    sl, cl = np.sin(xl), np.cos(xl)
    out[~small] = sl / xl + 2.0 * cl / xl**2 - 2.0 * sl / xl**3
    return float(out[0]) if scalar else out


def _osc_series(a: float, s: float, kind: str) -> float:
    """Termwise-integrated Taylor series; accurate for a*s <~ 1 where the
    antiderivative difference cancels catastrophically (terms ~ 1/a^3)."""
    acc = 0.0
    sign = 1.0
    if kind == "cos":
        apow, fact = 1.0, 1.0  # a^{2j}, (2j)!
        for j in range(48):
            term = sign * apow * (s ** (2 * j + 3) - 1.0) / (fact * (2 * j + 3))
            acc += term
            if abs(term) < 1e-18 * abs(acc):
                break
            sign = -sign
            apow *= a * a
            fact *= (2 * j + 1) * (2 * j + 2)
    else:
        apow, fact = a, 1.0  # a^{2j+1}, (2j+1)!
        for j in range(48):
            term = sign * apow * (s ** (2 * j + 4) - 1.0) / (fact * (2 * j + 4))
            acc += term
            if abs(term) < 1e-18 * abs(acc):
                break
            sign = -sign
            apow *= a * a
            fact *= (2 * j + 2) * (2 * j + 3)
    return acc


def osc_integral(a: float, X: float, kind: str = "cos") -> float:
    """integral_1^sqrt(X) x^2 trig(a x) dx via the closed-form antiderivative

        int x^2 cos(ax) dx = x^2 sin(ax)/a + 2x cos(ax)/a^2 - 2 sin(ax)/a^3

    (and the matching sine form).  For small phase a*sqrt(X) the difference
    of antiderivatives loses all digits, so a termwise-integrated series is
    used there.  Requires a > 0.
    """
    if a <= 0:
        raise ValueError("a must be positive")
    if X < 1:
        raise ValueError("X must be >= 1")
    if kind not in ("cos", "sin"):
        raise ValueError("kind must be 'cos' or 'sin'")
    up = math.sqrt(X)
    if a * up <= 1.0:
        return _osc_series(a, up, kind)

    if kind == "cos":
        def F(t):
            s, c = math.sin(a * t), math.cos(a * t)
            return t * t * s / a + 2.0 * t * c / a**2 - 2.0 * s / a**3
    else:
        def F(t):
            s, c = math.sin(a * t), math.cos(a * t)
            return -t * t * c / a + 2.0 * t * s / a**2 + 2.0 * c / a**3
    return F(up) - F(1.0)


def q_n(x: float, n_terms: int, table: DivisorTable) -> float:
    """Truncated Voronoi approximation to Delta(x):

        (x^{1/4} / (sqrt(2) pi)) * sum_{n <= N} tau(n) n^{-3/4}
                                     cos(4 pi sqrt(n x) - pi/4)

    with compensated summation.  N = 0 gives the empty sum.
    """
    if x < 1:
        raise ValueError("x must be >= 1")
    if n_terms == 0:
        return 0.0
    if n_terms < 0 or n_terms > table.limit:
        raise ValueError(f"need 0 <= N <= table limit {table.limit}")
    n = np.arange(1, n_terms + 1, dtype=np.float64)
    terms = (table.counts[1:n_terms + 1] / n**0.75 *
             np.cos(_4PI * np.sqrt(n * x) - math.pi / 4.0))
    return x**0.25 / _SQRT2_PI * math.fsum(terms.tolist())


def a_mn(theta, m: int, n: int) -> float:
    """Spectral frequency 4 pi (sqrt(m theta) - sqrt(n))."""
    if m < 1 or n < 1:
        raise ValueError("m, n must be >= 1")
    th = float(theta.value(64)) if isinstance(theta, Theta) else float(theta)
    return _4PI * (math.sqrt(m * th) - math.sqrt(n))


@dataclass(frozen=True)
class SpectralParams:
    """Parameters of the spectral sum: the truncation N and the diagonal
    cutoff T (terms with |a_mn sqrt(X)| <= T count as lower diagonal)."""

    X: float
    N: int
    T: float

    @classmethod
    def default(cls, X: float, theta=None, psi=None) -> "SpectralParams":
        """N = X^{3/4}; T = (pi/sqrt(theta)) sqrt(X / psi^{-1}(X^{1/4}))
        when a psi is supplied, else T = inf (cutoff disabled)."""
        N = int(math.floor(X ** 0.75))
        if psi is None:
            T = math.inf
        else:
            th = float(theta.value(64)) if isinstance(theta, Theta) else float(theta)
            T = math.pi / math.sqrt(th) * math.sqrt(X / psi.inverse(X ** 0.25))
        return cls(X=X, N=N, T=T)


@dataclass(frozen=True)
class SpectralReport:
    J_total: float
    D_lower: float
    D_upper: float
    term_count_lower: int
    term_count_upper: int
    params: SpectralParams


def spectral_j(theta, params: SpectralParams, table: DivisorTable,
               threads: int = 1) -> SpectralReport:
    """The spectral double sum

        J = (X^{3/2} / (2 pi^2)) sum_{m,n <= N} tau(m) tau(n) (mn)^{-3/4}
                                   Lambda(a_mn sqrt(X)),

    partitioned at the cutoff |a_mn sqrt(X)| <= T.  Rows are enumerated in m
    order and reduced deterministically regardless of thread count.
    """
    X, N, T = params.X, params.N, params.T
    if N < 0:
        raise ValueError("N must be >= 0")
    if N * N > 2_000_000_000:
        cap = 44_000
        raise ResourceLimit(
            f"{N}x{N} spectral terms exceed the budget; cap N at about {cap} "
            f"(X at about {int(cap ** (4 / 3))})", suggested_cap=cap)
    if table.limit < N:
        raise ValueError(f"table limit {table.limit} < N = {N}")
    if N == 0:
        return SpectralReport(0.0, 0.0, 0.0, 0, 0, params)

    th = float(theta.value(64)) if isinstance(theta, Theta) else float(theta)
    n = np.arange(1, N + 1, dtype=np.float64)
    coef = table.counts[1:N + 1] / n**0.75
    sqrt_n = np.sqrt(n)
    sX = math.sqrt(X)

    def row(m):
        u = (_4PI * (math.sqrt(m * th) - sqrt_n)) * sX
        t = coef[m - 1] * coef * lambda_kernel(u)
        mask = np.abs(u) <= T
        lo = float(np.sum(t, where=mask)) if mask.any() else 0.0
        hi = float(np.sum(t, where=~mask)) if (~mask).any() else 0.0
        return lo, hi, int(mask.sum())

    ms = range(1, N + 1)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            rows = list(ex.map(row, ms, chunksize=64))
    else:
        rows = [row(m) for m in ms]

    pref = X**1.5 / (2.0 * math.pi**2)
    d_lower = pref * math.fsum(r[0] for r in rows)
    d_upper = pref * math.fsum(r[1] for r in rows)
    count_lower = sum(r[2] for r in rows)
    return SpectralReport(J_total=d_lower + d_upper,
                          D_lower=d_lower, D_upper=d_upper,
                          term_count_lower=count_lower,
                          term_count_upper=N * N - count_lower,
                          params=params)
