"""Divisor function tau, its summatory function D, the error term Delta in

    D(x) = x log x + (2 gamma - 1) x + Delta(x),

and the mean square integral of Delta over [1, X].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ResourceLimit
from .realfield import gamma_const

#: Euler-Mascheroni constant at double precision (sourced from the 256-bit value).
GAMMA = float(gamma_const(256))

#: 2*gamma - 1, the linear coefficient of the smooth main term.
TWO_GAMMA_MINUS_1 = float(2 * gamma_const(256) - 1)

_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(8)

_SIEVE_LIMIT_CAP = 200_000_000


@dataclass(frozen=True)
class DivisorTable:
    """Sieved divisor counts: counts[n] = tau(n) for 1 <= n <= limit.

    counts has length limit+1 with counts[0] = 0 so that it is indexable by n
    directly; the array is read-only and safe to share across threads.
    """

    limit: int
    counts: np.ndarray
    _cumulative: list = field(default_factory=list, repr=False, compare=False)

    def tau(self, n: int) -> int:
        if not 1 <= n <= self.limit:
            raise ValueError(f"n={n} outside table range [1, {self.limit}]")
        return int(self.counts[n])

    def cumulative(self) -> np.ndarray:
        """D(n) for 0 <= n <= limit as int64 (cached)."""
        if not self._cumulative:
            cd = np.cumsum(self.counts, dtype=np.int64)
            cd.flags.writeable = False
            self._cumulative.append(cd)
        return self._cumulative[0]


def sieve_tau(limit: int) -> DivisorTable:
    """Divisor-count sieve up to `limit` (O(limit log limit) increments)."""
    if limit < 1:
        raise ValueError("limit must be >= 1")
    if limit > _SIEVE_LIMIT_CAP:
        raise ResourceLimit(
            f"sieve limit {limit} exceeds cap {_SIEVE_LIMIT_CAP}",
            suggested_cap=_SIEVE_LIMIT_CAP)
    counts = np.zeros(limit + 1, dtype=np.int32)
    half = limit // 2
    for k in range(1, half + 1):
        counts[k::k] += 1
    # divisors k > limit/2 hit only n = k
    counts[half + 1:] += 1
    counts[0] = 0
    counts.flags.writeable = False
    return DivisorTable(limit=limit, counts=counts)


def summatory_D(x: int) -> int:
    """D(x) = sum_{n <= x} tau(n), exactly, via the hyperbola identity

        D(x) = 2 * sum_{k <= sqrt(x)} floor(x/k) - floor(sqrt(x))^2

    in O(sqrt x) integer operations.
    """
    x = int(x)
    if x < 0:
        raise ValueError("x must be non-negative")
    if x == 0:
        return 0
    r = math.isqrt(x)
    s = 0
    for k in range(1, r + 1):
        s += x // k
    return 2 * s - r * r


def summatory_D_many(xs: np.ndarray) -> np.ndarray:
    """Vectorized hyperbola-identity D(x) for an int array (values >= 0)."""
    xs = np.asarray(xs, dtype=np.int64)
    out = np.zeros(len(xs), dtype=np.int64)
    pos = xs > 0
    xv = xs[pos]
    r = np.sqrt(xv.astype(np.float64)).astype(np.int64)
    # fix rounding of the integer square root
    r = np.where((r + 1) * (r + 1) <= xv, r + 1, r)
    r = np.where(r * r > xv, r - 1, r)
    kmax = int(r.max()) if len(r) else 0
    acc = np.zeros(len(xv), dtype=np.int64)
    chunk = max(1, (1 << 22) // max(kmax, 1))
    for start in range(0, len(xv), chunk):
        stop = min(start + chunk, len(xv))
        k = np.arange(1, kmax + 1, dtype=np.int64)
        q = xv[start:stop, None] // k[None, :]
        mask = k[None, :] <= r[start:stop, None]
        acc[start:stop] = np.sum(np.where(mask, q, 0), axis=1)
    out[pos] = 2 * acc - r * r
    return out


@dataclass(frozen=True)
class DeltaSample:
    """One evaluation of the error term: D(floor(x)) and the remainder."""

    x: float
    d_value: int
    delta: float


def delta(x: float) -> float:
    """Delta(x) = D(floor(x)) - x log x - (2 gamma - 1) x, for x >= 1.

    Right-continuous at integers (jump of size tau(n) at x = n).
    """
    if x < 1:
        raise ValueError("x must be >= 1")
    d = summatory_D(math.floor(x))
    return d - x * math.log(x) - TWO_GAMMA_MINUS_1 * x


def delta_sample(x: float) -> DeltaSample:
    """delta(x) together with the exact summatory value it came from."""
    if x < 1:
        raise ValueError("x must be >= 1")
    d = summatory_D(math.floor(x))
    return DeltaSample(x=float(x), d_value=d,
                       delta=d - x * math.log(x) - TWO_GAMMA_MINUS_1 * x)


def mean_square(X: float, table: DivisorTable | None = None) -> float:
    """Integral of Delta(x)^2 over [1, X], breakpoint-exact.

    The integrand is smooth between consecutive integers (D is constant
    there), so each unit piece is integrated by 8-point Gauss quadrature,
    which is far beyond 1e-9 accurate for this integrand class.
    """
    if X < 1:
        raise ValueError("X must be >= 1")
    if X == 1:
        return 0.0
    n_hi = math.floor(X)
    if table is None or table.limit < n_hi:
        table = sieve_tau(max(n_hi, 1))
    cd = table.cumulative()

    # breakpoints 1, 2, ..., floor(X), X
    edges = np.arange(1.0, n_hi + 1.0)
    if X > n_hi:
        edges = np.append(edges, X)
    left, right = edges[:-1], edges[1:]
    dvals = cd[np.arange(1, len(left) + 1)].astype(np.float64)

    mid = 0.5 * (left + right)
    half = 0.5 * (right - left)
    chunk_sums = []
    chunk = 1 << 18
    for start in range(0, len(left), chunk):
        stop = min(start + chunk, len(left))
        xs = mid[start:stop, None] + half[start:stop, None] * _GAUSS_NODES[None, :]
        dd = dvals[start:stop, None] - xs * np.log(xs) - TWO_GAMMA_MINUS_1 * xs
        piece = half[start:stop] * ((dd * dd) @ _GAUSS_WEIGHTS)
        chunk_sums.append(math.fsum(piece.tolist()))
    return math.fsum(chunk_sums)


def tong_ratio_oracle(limit: int = 2_000_000,
                      table: DivisorTable | None = None) -> tuple[float, float, float]:
    """Independent series value for lim mean_square(X)/X^{3/2}:

        (1/(6 pi^2)) * sum_{n>=1} tau(n)^2 / n^{3/2}

    computed by partial sums plus an integral tail bracket based on
    sum_{n<=t} tau(n)^2 ~ t log(t)^3 / pi^2.  Returns (estimate, low, high).
    """
    if table is None or table.limit < limit:
        table = sieve_tau(limit)
    n = np.arange(1, limit + 1, dtype=np.float64)
    t2 = table.counts[1:limit + 1].astype(np.float64) ** 2
    partial = math.fsum((t2 / n**1.5).tolist())

    # tail of integral_N^inf t^{-3/2} log^k t dt by the exact recurrence
    # I_k = 2 N^{-1/2} log^k N + 2k I_{k-1}
    L = math.log(limit)
    i0 = 2.0 / math.sqrt(limit)
    i1 = i0 * L + 2 * i0
    i2 = i0 * L**2 + 4 * i1
    i3 = i0 * L**3 + 6 * i2
    lead = (i3 + 3 * i2) / math.pi**2
    # bracket generously: lower-order terms of the tau^2 summatory are positive
    low = partial + 0.8 * lead
    high = partial + 2.5 * lead
    est = partial + 1.45 * lead
    scale = 1.0 / (6 * math.pi**2)
    return est * scale, low * scale, high * scale
