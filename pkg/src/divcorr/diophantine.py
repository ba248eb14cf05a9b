"""Continued fractions, rational-approximation measurements, and explicit
Liouville-number constructions.

Constructed numbers (tau_beta series, Jarnik-style continued fractions) are
represented by their exact defining data, never by a floating approximation:
distances ||m*theta|| are computed from an exact rational anchor plus a
rigorous error radius tracked in log2 form, so Liouville-scale cancellation
costs nothing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath

from .errors import (ConstructionInfeasible, PrecisionExhausted,
                     ThetaParseError)
from .realfield import (PsiFunction, log2_fraction, psi_parse, sqrt_const,
                        to_fraction)

_INF = math.inf

#: size budget (bits) for a single partial quotient of a constructed number
DEFAULT_QUOTIENT_BITS = 1 << 22

#: size budget (bits) for the exact partial sums of tau_beta series
PARTIAL_SUM_BITS = 1 << 21

_MAX_EXPAND_BITS = 1 << 24


def fibonacci(k: int) -> int:
    """F_k with F_1 = F_2 = 1, by fast doubling (exact)."""
    if k < 0:
        raise ValueError("k must be >= 0")

    def fd(n):
        if n == 0:
            return 0, 1
        a, b = fd(n >> 1)
        c = a * (2 * b - a)
        d = a * a + b * b
        return (d, c + d) if n & 1 else (c, d)

    return fd(k)[0]


def binet_fibonacci(k: int) -> float:
    """F_k from the closed form (phi^k - (-phi)^{-k}) / sqrt(5)."""
    phi = (1 + math.sqrt(5)) / 2
    return (phi**k - (-phi) ** (-k)) / math.sqrt(5)


def _log2_int(n: int) -> float:
    """log2 of a positive int, safe for huge values."""
    return math.log2(n)


# ---------------------------------------------------------------------------
# Continued fractions and convergents
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Convergent:
    k: int
    n: int  # numerator
    m: int  # denominator (positive)

    def as_fraction(self) -> Fraction:
        return Fraction(self.n, self.m)


@dataclass(frozen=True)
class ContinuedFraction:
    """Simple continued fraction [a0; a1, a2, ...] with a_k >= 1 for k >= 1.

    `period` records the repeating block (starting at index 1) for quadratic
    surds.
    """

    quotients: tuple
    period: tuple | None = None

    def __post_init__(self):
        if not self.quotients:
            raise ValueError("continued fraction needs at least a0")
        if any(a < 1 for a in self.quotients[1:]):
            raise ValueError("partial quotients a_k must be >= 1 for k >= 1")

    def __len__(self):
        return len(self.quotients)

    def convergents(self) -> list[Convergent]:
        return convergents(self)


def convergents(cf: ContinuedFraction) -> list[Convergent]:
    """All convergents n_k/m_k of `cf`, big-integer exact.

    Initial conditions n0 = a0, m0 = 1, n1 = a0 a1 + 1, m1 = a1, then the
    standard two-term recurrence.
    """
    a = cf.quotients
    out = [Convergent(0, a[0], 1)]
    if len(a) == 1:
        return out
    out.append(Convergent(1, a[0] * a[1] + 1, a[1]))
    for k in range(2, len(a)):
        n = a[k] * out[-1].n + out[-2].n
        m = a[k] * out[-1].m + out[-2].m
        out.append(Convergent(k, n, m))
    return out


def cf_expand_surd(d: int, K: int) -> ContinuedFraction:
    """Exact expansion of sqrt(d) via the periodic (P, Q) recurrence.

    Returns quotients a_0..a_K; the repeating block (which starts at index 1
    for square roots) is recorded in `period`.
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    a0 = math.isqrt(d)
    if a0 * a0 == d:
        raise ValueError(f"{d} is a perfect square")
    block = []
    P, Q = a0, d - a0 * a0
    seen = {}
    while (P, Q) not in seen:
        seen[(P, Q)] = len(block)
        a = (a0 + P) // Q
        block.append(a)
        P = a * Q - P
        Q = (d - P * P) // Q
    start = seen[(P, Q)]
    period = tuple(block[start:])
    # sqrt(d) is purely periodic after a0
    full = [a0] + [block[i] if i < len(block) else
                   period[(i - start) % len(period)] for i in range(K)]
    return ContinuedFraction(tuple(full), period=period)


# ---------------------------------------------------------------------------
# Enclosures: exact anchor + log2 error radius
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Enclosure:
    """theta lies within 2**log2_err of `anchor` (side=0), in
    [anchor, anchor + 2**log2_err] (side=+1), or
    [anchor - 2**log2_err, anchor] (side=-1)."""

    anchor: Fraction
    log2_err: float
    side: int = 0


def _cf_from_enclosure(enc: Enclosure, K: int) -> ContinuedFraction:
    """Expand theta = [a0; a1, ...] from an enclosure, certifying each floor.

    Raises PrecisionExhausted (carrying the certified prefix) as soon as the
    enclosure can no longer pin a quotient.
    """
    qs = []
    a, w, side = enc.anchor, enc.log2_err, enc.side

    def bail(msg):
        raise PrecisionExhausted(
            f"{msg} after {len(qs)} certified quotients",
            last_certified=len(qs) - 1,
            partial=ContinuedFraction(tuple(qs)) if qs else None)

    for k in range(K + 1):
        fl = a.numerator // a.denominator
        frac = a - fl
        if w != -_INF:
            if side >= 0:
                gap_hi = 1 - frac
                if w + 2 >= log2_fraction(gap_hi):
                    bail("enclosure straddles the next integer")
            if side <= 0:
                if frac == 0 or w + 2 >= log2_fraction(frac):
                    bail("enclosure straddles an integer from below")
        qs.append(fl)
        if k == K:
            break
        if frac == 0:
            # the anchor's expansion ends here (rational anchor); the true
            # value continues with a quotient we cannot pin
            bail("anchor expansion terminated (rational anchor)")
        if w != -_INF:
            l2f = log2_fraction(frac)
            if w + 2 >= l2f:
                bail("error radius reached the fractional part")
            w = w - 2 * l2f + 1
        a = 1 / frac
        side = -side
    return ContinuedFraction(tuple(qs))


# ---------------------------------------------------------------------------
# ThetaSpec variants
# ---------------------------------------------------------------------------


class Theta:
    """Base class for multiplier specifications in the correlation integral
    and the Diophantine machinery."""

    is_rational = False
    spec: str = ""

    def enclosure(self, bits: int) -> Enclosure:
        raise NotImplementedError

    def max_enclosure_bits(self) -> float:
        """Largest usable `bits` for enclosure(); inf when refinable at will."""
        return _INF

    def best_enclosure(self, bits: int) -> Enclosure:
        """enclosure() clamped to what the defining data can support."""
        cap = self.max_enclosure_bits()
        if cap != _INF:
            bits = min(bits, int(cap))
        return self.enclosure(max(bits, 1))

    def value(self, bits: int = 256) -> mpmath.mpf:
        """Floating value at up to `bits` precision (best effort)."""
        enc = self.best_enclosure(bits)
        with mpmath.workprec(max(bits, 53)):
            return mpmath.mpf(enc.anchor.numerator) / enc.anchor.denominator

    def continued_fraction(self, K: int) -> ContinuedFraction:
        """First K+1 certified partial quotients."""
        need = 64
        last_err = None
        while need <= _MAX_EXPAND_BITS:
            try:
                return _cf_from_enclosure(self.best_enclosure(need), K)
            except PrecisionExhausted as e:
                last_err = e
                if need >= self.max_enclosure_bits():
                    break
                need *= 4
        raise last_err

    def __repr__(self):
        return f"{type(self).__name__}({self.spec!r})"


class RationalTheta(Theta):
    is_rational = True

    def __init__(self, a: int, b: int):
        if a <= 0 or b <= 0:
            raise ValueError("rational theta must be positive")
        g = math.gcd(a, b)
        self.a, self.b = a // g, b // g
        self.spec = f"rat:{self.a}/{self.b}"

    def enclosure(self, bits: int) -> Enclosure:
        return Enclosure(Fraction(self.a, self.b), -_INF, 0)


class SurdTheta(Theta):
    def __init__(self, d: int):
        if d < 2 or math.isqrt(d) ** 2 == d:
            raise ValueError("d must be a non-square integer >= 2")
        self.d = d
        self.spec = f"surd:{d}"

    def enclosure(self, bits: int) -> Enclosure:
        prec = bits + 16
        anchor = to_fraction(sqrt_const(self.d, prec))
        err = 0.5 * math.log2(self.d) + 2 - prec
        return Enclosure(anchor, err, 0)

    def continued_fraction(self, K: int) -> ContinuedFraction:
        return cf_expand_surd(self.d, K)


class GoldenTheta(Theta):
    """The golden ratio (1 + sqrt 5)/2 = [1; 1, 1, ...]."""

    def __init__(self):
        self.spec = "golden"

    def enclosure(self, bits: int) -> Enclosure:
        prec = bits + 16
        anchor = (1 + to_fraction(sqrt_const(5, prec))) / 2
        return Enclosure(anchor, 3 - prec, 0)

    def continued_fraction(self, K: int) -> ContinuedFraction:
        return ContinuedFraction(tuple([1] * (K + 1)), period=(1,))


class CFLiteralTheta(Theta):
    """Number given directly by finitely many partial quotients."""

    def __init__(self, cf: ContinuedFraction, spec: str | None = None):
        if len(cf) < 2:
            raise ValueError("need at least a0 and a1")
        self.cf = cf
        self._convs = convergents(cf)
        self.spec = spec or ("cf:[" + str(cf.quotients[0]) + ";" +
                             ",".join(map(str, cf.quotients[1:])) + "]")

    def _tail_log2(self) -> float:
        # |theta - c_K| < 1/(m_K m_{K+1}) and m_{K+1} >= m_K + m_{K-1}
        mk = self._convs[-1].m
        mk1_lb = mk + (self._convs[-2].m if len(self._convs) >= 2 else 1)
        return -(_log2_int(mk) + _log2_int(mk1_lb))

    def enclosure(self, bits: int) -> Enclosure:
        err = self._tail_log2()
        side = 1 if (len(self._convs) - 1) % 2 == 0 else -1
        if bits > -err:
            raise PrecisionExhausted(
                f"cf literal resolves theta only to ~{-err:.0f} bits",
                partial=Enclosure(self._convs[-1].as_fraction(), err, side))
        return Enclosure(self._convs[-1].as_fraction(), err, side)

    def max_enclosure_bits(self) -> float:
        return -self._tail_log2()

    def continued_fraction(self, K: int) -> ContinuedFraction:
        if K + 1 > len(self.cf):
            raise PrecisionExhausted(
                f"only {len(self.cf)} quotients available",
                last_certified=len(self.cf) - 1, partial=self.cf)
        return ContinuedFraction(self.cf.quotients[:K + 1])


class TauBetaTheta(Theta):
    """Liouville-type series sum_i (b/a)^{t_i} with tower exponents
    t_1 = 1, t_{i+1} = a^{t_i}, for beta = a/b > 1 in lowest terms.

    `depth` is the construction depth used for the floating value; distance
    computations extend the series on demand (exact partial sums plus a log2
    tail bound are cheap until the towers outgrow the bit budget).
    """

    def __init__(self, a: int, b: int, depth: int):
        if b < 1 or a <= b or math.gcd(a, b) != 1:
            raise ValueError("need a > b >= 1 with gcd(a, b) = 1")
        if depth < 1:
            raise ValueError("depth must be >= 1")
        self.a, self.b, self.depth = a, b, depth
        self.spec = f"taubeta:{a}/{b}:{depth}"
        self._towers = [1]
        self._partials = {}

    def tower(self, i: int) -> int:
        """t_i (1-indexed); raises PrecisionExhausted when unrepresentable."""
        while len(self._towers) < i:
            t = self._towers[-1]
            if t.bit_length() > 40 or t * math.log2(self.a) > (1 << 26):
                raise PrecisionExhausted(
                    f"tower exponent a^t_{len(self._towers)} exceeds bit budget",
                    last_certified=len(self._towers))
            self._towers.append(self.a ** t)
        return self._towers[i - 1]

    def max_depth(self) -> int:
        """Largest depth whose exact partial sum fits the bit budget."""
        d = 1
        while True:
            try:
                t_next = self.tower(d + 1)
            except PrecisionExhausted:
                return d
            if t_next.bit_length() > 40 or t_next * math.log2(self.a) > PARTIAL_SUM_BITS:
                return d
            d += 1

    def partial_sum(self, depth: int) -> Fraction:
        if depth not in self._partials:
            s = Fraction(0)
            for i in range(1, depth + 1):
                t = self.tower(i)
                s += Fraction(self.b ** t, self.a ** t)
            self._partials[depth] = s
        return self._partials[depth]

    def tail_log2(self, depth: int) -> float:
        """log2 bound for the tail after `depth` terms (it is < 2x the next
        term)."""
        try:
            t = self.tower(depth + 1)
        except PrecisionExhausted:
            return -_INF  # tail far below any representable magnitude
        if t.bit_length() > 50:
            return -_INF
        l2beta = math.log2(self.a) - math.log2(self.b)
        lt = t * l2beta - 1
        return -lt if lt < 1e15 else -_INF

    def enclosure(self, bits: int) -> Enclosure:
        d = 1
        dmax = self.max_depth()
        while self.tail_log2(d) > -bits:
            d += 1
            if d > dmax:
                raise PrecisionExhausted(
                    f"series resolves theta only to "
                    f"~{-self.tail_log2(dmax):.4g} bits",
                    partial=Enclosure(self.partial_sum(dmax),
                                      self.tail_log2(dmax), 1))
        return Enclosure(self.partial_sum(d), self.tail_log2(d), 1)

    def max_enclosure_bits(self) -> float:
        t = self.tail_log2(self.max_depth())
        return _INF if t == -_INF else -t

    def value(self, bits: int = 256) -> mpmath.mpf:
        d = min(self.depth, self.max_depth())
        p = self.partial_sum(d)
        with mpmath.workprec(max(bits, 53)):
            return mpmath.mpf(p.numerator) / p.denominator


class JarnikTheta(Theta):
    """Number constructed to be approximable to a prescribed order: partial
    quotients grow like psi(m_k)/m_k (see construct_jarnik).  When the target
    K outgrows the quotient bit budget the constructible prefix is used; the
    enclosure width still accounts for the (unbuilt) next quotient."""

    def __init__(self, psi: PsiFunction, K: int,
                 max_quotient_bits: int = DEFAULT_QUOTIENT_BITS):
        self.psi = psi
        self.K = K
        try:
            self.cf = construct_jarnik(psi, K, max_quotient_bits)
        except PrecisionExhausted as e:
            if e.partial is None:
                raise
            self.cf = e.partial
        self.spec = f"jarnik:{psi.text}:{K}"
        self._convs = convergents(self.cf)

    def _tail_log2(self) -> float:
        mK = self._convs[-1].m
        l2m = _log2_int(mK)
        l2next = max(l2m, self.psi.log2(mK))
        return -(l2m + l2next)

    def enclosure(self, bits: int) -> Enclosure:
        err = self._tail_log2()
        K = len(self._convs) - 1
        side = 1 if K % 2 == 0 else -1
        if err != -_INF and bits > -err:
            raise PrecisionExhausted(
                f"constructed quotients resolve theta only to ~{-err:.4g} bits",
                partial=Enclosure(self._convs[-1].as_fraction(), err, side))
        return Enclosure(self._convs[-1].as_fraction(), err, side)

    def max_enclosure_bits(self) -> float:
        t = self._tail_log2()
        return _INF if t == -_INF else -t

    def continued_fraction(self, K: int) -> ContinuedFraction:
        if K + 1 > len(self.cf):
            raise PrecisionExhausted(
                f"only {len(self.cf)} quotients constructible within budget",
                last_certified=len(self.cf) - 1, partial=self.cf)
        return ContinuedFraction(self.cf.quotients[:K + 1])


class DecimalTheta(Theta):
    """Positive number given by a decimal literal, trusted to +-1 ulp of the
    last written digit."""

    def __init__(self, digits: str):
        self.digits = digits
        try:
            self.exact = Fraction(digits)
        except (ValueError, ZeroDivisionError):
            raise ThetaParseError(f"bad decimal literal {digits!r}", 4) from None
        if self.exact <= 0:
            raise ValueError("theta must be positive")
        frac_digits = len(digits.partition(".")[2])
        self._err = -frac_digits * math.log2(10.0) if frac_digits else 0.0
        self.spec = f"dec:{digits}"

    def enclosure(self, bits: int) -> Enclosure:
        if bits > -self._err:
            raise PrecisionExhausted(
                f"decimal literal resolves theta only to ~{-self._err:.0f} bits",
                partial=Enclosure(self.exact, self._err, 0))
        return Enclosure(self.exact, self._err, 0)

    def max_enclosure_bits(self) -> float:
        return -self._err


def theta_parse(text: str) -> Theta:
    """Parse the theta mini-grammar:

    rat:a/b | surd:d | golden | cf:[a0;a1,a2,...] | taubeta:a/b:depth |
    jarnik:<psi-expr>:K | dec:<digits>
    """
    head, sep, rest = text.partition(":")
    if head == "golden":
        if sep:
            raise ThetaParseError("golden takes no parameter", len(head) + 1)
        return GoldenTheta()
    if not sep:
        raise ThetaParseError(f"unknown theta spec {text!r}", 0)
    pos = len(head) + 1
    try:
        if head == "rat":
            a, _, b = rest.partition("/")
            return RationalTheta(int(a), int(b) if b else 1)
        if head == "surd":
            return SurdTheta(int(rest))
        if head == "dec":
            return DecimalTheta(rest)
        if head == "cf":
            if not (rest.startswith("[") and rest.endswith("]")):
                raise ThetaParseError("cf literal must look like cf:[a0;a1,...]", pos)
            body = rest[1:-1]
            a0s, _, tail = body.partition(";")
            quots = [int(a0s)] + [int(t) for t in tail.split(",") if t]
            return CFLiteralTheta(ContinuedFraction(tuple(quots)), spec=text)
        if head == "taubeta":
            ab, _, depth = rest.rpartition(":")
            a, _, b = ab.partition("/")
            return TauBetaTheta(int(a), int(b) if b else 1, int(depth))
        if head == "jarnik":
            psi_text, _, K = rest.rpartition(":")
            return JarnikTheta(psi_parse(psi_text), int(K))
    except ThetaParseError:
        raise
    except (ValueError, ZeroDivisionError) as e:
        raise ThetaParseError(f"bad parameters for {head!r}: {e}", pos) from None
    raise ThetaParseError(f"unknown theta spec {head!r}", 0)


def _require_irrational(theta: Theta, op: str):
    if theta.is_rational:
        raise ValueError(f"{op} requires an irrational theta, got {theta.spec}")


# ---------------------------------------------------------------------------
# cf_expand and distances
# ---------------------------------------------------------------------------


def cf_expand(theta, K: int) -> ContinuedFraction:
    """First K+1 certified partial quotients of theta.

    theta may be a Theta spec, an mpf/float (trusted to 1 ulp of its own
    precision), or an exact Fraction.  Raises PrecisionExhausted naming the
    last certified index when the data cannot pin quotient K.
    """
    if K < 0:
        raise ValueError("K must be >= 0")
    if isinstance(theta, Theta):
        _require_irrational(theta, "cf_expand")
        return theta.continued_fraction(K)
    if isinstance(theta, Fraction):
        return _cf_from_enclosure(Enclosure(theta, -_INF, 0), K)
    # keep the input's own mantissa width: reconstructing through mpmath.mpf
    # would re-round to the ambient working precision
    x = theta if hasattr(theta, "_mpf_") else mpmath.mpf(theta)
    if x <= 0:
        raise ValueError("theta must be positive")
    anchor = to_fraction(x)
    # one ulp: 2**exp, where exp is the mpf's binary exponent of the lsb
    _, man, exp, _ = x._mpf_
    err = float(exp) if man else -_INF
    return _cf_from_enclosure(Enclosure(anchor, err, 0), K)


def _dist_from_enclosure(enc: Enclosure, m: int):
    """(exact anchor distance, log2 error radius) of ||m * theta||.

    x -> dist(x, Z) is 1-Lipschitz, so the radius is m * 2**log2_err.
    """
    f = (m * enc.anchor) % 1
    d = min(f, 1 - f)
    err = enc.log2_err + math.log2(m) if enc.log2_err != -_INF else -_INF
    return d, err


def _resolve_distance(theta: Theta, m: int, rel_bits: int = 40):
    """Certified (dist, log2_err): the radius is at least rel_bits below the
    distance itself (or exactly zero).  Escalates the enclosure on demand."""
    bits = max(96, m.bit_length() + 96)
    cap = theta.max_enclosure_bits()
    while True:
        try:
            enc = theta.best_enclosure(bits)
        except PrecisionExhausted as e:
            if not isinstance(e.partial, Enclosure):
                raise
            enc = e.partial
        d, err = _dist_from_enclosure(enc, m)
        if err == -_INF:
            if d == 0:
                raise PrecisionExhausted(
                    f"||{m} * theta|| below representable resolution")
            return d, err
        if d > 0 and err <= log2_fraction(d) - rel_bits:
            return d, err
        if bits >= cap or bits >= _MAX_EXPAND_BITS:
            raise PrecisionExhausted(
                f"||{m} * theta|| not resolved at the available precision "
                f"(anchor distance {float(d):.4g}, radius 2^{err:.4g})")
        bits = min(bits * 4, _MAX_EXPAND_BITS)


def nearest_distance(theta: Theta, m: int) -> mpmath.mpf:
    """||m * theta||, the distance from m*theta to the nearest integer.

    Certified from the spec's exact data to ~12 significant digits; returns
    an mpf (values such as 2^-65520 underflow a double).  1/2 is returned
    exactly at a midpoint tie.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    _require_irrational(theta, "nearest_distance")
    d, _ = _resolve_distance(theta, m)
    if d == Fraction(1, 2):
        return mpmath.mpf("0.5")
    with mpmath.workprec(96):
        return mpmath.mpf(d.numerator) / d.denominator


def legendre_is_convergent(theta: Theta, n: int, m: int) -> bool:
    """Legendre predicate: |n - m*theta| < 1/(2m) (n/m reduced first).

    By Legendre's criterion a True answer forces n/m to be a convergent of
    theta's continued fraction.
    """
    if m == 0:
        raise ValueError("m must be positive")
    _require_irrational(theta, "legendre_is_convergent")
    g = math.gcd(abs(n), m)
    n, m = n // g, m // g
    bits = max(64, 2 * m.bit_length() + 80)
    cap = theta.max_enclosure_bits()
    while True:
        enc = theta.best_enclosure(bits)
        diff = abs(Fraction(n) - m * enc.anchor)
        radius = enc.log2_err + math.log2(m) if enc.log2_err != -_INF else -_INF
        bound = Fraction(1, 2 * m)
        gap = abs(diff - bound)
        if gap == 0:
            if radius == -_INF:
                return False  # exactly on the boundary: strict < fails
        elif radius == -_INF or radius <= log2_fraction(gap) - 1:
            return diff < bound
        if bits >= cap or bits >= _MAX_EXPAND_BITS:
            raise PrecisionExhausted(
                "Legendre test not resolved at available precision")
        bits *= 4


def _legendre_hits_surd(d: int, M: int) -> list[int]:
    """All m <= M with ||m sqrt(d)|| < 1/(2m), by exact integer arithmetic."""
    hits = []
    for m in range(1, M + 1):
        A = d * m * m
        k = math.isqrt(A)
        for n in (k, k + 1):
            if n == 0:
                continue
            # |n - m sqrt d| < 1/(2m)  <=>  2m|n^2 - A| < n + m sqrt d
            t = 2 * m * abs(n * n - A) - n
            if t < 0 or t * t < A:
                hits.append(m)
                break
    return hits


def _legendre_hits_golden(M: int) -> list[int]:
    """All m <= M with ||m phi|| < 1/(2m); uses 2*m*phi = m + m*sqrt(5)."""
    hits = []
    for m in range(1, M + 1):
        A = 5 * m * m
        k = math.isqrt(A)
        # j = 2n - m ranges over integers with j == m (mod 2)
        cands = [j for j in (k - 1, k, k + 1, k + 2) if j > 0 and (j - m) % 2 == 0]
        for j in cands:
            # |m sqrt5 - j| < 1/m  <=>  m|j^2 - A| < j + m sqrt5
            t = m * abs(j * j - A) - j
            if t < 0 or t * t < A:
                hits.append(m)
                break
    return hits


def legendre_hits(theta: Theta, M: int) -> list[int]:
    """The set {m <= M : ||m theta|| < 1/(2m)}, exactly.

    Fast integer kernels for quadratic irrationals; certified enclosure
    arithmetic otherwise.
    """
    _require_irrational(theta, "legendre_hits")
    if isinstance(theta, SurdTheta):
        return _legendre_hits_surd(theta.d, M)
    if isinstance(theta, GoldenTheta):
        return _legendre_hits_golden(M)
    bits = max(64, 2 * M.bit_length() + 96)
    enc = theta.best_enclosure(bits)
    hits = []
    for m in range(1, M + 1):
        d, err = _dist_from_enclosure(enc, m)
        bound = Fraction(1, 2 * m)
        gap = abs(d - bound)
        if err != -_INF and (gap == 0 or err > log2_fraction(gap) - 1):
            raise PrecisionExhausted(f"Legendre scan unresolved at m={m}",
                                     last_certified=m - 1, partial=hits)
        if d < bound:
            hits.append(m)
    return hits


# ---------------------------------------------------------------------------
# Approximability scans
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ApproximationEvent:
    m: int
    dist: object       # mpf
    threshold: object  # mpf
    hit: bool
    is_convergent: bool = False


@dataclass(frozen=True)
class ScanResult:
    events: tuple
    certified_to: int
    fast_path_from: int | None

    @property
    def hits(self) -> list[int]:
        return [e.m for e in self.events if e.hit]


def _compare_dist_threshold(d: Fraction, err: float, psi: PsiFunction, m: int):
    """Certified comparison of dist = d +- 2^err against 1/psi(m).

    Returns (hit, dist_mpf, threshold_mpf)."""
    with mpmath.workprec(96):
        thr = 1 / psi.eval(m, 96)
        dm = (mpmath.mpf(d.numerator) / d.denominator) if d > 0 else mpmath.mpf(0)
    exact = psi.eval_fraction(m)
    if exact is not None:
        bound = 1 / exact
        gap = abs(d - bound)
        if gap == 0:
            if err != -_INF:
                raise PrecisionExhausted(f"scan comparison unresolved at m={m}")
            return False, dm, thr  # boundary: strict inequality fails
        if err != -_INF and err > log2_fraction(gap) - 1:
            raise PrecisionExhausted(f"scan comparison unresolved at m={m}")
        return d < bound, dm, thr
    # no exact threshold available: compare in log2 with a wide guard band
    l2thr = -psi.log2(m)
    l2d = log2_fraction(d) if d > 0 else -_INF
    if err != -_INF and err > min(l2d, l2thr) - 2:
        raise PrecisionExhausted(f"scan comparison unresolved at m={m}")
    if abs(l2d - l2thr) < 1e-6:
        raise PrecisionExhausted(f"scan comparison too close to call at m={m}")
    return l2d < l2thr, dm, thr


def approximability_scan(theta: Theta, psi: PsiFunction, M: int,
                         max_convergents: int = 256) -> ScanResult:
    """All m <= M with ||m theta|| < 1/psi(m), plus near-miss events at the
    convergent denominators.

    Hybrid strategy: below the crossover m* (the first m with psi(m) >= 2M)
    every m is tested; at and beyond m*, any hit has
    ||m theta|| < 1/(2M) <= 1/(2m), so by Legendre's criterion its reduced
    fraction sits at a convergent - only convergent denominators and their
    small multiples need checking there.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    _require_irrational(theta, "approximability_scan")

    # crossover: smallest m with psi(m) >= 2M (monotone bisection in log2)
    target = math.log2(2 * M)
    if psi.log2(M) < target:
        m_star = M + 1
    elif psi.log2(1) >= target:
        m_star = 1
    else:
        lo, hi = 1, M
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if psi.log2(mid) >= target:
                hi = mid
            else:
                lo = mid
        m_star = hi

    events = {}
    certified_to = M

    def add_event(m, is_conv=False):
        nonlocal certified_to
        if m in events:
            if is_conv and not events[m].is_convergent:
                e = events[m]
                events[m] = ApproximationEvent(e.m, e.dist, e.threshold, e.hit, True)
            return
        try:
            d, err = _resolve_distance(theta, m)
            hit, dm, thr = _compare_dist_threshold(d, err, psi, m)
        except PrecisionExhausted:
            certified_to = min(certified_to, m - 1)
            return
        events[m] = ApproximationEvent(m, dm, thr, hit, is_conv)

    for m in range(1, min(m_star - 1, M) + 1):
        add_event(m)

    fast_from = m_star if m_star <= M else None

    # convergent denominators and their admissible multiples
    try:
        cf = cf_expand(theta, max_convergents)
    except PrecisionExhausted as e:
        cf = e.partial if isinstance(e.partial, ContinuedFraction) else None
    if cf is not None:
        convs = [c for c in convergents(cf) if 1 <= c.m <= M]
        for c in convs:
            add_event(c.m, is_conv=True)
            if m_star > M:
                continue
            try:
                d, _ = _resolve_distance(theta, c.m)
            except PrecisionExhausted:
                certified_to = min(certified_to, M if c.m <= m_star else c.m - 1)
                continue
            # a fast-region hit at g*m_k forces g*||m_k theta|| < 1/2
            g_cap = min(M // c.m, int(Fraction(1, 2) / d) + 1)
            for g in range(2, g_cap + 1):
                if g * c.m >= m_star:
                    add_event(g * c.m)
        # did the convergent list actually reach past M?
        if convergents(cf)[-1].m <= M and m_star <= M:
            certified_to = min(certified_to, convergents(cf)[-1].m)
    elif m_star <= M:
        certified_to = min(certified_to, m_star - 1)

    evs = tuple(sorted(events.values(), key=lambda e: e.m))
    return ScanResult(events=evs, certified_to=certified_to,
                      fast_path_from=fast_from)


# ---------------------------------------------------------------------------
# Constructions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TauBetaNumber:
    """Exact data for a truncated tau_beta series: the tower exponents, the
    partial sum, and a log2 bound on the omitted tail."""

    a: int
    b: int
    depth: int
    exponents: tuple
    partial: Fraction
    tail_log2: float

    def value(self, bits: int = 256) -> mpmath.mpf:
        with mpmath.workprec(max(bits, 53)):
            return mpmath.mpf(self.partial.numerator) / self.partial.denominator

    def theta(self) -> TauBetaTheta:
        return TauBetaTheta(self.a, self.b, self.depth)


def construct_tau_beta(a: int, b: int, depth: int,
                       precision_bits: int | None = None) -> TauBetaNumber:
    """Partial sum of 1/beta^{t_1} + 1/beta^{t_2} + ... with beta = a/b > 1
    in lowest terms and tower exponents t_1 = 1, t_{i+1} = a^{t_i}.

    Exact rational arithmetic throughout; raises PrecisionExhausted reporting
    the max safe depth when a tower exponent outgrows the budget.
    """
    theta = TauBetaTheta(a, b, depth)
    dmax = theta.max_depth()
    if depth > dmax:
        raise PrecisionExhausted(
            f"depth {depth} exceeds the bit budget; max safe depth is {dmax}",
            last_certified=dmax)
    if precision_bits is not None:
        need = theta.tower(depth) * (math.log2(a) - math.log2(b))
        if precision_bits < need:
            raise PrecisionExhausted(
                f"precision {precision_bits} bits cannot resolve the depth-"
                f"{depth} term (~{need:.0f} bits needed)",
                last_certified=depth - 1)
    exps = tuple(theta.tower(i) for i in range(1, depth + 1))
    return TauBetaNumber(a=a, b=b, depth=depth, exponents=exps,
                         partial=theta.partial_sum(depth),
                         tail_log2=theta.tail_log2(depth))


def construct_jarnik(psi: PsiFunction, K: int,
                     max_quotient_bits: int = DEFAULT_QUOTIENT_BITS) -> ContinuedFraction:
    """Continued fraction [0; 1, a_2, ..., a_K] with
    a_{k+1} = max(1, ceil(psi(m_k)/m_k)), so that every convergent
    denominator satisfies ||m_k theta|| < 1/m_{k+1} <= 1/psi(m_k).

    Requires psi(x)/x to actually grow (1/psi(x) = o(1/x)): a construction
    whose quotients degenerate to all ones raises ConstructionInfeasible.
    Quotients larger than `max_quotient_bits` bits raise PrecisionExhausted
    carrying the constructible prefix.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    qs = [0, 1]
    m_prev, m_cur = 1, 1  # m_0, m_1
    for k in range(2, K + 1):
        try:
            ak = max(1, psi.ceil_div(m_cur, max_quotient_bits))
        except PrecisionExhausted as e:
            raise PrecisionExhausted(
                f"quotient a_{k} exceeds the {max_quotient_bits}-bit budget; "
                f"max constructible K is {k - 1}",
                last_certified=k - 1,
                partial=ContinuedFraction(tuple(qs))) from e
        qs.append(ak)
        m_prev, m_cur = m_cur, ak * m_cur + m_prev
    if K >= 2 and all(a == 1 for a in qs[2:]):
        raise ConstructionInfeasible(
            "psi grows too slowly: quotients degenerate to all ones, the "
            "construction cannot prescribe the approximation order")
    return ContinuedFraction(tuple(qs))


@dataclass(frozen=True)
class InvariantReport:
    """Outcome of the classical convergent identities on a CF prefix."""

    K: int
    determinant_ok: bool
    alternation_ok: bool
    sandwich_ok: bool
    sandwich_checked: int
    fibonacci_ok: bool
    fibonacci_all_equal: bool

    @property
    def all_ok(self) -> bool:
        return (self.determinant_ok and self.alternation_ok
                and self.sandwich_ok and self.fibonacci_ok)


def _theta_minus(theta: Theta, fr: Fraction):
    """Certified (sign, |theta - fr| as Fraction interval key): returns a
    tuple (low, high) of Fractions bracketing theta - fr."""
    bits = 96
    cap = theta.max_enclosure_bits()
    while True:
        enc = theta.best_enclosure(bits)
        diff = enc.anchor - fr
        if enc.log2_err == -_INF:
            if diff == 0 and enc.side != 0:
                # theta sits on the stated side of the anchor; the offset is
                # below representable resolution, so return a direction marker
                eps = Fraction(1, 1 << 64)
                return (Fraction(0), eps) if enc.side > 0 else (-eps, Fraction(0))
            return diff, diff
        r = enc.log2_err
        rad = Fraction(1, 2 ** max(int(-r) - 1, 0)) if r < 0 else Fraction(2) ** int(r + 1)
        lo = diff - (rad if enc.side <= 0 else 0)
        hi = diff + (rad if enc.side >= 0 else 0)
        # sign determined (zero endpoints resolve by irrationality of theta)
        # and bracket tight enough for magnitude comparisons
        sign_known = (lo > 0 or hi < 0 or (lo == 0 and hi > 0)
                      or (hi == 0 and lo < 0))
        tight = diff == 0 or rad * (1 << 24) <= abs(diff)
        if sign_known and tight:
            return lo, hi
        if bits >= cap or bits >= _MAX_EXPAND_BITS:
            if sign_known:
                return lo, hi
            raise PrecisionExhausted("theta comparison unresolved")
        bits *= 4


def convergent_invariants(theta: Theta, K: int) -> InvariantReport:
    """Check, exactly, the classical identities on the first K+1 convergents:

    - determinant: n_k m_{k-1} - n_{k-1} m_k = (-1)^{k-1}
    - alternation: even convergents below theta, odd above
    - sandwich: 1/(m_{k+1} m_k + m_k^2) < |theta - n_k/m_k| < 1/(m_{k+1} m_k)
    - Fibonacci growth: m_k >= F_{k+1}, equality only for all-ones quotients

    The sandwich needs m_{k+1}, so it covers k <= K-1 (and for enclosures
    anchored at c_K, k <= K-2).
    """
    cf = cf_expand(theta, K)
    convs = convergents(cf)
    det_ok = all(
        convs[k].n * convs[k - 1].m - convs[k - 1].n * convs[k].m == (-1) ** (k - 1)
        for k in range(1, len(convs)))

    alt_ok = True
    sand_ok = True
    sand_checked = 0
    anchored_here = isinstance(theta, (CFLiteralTheta, JarnikTheta))
    top = len(convs) - (3 if anchored_here else 2)
    for k in range(0, len(convs)):
        try:
            lo, hi = _theta_minus(theta, convs[k].as_fraction())
        except PrecisionExhausted:
            continue
        sign = 1 if (lo > 0 or (lo == 0 and hi > 0)) else \
            (-1 if (hi < 0 or (hi == 0 and lo < 0)) else 0)
        want = 1 if k % 2 == 0 else -1
        if sign != want:
            alt_ok = False
        if k <= top and k >= 1:
            mk, mk1 = convs[k].m, convs[k + 1].m
            below = Fraction(1, mk1 * mk + mk * mk)
            above = Fraction(1, mk1 * mk)
            mag_lo, mag_hi = min(abs(lo), abs(hi)), max(abs(lo), abs(hi))
            if not (below < mag_lo and mag_hi < above):
                sand_ok = False
            sand_checked += 1

    fib_ok = all(convs[k].m >= fibonacci(k + 1) for k in range(len(convs)))
    all_ones = all(a == 1 for a in cf.quotients[1:])
    equal_everywhere = all(convs[k].m == fibonacci(k + 1)
                           for k in range(len(convs)))
    fib_equality_consistent = (equal_everywhere == all_ones)

    return InvariantReport(K=len(convs) - 1, determinant_ok=det_ok,
                           alternation_ok=alt_ok, sandwich_ok=sand_ok,
                           sandwich_checked=sand_checked,
                           fibonacci_ok=fib_ok and fib_equality_consistent,
                           fibonacci_all_equal=equal_everywhere)


@dataclass(frozen=True)
class BaseEstimate:
    estimate: float
    low: float
    high: float
    k_used: int


def irrationality_base_estimate(cf: ContinuedFraction) -> BaseEstimate:
    """Estimate of the least beta with ||m theta|| >= (beta + eps)^{-m} for
    all large m, from the convergent sandwich
    1/(m_{k+1} + m_k) < ||m_k theta|| < 1/m_{k+1}.

    Per-index values (1/||m_k theta||)^{1/m_k} are contaminated by small
    denominators, so the maximum is taken over the top half of the available
    indices; the sandwich interval at the maximizing k is reported.
    """
    convs = convergents(cf)
    if len(convs) < 3:
        raise ValueError("need at least 3 convergents")
    usable = len(convs) - 1  # index k needs m_{k+1}
    start = max(1, usable // 2)
    best = None
    for k in range(start, usable):
        mk = convs[k].m
        mk1 = convs[k + 1].m
        if mk.bit_length() > 900:
            lo = hi = 0.0  # exponent underflows: estimate is exactly 1
        else:
            lo = _log2_int(mk1) / mk
            hi = _log2_int(mk1 + mk) / mk
        mid = 0.5 * (lo + hi)
        if best is None or mid > best[0]:
            best = (mid, lo, hi, k)
    mid, lo, hi, k = best
    return BaseEstimate(estimate=2.0**mid, low=2.0**lo, high=2.0**hi, k_used=k)
