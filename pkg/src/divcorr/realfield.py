"""Arbitrary-precision reals, mathematical constants, and the growth-function
(psi) expression language.

Big reals are mpmath ``mpf`` values: an exact mantissa/exponent pair, so every
finite value converts losslessly to ``fractions.Fraction``.  All constructors
here take an explicit precision budget in bits; operations inside a
``mpmath.workprec`` block are correctly rounded at that budget.
"""

from __future__ import annotations

import math
from fractions import Fraction

import mpmath

from .errors import PrecisionExhausted, PsiParseError

DEFAULT_PRECISION = 256

# log2(psi(x)) values above this are treated as "beyond any budget"
_LOG2_SATURATE = 1e15


def gamma_const(bits: int = DEFAULT_PRECISION) -> mpmath.mpf:
    """Euler-Mascheroni constant, correctly rounded to `bits` bits."""
    if bits < 53:
        raise ValueError("precision below 53 bits not supported")
    with mpmath.workprec(bits):
        return +mpmath.euler


def pi_const(bits: int = DEFAULT_PRECISION) -> mpmath.mpf:
    with mpmath.workprec(bits):
        return +mpmath.pi


def sqrt_const(d: int, bits: int = DEFAULT_PRECISION) -> mpmath.mpf:
    """sqrt(d) at `bits` bits, for integer d >= 0."""
    with mpmath.workprec(bits):
        return mpmath.sqrt(d)


def to_fraction(x) -> Fraction:
    """Exact rational value of a float or mpf (both are dyadic rationals)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)
    # mpmath mpf: (sign, mantissa, exponent, bitcount); read the raw tuple
    # (reconstructing via mpmath.mpf() would re-round to working precision)
    tup = x._mpf_ if hasattr(x, "_mpf_") else mpmath.mpf(x)._mpf_
    sign, man, exp, _ = tup
    man, exp = int(man), int(exp)
    if man == 0 and exp != 0:
        raise ValueError(f"cannot convert non-finite value {x!r}")
    val = Fraction(man << exp) if exp >= 0 else Fraction(man, 1 << -exp)
    return -val if sign else val


def log2_fraction(f: Fraction) -> float:
    """log2 of a positive Fraction, good to ~1e-12 even for huge entries."""
    if f <= 0:
        raise ValueError("log2 of non-positive value")
    p, q = f.numerator, f.denominator
    pb, qb = p.bit_length(), q.bit_length()
    # scale both into float range
    ps = p >> (pb - 53) if pb > 53 else p
    qs = q >> (qb - 53) if qb > 53 else q
    return (math.log2(ps) + max(pb - 53, 0)) - (math.log2(qs) + max(qb - 53, 0))


def certified_floor(anchor: Fraction, log2_err: float):
    """Floor of a real known to lie within 2**log2_err of `anchor`.

    Raises PrecisionExhausted when the enclosure straddles an integer.
    """
    fl = anchor.numerator // anchor.denominator
    frac = anchor - fl
    # distance to the nearest integer boundary must exceed the error radius
    gap = min(frac, 1 - frac)
    if gap == 0:
        if log2_err == -math.inf:
            return fl
        raise PrecisionExhausted("floor sits on an integer boundary")
    if log2_err != -math.inf and log2_err >= log2_fraction(gap) - 1:
        raise PrecisionExhausted("enclosure too wide to certify floor")
    return fl


# ---------------------------------------------------------------------------
# psi expression language
#
# Concrete syntax:   pow:<s>   (x^s, s > 0)
#                    exp:<b>   (b^x, b > 1)
#                    expexp    (exp(exp(x)))
#                    scale:<c>:<inner>   (c * inner(x), c > 0)
# ---------------------------------------------------------------------------


def _parse_number(text: str, pos: int):
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise PsiParseError(f"expected a number, got {text!r}", pos) from None


class PsiFunction:
    """A monotone increasing positive function on [1, oo) with a computable
    inverse, from the small grammar above.

    eval() returns mpf (values like 1.5**65536 overflow float); log2()
    returns a float and saturates to +inf far beyond any precision budget.
    """

    def __init__(self, kind: str, param: Fraction | None = None,
                 inner: "PsiFunction | None" = None, text: str | None = None):
        self.kind = kind
        self.param = param
        self.inner = inner
        self.text = text if text is not None else self._render()

    def _render(self) -> str:
        if self.kind == "pow":
            return f"pow:{self.param}"
        if self.kind == "exp":
            return f"exp:{self.param}"
        if self.kind == "expexp":
            return "expexp"
        return f"scale:{self.param}:{self.inner.text}"

    def __repr__(self):
        return f"PsiFunction({self.text!r})"

    def eval(self, x, bits: int = 80) -> mpmath.mpf:
        with mpmath.workprec(bits):
            xm = mpmath.mpf(x) if not isinstance(x, int) else x
            if self.kind == "pow":
                return mpmath.power(xm, mpmath.mpf(self.param.numerator) / self.param.denominator)
            if self.kind == "exp":
                base = mpmath.mpf(self.param.numerator) / self.param.denominator
                return mpmath.power(base, xm)
            if self.kind == "expexp":
                return mpmath.exp(mpmath.exp(xm))
            c = mpmath.mpf(self.param.numerator) / self.param.denominator
            return c * self.inner.eval(x, bits)

    __call__ = eval

    def log2(self, x) -> float:
        """log2(psi(x)); x may be a huge int.  Saturates to +inf."""
        lx = x.bit_length() - 1 if isinstance(x, int) and x > 2**53 else None
        if self.kind == "pow":
            s = float(self.param)
            l2x = math.log2(float(x)) if lx is None else float(lx)
            return s * l2x
        if self.kind == "exp":
            l2b = log2_fraction(self.param)
            if lx is not None:
                return math.inf if lx > 60 else float(x) * l2b
            return float(x) * l2b
        if self.kind == "expexp":
            if lx is not None or x > 50:
                return math.inf
            e = math.exp(float(x))
            return math.inf if e > _LOG2_SATURATE else e * math.log2(math.e)
        return log2_fraction(self.param) + self.inner.log2(x)

    def eval_fraction(self, m: int) -> Fraction | None:
        """Exact value of psi(m) at integer m, when the family allows it."""
        if self.kind == "exp":
            a, b = self.param.numerator, self.param.denominator
            return Fraction(a**m, b**m)
        if self.kind == "pow" and self.param.denominator == 1:
            return Fraction(m ** self.param.numerator)
        if self.kind == "scale":
            f = self.inner.eval_fraction(m)
            return None if f is None else self.param * f
        return None

    def ceil_div(self, m: int, bits_budget: int) -> int:
        """ceil(psi(m) / m) exactly; the quotient that a Jarnik-style
        construction appends.  Raises PrecisionExhausted when the result
        would exceed `bits_budget` bits."""
        l2 = self.log2(m)
        if l2 - math.log2(m) > bits_budget:
            raise PrecisionExhausted(
                f"quotient psi({m})/{m} needs ~{l2 - math.log2(m):.3g} bits",
                partial=None)
        exact = self.eval_fraction(m)
        if exact is not None:
            num, den = exact.numerator, exact.denominator * m
            return -((-num) // den)
        # mpf route with certification by precision doubling
        bits = max(64, int(l2) + 96)
        prev = None
        for _ in range(4):
            with mpmath.workprec(bits):
                v = self.eval(m, bits) / m
                fr = to_fraction(v)
                c = -((-fr.numerator) // fr.denominator)
            if prev is not None and c == prev:
                return c
            prev = c
            bits *= 2
        raise PrecisionExhausted(f"could not certify ceil(psi({m})/{m})")

    def inverse(self, y) -> float:
        """x with psi(x) = y, via the closed form of each family.

        Accepts floats or mpf (psi values overflow a double quickly)."""
        with mpmath.workprec(80):
            ym = mpmath.mpf(y) if not isinstance(y, mpmath.mpf) else y
            if self.kind == "pow":
                if ym < 1:
                    raise ValueError("inverse domain: y below psi(1)")
                s = mpmath.mpf(self.param.numerator) / self.param.denominator
                return float(mpmath.power(ym, 1 / s))
            if self.kind == "exp":
                base = mpmath.mpf(self.param.numerator) / self.param.denominator
                if ym < base:
                    raise ValueError("inverse domain: y below psi(1)")
                return float(mpmath.log(ym) / mpmath.log(base))
            if self.kind == "expexp":
                if ym < mpmath.exp(mpmath.e):
                    raise ValueError("inverse domain: y below psi(1)")
                return float(mpmath.log(mpmath.log(ym)))
            c = mpmath.mpf(self.param.numerator) / self.param.denominator
            return self.inner.inverse(ym / c)


def psi_parse(text: str) -> PsiFunction:
    """Parse the concrete psi syntax; see module docstring for the grammar."""
    head, sep, rest = text.partition(":")
    if head == "pow":
        if not sep:
            raise PsiParseError("pow needs a parameter, e.g. pow:2", len(text))
        s = _parse_number(rest, len(head) + 1)
        if s <= 0:
            raise PsiParseError("pow exponent must be > 0", len(head) + 1)
        return PsiFunction("pow", s, text=text)
    if head == "exp":
        if not sep:
            raise PsiParseError("exp needs a base, e.g. exp:3", len(text))
        b = _parse_number(rest, len(head) + 1)
        if b <= 1:
            raise PsiParseError("exp base must be > 1", len(head) + 1)
        return PsiFunction("exp", b, text=text)
    if head == "expexp":
        if sep:
            raise PsiParseError("expexp takes no parameter", len(head) + 1)
        return PsiFunction("expexp", text=text)
    if head == "scale":
        cs, sep2, inner_text = rest.partition(":")
        if not sep or not sep2:
            raise PsiParseError("scale needs scale:<c>:<inner>", len(head) + 1)
        c = _parse_number(cs, len(head) + 1)
        if c <= 0:
            raise PsiParseError("scale factor must be > 0", len(head) + 1)
        inner = psi_parse(inner_text)
        return PsiFunction("scale", c, inner=inner, text=text)
    raise PsiParseError(f"unknown psi family {head!r}", 0)


def psi_inverse(f: PsiFunction, y) -> float:
    """Inverse evaluation of a parsed psi function."""
    return f.inverse(y)
