"""Truncated p-adic numbers with fixed relative precision.

A nonzero value is stored as ``p**valuation * unit`` where ``unit`` is an
integer prime to p known modulo ``p**prec``.  Zero is the unique exact value
with infinite valuation.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .errors import ContextMismatch, DivisionByZero, PrecisionExhausted

INF = math.inf

Number = Union[int, Fraction, "PAdic"]


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def vp(n: int, p: int) -> int:
    """p-adic valuation of a nonzero integer."""
    if n == 0:
        raise ValueError("valuation of 0 is infinite")
    n = abs(n)
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def vp_fraction(x: Fraction, p: int) -> float:
    x = Fraction(x)
    if x == 0:
        return INF
    return vp(x.numerator, p) - vp(x.denominator, p)


@dataclass(frozen=True)
class PAdicContext:
    """Fixes the prime p and the number of significant digits carried."""

    p: int
    precision: int

    def __post_init__(self):
        if not isinstance(self.p, int) or not is_prime(self.p):
            raise ValueError(f"p must be prime, got {self.p!r}")
        if not isinstance(self.precision, int) or self.precision < 1:
            raise ValueError(f"precision must be a positive integer, got {self.precision!r}")

    @property
    def modulus(self) -> int:
        return self.p ** self.precision

    def zero(self) -> PAdic:
        return PAdic(self, INF, 0, 0)

    def one(self) -> PAdic:
        return PAdic(self, 0, 1, self.precision)

    def from_rational(self, num: int, den: int = 1) -> PAdic:
        return from_rational(num, den, self)

    def __call__(self, value) -> PAdic:
        """Coerce an int, Fraction, PAdic or string ("3", "-1/5", textual form)."""
        if isinstance(value, PAdic):
            _check(self, value.ctx)
            return value
        if isinstance(value, bool):
            raise TypeError("bool is not a p-adic value")
        if isinstance(value, int):
            return from_rational(value, 1, self)
        if isinstance(value, Fraction):
            return from_rational(value.numerator, value.denominator, self)
        if isinstance(value, str):
            text = value.strip()
            if "^" in text or "(" in text:
                return PAdic.parse(text, self)
            return from_rational(*_parse_rational(text), ctx=self)
        raise TypeError(f"cannot build a p-adic number from {type(value).__name__}")


def _parse_rational(text: str) -> tuple[int, int]:
    text = text.strip()
    if "/" in text:
        num, den = text.split("/", 1)
        return int(num), int(den)
    return Fraction(text).numerator, Fraction(text).denominator


def _check(a: PAdicContext, b: PAdicContext) -> None:
    if a != b:
        raise ContextMismatch(f"mixed p-adic contexts {a} and {b}")


@dataclass(frozen=True)
class PAdic:
    ctx: PAdicContext
    valuation: Union[int, float]
    unit: int
    prec: int

    # -- construction -------------------------------------------------
    @classmethod
    def from_parts(cls, ctx: PAdicContext, valuation: int, unit: int, prec: int | None = None) -> PAdic:
        prec = ctx.precision if prec is None else min(prec, ctx.precision)
        if prec < 1:
            raise PrecisionExhausted("no significant digits left")
        unit %= ctx.p ** prec
        if unit % ctx.p == 0:
            raise ValueError("unit part must be prime to p")
        return cls(ctx, valuation, unit, prec)

    # -- inspection ---------------------------------------------------
    @property
    def p(self) -> int:
        return self.ctx.p

    def is_zero(self) -> bool:
        return self.valuation == INF

    @property
    def digits(self) -> list[int]:
        """Base-p digits of the unit part, least significant first."""
        out, u = [], self.unit
        for _ in range(self.prec):
            out.append(u % self.p)
            u //= self.p
        return out

    @property
    def absolute_precision(self):
        """The value is known modulo p**absolute_precision."""
        return INF if self.is_zero() else self.valuation + self.prec

    @property
    def norm(self) -> Fraction:
        if self.is_zero():
            return Fraction(0)
        return Fraction(self.p) ** (-self.valuation)

    def is_integral(self) -> bool:
        return self.valuation >= 0

    def is_unit(self) -> bool:
        return self.valuation == 0

    def residue(self) -> int:
        """Image in the residue field A/pA = Z/p."""
        if self.valuation < 0:
            raise ValueError("residue map is only defined on the valuation ring")
        return self.unit % self.p if self.valuation == 0 else 0

    def lift(self) -> Fraction:
        """The rational p^v * u with u the balanced residue of the unit part."""
        if self.is_zero():
            return Fraction(0)
        mod = self.p ** self.prec
        u = self.unit - mod if 2 * self.unit > mod else self.unit
        return Fraction(self.p) ** self.valuation * u

    def mod(self, k: int) -> int:
        """Value modulo p**k as an integer in [0, p**k); needs v >= 0."""
        if self.is_zero():
            return 0
        if self.valuation < 0:
            raise ValueError("value is not integral")
        if self.absolute_precision < k:
            raise PrecisionExhausted(f"value only known modulo p^{self.absolute_precision}, need p^{k}")
        if self.valuation >= k:
            return 0
        return (self.unit * self.p ** self.valuation) % self.p ** k

    def agrees(self, other: Number, upto=None) -> bool:
        """Equality modulo the smaller of the two absolute precisions (or ``upto``)."""
        other = self.ctx(other)
        bound = min(self.absolute_precision, other.absolute_precision)
        if upto is not None:
            bound = min(bound, upto)
        if bound == INF:
            return True
        diff = self.lift() - other.lift()
        return diff == 0 or vp_fraction(diff, self.p) >= bound

    # -- arithmetic ---------------------------------------------------
    def _coerce(self, other) -> PAdic:
        if isinstance(other, PAdic):
            _check(self.ctx, other.ctx)
            return other
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self.ctx(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return add(self, other)

    __radd__ = __add__

    def __neg__(self) -> PAdic:
        if self.is_zero():
            return self
        return PAdic(self.ctx, self.valuation, (-self.unit) % self.p ** self.prec, self.prec)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return add(self, -other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return add(other, -self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return mul(self, invert(other))

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return mul(other, invert(self))

    def __pow__(self, k: int) -> PAdic:
        if k < 0:
            return invert(self) ** (-k)
        if self.is_zero():
            return self if k else self.ctx.one()
        mod = self.p ** self.prec
        return PAdic(self.ctx, self.valuation * k, pow(self.unit, k, mod), self.prec)

    def shift(self, k: int) -> PAdic:
        """Multiply by p**k (exact)."""
        if self.is_zero():
            return self
        return PAdic(self.ctx, self.valuation + k, self.unit, self.prec)

    def unit_part(self) -> PAdic:
        if self.is_zero():
            raise DivisionByZero("zero has no unit part")
        return PAdic(self.ctx, 0, self.unit, self.prec)

    # -- text ---------------------------------------------------------
    def __str__(self) -> str:
        if self.is_zero():
            return "0"
        p = self.p
        terms = []
        for i, d in enumerate(self.digits):
            if i == 0:
                terms.append(str(d))
            elif i == 1:
                terms.append(f"{d}*{p}")
            else:
                terms.append(f"{d}*{p}^{i}")
        return f"{p}^{self.valuation} * ({' + '.join(terms)})"

    def __repr__(self) -> str:
        return f"PAdic({self})"

    _TEXT = re.compile(r"^\s*(\d+)\^(-?\d+)\s*\*\s*\((.*)\)\s*$")
    _TERM = re.compile(r"^(\d+)(?:\*(\d+)(?:\^(\d+))?)?$")

    @classmethod
    def parse(cls, text: str, ctx: PAdicContext) -> PAdic:
        """Inverse of ``str``: "p^v * (d0 + d1*p + d2*p^2 ...)" or "0"."""
        if text.strip() == "0":
            return ctx.zero()
        m = cls._TEXT.match(text)
        if not m:
            raise ValueError(f"not a p-adic textual form: {text!r}")
        p, v, body = int(m.group(1)), int(m.group(2)), m.group(3)
        if p != ctx.p:
            raise ContextMismatch(f"text uses p={p}, context has p={ctx.p}")
        digits = []
        for i, term in enumerate(t.strip() for t in body.split("+")):
            tm = cls._TERM.match(term)
            if not tm:
                raise ValueError(f"bad digit term {term!r}")
            d = int(tm.group(1))
            power = 0 if tm.group(2) is None else int(tm.group(3) or 1)
            if (tm.group(2) is not None and int(tm.group(2)) != p) or power != i or not 0 <= d < p:
                raise ValueError(f"bad digit term {term!r} at position {i}")
            digits.append(d)
        if not digits or digits[0] == 0:
            raise ValueError("leading digit must be nonzero")
        if len(digits) > ctx.precision:
            raise ValueError("more digits than the context precision")
        unit = sum(d * p ** i for i, d in enumerate(digits))
        return cls(ctx, v, unit, len(digits))


def from_rational(num: int, den: int = 1, ctx: PAdicContext | None = None) -> PAdic:
    if ctx is None:
        raise TypeError("a PAdicContext is required")
    if den == 0:
        raise DivisionByZero("zero denominator")
    if num == 0:
        return ctx.zero()
    p, n = ctx.p, ctx.precision
    a, b = vp(num, p), vp(den, p)
    unum, uden = num // p ** a, den // p ** b
    mod = p ** n
    unit = (unum * pow(uden, -1, mod)) % mod
    return PAdic(ctx, a - b, unit, n)


def add(x: PAdic, y: PAdic) -> PAdic:
    _check(x.ctx, y.ctx)
    if x.is_zero():
        return y
    if y.is_zero():
        return x
    p = x.p
    m = min(x.valuation, y.valuation)
    top = min(x.absolute_precision, y.absolute_precision)
    s = (x.unit * p ** (x.valuation - m) + y.unit * p ** (y.valuation - m)) % p ** (top - m)
    if s == 0:
        raise PrecisionExhausted("cancellation left no significant digits")
    k = vp(s, p)
    prec = min(top - m - k, x.ctx.precision)
    return PAdic(x.ctx, m + k, (s // p ** k) % p ** prec, prec)


def sub(x: PAdic, y: PAdic) -> PAdic:
    return add(x, -y)


def mul(x: PAdic, y: PAdic) -> PAdic:
    _check(x.ctx, y.ctx)
    if x.is_zero() or y.is_zero():
        return x.ctx.zero()
    prec = min(x.prec, y.prec)
    return PAdic(x.ctx, x.valuation + y.valuation, (x.unit * y.unit) % x.p ** prec, prec)


def invert(x: PAdic) -> PAdic:
    if x.is_zero():
        raise DivisionByZero("inverse of exact zero")
    mod = x.p ** x.prec
    return PAdic(x.ctx, -x.valuation, pow(x.unit, -1, mod), x.prec)


def arith(op: str, x: PAdic, y: PAdic) -> PAdic:
    ops = {"add": add, "sub": sub, "mul": mul}
    if op not in ops:
        raise ValueError(f"unknown operation {op!r}")
    return ops[op](x, y)


def valuation_norm(x: PAdic) -> tuple[Union[int, float], Fraction]:
    return x.valuation, x.norm
