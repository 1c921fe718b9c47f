"""Small square matrices over a p-adic context."""
from __future__ import annotations

import json
import re
from fractions import Fraction
from functools import cached_property
from typing import Sequence

from .errors import DivisionByZero, PrecisionExhausted
from .padic import INF, PAdic, PAdicContext, vp_fraction


class Matrix:
    """Immutable n x n matrix with PAdic entries; the determinant is cached."""

    def __init__(self, ctx: PAdicContext, rows):
        self.ctx = ctx
        self.rows = tuple(tuple(ctx(x) for x in row) for row in rows)
        n = len(self.rows)
        if any(len(r) != n for r in self.rows):
            raise ValueError("matrix must be square")

    # -- constructors -------------------------------------------------
    @classmethod
    def identity(cls, ctx: PAdicContext, n: int) -> Matrix:
        return cls(ctx, [[1 if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def diag(cls, ctx: PAdicContext, entries) -> Matrix:
        n = len(entries)
        return cls(ctx, [[entries[i] if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def parse(cls, ctx: PAdicContext, data) -> Matrix:
        """From a JSON string or nested list of rational strings / numbers."""
        if isinstance(data, str):
            try:
                data = json.loads(data)
            except json.JSONDecodeError:
                data = _loose_rows(data)
        return cls(ctx, [[x if not isinstance(x, float) else Fraction(x) for x in row] for row in data])

    # -- basic views --------------------------------------------------
    @property
    def n(self) -> int:
        return len(self.rows)

    def __getitem__(self, ij) -> PAdic:
        i, j = ij
        return self.rows[i][j]

    def __eq__(self, other) -> bool:
        return isinstance(other, Matrix) and self.rows == other.rows

    def __hash__(self) -> int:
        return hash(self.rows)

    def __repr__(self) -> str:
        return f"Matrix({self.to_rationals()})"

    def lift(self) -> list[list[Fraction]]:
        return [[x.lift() for x in row] for row in self.rows]

    def to_rationals(self) -> list[list[str]]:
        return [[str(x.lift()) for x in row] for row in self.rows]

    def to_text(self) -> list[list[str]]:
        return [[str(x) for x in row] for row in self.rows]

    def col(self, j: int) -> list[PAdic]:
        return [row[j] for row in self.rows]

    def transpose(self) -> Matrix:
        return Matrix(self.ctx, list(zip(*self.rows)))

    def min_valuation(self):
        return min(x.valuation for row in self.rows for x in row)

    def is_integral(self) -> bool:
        return self.min_valuation() >= 0

    def is_diagonal(self) -> bool:
        return all(self.rows[i][j].is_zero() for i in range(self.n) for j in range(self.n) if i != j)

    def is_upper_triangular(self) -> bool:
        return all(self.rows[i][j].is_zero() for i in range(self.n) for j in range(i))

    def is_upper_unitriangular(self) -> bool:
        return self.is_upper_triangular() and all(self.rows[i][i].agrees(1) for i in range(self.n))

    def is_lower_unitriangular(self) -> bool:
        return self.transpose().is_upper_unitriangular()

    def is_in_K(self) -> bool:
        """Integral with unit determinant, i.e. in GL_n(Z_p)."""
        return self.is_integral() and self.det.valuation == 0

    def is_sl(self) -> bool:
        return self.det.agrees(1) and not self.det.is_zero()

    # -- algebra ------------------------------------------------------
    def __matmul__(self, other: Matrix) -> Matrix:
        n = self.n
        if other.n != n:
            raise ValueError("dimension mismatch")
        rows = []
        for i in range(n):
            row = []
            for j in range(n):
                row.append(_dot([self.rows[i][k] for k in range(n)], [other.rows[k][j] for k in range(n)], self.ctx))
            rows.append(row)
        return Matrix(self.ctx, rows)

    def apply(self, vec: Sequence[PAdic]) -> list[PAdic]:
        return [_dot(list(row), list(vec), self.ctx) for row in self.rows]

    def scale(self, c) -> Matrix:
        c = self.ctx(c)
        return Matrix(self.ctx, [[x * c for x in row] for row in self.rows])

    def __pow__(self, k: int) -> Matrix:
        if k < 0:
            return self.inverse() ** (-k)
        result = Matrix.identity(self.ctx, self.n)
        base = self
        while k:
            if k & 1:
                result = result @ base
            base = base @ base
            k >>= 1
        return result

    @cached_property
    def det(self) -> PAdic:
        return _det(self.rows, self.ctx)

    def minor(self, rows: Sequence[int], cols: Sequence[int]) -> PAdic:
        return _det([[self.rows[i][j] for j in cols] for i in rows], self.ctx)

    def adjugate(self) -> Matrix:
        n = self.n
        if n == 1:
            return Matrix(self.ctx, [[1]])
        out = [[None] * n for _ in range(n)]
        for i in range(n):
            for j in range(n):
                rs = [r for r in range(n) if r != j]
                cs = [c for c in range(n) if c != i]
                m = self.minor(rs, cs)
                out[i][j] = m if (i + j) % 2 == 0 else -m
        return Matrix(self.ctx, out)

    def inverse(self) -> Matrix:
        d = self.det
        if d.is_zero():
            raise DivisionByZero("singular matrix")
        return self.adjugate().scale(1 / d)

    def trace(self) -> PAdic:
        return _sum([self.rows[i][i] for i in range(self.n)], self.ctx)

    def charpoly(self) -> list[PAdic]:
        """Coefficients a_0..a_n of det(x I - g), a_n = 1."""
        n = self.n
        ctx = self.ctx
        if n == 2:
            return [self.det, -self.trace(), ctx.one()]
        if n == 3:
            c2 = _sum([self.minor([0, 1], [0, 1]), self.minor([0, 2], [0, 2]), self.minor([1, 2], [1, 2])], ctx)
            return [-self.det, c2, -self.trace(), ctx.one()]
        raise ValueError("only n = 2, 3 supported")


def _loose_rows(text: str):
    # accept [[1/5, 0], [0, 5]] without quotes
    body = text.strip()
    rows = re.findall(r"\[([^\[\]]*)\]", body)
    out = []
    for r in rows:
        out.append([t.strip() for t in r.split(",") if t.strip()])
    if not out:
        raise ValueError(f"cannot parse matrix {text!r}")
    return out


def _sum(terms, ctx: PAdicContext) -> PAdic:
    # matrix algebra reads total cancellation as zero at the working precision
    acc = ctx.zero()
    for t in terms:
        try:
            acc = acc + t
        except PrecisionExhausted:
            acc = ctx.zero()
    return acc


def _dot(a, b, ctx: PAdicContext) -> PAdic:
    return _sum([x * y for x, y in zip(a, b) if not (x.is_zero() or y.is_zero())], ctx)


def _det(rows, ctx: PAdicContext) -> PAdic:
    n = len(rows)
    if n == 1:
        return rows[0][0]
    if n == 2:
        return _sum([rows[0][0] * rows[1][1], -(rows[0][1] * rows[1][0])], ctx)
    terms = []
    for j in range(n):
        sub = [r[:j] + r[j + 1:] for r in rows[1:]]
        t = rows[0][j] * _det(sub, ctx)
        terms.append(t if j % 2 == 0 else -t)
    return _sum(terms, ctx)


def rational_matrix(rows) -> list[list[Fraction]]:
    return [[Fraction(x) for x in row] for row in rows]


def scaled_integer_matrix(m: Matrix):
    """Integers G and exponent e with lift(m) = p**(-e) * G, G primitive.

    Also returns the absolute precision (relative to G) to which G is known.
    """
    p = m.ctx.p
    e = -m.min_valuation()
    if e == -INF or e == INF:
        raise DivisionByZero("zero matrix")
    G, known = [], INF
    for row in m.rows:
        grow = []
        for x in row:
            if x.is_zero():
                grow.append(0)
                continue
            val = x.valuation + e
            grow.append(x.unit * p ** val)
            known = min(known, val + x.prec)
        G.append(grow)
    return G, e, known


def frac_valuation(x: Fraction, p: int):
    return vp_fraction(x, p)


def check_precision(x: PAdic, need: int, what: str) -> None:
    if x.absolute_precision < need:
        raise PrecisionExhausted(f"{what} known only modulo p^{x.absolute_precision}")
