"""Iwasawa, Cartan and Bruhat decompositions over Q_p, plus spectral data.

The Borel subgroup is the upper-triangular one throughout the package.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import coxeter
from .errors import NotRegular, PrecisionExhausted, RankAmbiguous
from .matrix import Matrix
from .padic import INF, PAdic, PAdicContext


def sub_or_zero(a: PAdic, b: PAdic) -> PAdic:
    """a - b, with total cancellation read as zero at the working precision."""
    try:
        return a - b
    except PrecisionExhausted:
        return a.ctx.zero()


def _p_power(ctx: PAdicContext, e: int) -> PAdic:
    return PAdic(ctx, e, 1, ctx.precision)


def _unit_of(x: PAdic) -> PAdic:
    return x.unit_part()


@dataclass(frozen=True)
class IwasawaFactors:
    k: Matrix
    t: Matrix
    u: Matrix

    def product(self) -> Matrix:
        return self.k @ self.t @ self.u

    def check(self) -> None:
        assert self.k.is_in_K(), "k must be integral with unit determinant"
        assert self.t.is_diagonal(), "t must be diagonal"
        assert self.u.is_upper_unitriangular(), "u must be upper unitriangular"

    @property
    def exponents(self) -> tuple[int, ...]:
        return tuple(self.t[i, i].valuation for i in range(self.t.n))


@dataclass(frozen=True)
class CartanFactors:
    k1: Matrix
    a: Matrix
    k2: Matrix

    def product(self) -> Matrix:
        return self.k1 @ self.a @ self.k2

    @property
    def exponents(self) -> tuple[int, ...]:
        return tuple(self.a[i, i].valuation for i in range(self.a.n))

    def check(self) -> None:
        assert self.k1.is_in_K() and self.k2.is_in_K(), "k-factors must lie in GL_n(Z_p)"
        assert self.a.is_diagonal(), "a must be diagonal"
        ex = self.exponents
        assert list(ex) == sorted(ex), "exponents must be sorted"


def _rows(g: Matrix) -> list[list[PAdic]]:
    return [list(r) for r in g.rows]


def _swap_cols(m, i, j):
    for row in m:
        row[i], row[j] = row[j], row[i]


def iwasawa(g: Matrix) -> IwasawaFactors:
    """g = k t u by integral row operations (pivot: minimal valuation, lowest row)."""
    ctx, n = g.ctx, g.n
    R = _rows(g)
    L = _rows(Matrix.identity(ctx, n))  # invariant: g = L R
    for j in range(n):
        piv = min(range(j, n), key=lambda r: (R[r][j].valuation, r))
        if R[piv][j].is_zero():
            raise PrecisionExhausted("singular matrix in Iwasawa elimination")
        if piv != j:
            R[j], R[piv] = R[piv], R[j]
            _swap_cols(L, j, piv)
        for r in range(j + 1, n):
            if R[r][j].is_zero():
                continue
            c = R[r][j] / R[j][j]
            R[r] = [ctx.zero() if k == j else (sub_or_zero(R[r][k], c * R[j][k]) if k > j else R[r][k]) for k in range(n)]
            for row in L:
                row[j] = sub_or_zero(row[j], -(c * row[r])) if not row[r].is_zero() else row[j]
    exps = [R[i][i].valuation for i in range(n)]
    units = [_unit_of(R[i][i]) for i in range(n)]
    t = Matrix.diag(ctx, [_p_power(ctx, e) for e in exps])
    u_rows = []
    for i in range(n):
        inv = 1 / R[i][i]
        u_rows.append([ctx.zero() if k < i else ctx.one() if k == i else R[i][k] * inv for k in range(n)])
    k_rows = [[L[i][j] * units[j] for j in range(n)] for i in range(n)]
    return IwasawaFactors(Matrix(ctx, k_rows), t, Matrix(ctx, u_rows))


def cartan(g: Matrix) -> CartanFactors:
    """Smith normal form over Z_p: g = k1 diag(p^m1..p^mn) k2 with m sorted."""
    ctx, n = g.ctx, g.n
    R = _rows(g)
    L = _rows(Matrix.identity(ctx, n))  # g = L R M
    M = _rows(Matrix.identity(ctx, n))
    for j in range(n):
        best = None
        for r in range(j, n):
            for c in range(j, n):
                key = (R[r][c].valuation, r, c)
                if best is None or key < best:
                    best = key
        val, r, c = best
        if val == INF:
            raise PrecisionExhausted("singular matrix in Smith reduction")
        if r != j:
            R[j], R[r] = R[r], R[j]
            _swap_cols(L, j, r)
        if c != j:
            _swap_cols(R, j, c)
            M[j], M[c] = M[c], M[j]
        pivot = R[j][j]
        for r in range(j + 1, n):
            if R[r][j].is_zero():
                continue
            f = R[r][j] / pivot
            R[r] = [ctx.zero() if k == j else (sub_or_zero(R[r][k], f * R[j][k]) if k > j else R[r][k]) for k in range(n)]
            for row in L:
                if not row[r].is_zero():
                    row[j] = sub_or_zero(row[j], -(f * row[r]))
        for k in range(j + 1, n):
            if R[j][k].is_zero():
                continue
            f = R[j][k] / pivot
            R[j][k] = ctx.zero()
            M[j] = [sub_or_zero(M[j][q], -(f * M[k][q])) if not M[k][q].is_zero() else M[j][q] for q in range(n)]
    exps = [R[i][i].valuation for i in range(n)]
    units = [_unit_of(R[i][i]) for i in range(n)]
    k1 = Matrix(ctx, [[L[i][j] * units[j] for j in range(n)] for i in range(n)])
    a = Matrix.diag(ctx, [_p_power(ctx, e) for e in exps])
    return CartanFactors(k1, a, Matrix(ctx, M))


def elementary_divisor_exponents(g: Matrix) -> tuple[int, ...]:
    return cartan(g).exponents


def bruhat_position(g: Matrix) -> coxeter.WeylElement:
    """The w with g in B w B, B upper triangular.

    Column by column, the pivot is the lowest remaining row with a nonzero
    entry; entries lost to cancellation count as zero at working precision.
    """
    ctx, n = g.ctx, g.n
    R = _rows(g)
    used: set[int] = set()
    w = [0] * n
    for j in range(n):
        rows = [i for i in range(n) if i not in used and not R[i][j].is_zero()]
        if not rows:
            raise RankAmbiguous(f"column {j + 1} vanishes at working precision")
        i = max(rows)
        w[j] = i + 1
        used.add(i)
        piv = R[i][j]
        for k in range(j + 1, n):
            if R[i][k].is_zero():
                continue
            f = R[i][k] / piv
            for r in range(n):
                R[r][k] = ctx.zero() if r == i else sub_or_zero(R[r][k], f * R[r][j])
        for r in range(i):
            if R[r][j].is_zero():
                continue
            f = R[r][j] / piv
            R[r] = [ctx.zero() if k == j else sub_or_zero(R[r][k], f * R[i][k]) for k in range(n)]
    return coxeter.WeylElement(tuple(w))


# -- spectral data -----------------------------------------------------------

def newton_polygon(points) -> list[tuple[tuple[int, Fraction], tuple[int, Fraction]]]:
    """Lower convex hull segments of [(i, v_i)], skipping infinite valuations."""
    pts = sorted((i, Fraction(v)) for i, v in points if v != INF)
    hull: list[tuple[int, Fraction]] = []
    for pt in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # drop hull[-1] if it lies on or above the chord hull[-2] -> pt
            if (y2 - y1) * (pt[0] - x1) >= (pt[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(pt)
    return list(zip(hull, hull[1:]))


def root_valuations(coeffs: list[PAdic]) -> list[Fraction]:
    """Valuations of the roots of sum a_i x^i, ascending, with multiplicity."""
    segs = newton_polygon([(i, a.valuation) for i, a in enumerate(coeffs)])
    vals = []
    for (x1, y1), (x2, y2) in segs:
        slope = (y2 - y1) / (x2 - x1)
        vals.extend([-slope] * (x2 - x1))
    zero_roots = min(i for i, a in enumerate(coeffs) if not a.is_zero())
    if zero_roots:
        raise NotRegular("characteristic polynomial has a zero root")
    return sorted(vals)


@dataclass(frozen=True)
class SpectralData:
    valuations: tuple[Fraction, ...]
    regular: bool
    hyperbolic: bool

    @property
    def gap(self) -> Fraction:
        return self.valuations[-1] - self.valuations[0]


def spectral_valuations(g: Matrix) -> SpectralData:
    vals = tuple(root_valuations(g.charpoly()))
    regular = len(set(vals)) == len(vals)
    hyperbolic = any(v != 0 for v in vals)
    return SpectralData(vals, regular, hyperbolic)


def limit_cartan_rate(g: Matrix, kmax: int) -> tuple[Fraction, ...]:
    """Cartan exponents of g**kmax divided by kmax (converges to the spectral valuations).

    Each factor of the power can cost up to the Cartan spread of g in digits, so
    the context of g needs roughly kmax times that much headroom.
    """
    if kmax < 1:
        raise ValueError("kmax must be positive")
    return tuple(Fraction(m, kmax) for m in cartan(g ** kmax).exponents)


def _int_coeffs_for_slope(coeffs: list[PAdic], s: int):
    """Integer coefficients of p^-c P(p^s y) and the modulus they are known to."""
    ctx = coeffs[0].ctx
    p = ctx.p
    c = min(a.valuation + i * s for i, a in enumerate(coeffs) if not a.is_zero())
    out, known = [], INF
    for i, a in enumerate(coeffs):
        if a.is_zero():
            out.append(0)
            continue
        shift = a.valuation + i * s - c
        out.append(a.unit * p ** shift)
        known = min(known, a.prec + shift)
    return out, known


def hensel_root(coeffs: list[PAdic], s: int) -> PAdic:
    """The unique root of valuation s, for a Newton segment of length one."""
    ctx = coeffs[0].ctx
    p = ctx.p
    q, known = _int_coeffs_for_slope(coeffs, s)
    M = int(min(known, ctx.precision))
    if M < 1:
        raise PrecisionExhausted("characteristic polynomial known to no digits")
    mod = p ** M
    q = [x % mod for x in q]
    deg = len(q) - 1
    ends = [i for i in range(deg + 1) if q[i] % p != 0]
    if len(ends) != 2 or ends[1] != ends[0] + 1:
        raise NotRegular("Newton segment of length > 1")
    i0 = ends[0]
    y = (-q[i0] * pow(q[i0 + 1], -1, p)) % p

    def ev(poly, y):
        acc = 0
        for c in reversed(poly):
            acc = (acc * y + c) % mod
        return acc

    deriv = [(i * q[i]) % mod for i in range(1, deg + 1)]
    for _ in range(2 * M.bit_length() + 4):
        fy, dfy = ev(q, y), ev(deriv, y)
        step = (fy * pow(dfy, -1, mod)) % mod
        if step == 0:
            break
        y = (y - step) % mod
    return PAdic(ctx, s, y, M)


def _cross(a: list[PAdic], b: list[PAdic]) -> list[PAdic]:
    return [
        sub_or_zero(a[1] * b[2], a[2] * b[1]),
        sub_or_zero(a[2] * b[0], a[0] * b[2]),
        sub_or_zero(a[0] * b[1], a[1] * b[0]),
    ]


def _min_val(vec):
    return min(x.valuation for x in vec)


def kernel_vector(a: Matrix) -> list[PAdic]:
    """A primitive vector spanning the kernel of a corank-one matrix."""
    n = a.n
    rows = [list(r) for r in a.rows]
    if n == 2:
        cands = [[r[1], -r[0]] for r in rows]
    else:
        cands = [_cross(rows[i], rows[j]) for i, j in ((0, 1), (0, 2), (1, 2))]
    cands = [c for c in cands if _min_val(c) != INF]
    if not cands:
        raise RankAmbiguous("eigenspace is not one-dimensional at working precision")
    best = min(cands, key=_min_val)
    m = _min_val(best)
    return [x.shift(-m) for x in best]


@dataclass(frozen=True)
class EigenData:
    values: tuple[PAdic, ...]
    vectors: tuple[tuple[PAdic, ...], ...]
    valuations: tuple[int, ...]


def eigen_decomposition(h: Matrix) -> EigenData:
    """Eigenpairs of a regular element, ordered by increasing eigenvalue valuation."""
    spec = spectral_valuations(h)
    if not spec.regular:
        raise NotRegular(f"eigenvalue valuations {list(spec.valuations)} are not distinct")
    coeffs = h.charpoly()
    ctx, n = h.ctx, h.n
    values, vectors = [], []
    for s in spec.valuations:
        lam = hensel_root(coeffs, int(s))
        shifted = Matrix(ctx, [[sub_or_zero(h[i, j], lam) if i == j else h[i, j] for j in range(n)] for i in range(n)])
        values.append(lam)
        vectors.append(tuple(kernel_vector(shifted)))
    return EigenData(tuple(values), tuple(vectors), tuple(int(s) for s in spec.valuations))
