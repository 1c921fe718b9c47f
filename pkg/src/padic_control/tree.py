"""The Bruhat-Tits tree of SL_2(Q_p).

Vertices are homothety classes of Z_p-lattices in Q_p^2, stored through the
column-Hermite representative [[p^a, b], [0, p^d]] with min(a, d) = 0 and
b a rational in Z[1/p] reduced into [0, p^a).  Everything combinatorial
(distances, neighbours, rays) runs on exact rationals; matrices given as
PAdic entries go through ``vertex_from_matrix``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional, Union

from .decomp import eigen_decomposition, spectral_valuations
from .errors import DivisionByZero, InvalidRay, PrecisionExhausted
from .flag import Flag, canonical_vector, from_padic_vectors
from .matrix import Matrix, scaled_integer_matrix
from .padic import INF, PAdic, vp, vp_fraction

FracMatrix = list[list[Fraction]]

# digits used to compare a ray's end with the repelling eigenline
END_LEVEL = 6


@dataclass(frozen=True, order=True)
class TreeVertex:
    p: int
    a: int
    d: int
    b: Fraction

    def __post_init__(self):
        if min(self.a, self.d) != 0 or self.a < 0 or self.d < 0:
            raise ValueError("homothety normalization needs min(a, d) = 0")
        if not (0 <= self.b < Fraction(self.p) ** self.a):
            raise ValueError("b must lie in [0, p^a)")

    def matrix(self) -> FracMatrix:
        P = Fraction(self.p)
        return [[P ** self.a, self.b], [Fraction(0), P ** self.d]]

    def __str__(self) -> str:
        return f"({self.a}, {self.d}, {self.b})"

    @classmethod
    def parse(cls, text: str, p: int) -> TreeVertex:
        parts = [t.strip() for t in text.strip().strip("()").split(",")]
        a, d, b = int(parts[0]), int(parts[1]), Fraction(parts[2])
        return cls(p, a, d, b)


def base_vertex(p: int) -> TreeVertex:
    return TreeVertex(p, 0, 0, Fraction(0))


# -- canonical forms ---------------------------------------------------------------

def _reduce_b(b: Fraction, p: int, a: int) -> Fraction:
    """Representative of b modulo p^a Z_p in Z[1/p] cap [0, p^a)."""
    if b == 0 or vp_fraction(b, p) >= a:
        return Fraction(0)
    den = b.denominator
    k = vp(den, p)
    u = den // p ** k
    mod = p ** (a + k)
    c = (b.numerator * pow(u, -1, mod)) % mod
    return Fraction(c, p ** k)


def canonical_vertex(m: FracMatrix, p: int) -> TreeVertex:
    """Vertex of the lattice spanned by the columns of an exact rational matrix."""
    (x0, y0), (x1, y1) = m
    if x0 * y1 - y0 * x1 == 0:
        raise DivisionByZero("singular lattice basis")
    # pivot of the second row (smallest valuation, ties to the left column) goes right
    if vp_fraction(x1, p) <= vp_fraction(y1, p):
        x0, y0, x1, y1 = y0, x0, y1, x1
    x = x0 - (x1 / y1) * y0 if x1 != 0 else x0
    a1, d1 = vp_fraction(x, p), vp_fraction(y1, p)
    b1 = y0 * Fraction(p) ** d1 / y1
    m0 = min(a1, d1)
    a, d = a1 - m0, d1 - m0
    return TreeVertex(p, a, d, _reduce_b(b1 / Fraction(p) ** m0, p, a))


def vertex_from_matrix(g: Matrix) -> TreeVertex:
    """Vertex g * (base lattice), certified against the precision of g's entries."""
    if g.n != 2:
        raise ValueError("the tree is for 2x2 matrices")
    p = g.ctx.p
    if g.det.is_zero():
        raise DivisionByZero("singular matrix")
    (x0, y0), (x1, y1) = [list(r) for r in g.rows]
    if x1.valuation <= y1.valuation:
        x0, y0, x1, y1 = y0, x0, y1, x1
    x = x0 if x1.is_zero() else x0 - (x1 / y1) * y0
    b1 = (y0 / y1).shift(y1.valuation) if not y0.is_zero() else y0
    a1, d1 = x.valuation, y1.valuation
    m0 = min(a1, d1)
    a = a1 - m0
    b = b1.shift(-m0)
    if not b.is_zero() and b.valuation < a and b.absolute_precision < a:
        raise PrecisionExhausted(f"b known modulo p^{b.absolute_precision}, vertex needs p^{a}")
    if b.is_zero() or b.valuation >= a:
        bf = Fraction(0)
    else:
        bf = Fraction(b.unit % p ** (a - b.valuation)) * Fraction(p) ** b.valuation
    return TreeVertex(p, a, d1 - m0, bf)


def _mul(m: FracMatrix, n: FracMatrix) -> FracMatrix:
    return [[sum(m[i][k] * n[k][j] for k in range(2)) for j in range(2)] for i in range(2)]


def _inv(m: FracMatrix) -> FracMatrix:
    det = m[0][0] * m[1][1] - m[0][1] * m[1][0]
    return [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]]


def _frac_matrix(g: Union[Matrix, FracMatrix]) -> FracMatrix:
    if isinstance(g, Matrix):
        return g.lift()
    return [[Fraction(x) for x in row] for row in g]


def act(g: Union[Matrix, FracMatrix], v: TreeVertex) -> TreeVertex:
    """g * v using the rational lift of g."""
    return canonical_vertex(_mul(_frac_matrix(g), v.matrix()), v.p)


# -- metric ------------------------------------------------------------------------

def _min_val(m: FracMatrix, p: int):
    return min(vp_fraction(x, p) for row in m for x in row)


def distance(u: TreeVertex, v: TreeVertex) -> int:
    """e1 - e2 for the elementary divisors of the change-of-lattice matrix."""
    p = u.p
    c = _mul(_inv(u.matrix()), v.matrix())
    det = c[0][0] * c[1][1] - c[0][1] * c[1][0]
    return int(vp_fraction(det, p) - 2 * _min_val(c, p))


def neighbors(v: TreeVertex) -> list[TreeVertex]:
    """The p + 1 index-p sublattices, in residue-line order: [1:j] for j < p, then [0:1]."""
    p = v.p
    m = v.matrix()
    P = Fraction(p)
    subs = [[[P, Fraction(j)], [Fraction(0), Fraction(1)]] for j in range(p)]
    subs.append([[Fraction(1), Fraction(0)], [Fraction(0), P]])
    return [canonical_vertex(_mul(m, s), p) for s in subs]


def geodesic(u: TreeVertex, v: TreeVertex) -> list[TreeVertex]:
    path = [u]
    d = distance(u, v)
    while d:
        u = next(w for w in neighbors(u) if distance(w, v) == d - 1)
        path.append(u)
        d -= 1
    return path


def ball(center: TreeVertex, radius: int) -> Iterator[tuple[int, TreeVertex]]:
    """Breadth-first enumeration of (distance, vertex), deterministic order."""
    seen = {center}
    frontier = [center]
    yield 0, center
    for r in range(1, radius + 1):
        nxt = []
        for v in frontier:
            for w in neighbors(v):
                if w not in seen:
                    seen.add(w)
                    nxt.append(w)
        nxt.sort()
        for w in nxt:
            yield r, w
        frontier = nxt


def displacement(g: Union[Matrix, FracMatrix], v: TreeVertex) -> int:
    return distance(v, act(g, v))


# -- classification ------------------------------------------------------------------

@dataclass(frozen=True)
class Elliptic:
    fixed_vertex: TreeVertex

    kind = "elliptic"


@dataclass(frozen=True)
class Hyperbolic:
    translation_length: int
    axis_vertex: TreeVertex

    kind = "hyperbolic"


def classify_isometry(g: Matrix) -> Union[Elliptic, Hyperbolic]:
    if g.n != 2:
        raise ValueError("tree isometries come from 2x2 matrices")
    if not g.is_sl():
        raise ValueError("determinant must be 1 at working precision")
    tr = g.trace()
    p = g.ctx.p
    if tr.valuation >= 0:
        v0 = base_vertex(p)
        path = geodesic(v0, act(g, v0))
        return Elliptic(path[len(path) // 2])
    return Hyperbolic(int(-2 * tr.valuation), axis_vertex(g))


def axis_vertex(g: Matrix) -> TreeVertex:
    """Vertex of the apartment spanned by the two eigenlines (it lies on the axis)."""
    eig = eigen_decomposition(g)
    (u0, u1), (w0, w1) = eig.vectors
    return vertex_from_matrix(Matrix(g.ctx, [[u0, w0], [u1, w1]]))


# -- fast displacement over a ball ---------------------------------------------------

def _int_vp(x: int, p: int):
    return INF if x == 0 else vp(x, p)


def ball_displacements(g: Union[Matrix, FracMatrix], center: TreeVertex, radius: int,
                       p: Optional[int] = None) -> list[tuple[int, tuple[int, int, int], int]]:
    """Displacement of every vertex within ``radius`` of ``center``.

    A vertex at distance j is the lattice C (Z_p x + p^j Z_p^2) for a point x of
    P^1(Z/p^j), where C is the center's matrix.  Items are
    (j, (x0, x1) canonical, displacement); only integer arithmetic is used.
    """
    p = center.p
    C = center.matrix()
    h = _mul(_mul(_inv(C), _frac_matrix(g)), C)
    e = -_min_val(h, p)
    scale = Fraction(p) ** e
    den = 1
    for row in h:
        for x in row:
            den = max(den, (x * scale).denominator)
    if den != 1:
        # denominators prime to p: clear them (a unit scalar does not change displacement)
        from math import lcm

        den = 1
        for row in h:
            for x in row:
                den = lcm(den, (x * scale).denominator)
    G = [[int(x * scale * den) for x in row] for row in h]
    out = []
    for j in range(radius + 1):
        for x0, x1 in _p1_points(p, j):
            if x0 == 1:
                T = [[1, 0], [x1, p ** j]]
            else:
                T = [[x0, p ** j], [1, 0]]
            # adj(T) G T has valuation of T^{-1} G T plus j
            adj = [[T[1][1], -T[0][1]], [-T[1][0], T[0][0]]]
            GT = [[G[i][0] * T[0][k] + G[i][1] * T[1][k] for k in range(2)] for i in range(2)]
            M = [[adj[i][0] * GT[0][k] + adj[i][1] * GT[1][k] for k in range(2)] for i in range(2)]
            mv = min(_int_vp(z, p) for row in M for z in row)
            # entries of T^-1 h T have valuation mv - j - e; displacement = -2 * min
            out.append((j, (x0, x1), int(-2 * (mv - j - e))))
    return out


def _p1_points(p: int, j: int):
    if j == 0:
        yield (1, 0)
        return
    mod = p ** j
    for y in range(mod):
        yield (1, y)
    for x in range(0, mod, p):
        yield (x, 1)


def ball_vertex(center: TreeVertex, j: int, x: tuple[int, int]) -> TreeVertex:
    """The vertex with ball coordinates (j, x) relative to ``center``."""
    p = center.p
    x0, x1 = x
    if x0 == 1:
        T = [[1, 0], [x1, p ** j]]
    else:
        T = [[x0, p ** j], [1, 0]]
    return canonical_vertex(_mul(center.matrix(), [[Fraction(t) for t in r] for r in T]), p)


def bfs_min_displacement(g, center: TreeVertex, radius: int) -> tuple[int, list[TreeVertex]]:
    """Oracle: minimum displacement over the ball and the vertices attaining it."""
    data = ball_displacements(g, center, radius)
    best = min(d for _, _, d in data)
    return best, sorted(ball_vertex(center, j, x) for j, x, d in data if d == best)


def greedy_min_displacement(g, start: TreeVertex, max_steps: int = 200) -> tuple[int, TreeVertex]:
    """Oracle: walk downhill on the convex function v -> d(v, g v)."""
    v = start
    cur = displacement(g, v)
    for _ in range(max_steps):
        best = min(neighbors(v), key=lambda w: (displacement(g, w), w))
        bd = displacement(g, best)
        if bd >= cur:
            return cur, v
        v, cur = best, bd
    raise RuntimeError("descent did not terminate")


def is_path(vertices) -> bool:
    """True when the vertex set spans a path (a subtree with no branching)."""
    vs = list(vertices)
    if len(vs) <= 1:
        return True
    s = set(vs)
    deg = {v: sum(1 for w in neighbors(v) if w in s) for v in vs}
    edges = sum(deg.values()) // 2
    return edges == len(vs) - 1 and max(deg.values()) <= 2 and _connected(s)


def _connected(s) -> bool:
    start = next(iter(s))
    seen, stack = {start}, [start]
    while stack:
        v = stack.pop()
        for w in neighbors(v):
            if w in s and w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == len(s)


def ball_dot(center: TreeVertex, radius: int, g=None) -> str:
    """DOT text for a ball; vertices sorted canonically, labels "(a, d, b)"."""
    verts = sorted(v for _, v in ball(center, radius))
    ids = {v: i for i, v in enumerate(verts)}
    lines = ["graph ball {"]
    for v in verts:
        label = str(v) if g is None else f"{v} d={displacement(g, v)}"
        lines.append(f'  n{ids[v]} [label="{label}"];')
    for v in verts:
        for w in neighbors(v):
            if w in ids and ids[v] < ids[w]:
                lines.append(f"  n{ids[v]} -- n{ids[w]};")
    lines.append("}")
    return "\n".join(lines) + "\n"


# -- rays and ends -------------------------------------------------------------------

@dataclass(frozen=True)
class TreeRay:
    base: TreeVertex
    end: tuple[Fraction, Fraction]

    def __post_init__(self):
        p = self.base.p
        if min(vp_fraction(x, p) for x in self.end) != 0:
            raise ValueError("the end must be a primitive vector")

    def vertices(self, depth: int) -> list[TreeVertex]:
        """Vertices at distance 0..depth from the base toward the end."""
        p = self.base.p
        M = self.base.matrix()
        e = _primitive(_mat_vec(_inv(M), self.end), p)
        f = [Fraction(0), Fraction(1)] if vp_fraction(e[0], p) == 0 else [Fraction(1), Fraction(0)]
        out = []
        for j in range(depth + 1):
            basis = [[e[0], f[0] * Fraction(p) ** j], [e[1], f[1] * Fraction(p) ** j]]
            out.append(canonical_vertex(_mul(M, basis), p))
        return out


def _mat_vec(m: FracMatrix, v) -> list[Fraction]:
    return [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]


def _primitive(v, p: int) -> list[Fraction]:
    mu = min(vp_fraction(x, p) for x in v)
    return [x / Fraction(p) ** mu for x in v]


def ray(base: TreeVertex, end) -> TreeRay:
    return TreeRay(base, tuple(_primitive([Fraction(x) for x in end], base.p)))


def ray_act(g: Union[Matrix, FracMatrix], r: TreeRay) -> TreeRay:
    gm = _frac_matrix(g)
    return ray(act(gm, r.base), _mat_vec(gm, r.end))


def end_to_flag(r: TreeRay, level: int) -> Flag:
    """The P^1 point of the ray's end, as a level-N flag."""
    p = r.base.p
    ints = _unit_scaled_ints(r.end, p)
    return Flag(p, level, canonical_vector(ints, p, level))


def _unit_scaled_ints(v, p: int) -> list[int]:
    from math import lcm

    den = 1
    for x in v:
        den = lcm(den, x.denominator)
    return [int(x * den) for x in v]


def flag_to_ray(f: Flag, base: Optional[TreeVertex] = None) -> TreeRay:
    """Ray from ``base`` toward the canonical representative of a P^1 flag."""
    if f.n != 2:
        raise ValueError("ends correspond to points of P^1")
    base = base or base_vertex(f.p)
    return ray(base, [Fraction(x) for x in f.line])


def end_correspondence(r: TreeRay, level: int) -> Flag:
    return end_to_flag(r, level)


def end_from_vertex(base: TreeVertex, v: TreeVertex, level: int) -> Flag:
    """Recover the end direction (mod p^level) from a vertex far along a ray.

    If v = base-lattice (Z_p e + p^j Z_p^2) with j >= level, the line e mod p^level is
    read off the cyclic quotient: e spans the image of the lattice mod p^j.
    """
    p = v.p
    c = _mul(_inv(base.matrix()), v.matrix())
    j = distance(base, v)
    if j < level:
        raise ValueError("vertex too close to the base to determine the end")
    # columns of c span a lattice of the form Z_p e + p^j Z_p^2 up to homothety
    mu = _min_val(c, p)
    cols = [[c[0][k] / Fraction(p) ** mu, c[1][k] / Fraction(p) ** mu] for k in range(2)]
    col = next(col for col in cols if min(vp_fraction(x, p) for x in col) == 0)
    ints = _unit_scaled_ints(_primitive(_mat_vec(base.matrix(), col), p), p)
    return Flag(p, level, canonical_vector(ints, p, level))


@dataclass(frozen=True)
class NestingReport:
    nested: bool
    growth_rate: int
    extensions: tuple[int, ...]

    def to_dict(self) -> dict:
        return {"nested": self.nested, "growth_rate": self.growth_rate, "extensions": list(self.extensions)}


def repelling_end(g: Matrix) -> tuple[PAdic, PAdic]:
    eig = eigen_decomposition(g)
    return eig.vectors[-1]


def ray_dynamics(g: Matrix, r: TreeRay, depth: int) -> NestingReport:
    """Check g^k(r) strictly increase for k = 0..depth and report d(x0, g x0)."""
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    spec = spectral_valuations(g)
    if not spec.hyperbolic:
        raise InvalidRay("g is not hyperbolic")
    p = r.base.p
    rep = repelling_end(g)
    level = min(END_LEVEL, g.ctx.precision)
    target = from_padic_vectors(list(rep), None, level)
    if end_to_flag(r, level) != target:
        raise InvalidRay("the ray does not point to the repelling end")
    gm = _frac_matrix(g)
    growth = distance(r.base, act(gm, r.base))
    rays = [r]
    for _ in range(depth):
        # the end is g-fixed, so only the base moves
        rays.append(TreeRay(act(gm, rays[-1].base), r.end))
    nested = True
    ext = []
    for k in range(depth):
        inner, outer = rays[k], rays[k + 1]
        gap = distance(inner.base, outer.base)
        on = outer.vertices(gap)
        if gap == 0 or on[-1] != inner.base:
            nested = False
        ext.append(distance(r.base, outer.base))
    return NestingReport(nested, growth, tuple(ext))
