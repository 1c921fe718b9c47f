"""Full flags of Q_p^2 and Q_p^3 at level N.

A level-N flag is the set of flags congruent to a canonical representative
modulo p^N (a ball in the flag manifold).  For n = 2 it is a point of
P^1(Z/p^N); for n = 3 a line together with the normal covector of a plane
through it.  Canonical vectors have their first unit coordinate equal to 1
and every entry reduced into [0, p^N).

A flag may also carry ``rep``: primitive integer vectors for an actual point
of the flag manifold inside the ball, known modulo p^known.  Equality and
hashing ignore it.  Fixed flags of a hyperbolic element carry their
eigenvectors this way, because the canonical representative of a repelling
class is not itself fixed and drifts away under iteration.

Two actions are provided:

* ``act`` moves the representative (``rep`` when present, else the canonical
  one) with precision tracking and reads off its level-N class.
* ``image_classes`` returns every class met by the image of the whole ball;
  this is the level-N dynamics of the group element thickened by the
  principal congruence subgroup, and is what the orbit graph uses.
"""
from __future__ import annotations

import itertools
import random
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Optional

from . import coxeter
from .decomp import _cross, cartan, eigen_decomposition
from .errors import NoStabilization, PrecisionExhausted, RankAmbiguous
from .matrix import Matrix, scaled_integer_matrix
from .padic import INF, PAdic, vp


# -- integer helpers -----------------------------------------------------------

def _v(x: int, p: int):
    return INF if x == 0 else vp(x, p)


def canonical_vector(vec, p: int, N: int) -> tuple[int, ...]:
    """Scale a primitive integer vector so its first unit coordinate is 1, reduce mod p^N."""
    mod = p ** N
    for x in vec:
        if x % p:
            inv = pow(x, -1, mod)
            return tuple((y * inv) % mod for y in vec)
    raise ValueError(f"vector {tuple(vec)} is not primitive")


def _content(vec, p: int):
    return min(_v(x, p) for x in vec)


def _dot(a, b) -> int:
    return sum(x * y for x, y in zip(a, b))


def _mat_vec(G, v):
    return [sum(G[i][k] * v[k] for k in range(len(v))) for i in range(len(G))]


def _vec_mat(c, G):
    n = len(c)
    return [sum(c[k] * G[k][j] for k in range(n)) for j in range(n)]


def _int_adjugate(G):
    n = len(G)
    if n == 2:
        return [[G[1][1], -G[0][1]], [-G[1][0], G[0][0]]]
    adj = [[0] * 3 for _ in range(3)]
    for i in range(3):
        for j in range(3):
            rs = [r for r in range(3) if r != j]
            cs = [c for c in range(3) if c != i]
            m = G[rs[0]][cs[0]] * G[rs[1]][cs[1]] - G[rs[0]][cs[1]] * G[rs[1]][cs[0]]
            adj[i][j] = m if (i + j) % 2 == 0 else -m
    return adj


# -- the flag type -------------------------------------------------------------

@dataclass(frozen=True, order=True)
class Flag:
    p: int
    level: int
    line: tuple[int, ...]
    plane: Optional[tuple[int, ...]] = None
    rep: Optional[tuple] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        mod = self.p ** self.level
        if canonical_vector(self.line, self.p, self.level) != self.line:
            raise ValueError(f"line {self.line} is not canonical")
        if self.plane is not None:
            if canonical_vector(self.plane, self.p, self.level) != self.plane:
                raise ValueError(f"plane covector {self.plane} is not canonical")
            if _dot(self.line, self.plane) % mod:
                raise ValueError("line does not lie in the plane modulo p^N")
            if len(self.line) != 3 or len(self.plane) != 3:
                raise ValueError("SL3 flags need 3-vectors")
        elif len(self.line) != 2:
            raise ValueError("SL2 flags are points of P^1")

    @property
    def n(self) -> int:
        return len(self.line)

    def __str__(self) -> str:
        if self.n == 2:
            return f"[{self.line[0]}:{self.line[1]}]"
        return f"([{', '.join(map(str, self.line))}], [{', '.join(map(str, self.plane))}])"

    def to_padic_text(self, ctx) -> str:
        def fmt(x):
            return str(ctx(x))
        if self.n == 2:
            return f"[{fmt(self.line[0])}:{fmt(self.line[1])}]"
        return f"([{', '.join(map(fmt, self.line))}], [{', '.join(map(fmt, self.plane))}])"

    def reduce(self, level: int) -> Flag:
        """Image under reduction to a coarser level."""
        if level > self.level:
            raise ValueError("cannot refine a flag")
        mod = self.p ** level
        plane = None if self.plane is None else tuple(x % mod for x in self.plane)
        return Flag(self.p, level, tuple(x % mod for x in self.line), plane, rep=self.rep)

    def lift(self):
        """Integer representatives; for n = 3 the covector is adjusted to exact incidence."""
        if self.n == 2:
            return list(self.line), None
        line, cov = list(self.line), list(self.plane)
        j = _pivot(cov, self.p)
        k = next(i for i in range(3) if i != j and line[i] % self.p)
        # solve coordinate k from incidence, scaled by the unit line[k] to stay integral
        rest = sum(cov[m] * line[m] for m in range(3) if m != k)
        cov = [cov[m] * line[k] if m != k else -rest for m in range(3)]
        return line, cov

    def representative(self):
        """(line, covector, known): ``rep`` if present, else the exact canonical lift."""
        if self.rep is not None:
            return self.rep
        line, cov = self.lift()
        return line, cov, INF

    @classmethod
    def parse(cls, text: str, p: int, level: int) -> Flag:
        nums = [int(t) for t in re.findall(r"-?\d+", text)]
        if ":" in text:
            return from_vectors([nums[0], nums[1]], None, p, level)
        if len(nums) != 6:
            raise ValueError(f"cannot parse flag {text!r}")
        return from_vectors(nums[:3], nums[3:], p, level)


def _pivot(vec, p: int) -> int:
    return next(i for i, x in enumerate(vec) if x % p)


def from_vectors(line, plane, p: int, level: int) -> Flag:
    """Canonical flag from integer or rational vectors (scaled to primitive first)."""
    line = _primitive_ints(line, p)
    cl = canonical_vector(line, p, level)
    if plane is None:
        return Flag(p, level, cl)
    plane = _primitive_ints(plane, p)
    return Flag(p, level, cl, canonical_vector(plane, p, level))


def _primitive_ints(vec, p: int) -> list[int]:
    from fractions import Fraction

    fr = [Fraction(x) for x in vec]
    if all(x == 0 for x in fr):
        raise ValueError("zero vector")
    mu = min(_v(x.numerator, p) - _v(x.denominator, p) for x in fr if x != 0)
    scaled = [x / Fraction(p) ** mu for x in fr]
    # clear denominators prime to p
    den = 1
    for x in scaled:
        den = den * x.denominator // _gcd(den, x.denominator)
    return [int(x * den) for x in scaled]


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return abs(a)


def from_padic_vectors(line, plane, level: int) -> Flag:
    """Level-N flag from PAdic vectors, checking the digits suffice."""
    p = line[0].ctx.p

    cap = line[0].ctx.precision

    def ints(vec):
        mu = min(x.valuation for x in vec)
        if mu == INF:
            raise PrecisionExhausted("zero vector")
        shifted = [x.shift(-mu) for x in vec]
        # a zero entry is zero at working precision, relative to the leading one
        known = min(cap if y.is_zero() else y.absolute_precision for y in shifted)
        if known < level:
            raise PrecisionExhausted(f"vector known modulo p^{known}, class needs p^{level}")
        return [y.mod(known) for y in shifted], known

    li, kl = ints(line)
    if plane is None:
        return Flag(p, level, canonical_vector(li, p, level), rep=(li, None, kl))
    pl, kp = ints(plane)
    return Flag(p, level, canonical_vector(li, p, level), canonical_vector(pl, p, level), rep=(li, pl, min(kl, kp)))


def standard_flag(n: int, p: int, level: int) -> Flag:
    return coordinate_flag(coxeter.identity(n), p, level)


def coordinate_flag(w: coxeter.WeylElement, p: int, level: int) -> Flag:
    """The flag w * (standard flag): span(e_w(1)) inside span(e_w(1), e_w(2))."""
    n = w.n
    line = [1 if i == w(1) - 1 else 0 for i in range(n)]
    if n == 2:
        return Flag(p, level, tuple(line))
    cov = [1 if i == w(3) - 1 else 0 for i in range(n)]
    return Flag(p, level, tuple(line), tuple(cov))


# -- enumeration ---------------------------------------------------------------

def canonical_vectors(n: int, p: int, level: int) -> Iterator[tuple[int, ...]]:
    mod = p ** level
    for piv in range(n):
        before = [range(0, mod, p)] * piv
        after = [range(mod)] * (n - piv - 1)
        for head in itertools.product(*before):
            for tail in itertools.product(*after):
                yield tuple(head) + (1,) + tuple(tail)


def all_flags(n: int, p: int, level: int) -> list[Flag]:
    """Every level-N flag, in canonical order (small cases only for n = 3)."""
    if n == 2:
        return sorted(Flag(p, level, v) for v in canonical_vectors(2, p, level))
    mod = p ** level
    covs = list(canonical_vectors(3, p, level))
    out = []
    for v in canonical_vectors(3, p, level):
        for c in covs:
            if _dot(v, c) % mod == 0:
                out.append(Flag(p, level, v, c))
    return sorted(out)


def flag_count(n: int, p: int, level: int) -> int:
    pts = p ** level + p ** (level - 1)
    if n == 2:
        return pts
    p2 = p ** (2 * level) + p ** (2 * level - 1) + p ** (2 * level - 2)
    return p2 * pts


def random_flag(n: int, p: int, level: int, rng: random.Random) -> Flag:
    mod = p ** level
    while True:
        v = [rng.randrange(mod) for _ in range(n)]
        if any(x % p for x in v):
            break
    line = canonical_vector(v, p, level)
    if n == 2:
        return Flag(p, level, line)
    # random covector orthogonal to the line: solve for a unit coordinate of the line
    while True:
        c = [rng.randrange(mod) for _ in range(3)]
        k = _pivot(line, p)
        c[k] = 0
        c[k] = (-_dot(c, line) * pow(line[k], -1, mod)) % mod
        if any(x % p for x in c):
            return Flag(p, level, line, canonical_vector(c, p, level))


# -- actions -------------------------------------------------------------------

@dataclass(frozen=True)
class _IntAction:
    """Integer data for acting by g on lifts: G ~ g, A ~ g^{-1}, precisions, spread."""

    p: int
    G: tuple
    A: tuple
    known: float
    known_adj: float
    spread: int


@lru_cache(maxsize=4096)
def _int_action(g: Matrix) -> _IntAction:
    p = g.ctx.p
    G, _, known = scaled_integer_matrix(g)
    A = _int_adjugate(G)
    mu = min(_v(x, p) for row in A for x in row)
    A = [[x // p ** mu for x in row] for row in A]
    ex = cartan(g).exponents
    return _IntAction(p, tuple(map(tuple, G)), tuple(map(tuple, A)), known, known - mu, ex[-1] - ex[0])


def _push(vec, p: int, level: int, known):
    """Primitive part of an image vector, reduced to its certified digits."""
    mu = min(_v(x, p) for x in vec)
    if mu == INF:
        raise PrecisionExhausted("image vector vanishes")
    if known < mu + level:
        raise PrecisionExhausted(f"image known modulo p^{known}, class needs p^{mu + level}")
    q, left = p ** mu, known - mu
    out = [x // q for x in vec]
    if left != INF:
        out = [x % p ** left for x in out]
    return out, left


def _apply(act: _IntAction, line, cov, known, level: int) -> Flag:
    p = act.p
    new_line, kl = _push(_mat_vec(act.G, line), p, level, min(act.known, known))
    if cov is None:
        return Flag(p, level, canonical_vector(new_line, p, level), rep=(new_line, None, kl))
    new_cov, kc = _push(_vec_mat(cov, act.A), p, level, min(act.known_adj, known))
    return Flag(p, level, canonical_vector(new_line, p, level), canonical_vector(new_cov, p, level),
                rep=(new_line, new_cov, min(kl, kc)))


def act(g: Matrix, f: Flag) -> Flag:
    """Move the representative of f by g and return its level-N class (carrying the image point)."""
    if g.n != f.n:
        raise ValueError("dimension mismatch")
    line, cov, known = f.representative()
    return _apply(_int_action(g), line, cov, known, f.level)


def _canon_content(vec, p: int, N: int, known):
    """(content, canonical class mod p^N) of an integer vector; certified by ``known``."""
    mu = INF
    for x in vec:
        if x:
            v = 0
            while x % p == 0:
                x //= p
                v += 1
            if v < mu:
                mu = v
    if mu == INF:
        raise PrecisionExhausted("image vector vanishes")
    if known < mu + N:
        raise PrecisionExhausted(f"image known modulo p^{known}, class needs p^{mu + N}")
    return mu, vec


def image_classes(g: Matrix, f: Flag) -> frozenset[Flag]:
    """All level-N classes met by g applied to the ball of f.

    The ball is refined one p-adic digit at a time.  Once the content mu of
    the image is at most the number k of fixed extra digits, every further
    refinement lands in the same class, so only degenerate branches expand.
    """
    a = _int_action(g)
    p, N = f.p, f.level
    pN = p ** N
    G, A, known = a.G, a.A, a.known
    i = _pivot(f.line, p)
    free = [m for m in range(f.n) if m != i]
    classes = set()
    if f.n == 2:
        stack = [(0, 0)]
        while stack:
            k, d = stack.pop()
            line = list(f.line)
            line[free[0]] += pN * d
            z = (G[0][0] * line[0] + G[0][1] * line[1], G[1][0] * line[0] + G[1][1] * line[1])
            mu, _ = _canon_content(z, p, N, known)
            if mu <= k or k >= a.spread:
                q = p ** mu
                classes.add((canonical_vector([x // q for x in z], p, N), None))
                continue
            q = p ** k
            stack.extend((k + 1, d + q * t) for t in range(p))
        return frozenset(Flag(p, N, ln) for ln, _ in classes)
    j = _pivot(f.plane, p)
    kk = next(m for m in range(3) if m != j and f.line[m] % p)
    (fr,) = [m for m in range(3) if m not in (j, kk)]
    f0, f1 = free
    stack = [(0, 0, 0, 0)]
    digits = range(p)
    while stack:
        k, d0, d1, e = stack.pop()
        line = list(f.line)
        line[f0] += pN * d0
        line[f1] += pN * d1
        c = list(f.plane)
        c[fr] += pN * e
        lk = line[kk]
        rest = sum(c[m] * line[m] for m in range(3) if m != kk)
        cov = [c[m] * lk if m != kk else -rest for m in range(3)]
        z = [G[r][0] * line[0] + G[r][1] * line[1] + G[r][2] * line[2] for r in range(3)]
        y = [cov[0] * A[0][r] + cov[1] * A[1][r] + cov[2] * A[2][r] for r in range(3)]
        mz, _ = _canon_content(z, p, N, known)
        my, _ = _canon_content(y, p, N, a.known_adj)
        if max(mz, my) <= k or k >= a.spread:
            qz, qy = p ** mz, p ** my
            classes.add((canonical_vector([x // qz for x in z], p, N),
                         canonical_vector([x // qy for x in y], p, N)))
            continue
        q = p ** k
        for t0 in digits:
            for t1 in digits:
                for t2 in digits:
                    stack.append((k + 1, d0 + q * t0, d1 + q * t1, e + q * t2))
    return frozenset(Flag(p, N, ln, cv) for ln, cv in classes)


# -- relative position -----------------------------------------------------------

@dataclass(frozen=True)
class RelPosition:
    w: coxeter.WeylElement

    def __str__(self) -> str:
        return self.w.word_str()


def _lines_equal(a: Flag, b: Flag) -> bool:
    return a.line == b.line


def relative_position(f1: Flag, f2: Flag) -> RelPosition:
    if (f1.p, f1.level, f1.n) != (f2.p, f2.level, f2.n):
        raise ValueError("flags live at different levels")
    n = f1.n
    if n == 2:
        w = coxeter.identity(2) if f1 == f2 else coxeter.simple_reflection(1, 2)
        return RelPosition(w)
    mod = f1.p ** f1.level
    r = [[0] * 4 for _ in range(4)]
    for i in range(4):
        r[i][3] = i
        r[3][i] = i
    r[1][1] = 1 if f1.line == f2.line else 0
    r[1][2] = 1 if _dot(f1.line, f2.plane) % mod == 0 else 0
    r[2][1] = 1 if _dot(f2.line, f1.plane) % mod == 0 else 0
    r[2][2] = 2 if f1.plane == f2.plane else 1
    perm = [0] * 3
    for j in range(1, 4):
        hits = []
        for i in range(1, 4):
            ind = r[i][j] - r[i - 1][j] - r[i][j - 1] + r[i - 1][j - 1]
            if ind not in (0, 1):
                raise RankAmbiguous("intersection table is not a rank table at this precision")
            if ind:
                hits.append(i)
        if len(hits) != 1:
            raise RankAmbiguous("intersection table is not a rank table at this precision")
        perm[j - 1] = hits[0]
    if sorted(perm) != [1, 2, 3]:
        raise RankAmbiguous("intersection table is not a rank table at this precision")
    return RelPosition(coxeter.WeylElement(tuple(perm)))


def open_cell_census(reference: Flag, samples: int = 0, seed: int = 0) -> dict[str, int]:
    """Counts of flags per relative position to ``reference``.

    Exhaustive for n = 2; for n = 3 exhaustive when ``samples`` is 0, else sampled.
    """
    counts: dict[str, int] = {w.word_str(): 0 for w in coxeter.enumerate_group(reference.n)}
    if reference.n == 3 and samples:
        rng = random.Random(seed)
        pool = (random_flag(3, reference.p, reference.level, rng) for _ in range(samples))
    else:
        pool = all_flags(reference.n, reference.p, reference.level)
    ambiguous = 0
    for f in pool:
        try:
            counts[relative_position(reference, f).w.word_str()] += 1
        except RankAmbiguous:
            ambiguous += 1
    if ambiguous:
        counts["ambiguous"] = ambiguous
    return counts


# -- fixed flags and dynamics ------------------------------------------------------

def fixed_flags(h: Matrix, level: int) -> dict[coxeter.WeylElement, Flag]:
    """b(h, w) for every w: coordinate flags of the eigenbasis sorted by increasing
    eigenvalue valuation, so b(h, 1) is the attractor and b(h, longest) the repeller."""
    eig = eigen_decomposition(h)
    u = eig.vectors
    out = {}
    for w in coxeter.enumerate_group(h.n):
        line = list(u[w(1) - 1])
        plane = None if h.n == 2 else _cross(list(u[w(1) - 1]), list(u[w(2) - 1]))
        out[w] = from_padic_vectors(line, plane, level)
    return out


def iterate_to_limit(h: Matrix, f: Flag, kmax: int = 40) -> tuple[Flag, int]:
    """Apply h until the level-N class stops moving; returns (limit, steps)."""
    cur = f
    for k in range(kmax + 1):
        nxt = act(h, cur)
        if nxt == cur:
            return cur, k
        cur = nxt
    raise NoStabilization(f"no stabilization within {kmax} steps", last=cur, steps=kmax)
