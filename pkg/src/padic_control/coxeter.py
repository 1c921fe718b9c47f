"""Weyl groups of type A_{n-1} as permutation groups.

Permutations are stored in one-line notation ``(w(1), ..., w(n))`` and
compose as functions: ``(a * b)(i) = a(b(i))``.  The simple reflection
``r_i`` swaps ``i`` and ``i + 1``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations


def coxeter_matrix(n: int) -> list[list[int]]:
    """Coxeter matrix of type A_{n-1} (indices 1..n-1 mapped to 0..n-2)."""
    r = n - 1
    return [[1 if i == j else 3 if abs(i - j) == 1 else 2 for j in range(r)] for i in range(r)]


@dataclass(frozen=True, order=False)
class WeylElement:
    perm: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.perm) != list(range(1, len(self.perm) + 1)):
            raise ValueError(f"not a permutation of 1..n: {self.perm}")

    @property
    def n(self) -> int:
        return len(self.perm)

    def __call__(self, i: int) -> int:
        return self.perm[i - 1]

    def __mul__(self, other: WeylElement) -> WeylElement:
        return multiply(self, other)

    def inverse(self) -> WeylElement:
        inv = [0] * self.n
        for i, wi in enumerate(self.perm, start=1):
            inv[wi - 1] = i
        return WeylElement(tuple(inv))

    @property
    def length(self) -> int:
        w = self.perm
        return sum(1 for i in range(len(w)) for j in range(i + 1, len(w)) if w[i] > w[j])

    def is_identity(self) -> bool:
        return self.perm == tuple(range(1, self.n + 1))

    def left_descents(self) -> list[int]:
        """Generators r_i with len(r_i w) < len(w)."""
        inv = self.inverse().perm
        return [i for i in range(1, self.n) if inv[i - 1] > inv[i]]

    def right_descents(self) -> list[int]:
        return [i for i in range(1, self.n) if self.perm[i - 1] > self.perm[i]]

    @property
    def reduced_word(self) -> tuple[int, ...]:
        return _reduced_word(self.perm)

    def word_str(self) -> str:
        return ".".join(f"r{i}" for i in self.reduced_word) or "e"

    def matrix(self) -> list[list[int]]:
        """Permutation matrix sending e_j to e_{w(j)}."""
        n = self.n
        return [[1 if self.perm[j] == i + 1 else 0 for j in range(n)] for i in range(n)]

    def __str__(self) -> str:
        return self.word_str()

    def sort_key(self):
        return (self.length, self.reduced_word)


@lru_cache(maxsize=None)
def _reduced_word(perm: tuple[int, ...]) -> tuple[int, ...]:
    # greedy smallest left descent gives the lexicographically least reduced word
    w = WeylElement(perm)
    word = []
    while not w.is_identity():
        i = w.left_descents()[0]
        word.append(i)
        w = simple_reflection(i, w.n) * w
    return tuple(word)


def identity(n: int) -> WeylElement:
    return WeylElement(tuple(range(1, n + 1)))


def simple_reflection(i: int, n: int) -> WeylElement:
    if not 1 <= i < n:
        raise ValueError(f"generator index {i} out of range for n={n}")
    perm = list(range(1, n + 1))
    perm[i - 1], perm[i] = perm[i], perm[i - 1]
    return WeylElement(tuple(perm))


def from_word(word, n: int) -> WeylElement:
    w = identity(n)
    for i in word:
        w = w * simple_reflection(i, n)
    return w


def multiply(a: WeylElement, b: WeylElement) -> WeylElement:
    if a.n != b.n:
        raise ValueError("rank mismatch")
    return WeylElement(tuple(a.perm[b.perm[i] - 1] for i in range(a.n)))


def longest_element(n: int) -> WeylElement:
    return WeylElement(tuple(range(n, 0, -1)))


@lru_cache(maxsize=None)
def enumerate_group(n: int) -> tuple[WeylElement, ...]:
    """All of W in length-lex order, built by closure under right multiplication."""
    gens = [simple_reflection(i, n) for i in range(1, n)]
    seen = {identity(n)}
    frontier = [identity(n)]
    while frontier:
        nxt = []
        for w in frontier:
            for s in gens:
                ws = w * s
                if ws not in seen:
                    seen.add(ws)
                    nxt.append(ws)
        frontier = nxt
    return tuple(sorted(seen, key=WeylElement.sort_key))


def parse_element(text: str, n: int) -> WeylElement:
    """Accept "r1.r2.r1", "e" or a one-line permutation "[3,2,1]"."""
    text = text.strip()
    if text in ("e", "1", ""):
        return identity(n)
    if text.startswith("["):
        perm = tuple(int(t) for t in re.findall(r"-?\d+", text))
        if len(perm) != n:
            raise ValueError(f"permutation {text} has wrong size for n={n}")
        return WeylElement(perm)
    word = []
    for tok in text.split("."):
        m = re.fullmatch(r"r(\d+)", tok.strip())
        if not m:
            raise ValueError(f"bad reduced-word token {tok!r}")
        word.append(int(m.group(1)))
    return from_word(word, n)


def special_subgroup(J, n: int) -> frozenset[WeylElement]:
    J = sorted(set(J))
    for j in J:
        if not 1 <= j < n:
            raise ValueError(f"generator {j} not in 1..{n - 1}")
    elems = {identity(n)}
    frontier = list(elems)
    gens = [simple_reflection(j, n) for j in J]
    while frontier:
        nxt = []
        for w in frontier:
            for s in gens:
                ws = w * s
                if ws not in elems:
                    elems.add(ws)
                    nxt.append(ws)
        frontier = nxt
    return frozenset(elems)


@dataclass(frozen=True)
class SpecialCoset:
    J: tuple[int, ...]
    representative: WeylElement
    elements: frozenset = field(compare=False)

    def __contains__(self, w: WeylElement) -> bool:
        return w in self.elements


def cosets(J, n: int) -> list[SpecialCoset]:
    """Left cosets w W(J), each with its minimal-length representative."""
    J = tuple(sorted(set(J)))
    sub = special_subgroup(J, n)
    out, covered = [], set()
    for w in enumerate_group(n):
        if w in covered:
            continue
        elems = frozenset(w * u for u in sub)
        covered |= elems
        rep = min(elems, key=WeylElement.sort_key)
        out.append(SpecialCoset(J, rep, elems))
    return sorted(out, key=lambda c: c.representative.sort_key())


def right_cosets(H, n: int) -> list[frozenset]:
    """Right cosets H w of a subgroup H, in length-lex order of their minimal element."""
    out, covered = [], set()
    for w in enumerate_group(n):
        if w in covered:
            continue
        c = frozenset(h * w for h in H)
        covered |= c
        out.append(c)
    return out


def is_subgroup(H) -> bool:
    H = set(H)
    return bool(H) and all(a * b in H for a in H for b in H) and all(a.inverse() in H for a in H)


def generated_subgroup(elements, n: int) -> frozenset[WeylElement]:
    elems = {identity(n)}
    gens = list(elements)
    frontier = list(elems)
    while frontier:
        nxt = []
        for w in frontier:
            for s in gens:
                ws = w * s
                if ws not in elems:
                    elems.add(ws)
                    nxt.append(ws)
        frontier = nxt
    return frozenset(elems)


def standard_parabolic_type(H, n: int):
    """Return Theta if H equals W_Theta for the simple reflections it contains, else None."""
    theta = tuple(i for i in range(1, n) if simple_reflection(i, n) in H)
    return theta if special_subgroup(theta, n) == frozenset(H) else None


@dataclass(frozen=True)
class CoxeterComplex:
    n: int
    chambers: tuple[WeylElement, ...]
    vertices: tuple[SpecialCoset, ...]

    def vertex_type(self, v: SpecialCoset) -> int:
        (i,) = set(range(1, self.n)) - set(v.J)
        return i

    def chamber_vertices(self, w: WeylElement) -> list[SpecialCoset]:
        return [v for v in self.vertices if w in v]

    def adjacent(self, w1: WeylElement, w2: WeylElement, i: int) -> bool:
        # chambers sharing the panel w W({i}); invariant under the left action
        return w1 != w2 and w1 == w2 * simple_reflection(i, self.n)

    def adjacency_classes(self, w: WeylElement) -> dict[int, list[WeylElement]]:
        return {i: [u for u in self.chambers if self.adjacent(w, u, i)] for i in range(1, self.n)}

    def act(self, u: WeylElement, v: SpecialCoset) -> SpecialCoset:
        moved = frozenset(u * x for x in v.elements)
        for cand in self.vertices:
            if cand.elements == moved:
                return cand
        raise AssertionError("left translate of a special coset is not a special coset")


def coxeter_complex(n: int) -> CoxeterComplex:
    r = n - 1
    vertices = []
    for i in range(1, n):
        J = tuple(j for j in range(1, n) if j != i)
        vertices.extend(cosets(J, n))
    if r == 0:
        vertices = []
    return CoxeterComplex(n, enumerate_group(n), tuple(vertices))


def all_subsets(n: int):
    idx = list(range(1, n))
    for k in range(len(idx) + 1):
        yield from combinations(idx, k)
