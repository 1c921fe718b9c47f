"""Control sets of a matrix semigroup acting on level-N flags.

The finitely generated semigroup S is fattened by the principal congruence
subgroup: an edge x -> y of the orbit graph means some generator maps the
ball of x onto a set meeting the ball of y.  Control sets are the cyclic
strongly connected components, the invariant one is the unique sink, and the
w-labels come from the fixed flags of regular hyperbolic words.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from itertools import product as iproduct
from typing import Optional

import networkx as nx

from . import coxeter
from .decomp import spectral_valuations
from .errors import CapExceeded, MultipleSinks, NoSink, NotRegular, PrecisionExhausted
from .flag import Flag, all_flags, fixed_flags, flag_count, image_classes, random_flag
from .matrix import Matrix
from .padic import INF, PAdicContext

# extra digits carried by matrix entries beyond the flag level
GUARD = 20

FORMAT_VERSION = "1"

LEVEL_NOTE = (
    "level-N dynamics: the semigroup is fattened by the congruence subgroup mod p^N; "
    "an edge x -> y means a generator maps the ball of x onto a set meeting the ball of y"
)


@dataclass(frozen=True)
class SemigroupSpec:
    group: str
    p: int
    precision: int
    generators: tuple[Matrix, ...]
    max_word_len: int = 4
    node_cap: int = 50000
    seed: int = 0
    random_seeds: int = 200
    max_witnesses: int = 12

    def __post_init__(self):
        if self.group not in ("SL2", "SL3"):
            raise ValueError(f"group: expected SL2 or SL3, got {self.group!r}")
        if not self.generators:
            raise ValueError("generators: list is empty")
        n = self.n
        for i, g in enumerate(self.generators):
            if g.n != n:
                raise ValueError(f"generators[{i}]: expected a {n}x{n} matrix")
            if g.ctx.p != self.p:
                raise ValueError(f"generators[{i}]: built over p={g.ctx.p}, spec has p={self.p}")
            if not g.is_sl():
                raise ValueError(f"generators[{i}]: determinant is not 1")

    @property
    def n(self) -> int:
        return 2 if self.group == "SL2" else 3

    @property
    def ctx(self) -> PAdicContext:
        return self.generators[0].ctx


def working_context(p: int, level: int) -> PAdicContext:
    return PAdicContext(p, level + GUARD)


def make_spec(group: str, p: int, precision: int, rows_list, **kw) -> SemigroupSpec:
    """Spec from nested lists of rationals (ints, Fractions or strings)."""
    ctx = working_context(p, precision)
    gens = tuple(Matrix.parse(ctx, rows) for rows in rows_list)
    return SemigroupSpec(group, p, precision, gens, **kw)


# -- hyperbolic witnesses ----------------------------------------------------------

@dataclass(frozen=True)
class Witness:
    word: tuple[int, ...]
    matrix: Matrix

    def word_str(self) -> str:
        return ".".join(f"g{i}" for i in self.word)


def _matrix_key(m: Matrix, level: int):
    # entries modulo p^N, as rationals in Z[1/p] cap [0, p^N)
    out = []
    p = m.ctx.p
    for row in m.rows:
        for x in row:
            if x.is_zero() or x.valuation >= level:
                out.append((INF, 0))
            else:
                out.append((x.valuation, x.unit % p ** (level - x.valuation)))
    return tuple(out)


def find_regular_hyperbolic(spec: SemigroupSpec) -> list[Witness]:
    """Regular hyperbolic words up to max_word_len, in length-lex order, deduplicated mod p^N."""
    gens = spec.generators
    seen = set()
    frontier: list[tuple[tuple[int, ...], Matrix]] = [((), Matrix.identity(spec.ctx, spec.n))]
    seen.add(_matrix_key(frontier[0][1], spec.precision))
    hits = []
    for _ in range(spec.max_word_len):
        nxt = []
        for word, m in frontier:
            for i, g in enumerate(gens):
                w2 = word + (i,)
                prod = m @ g
                key = _matrix_key(prod, spec.precision)
                if key in seen:
                    continue
                seen.add(key)
                nxt.append((w2, prod))
                try:
                    sv = spectral_valuations(prod)
                except (NotRegular, PrecisionExhausted):
                    continue
                if sv.regular and sv.hyperbolic:
                    hits.append(Witness(w2, prod))
        frontier = nxt
    return hits


# -- orbit graph ---------------------------------------------------------------------

@dataclass
class OrbitGraph:
    spec: SemigroupSpec
    nodes: list[Flag]
    edges: dict[Flag, list[tuple[int, Flag]]]
    exhausted: list[Flag] = field(default_factory=list)
    seeded: bool = False

    def successors(self, f: Flag) -> set[Flag]:
        return {t for _, t in self.edges.get(f, [])}

    def edge_count(self) -> int:
        return sum(len(v) for v in self.edges.values())

    def to_networkx(self) -> nx.DiGraph:
        G = nx.DiGraph()
        G.add_nodes_from(self.nodes)
        for s, outs in self.edges.items():
            for _, t in outs:
                G.add_edge(s, t)
        return G


def _node_images(spec: SemigroupSpec, f: Flag):
    out = []
    for i, g in enumerate(spec.generators):
        for t in sorted(image_classes(g, f)):
            out.append((i, t))
    return out


def build_orbit_graph(spec: SemigroupSpec, witnesses: Optional[list[Witness]] = None) -> OrbitGraph:
    """Exhaustive on P^1(Z/p^N); for SL3 the forward closure of seeded flags."""
    p, N = spec.p, spec.precision
    if spec.n == 2:
        if flag_count(2, p, N) > spec.node_cap:
            raise CapExceeded(f"{flag_count(2, p, N)} nodes exceed the cap {spec.node_cap}")
        start = all_flags(2, p, N)
        seeded = False
    else:
        if witnesses is None:
            witnesses = find_regular_hyperbolic(spec)
        rng = random.Random(spec.seed)
        start = []
        for wit in witnesses[: spec.max_witnesses]:
            try:
                start.extend(fixed_flags(wit.matrix, N).values())
            except (NotRegular, PrecisionExhausted):
                continue
        start.extend(random_flag(3, p, N, rng) for _ in range(spec.random_seeds))
        seeded = True
    nodes = set(start)
    queue = sorted(nodes)
    edges: dict[Flag, list[tuple[int, Flag]]] = {}
    exhausted = []
    while queue:
        f = queue.pop()
        try:
            outs = _node_images(spec, f)
        except PrecisionExhausted:
            exhausted.append(f)
            edges[f] = []
            continue
        edges[f] = outs
        for _, t in outs:
            if t not in nodes:
                nodes.add(t)
                if len(nodes) > spec.node_cap:
                    raise CapExceeded(f"seeded closure exceeds the cap {spec.node_cap}")
                queue.append(t)
    for f in exhausted:
        nodes.discard(f)
    for f in exhausted:
        edges.pop(f, None)
    bad = set(exhausted)
    edges = {s: [(i, t) for i, t in outs if t not in bad] for s, outs in edges.items()}
    return OrbitGraph(spec, sorted(nodes), edges, sorted(exhausted), seeded)


# -- control sets ----------------------------------------------------------------------

def _sccs(graph: OrbitGraph) -> list[frozenset]:
    comps = nx.strongly_connected_components(graph.to_networkx())
    return sorted((frozenset(c) for c in comps), key=lambda c: min(c))


def _is_cyclic(graph: OrbitGraph, comp: frozenset) -> bool:
    if len(comp) > 1:
        return True
    (x,) = comp
    return x in graph.successors(x)


def control_sets(graph: OrbitGraph) -> list[frozenset]:
    """Cyclic strongly connected components, ordered by their least node."""
    return [c for c in _sccs(graph) if _is_cyclic(graph, c)]


def _sinks(graph: OrbitGraph, sets) -> list[frozenset]:
    return [c for c in sets if all(t in c for x in c for t in graph.successors(x))]


def invariant_control_set(graph: OrbitGraph) -> frozenset:
    sinks = _sinks(graph, control_sets(graph))
    if not sinks:
        raise NoSink("no closed control set in the orbit graph")
    if len(sinks) > 1:
        raise MultipleSinks(f"{len(sinks)} closed control sets", sinks=sinks)
    return sinks[0]


def transitivity_core(graph: OrbitGraph, control_set: frozenset) -> frozenset:
    """Nodes of the set with an incoming edge from inside the set."""
    return frozenset(y for y in control_set if any(y in graph.successors(x) for x in control_set))


# -- labels and W(S) -------------------------------------------------------------------

@dataclass
class ControlSetInfo:
    id: int
    nodes: frozenset
    is_invariant: bool
    w_labels: list = field(default_factory=list)
    witnesses: list = field(default_factory=list)
    core: frozenset = frozenset()

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "nodes": [str(f) for f in sorted(self.nodes)],
            "core": [str(f) for f in sorted(self.core)],
            "is_invariant": self.is_invariant,
            "w_labels": sorted({w.word_str() for w in self.w_labels}),
            "witnesses": sorted(set(self.witnesses)),
        }


@dataclass
class ControlSetReport:
    control_sets: list[ControlSetInfo]
    weyl_subgroup: Optional[list]
    cosets: Optional[list]
    verdicts: dict
    warnings: list
    witnesses: list[Witness]
    classification: Optional[str] = None

    @property
    def ok(self) -> bool:
        return all(v in (True, "ok") or v is None for v in self.verdicts.values())

    def invariant(self) -> Optional[ControlSetInfo]:
        return next((c for c in self.control_sets if c.is_invariant), None)

    def to_dict(self) -> dict:
        return {
            "control_sets": [c.to_dict() for c in self.control_sets],
            "weyl_subgroup": None if self.weyl_subgroup is None else [w.word_str() for w in self.weyl_subgroup],
            "cosets": None if self.cosets is None else [[w.word_str() for w in c] for c in self.cosets],
            "verdicts": self.verdicts,
            "warnings": self.warnings,
            "witnesses": [{"word": w.word_str(), "matrix": w.matrix.to_rationals()} for w in self.witnesses],
            "classification": self.classification,
        }


def _sort_ws(ws) -> list:
    return sorted(ws, key=coxeter.WeylElement.sort_key)


def label_and_weyl(graph: OrbitGraph, hyperbolics: list[Witness]) -> ControlSetReport:
    spec = graph.spec
    n, N = spec.n, spec.precision
    W = coxeter.enumerate_group(n)
    sets = control_sets(graph)
    warnings = []
    if graph.exhausted:
        warnings.append(f"{len(graph.exhausted)} nodes lost to precision and excluded")
    if graph.seeded:
        warnings.append("node space is the forward closure of seeded flags, not the whole flag set")
    verdicts: dict = {}
    try:
        inv = invariant_control_set(graph)
        verdicts["sink"] = "ok"
    except MultipleSinks as exc:
        inv = None
        verdicts["sink"] = f"MultipleSinks: {len(exc.sinks)} closed control sets"
    except NoSink:
        inv = None
        verdicts["sink"] = "NoSink"
    infos = [
        ControlSetInfo(i, c, c == inv, core=transitivity_core(graph, c)) for i, c in enumerate(sets)
    ]
    where = {x: info for info in infos for x in info.nodes}

    labels: dict = {}
    conflicts = []
    unlabeled = []
    used = hyperbolics[: spec.max_witnesses]
    attractors_in_sink = True
    for wit in used:
        try:
            fixed = fixed_flags(wit.matrix, N)
        except (NotRegular, PrecisionExhausted) as exc:
            warnings.append(f"witness {wit.word_str()} skipped: {exc}")
            continue
        for w in W:
            info = where.get(fixed[w])
            if info is None:
                unlabeled.append((wit.word_str(), w.word_str()))
                continue
            info.w_labels.append(w)
            info.witnesses.append(wit.word_str())
            prev = labels.get(w)
            if prev is not None and prev[0] != info.id:
                conflicts.append((w.word_str(), prev[1], wit.word_str()))
            elif prev is None:
                labels[w] = (info.id, wit.word_str())
        if inv is not None and fixed[coxeter.identity(n)] not in inv:
            attractors_in_sink = False
    for info in infos:
        info.w_labels = _sort_ws(set(info.w_labels))

    if conflicts:
        verdicts["witness_consistency"] = "Inconsistent: " + "; ".join(
            f"w={w} labelled differently by {a} and {b}" for w, a, b in conflicts[:10])
    else:
        verdicts["witness_consistency"] = "ok"
    if unlabeled:
        warnings.append(f"{len(unlabeled)} fixed flags lie outside every control set")

    complete = len(labels) == len(W) and not conflicts
    weyl = cos = None
    if complete:
        e = coxeter.identity(n)
        D = {w: labels[w][0] for w in W}
        weyl = _sort_ws(w for w in W if D[w] == D[e])
        H = frozenset(weyl)
        verdicts["subgroup"] = coxeter.is_subgroup(H)
        theta = coxeter.standard_parabolic_type(H, n)
        verdicts["standard_parabolic"] = theta is not None
        right = coxeter.right_cosets(H, n) if verdicts["subgroup"] else []
        cos = [_sort_ws(c) for c in right]
        partition = {frozenset(w for w in W if D[w] == d) for d in set(D.values())}
        verdicts["coset_law"] = bool(right) and partition == set(map(frozenset, right))
        verdicts["attractor_in_invariant_set"] = attractors_in_sink if inv is not None else False
        if inv is not None:
            verdicts["identity_label_is_invariant"] = D[e] == next(i.id for i in infos if i.is_invariant)
    else:
        verdicts["labels_complete"] = False if not conflicts else "skipped"
    return ControlSetReport(infos, weyl, cos, verdicts, warnings, list(used))


def analyze(spec: SemigroupSpec) -> tuple[OrbitGraph, ControlSetReport]:
    """Full pipeline: witnesses, orbit graph, control sets, labels and W(S)."""
    witnesses = find_regular_hyperbolic(spec)
    graph = build_orbit_graph(spec, witnesses)
    if not witnesses:
        sets = control_sets(graph)
        infos = [ControlSetInfo(i, c, False, core=transitivity_core(graph, c)) for i, c in enumerate(sets)]
        report = ControlSetReport(
            infos, None, None, {}, [], [],
            classification="no hyperbolic witness; semigroup classifies as open subgroup",
        )
        return graph, report
    return graph, label_and_weyl(graph, witnesses)


def report_json(spec: SemigroupSpec, graph: OrbitGraph, report: ControlSetReport) -> dict:
    body = report.to_dict()
    body.update({
        "format_version": FORMAT_VERSION,
        "note": LEVEL_NOTE,
        "group": spec.group,
        "p": spec.p,
        "precision": spec.precision,
        "seed": spec.seed,
        "graph": {"nodes": len(graph.nodes), "edges": graph.edge_count(), "seeded": graph.seeded,
                  "exhausted": [str(f) for f in graph.exhausted]},
    })
    return body


def emit_dot(graph: OrbitGraph, invariant: Optional[frozenset] = None) -> str:
    """Byte-stable DOT: nodes in canonical order, edges labelled by generator index."""
    ids = {f: i for i, f in enumerate(graph.nodes)}
    lines = ["digraph orbit {"]
    for f in graph.nodes:
        mark = ", style=filled, fillcolor=lightblue" if invariant and f in invariant else ""
        lines.append(f'  n{ids[f]} [label="{f}"{mark}];')
    for f in graph.nodes:
        for i, t in sorted(graph.edges.get(f, []), key=lambda e: (e[0], ids[e[1]])):
            lines.append(f'  n{ids[f]} -> n{ids[t]} [label="g{i}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def random_sl2_generators(p: int, rng: random.Random, bound: int = 4):
    """One regular hyperbolic k diag(p^a, p^-a) k^-1 plus 1-3 integral elliptics, as rational rows."""
    from fractions import Fraction

    def rand_sl2z():
        while True:
            a, b, c = (rng.randint(-bound, bound) for _ in range(3))
            if a and (1 + b * c) % a == 0:
                return [[a, b], [c, (1 + b * c) // a]]

    k = rand_sl2z()
    a = rng.choice([1, 2])
    d = [[Fraction(p) ** a, 0], [0, Fraction(p) ** -a]]
    kinv = [[k[1][1], -k[0][1]], [-k[1][0], k[0][0]]]
    h = _mm(_mm(k, d), kinv)
    gens = [h]
    for _ in range(rng.randint(1, 3)):
        gens.append(rand_sl2z())
    return gens


def _mm(a, b):
    n = len(a)
    return [[sum(a[i][k] * b[k][j] for k in range(n)) for j in range(n)] for i in range(n)]
