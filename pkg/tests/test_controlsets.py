import random
from fractions import Fraction

import pytest

from padic_control import controlsets as cs
from padic_control import coxeter as cx
from padic_control import flag
from padic_control.errors import MultipleSinks, NoSink
from padic_control.flag import Flag
from padic_control.matrix import Matrix

import oracles as o

F = Fraction
DIAG = [[5, 0], [0, F(1, 5)]]
ROT = [[0, 1], [-1, 0]]
H3 = [[F(1, 5), 0, 0], [0, 1, 0], [0, 0, 5]]


def names(nodes):
    return sorted(str(f) for f in nodes)


def test_spec_validation_names_fields():
    with pytest.raises(ValueError, match="group"):
        cs.make_spec("SL4", 5, 1, [DIAG])
    with pytest.raises(ValueError, match="generators: list is empty"):
        cs.make_spec("SL2", 5, 1, [])
    with pytest.raises(ValueError, match=r"generators\[0\]: determinant"):
        cs.make_spec("SL2", 5, 1, [[[5, 0], [0, 1]]])
    with pytest.raises(ValueError, match=r"generators\[1\]"):
        cs.make_spec("SL2", 5, 1, [DIAG, H3])


def test_witness_search_examples():
    assert cs.find_regular_hyperbolic(cs.make_spec("SL2", 5, 1, [ROT], max_word_len=6)) == []
    hits = cs.find_regular_hyperbolic(cs.make_spec("SL2", 5, 1, [DIAG]))
    assert hits[0].word == (0,)
    # two elliptics whose product is diag(-1/5, -5)
    kp = [[0, F(1, 5)], [-5, 0]]
    hits = cs.find_regular_hyperbolic(cs.make_spec("SL2", 5, 1, [ROT, kp]))
    assert min(len(h.word) for h in hits) == 2
    assert [h.word_str() for h in hits[:2]] == ["g0.g1", "g1.g0"]


def test_single_diagonal_generator():
    graph, rep = cs.analyze(cs.make_spec("SL2", 5, 1, [DIAG]))
    assert len(graph.nodes) == 6
    assert [names(c.nodes) for c in rep.control_sets] == [["[0:1]"], ["[1:0]"]]
    assert names(rep.invariant().nodes) == ["[0:1]"]
    assert rep.weyl_subgroup == [cx.identity(2)]
    assert len(rep.cosets) == 2 and rep.ok
    labels = {c.id: c.w_labels for c in rep.control_sets}
    assert labels[rep.invariant().id] == [cx.identity(2)]


def test_diagonal_with_rotation():
    graph, rep = cs.analyze(cs.make_spec("SL2", 5, 1, [DIAG, ROT]))
    assert len(rep.control_sets) == 1
    (only,) = rep.control_sets
    assert only.is_invariant and {"[0:1]", "[1:0]"} <= set(names(only.nodes))
    assert set(rep.weyl_subgroup) == set(cx.enumerate_group(2))
    assert len(rep.cosets) == 1 and rep.ok


def test_rotation_only_is_open_subgroup():
    _, rep = cs.analyze(cs.make_spec("SL2", 5, 1, [ROT]))
    assert rep.classification.startswith("no hyperbolic witness")
    assert rep.weyl_subgroup is None and rep.witnesses == []


def test_sl3_diagonal():
    _, rep = cs.analyze(cs.make_spec("SL3", 2, 2, [[[F(1, 2), 0, 0], [0, 1, 0], [0, 0, 2]]]))
    assert len(rep.control_sets) == 6
    assert all(len(c.nodes) == 1 for c in rep.control_sets)
    assert rep.weyl_subgroup == [cx.identity(3)] and len(rep.cosets) == 6
    assert rep.ok
    inv = rep.invariant()
    assert names(inv.nodes) == [str(Flag(2, 2, (1, 0, 0), (0, 0, 1)))]


@pytest.mark.parametrize("seed", range(6))
def test_sccs_match_pairwise_reachability(seed):
    rng = random.Random(seed)
    gens = cs.random_sl2_generators(5, rng)
    graph = cs.build_orbit_graph(cs.make_spec("SL2", 5, 1, gens))
    got = set(cs.control_sets(graph))
    assert got == o.brute_cyclic_sccs(graph.nodes, graph.successors)


@pytest.mark.parametrize("seed", range(8))
def test_random_sets_have_one_sink_with_attractors(seed):
    rng = random.Random(100 + seed)
    gens = cs.random_sl2_generators(5, rng)
    for N in (1, 2):
        graph, rep = cs.analyze(cs.make_spec("SL2", 5, N, gens))
        inv = cs.invariant_control_set(graph)
        for wit in rep.witnesses:
            assert flag.fixed_flags(wit.matrix, N)[cx.identity(2)] in inv
        assert rep.verdicts["coset_law"] is True


def test_sink_errors():
    graph = cs.build_orbit_graph(cs.make_spec("SL2", 5, 1, [DIAG]))
    # every node closed on itself: six sinks
    two = cs.OrbitGraph(graph.spec, graph.nodes, {f: [(0, f)] for f in graph.nodes})
    with pytest.raises(MultipleSinks) as info:
        cs.invariant_control_set(two)
    assert len(info.value.sinks) == 6
    chain = cs.OrbitGraph(graph.spec, graph.nodes[:2], {graph.nodes[0]: [(0, graph.nodes[1])]})
    with pytest.raises(NoSink):
        cs.invariant_control_set(chain)


def test_transitivity_core():
    graph = cs.build_orbit_graph(cs.make_spec("SL2", 5, 1, [DIAG]))
    for c in cs.control_sets(graph):
        assert cs.transitivity_core(graph, c) == c
    # a node without a self-loop and no cycle is never a control set
    chain = cs.OrbitGraph(graph.spec, graph.nodes[:2], {graph.nodes[0]: [(0, graph.nodes[1])]})
    assert cs.control_sets(chain) == []


def test_conjugation_covariance():
    rng = random.Random(7)
    spec = cs.make_spec("SL2", 5, 1, [DIAG])
    _, base = cs.analyze(spec)
    for _ in range(5):
        k = o.random_integral_unit(rng, 5, 2)
        gens = [o.matmul(o.matmul(k, DIAG), o.inverse(k))]
        _, rep = cs.analyze(cs.make_spec("SL2", 5, 1, gens))
        K = Matrix(spec.ctx, k)
        moved = {frozenset(flag.act(K, f) for f in c.nodes) for c in base.control_sets}
        assert {c.nodes for c in rep.control_sets} == moved
        assert rep.weyl_subgroup == base.weyl_subgroup


def test_dot_and_json_are_stable():
    spec = cs.make_spec("SL2", 5, 1, [DIAG])
    graph, rep = cs.analyze(spec)
    dot = cs.emit_dot(graph, rep.invariant().nodes)
    assert dot == cs.emit_dot(cs.analyze(spec)[0], rep.invariant().nodes)
    assert dot.count("label=\"[") == 6
    assert dot.count("->") == graph.edge_count() == 11
    assert dot.count("fillcolor") == 1
    empty = cs.OrbitGraph(spec, [], {})
    assert cs.emit_dot(empty) == "digraph orbit {\n}\n"
    body = cs.report_json(spec, graph, rep)
    assert body["format_version"] == cs.FORMAT_VERSION and body["seed"] == 0
    assert body["weyl_subgroup"] == ["e"]


def test_point_images_give_six_edges():
    # one image per node (moving only the canonical point) yields the six-edge picture
    spec = cs.make_spec("SL2", 5, 1, [DIAG])
    (g,) = spec.generators
    nodes = flag.all_flags(2, 5, 1)
    assert len({(f, flag.act(g, f)) for f in nodes}) == 6
    graph = cs.build_orbit_graph(spec)
    for f in nodes:
        assert flag.act(g, f) in graph.successors(f)
