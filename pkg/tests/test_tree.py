import random
from fractions import Fraction

import pytest

from padic_control import tree
from padic_control.decomp import cartan
from padic_control.errors import InvalidRay
from padic_control.flag import Flag, act as flag_act
from padic_control.matrix import Matrix
from padic_control.padic import PAdicContext

import oracles as o

F = Fraction
C5 = PAdicContext(5, 20)
B5 = tree.base_vertex(5)


def M(rows, ctx=C5):
    return Matrix(ctx, rows)


def test_vertex_examples():
    assert tree.vertex_from_matrix(Matrix.identity(C5, 2)) == B5
    assert tree.vertex_from_matrix(M([[5, 0], [0, 1]])) == tree.TreeVertex(5, 1, 0, F(0))
    assert tree.vertex_from_matrix(M([[5, 0], [0, 5]])) == B5


def test_exact_and_padic_canonical_forms_agree():
    rng = random.Random(1)
    for _ in range(200):
        g = o.random_sl2(rng, 5)
        assert tree.vertex_from_matrix(M(g)) == tree.canonical_vertex(g, 5)


def test_distance_examples():
    assert tree.distance(B5, B5) == 0
    assert tree.distance(B5, tree.vertex_from_matrix(M([[5, 0], [0, 1]]))) == 1
    g = o.matmul([[25, 0], [0, 1]], [[1, 0], [1, 1]])
    e = o.determinantal_exponents(g, 5)
    assert tree.distance(B5, tree.canonical_vertex(g, 5)) == e[1] - e[0]


@pytest.mark.parametrize("p", [2, 5])
def test_neighbors(p):
    base = tree.base_vertex(p)
    nb = tree.neighbors(base)
    assert len(nb) == len(set(nb)) == p + 1
    for v in nb:
        assert tree.distance(base, v) == 1
        assert base in tree.neighbors(v)


def _random_vertex(rng, p=5, steps=6):
    v = tree.base_vertex(p)
    for _ in range(rng.randint(0, steps)):
        v = rng.choice(tree.neighbors(v))
    return v


def test_degree_metric_and_isometry():
    rng = random.Random(2)
    for _ in range(100):
        u, v, w = (_random_vertex(rng) for _ in range(3))
        assert len(set(tree.neighbors(u))) == 6
        duv, dvw, duw = tree.distance(u, v), tree.distance(v, w), tree.distance(u, w)
        assert duw <= duv + dvw and tree.distance(v, u) == duv
        # Gromov products based at a fourth vertex: integers, the two smallest equal
        x = _random_vertex(rng)

        def gp(a, b):
            twice = tree.distance(a, x) + tree.distance(b, x) - tree.distance(a, b)
            assert twice % 2 == 0
            return twice // 2

        prods = sorted([gp(u, v), gp(u, w), gp(v, w)])
        assert prods[0] == prods[1]
        g = o.random_sl2(rng, 5)
        assert tree.distance(tree.act(g, u), tree.act(g, v)) == duv


def test_distance_matches_cartan_gap():
    rng = random.Random(4)
    for _ in range(100):
        g = o.random_sl2(rng, 5)
        m = cartan(M(g)).exponents
        assert tree.distance(B5, tree.act(g, B5)) == m[1] - m[0]


def test_classify_examples():
    h = tree.classify_isometry(M([[5, 0], [0, F(1, 5)]]))
    assert isinstance(h, tree.Hyperbolic) and h.translation_length == 2
    best, _ = tree.bfs_min_displacement([[5, 0], [0, F(1, 5)]], B5, 6)
    assert best == 2
    e = tree.classify_isometry(M([[0, 1], [-1, 0]]))
    assert isinstance(e, tree.Elliptic) and e.fixed_vertex == B5
    assert isinstance(tree.classify_isometry(M([[1, 1], [0, 1]])), tree.Elliptic)


def test_axis_coherence():
    rng = random.Random(6)
    checked = 0
    while checked < 15:
        g = o.random_sl2(rng, 5)
        res = tree.classify_isometry(M(g))
        if not isinstance(res, tree.Hyperbolic):
            continue
        checked += 1
        ell = res.translation_length
        best, axis = tree.bfs_min_displacement(g, res.axis_vertex, 3)
        assert best == ell
        assert tree.is_path(axis)
        v = res.axis_vertex
        assert tree.displacement(g, v) == ell
        gv = tree.act(g, v)
        assert tree.displacement(g, gv) == ell


def test_ball_enumeration_matches_bfs():
    g = [[5, 1], [0, F(1, 5)]]
    fast = {tree.ball_vertex(B5, j, x): d for j, x, d in tree.ball_displacements(g, B5, 3)}
    slow = {v: tree.displacement(g, v) for _, v in tree.ball(B5, 3)}
    assert fast == slow
    assert len(slow) == 1 + 6 + 30 + 150


def test_ray_dynamics_examples():
    d = M([[5, 0], [0, F(1, 5)]])
    r = tree.ray(B5, [1, 0])
    rep = tree.ray_dynamics(d, r, 5)
    assert rep.nested and rep.growth_rate == 2
    assert rep.extensions == (2, 4, 6, 8, 10)
    assert tree.ray_dynamics(d, r, 0).nested
    assert tree.ray_dynamics(d @ d, r, 4).growth_rate == 4
    with pytest.raises(InvalidRay):
        tree.ray_dynamics(d, tree.ray(B5, [0, 1]), 3)


def test_ray_vertices_are_a_geodesic():
    r = tree.ray(B5, [1, 3])
    vs = r.vertices(6)
    for j, v in enumerate(vs):
        assert tree.distance(B5, v) == j
    assert tree.geodesic(vs[0], vs[-1]) == vs


def test_end_correspondence():
    r = tree.ray(B5, [0, 1])
    assert tree.end_correspondence(r, 3) == Flag(5, 3, (0, 1))
    f = Flag(5, 3, (1, 17))
    assert tree.end_correspondence(tree.flag_to_ray(f), 3) == f
    rot = [[0, 1], [-1, 0]]
    assert tree.end_correspondence(tree.ray_act(rot, tree.ray(B5, [1, 0])), 3) == Flag(5, 3, (0, 1))


def test_end_equivariance_random():
    rng = random.Random(8)
    N = 3
    for _ in range(100):
        g = o.random_sl2(rng, 5)
        x = rng.randrange(125)
        f = rng.choice([Flag(5, N, (1, x)), Flag(5, N, ((5 * x) % 125, 1))])
        r = tree.flag_to_ray(f, _random_vertex(rng, steps=3))
        gr = tree.ray_act(g, r)
        # left side: the end read off deep vertices of the moved ray, independent of g's action on P^1
        deep = gr.vertices(N + 12)[-1]
        lhs = tree.end_from_vertex(gr.base, deep, N)
        rhs = flag_act(M(g), f)
        assert lhs == rhs


def test_serialization_and_dot():
    v = tree.TreeVertex(5, 2, 0, F(7))
    assert str(v) == "(2, 0, 7)"
    assert tree.TreeVertex.parse(str(v), 5) == v
    dot = tree.ball_dot(B5, 1)
    assert dot.count("label=") == 7 and dot == tree.ball_dot(B5, 1)
