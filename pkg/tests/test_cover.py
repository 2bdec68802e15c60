import random

import pytest

from conftest import gen
from crispec.chains import random_loop
from crispec.cover import (CoverBall, CoverVertex, DeckElement, build_cover_ball, deck_element, deck_translate,
                           lift_chain, simply_connected_probe)
from crispec.errors import BudgetExhausted, LeftBall
from crispec.metric import from_points
from crispec.nullity import decide_null
from crispec.presentation import build_graph

LOOP12 = list(range(12)) + [0]


@pytest.fixture(scope="module")
def line_ball(circle12):
    return build_cover_ball(circle12, 0.2, 0, max_vertices=120)


def test_trivial_cover_above_third(circle12):
    ball = build_cover_ball(circle12, 0.4, 0)
    assert ball.complete and len(ball) == 12
    G = build_graph(circle12, ball.scale)
    assert {tuple(sorted((ball.projection(a), ball.projection(b)))) for a, b, _ in ball.edges} == set(G.edges)
    assert len(ball.edges) == len(G.edges)


def test_line_like_cover(line_ball):
    assert not line_ball.complete and len(line_ball) == 120
    assert len(line_ball.fiber(0)) >= 3


def test_strict_budget_raises(circle12):
    with pytest.raises(BudgetExhausted) as e:
        build_cover_ball(circle12, 0.2, 0, max_vertices=50, strict=True)
    assert len(e.value.ball) == 50


def test_tree_space_cover():
    X = from_points([("a", 0, 0), ("b", 1, 0), ("c", 2, 0), ("d", 2, 1)])
    ball = build_cover_ball(X, 1.2, "a")
    assert ball.complete and len(ball) == 4 and len(ball.edges) == 3
    assert simply_connected_probe(ball)


def test_edge_weights_are_base_distances(line_ball, circle12):
    for a, b, w in line_ball.edges:
        assert w == circle12.d(line_ball.projection(a), line_ball.projection(b))


def test_lifts(line_ball, circle12):
    assert lift_chain(line_ball, [0]) == [line_ball.root]
    # a null loop lifts closed
    null_loop = [0, 1, 2, 1, 0]
    lift = lift_chain(line_ball, null_loop)
    assert lift[-1] == line_ball.root
    assert [v.base for v in lift] == null_loop
    # the winding loop lifts open, ending elsewhere in the fiber
    lift = lift_chain(line_ball, LOOP12)
    assert lift[-1] != line_ball.root and lift[-1].base == 0
    rng = random.Random(4)
    for _ in range(30):
        loop = random_loop(circle12, 0, 0.2, rng.randint(1, 10), rng)
        try:
            lift = lift_chain(line_ball, loop)
        except LeftBall:
            continue
        assert [v.base for v in lift] == loop
        closed = lift[-1] == line_ball.root
        assert closed == (decide_null(circle12, 0.2, loop).status == "null")


def test_lift_leaves_ball(circle12):
    small = build_cover_ball(circle12, 0.2, 0, max_vertices=20)
    with pytest.raises(LeftBall) as e:
        lift_chain(small, LOOP12 * 3)
    assert e.value.index > 0


def test_deck_action(line_ball):
    g = deck_element(line_ball, LOOP12)
    assert g.loop_class
    e = DeckElement(())
    for v in line_ball.vertices[:30]:
        assert deck_translate(line_ball, e, v) == v
    fiber = [line_ball.vertices[k] for k in line_ball.fiber(0)]
    moved = 0
    for v in fiber:
        try:
            u = deck_translate(line_ball, g, v)
        except LeftBall:
            continue
        moved += 1
        assert u != v and u.base == v.base
        assert deck_translate(line_ball, g.inverse(), u) == v
    assert moved >= 2


def test_deck_preserves_weights(line_ball):
    g = deck_element(line_ball, LOOP12)
    for a, b, w in line_ball.edges[:60]:
        try:
            u = deck_translate(line_ball, g, line_ball.vertices[a])
            v = deck_translate(line_ball, g, line_ball.vertices[b])
        except LeftBall:
            continue
        assert line_ball.vertex_id(v) in line_ball.neighbors(line_ball.vertex_id(u))
        assert line_ball.X.d(u.base, v.base) == w


def test_fiber_constancy_on_complete_balls():
    for X, eps in ((gen("circle", circumference=1.0, n=12), 0.4), (gen("hawaiian-earring", circles=2), 0.4),
                   (gen("circle-with-gap", circumference=1.0, gap=0.25, n=40), 0.4)):
        ball = build_cover_ball(X, eps, 0, max_vertices=5000)
        assert ball.complete
        sizes = {len(v) for v in ball.fibers().values()}
        assert len(sizes) == 1 and len(ball.fibers()) == X.n


def test_probe_passes_and_detects_corruption(line_ball):
    assert simply_connected_probe(line_ball, 50)
    # glue two fiber points over the basepoint: the winding loop closes up in the ball
    f = line_ball.fiber(0)
    a, b = f[0], f[1]
    verts = list(line_ball.vertices)
    edges = [(a if x == b else x, a if y == b else y, w) for x, y, w in line_ball.edges]
    edges = [(min(x, y), max(x, y), w) for x, y, w in edges if x != y]
    bad = CoverBall(line_ball.X, line_ball.scale, line_ball.basepoint, verts, sorted(set(edges)),
                    line_ball.radius, line_ball.complete)
    res = simply_connected_probe(bad, 50)
    assert not res and res.witness


def test_probe_on_partial_square_ball():
    X = gen("square-boundary", side=1.0, mesh=0.125)
    ball = build_cover_ball(X, 0.5, "base", max_vertices=400)
    assert not ball.complete and len(ball.fiber(0)) >= 3
    assert simply_connected_probe(ball, 50, seed=3)
    assert build_cover_ball(X, 1.2, "base").complete
