import random

from hypothesis import given, settings, strategies as st

from conftest import gen
from crispec.metric import from_points, validate_metric
from crispec.nullity import decide_null
from crispec.chains import verify_homotopy
from crispec.oracle import random_space
from crispec.presentation import build_graph, h1_invariants, present_pi_eps


def test_graph_strict_bound():
    X = validate_metric([[0, 1], [1, 0]])
    G = build_graph(X, 1.0)
    assert G.edges == [] and len(set(G.components)) == 2
    G = build_graph(X, 1.5)
    assert G.edges == [(0, 1)] and len(set(G.components)) == 1


def test_circle12_graph(circle12):
    G = build_graph(circle12, 0.2)
    # arcs 1/12 and 2/12 are below 0.2
    assert len(G.edges) == 24
    assert all(circle12.d(i, j) < 0.2 for i, j, _ in G.triangles)
    P = present_pi_eps(G, 0)
    S = P.simplify()
    assert S.is_free and S.rank == 1
    H = h1_invariants(P)
    assert (H.rank, H.torsion) == (1, [])


def test_triangle_presentation():
    X = from_points([("a", 0, 0), ("b", 1, 0), ("c", 0, 1)])
    P = present_pi_eps(build_graph(X, 2), 0)
    assert len(P.generators) == 1 and len(P.relators) == 1
    assert P.simplify().rank == 0
    assert h1_invariants(P).rank == 0


def test_tree_has_no_generators():
    X = from_points([("a", 0, 0), ("b", 1, 0), ("c", 2, 0)])
    P = present_pi_eps(build_graph(X, 1.5), 0)
    assert P.generators == [] and h1_invariants(P).rank == 0


def test_earring_rank_two():
    X = gen("hawaiian-earring", circles=2)
    w = X.index("wedge")
    P = present_pi_eps(build_graph(X, 0.1), w)
    assert h1_invariants(P).rank == 2
    assert P.simplify().rank == 2


def test_simplified_and_direct_h1_agree():
    rng = random.Random(5)
    for _ in range(40):
        X = random_space(rng)
        for eps in X.candidate_scales():
            P = present_pi_eps(build_graph(X, eps), 0)
            a, b = h1_invariants(P), h1_invariants(P, direct=True)
            assert (a.rank, a.torsion) == (b.rank, b.torsion)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_relator_loops_are_null(seed):
    X = random_space(random.Random(seed))
    eps = random.Random(seed).choice(X.candidate_scales() + [X.top_scale()])
    G = build_graph(X, eps)
    for i, j, k in G.triangles[:20]:
        v = decide_null(X, eps, [i, j, k, i])
        assert v.status == "null" and verify_homotopy(X, v.trace)
        assert len(v.trace.moves) <= 2
