import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import gen
from crispec.chains import HomotopyTrace, random_loop, verify_homotopy
from crispec.metric import from_points
from crispec.nullity import Budgets, decide_null, induced_map_report, refine_check
from crispec.oracle import brute_null, random_space

LOOP12 = list(range(12)) + [0]


def test_circle_winding_loop(circle12):
    v = decide_null(circle12, 0.2, LOOP12)
    assert v.status == "nonnull" and v.certificate["kind"] == "h1-nonzero"
    short = [0, 2, 4, 6, 8, 10, 0]
    assert decide_null(circle12, 0.2, short).status == "nonnull"
    assert brute_null(circle12.dist, 0.2, short) is False
    w = decide_null(circle12, 0.4, LOOP12)
    assert w.status == "null" and verify_homotopy(circle12, w.trace)
    assert set(w.trace.final()) == {0}


def test_triangle_loop_two_moves():
    X = from_points([("a", 0, 0), ("b", 1, 0), ("c", 0, 1)])
    v = decide_null(X, 2, [0, 1, 2, 0])
    assert v.status == "null" and len(v.trace.moves) == 2 and verify_homotopy(X, v.trace)


def test_nonloop_rejected(circle12):
    with pytest.raises(Exception):
        decide_null(circle12, 0.2, [0, 1, 2])


def test_refine_trivial_pair(circle12):
    r = refine_check(circle12, 0.2, 0.1, (0, 1))
    assert r.status == "refinable" and r.trace.moves == []


def test_refine_gap_pair(gap200):
    r = refine_check(gap200, 0.26, 0.25, ("a", "b"))
    assert r.status == "not-refinable"


def test_refine_comb_v3_through_a_b(comb3):
    ix = comb3.index
    r = refine_check(comb3, comb3.next_scale(1.0), 1.0, ("x_inf", "y_inf"))
    assert r.status == "refinable" and verify_homotopy(comb3, r.trace)
    end = r.trace.final()
    assert all(comb3.d(a, b) < 1.0 for a, b in zip(end, end[1:]))
    assert ix("a") in end and ix("b") in end


def test_refine_circle_neighbours_refinable(circle200):
    lo = circle200.candidate_scales()[3]
    hi = circle200.next_scale(lo)
    r = refine_check(circle200, hi, lo, (0, 4))
    assert r.status == "refinable" and verify_homotopy(circle200, r.trace)


def test_induced_map_circle(circle200):
    rep = induced_map_report(circle200, 0.3, 0.4)
    assert rep.injective is False and rep.surjective is True
    assert rep.kernel_witnesses
    w = rep.kernel_witnesses[0]
    assert w["below"]["status"] == "nonnull" and w["above"]["status"] == "null"
    rep = induced_map_report(circle200, 0.35, 0.45)
    assert rep.injective is True and rep.surjective is True


def test_induced_map_comb_non_surjective(comb0):
    rep = induced_map_report(comb0, 1.0, comb0.next_scale(1.0))
    assert rep.surjective is False
    pairs = {tuple(sorted(u["pair"])) for u in rep.unrefinable}
    ix = comb0.index
    for k in range(7):
        assert tuple(sorted((ix(f"x{k}"), ix(f"y{k}")))) in pairs


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_monotone_nullity_and_tier_agreement(seed):
    rng = random.Random(seed)
    X = random_space(rng)
    scales = X.candidate_scales() + [X.top_scale()]
    for k, eps in enumerate(scales):
        loop = random_loop(X, rng.randrange(X.n), eps, rng.randint(1, 6), rng)
        v = decide_null(X, eps, loop)
        if v.status == "null":
            assert verify_homotopy(X, v.trace)
            for e2 in scales[k + 1:]:
                assert verify_homotopy(X, HomotopyTrace(e2, v.trace.start, v.trace.moves))
        if v.status == "nonnull" and v.tier == 1:
            assert brute_null(X.dist, eps, loop, slack=4) is not True


def test_tiny_budget_gives_unknown_not_guess(square):
    loop = [square.index("base")]
    v = decide_null(square, 0.5, loop + loop)
    assert v.status == "null"
    tiny = Budgets(moves=1, bfs_states=1, bfs_slack=0)
    far = random_loop(square, 0, 0.05, 30, random.Random(1))
    v = decide_null(square, 0.05, far, tiny)
    assert v.status in ("null", "unknown", "nonnull")
    if v.status == "null":
        assert verify_homotopy(square, v.trace)
