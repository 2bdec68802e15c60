import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import gen
from crispec.chains import (BasicMove, Chain, HomotopyTrace, chain_length, invert_moves, make_chain,
                            random_loop, random_valid_moves, verify_homotopy)
from crispec.errors import InvalidChain
from crispec.generators import comb_gamma
from crispec.metric import from_points, validate_metric

LINE = validate_metric([[0, 1, 3], [1, 0, 2], [3, 2, 0]])


def test_length_examples():
    assert chain_length(LINE, [0]) == 0
    assert chain_length(LINE, [0, 1, 2]) == 3


def test_comb_loop_length():
    X = gen("rapunzel-comb-v0", teeth=6)
    for n in range(6):
        h = 1 / 2 ** (n + 1)
        assert chain_length(X, comb_gamma(X, n)) == pytest.approx(2 * h + 2, rel=1e-12)


def test_make_chain_checks_strict_bound():
    make_chain(LINE, [0, 1], 1.5)
    with pytest.raises(InvalidChain):
        make_chain(LINE, [0, 1], 1.0)


def test_reverse_and_concat():
    a = Chain([0, 1], 5.0)
    b = Chain([1, 2, 0], 5.0)
    assert a.reversed().reversed() == a
    ab = a.concat(b)
    assert ab.points == [0, 1, 2, 0]
    assert chain_length(LINE, ab) == chain_length(LINE, a) + chain_length(LINE, b)
    assert chain_length(LINE, ab.reversed()) == chain_length(LINE, ab)
    c = Chain([0, 2], 5.0)
    assert a.concat(b).concat(c) == a.concat(b.concat(c))


def test_verify_examples():
    X = from_points([("x", 0, 0), ("y", 1, 0), ("z", 2, 0)])
    assert verify_homotopy(X, HomotopyTrace(1.5, [0, 1, 2]))
    ok = verify_homotopy(X, HomotopyTrace(2.5, [0, 1, 2], [BasicMove("remove", 1)]))
    assert ok
    bad = verify_homotopy(X, HomotopyTrace(1.5, [0, 1, 2], [BasicMove("remove", 1)]))
    assert not bad and bad.step == 0 and "distance" in bad.reason


def test_verify_rejects_endpoint_moves_and_bad_start():
    X = from_points([("x", 0, 0), ("y", 1, 0), ("z", 2, 0)])
    assert not verify_homotopy(X, HomotopyTrace(2.5, [0, 1, 2], [BasicMove("remove", 0)]))
    assert not verify_homotopy(X, HomotopyTrace(2.5, [0, 2], [BasicMove("insert", 0, 1)]))
    r = verify_homotopy(X, HomotopyTrace(1.5, [0, 2]))
    assert not r and r.step == -1


def test_trace_json_round_trip():
    h = HomotopyTrace(2.5, [0, 1, 2], [BasicMove("remove", 1), BasicMove("insert", 1, 1)])
    assert HomotopyTrace.from_json(h.to_json()) == h


def test_invert_moves():
    X = gen("circle", circumference=1.0, n=12)
    rng = random.Random(3)
    start = [0, 1, 2, 3]
    mv = random_valid_moves(X, start, 0.2, 30, rng)
    h = HomotopyTrace(0.2, start, mv)
    back = HomotopyTrace(0.2, h.final(), invert_moves(start, mv))
    assert verify_homotopy(X, back)
    assert back.final() == start


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_random_moves_keep_endpoints(seed):
    rng = random.Random(seed)
    X = gen("circle", circumference=1.0, n=12)
    eps = rng.choice([0.1, 0.2, 0.3, 0.4])
    c = random_loop(X, rng.randrange(12), eps, rng.randint(0, 6), rng)
    c = c + [q for q in [c[-1]]]  # a stutter is still a chain
    mv = random_valid_moves(X, c, eps, 100, rng)
    h = HomotopyTrace(eps, c, mv)
    assert verify_homotopy(X, h)
    cur = list(c)
    for m in mv:
        if m.kind == "insert":
            cur.insert(m.pos, m.point)
        else:
            del cur[m.pos]
        assert cur[0] == c[0] and cur[-1] == c[-1]
