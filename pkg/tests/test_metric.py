import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import gen
from crispec.errors import AsymmetricMatrix, InputError, MeshTooCoarse, NegativeDistance, TriangleViolation
from crispec.generators import DEFAULTS, KINDS, GeneratorSpec, generate
from crispec.metric import (candidate_scales, from_arc_params, from_points, read_csv, read_json,
                            validate_metric, write_csv)


def test_two_point_space():
    X = validate_metric([[0, 1], [1, 0]], 0)
    assert X.n == 2 and X.d(0, 1) == 1


def test_asymmetric():
    with pytest.raises(AsymmetricMatrix):
        validate_metric([[0, 1], [2, 0]])


def test_negative_and_zero_distances():
    with pytest.raises(NegativeDistance):
        validate_metric([[0, -1], [-1, 0]])
    with pytest.raises(NegativeDistance):
        validate_metric([[0, 0], [0, 0]])


def test_triangle_violation_reports_triple_and_slack():
    with pytest.raises(TriangleViolation) as e:
        validate_metric([[0, 1, 5], [1, 0, 1], [5, 1, 0]], 0)
    assert (e.value.i, e.value.j, e.value.k) == (0, 2, 1)
    assert e.value.slack == 3


def test_tolerance_admits_rounding():
    validate_metric([[0, 1, 2 + 1e-10], [1, 0, 1], [2 + 1e-10, 1, 0]], 1e-9)


def test_bad_shapes():
    with pytest.raises(InputError):
        validate_metric([[0, 1, 2], [1, 0, 1]])
    with pytest.raises(InputError):
        validate_metric([[0, math.inf], [math.inf, 0]])


def test_candidate_scales_examples():
    X = validate_metric([[0, 1, 2], [1, 0, 1], [2, 1, 0]])
    assert candidate_scales(X) == [1, 2]
    assert candidate_scales(validate_metric([[0, 5], [5, 0]])) == [5]
    C = from_arc_params(1.0, [0, 0.25, 0.5, 0.75])
    assert candidate_scales(C) == [0.25, 0.5]


def test_canonical_scale():
    X = validate_metric([[0, 1, 2], [1, 0, 1], [2, 1, 0]])
    assert X.canonical_scale(0.5) == 1
    assert X.canonical_scale(1) == 1
    assert X.canonical_scale(1.5) == 2
    assert X.canonical_scale(10) == X.top_scale()
    assert X.next_scale(1) == 2


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=2, max_size=12, unique=True))
def test_candidate_scales_sorted_and_bounded(pts):
    P = np.array(pts)
    D = np.hypot(*(P[:, None, :] - P[None, :, :]).transpose(2, 0, 1))
    if np.any(D[~np.eye(len(P), dtype=bool)] <= 0):
        return
    X = validate_metric(D, 1e-9)
    s = candidate_scales(X)
    assert all(a < b for a, b in zip(s, s[1:]))
    assert len(s) <= X.n * (X.n - 1) // 2
    assert set(s) == {float(v) for v in D[np.triu_indices(len(P), 1)]}


def test_csv_round_trip():
    X = from_points([("a", 0, 0), ("b", 3, 4), ("c", 0, 4)])
    Y = read_csv(write_csv(X))
    assert Y.labels == X.labels
    assert np.array_equal(Y.dist, X.dist)


def test_json_formats():
    X = read_json(json.dumps({"points": [{"label": "a", "x": 0, "y": 0}, {"label": "b", "x": 3, "y": 4}],
                              "metric": "euclidean"}))
    assert X.d(0, 1) == 5 and X.labels == ("a", "b")
    C = read_json(json.dumps({"circle": {"circumference": 1.0}, "params": [0, 0.1, 0.9]}))
    assert C.d(1, 2) == pytest.approx(0.2)


def test_circle_generator():
    X = gen("circle", circumference=1.0, n=200)
    gaps = [X.d(i, (i + 1) % 200) for i in range(200)]
    assert max(gaps) == pytest.approx(1 / 200, rel=1e-12)
    assert X.diameter == pytest.approx(0.5)


def test_circle_is_arc_metric():
    X = gen("circle", circumference=1.0, n=12)
    for i, j in itertools.combinations(range(12), 2):
        k = abs(i - j)
        assert X.d(i, j) == pytest.approx(min(k, 12 - k) / 12, rel=1e-12)


def test_circle_with_gap_endpoints():
    X = gen("circle-with-gap", circumference=1.0, gap=0.25, n=200)
    assert X.d(X.index("a"), X.index("b")) == pytest.approx(0.25, rel=1e-12)
    assert X.labels[0] == "a" and X.labels[-1] == "b"


def test_comb_v0_special_points():
    X = gen("rapunzel-comb-v0", teeth=6)
    ix = X.index
    for k in range(7):
        assert X.d(ix(f"x{k}"), ix(f"y{k}")) == pytest.approx(1.0, rel=1e-15)
    for n in range(1, 7):
        assert X.d(ix(f"x{n - 1}"), ix(f"y{n}")) == pytest.approx(math.sqrt(1 + 4.0 ** -n), rel=1e-12)
    d0 = X.d(ix("x0"), ix("z0"))
    d1 = X.d(ix("x0"), ix("y1"))
    assert d0 == pytest.approx(d1, rel=1e-12)
    assert d1 == pytest.approx(math.sqrt(1.25), rel=1e-12)


@pytest.mark.parametrize("kind", KINDS)
def test_every_generator_validates(kind):
    X = generate(GeneratorSpec(kind, {}))
    validate_metric(X.dist, 1e-9 * X.diameter)
    assert X.provenance["kind"] == kind


def test_mesh_too_coarse():
    with pytest.raises(MeshTooCoarse):
        gen("rapunzel-comb-v0", teeth=6, mesh=0.6)
    with pytest.raises(MeshTooCoarse):
        gen("circle-with-gap", circumference=1.0, gap=0.25, n=4)


def test_unknown_generator_inputs():
    with pytest.raises(InputError):
        generate(GeneratorSpec("klein-bottle", {}))
    with pytest.raises(InputError):
        gen("circle", radius=2)
    assert set(DEFAULTS) == set(KINDS)
