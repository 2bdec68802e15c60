"""Finite metric spaces: validation, ingestion and scale bookkeeping."""

from __future__ import annotations

import csv
import io
import json
import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import AsymmetricMatrix, InputError, NegativeDistance, TriangleViolation


@dataclass(eq=False)
class FiniteMetricSpace:
    """n labeled points with a validated distance matrix.

    Instances are treated as immutable; ``dist`` is a read-only array.
    ``_cache`` holds derived structures (filtration engine, MST) keyed by name.
    """

    labels: tuple[str, ...]
    dist: np.ndarray
    coords: np.ndarray | None = None
    provenance: dict | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.dist = np.asarray(self.dist, dtype=float)
        self.dist.setflags(write=False)
        self.labels = tuple(str(s) for s in self.labels)
        if self.coords is not None:
            self.coords = np.asarray(self.coords, dtype=float)
            self.coords.setflags(write=False)
        self._index = {s: i for i, s in enumerate(self.labels)}

    @property
    def n(self) -> int:
        return len(self.labels)

    def d(self, i: int, j: int) -> float:
        return float(self.dist[i, j])

    def index(self, key: str | int) -> int:
        """Resolve a label (or a decimal index string) to a point index."""
        if isinstance(key, (int, np.integer)):
            if not 0 <= key < self.n:
                raise InputError(f"point index {key} out of range")
            return int(key)
        if key in self._index:
            return self._index[key]
        try:
            i = int(key)
        except ValueError:
            raise InputError(f"unknown point label {key!r}") from None
        return self.index(i)

    @property
    def diameter(self) -> float:
        return float(self.dist.max()) if self.n > 1 else 0.0

    # -- scales -----------------------------------------------------------

    def candidate_scales(self) -> list[float]:
        if "scales" not in self._cache:
            iu = np.triu_indices(self.n, 1)
            self._cache["scales"] = [float(v) for v in np.unique(self.dist[iu])]
        return self._cache["scales"]

    def top_scale(self) -> float:
        """Representative of the unbounded interval above the diameter."""
        return 2.0 * self.diameter if self.n > 1 else 1.0

    def canonical_scale(self, eps: float) -> float:
        """Smallest candidate >= eps; the epsilon-graph at eps equals the one at the result."""
        if not eps > 0:
            raise InputError(f"scale must be positive, got {eps!r}")
        s = self.candidate_scales()
        k = bisect_left(s, eps)
        return s[k] if k < len(s) else self.top_scale()

    def next_scale(self, v: float) -> float:
        """Representative of the interval just above v."""
        s = self.candidate_scales()
        k = bisect_right(s, v)
        return s[k] if k < len(s) else self.top_scale()

    def prev_scale(self, v: float) -> float | None:
        """Largest candidate strictly below v, or None."""
        s = self.candidate_scales()
        k = bisect_left(s, v)
        return s[k - 1] if k > 0 else None

    def ball(self, x: int, r: float) -> np.ndarray:
        """Indices of the open ball B(x, r)."""
        return np.flatnonzero(self.dist[x] < r)

    def subspace(self, idx: Sequence[int]) -> "FiniteMetricSpace":
        idx = list(idx)
        coords = None if self.coords is None else self.coords[idx]
        return FiniteMetricSpace(tuple(self.labels[i] for i in idx),
                                 self.dist[np.ix_(idx, idx)], coords)


def validate_metric(dist_matrix, tol_metric: float = 0.0, labels: Sequence[str] | None = None,
                    coords=None, provenance: dict | None = None) -> FiniteMetricSpace:
    """Check a raw matrix and wrap it as a :class:`FiniteMetricSpace`.

    Raises AsymmetricMatrix, NegativeDistance or TriangleViolation; the
    triangle check allows ``tol_metric`` of slack.
    """
    try:
        D = np.array(dist_matrix, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"distance matrix is not numeric: {exc}") from None
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise InputError(f"distance matrix must be square, got shape {D.shape}")
    if not np.all(np.isfinite(D)):
        raise InputError("distance matrix has non-finite entries")
    if tol_metric < 0:
        raise InputError("tol_metric must be nonnegative")
    n = D.shape[0]
    if n == 0:
        raise InputError("empty space")
    diff = np.abs(D - D.T)
    bad = np.argwhere(diff > tol_metric)
    if len(bad):
        i, j = (int(v) for v in bad[0])
        raise AsymmetricMatrix(i, j, float(D[i, j]), float(D[j, i]))
    D = np.triu(D, 1)
    D = D + D.T
    off = ~np.eye(n, dtype=bool)
    bad = np.argwhere(off & (D <= 0))
    if len(bad):
        i, j = (int(v) for v in bad[0])
        raise NegativeDistance(i, j, float(D[i, j]))
    worst = np.full((n, n), -np.inf)
    arg = np.zeros((n, n), dtype=int)
    for k in range(n):
        slack = D - (D[:, k, None] + D[None, k, :])
        upd = slack > worst
        worst[upd] = slack[upd]
        arg[upd] = k
    bad = np.argwhere(np.triu(worst > tol_metric, 1))
    if len(bad):
        i, j = (int(v) for v in bad[0])
        raise TriangleViolation(i, j, int(arg[i, j]), float(worst[i, j]))
    if labels is None:
        labels = [f"p{i}" for i in range(n)]
    if len(labels) != n or len(set(labels)) != n:
        raise InputError("labels must be unique and match the matrix size")
    return FiniteMetricSpace(tuple(labels), D, coords, provenance)


def candidate_scales(X: FiniteMetricSpace) -> list[float]:
    if X.n < 2:
        raise InputError("candidate scales need at least two points")
    return list(X.candidate_scales())


# -- ingestion ----------------------------------------------------------------

def read_csv(text: str, tol_metric: float = 0.0) -> FiniteMetricSpace:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise InputError("empty CSV")
    labels = [c.strip() for c in rows[0]]
    try:
        mat = [[float(c) for c in r] for r in rows[1:]]
    except ValueError as exc:
        raise InputError(f"bad CSV entry: {exc}") from None
    return validate_metric(mat, tol_metric, labels)


def write_csv(X: FiniteMetricSpace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(X.labels)
    for row in X.dist:
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def from_points(points: Sequence[tuple[str, float, float]], tol_metric: float = 0.0) -> FiniteMetricSpace:
    P = np.array([(x, y) for _, x, y in points], dtype=float)
    diff = P[:, None, :] - P[None, :, :]
    D = np.hypot(diff[..., 0], diff[..., 1])
    # distances computed here carry our own rounding, not the caller's
    tol_metric = max(tol_metric, 1e-12 * float(D.max()))
    return validate_metric(D, tol_metric, [p[0] for p in points], coords=P)


def from_arc_params(circumference: float, params: Sequence[float], labels=None,
                    tol_metric: float = 0.0) -> FiniteMetricSpace:
    t = np.asarray(params, dtype=float)
    gap = np.abs(t[:, None] - t[None, :]) % circumference
    D = np.minimum(gap, circumference - gap)
    return validate_metric(D, max(tol_metric, 1e-12 * circumference), labels)


def read_json(text: str, tol_metric: float = 0.0) -> FiniteMetricSpace:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise InputError("space JSON must be an object")
    if "points" in obj:
        metric = obj.get("metric", "euclidean")
        if metric != "euclidean":
            raise InputError(f"unsupported metric {metric!r}")
        try:
            pts = [(str(p["label"]), float(p["x"]), float(p["y"])) for p in obj["points"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad point record: {exc}") from None
        return from_points(pts, tol_metric)
    if "circle" in obj:
        try:
            C = float(obj["circle"]["circumference"])
            params = [float(v) for v in obj["params"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad arc record: {exc}") from None
        return from_arc_params(C, params, obj.get("labels"), tol_metric)
    if "kind" in obj:
        from .generators import GeneratorSpec, generate
        return generate(GeneratorSpec(obj["kind"], dict(obj.get("params", {}))))
    if "dist" in obj:
        # files written by the generator record the float slack they were built with
        tol = max(tol_metric, float(obj.get("tol_metric", 0.0)))
        return validate_metric(obj["dist"], tol, obj.get("labels"), provenance=obj.get("provenance"))
    raise InputError("unrecognized space JSON")


def load_space(path: str | Path, tol_metric: float = 0.0) -> FiniteMetricSpace:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {p}: {exc}") from None
    if p.suffix.lower() == ".json" or text.lstrip().startswith("{"):
        return read_json(text, tol_metric)
    return read_csv(text, tol_metric)


def hop_lengths(X: FiniteMetricSpace, points: Sequence[int]) -> list[float]:
    return [X.d(a, b) for a, b in zip(points, points[1:])]


def is_close_rel(a: float, b: float, rel: float) -> bool:
    return math.isclose(a, b, rel_tol=rel, abs_tol=0.0)
