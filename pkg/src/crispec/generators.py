"""Sampled versions of the example continua (circles, square, earring, combs).

Every generator builds coordinates or arc parameters from exact
arithmetic where possible so that equal continuum distances come out as
bit-identical floats; strict comparisons against candidate scales then
behave exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, MeshTooCoarse
from .metric import FiniteMetricSpace, validate_metric

KINDS = (
    "circle", "circle-with-gap", "square-boundary", "hawaiian-earring",
    "rapunzel-comb-v0", "rapunzel-comb-v1", "rapunzel-comb-v2", "rapunzel-comb-v3",
    "trapezoid",
)

DEFAULTS: dict[str, dict] = {
    "circle": {"circumference": 1.0, "n": 200},
    "circle-with-gap": {"circumference": 1.0, "gap": 0.25, "n": 200},
    "square-boundary": {"side": 1.0, "mesh": 0.01},
    "hawaiian-earring": {"circles": 2, "mesh": 1 / 24},
    "rapunzel-comb-v0": {"teeth": 6, "mesh": 0.125},
    "rapunzel-comb-v1": {"teeth": 6, "mesh": 0.0625},
    "rapunzel-comb-v2": {"teeth": 6, "mesh": 0.0625},
    "rapunzel-comb-v3": {"teeth": 6, "mesh": 0.125, "l": 0.6},
    "trapezoid": {"L": 4.0, "l1": 1.0, "l2": 0.6, "h": 1.0, "mesh": 0.1},
}


@dataclass
class GeneratorSpec:
    kind: str
    params: dict = field(default_factory=dict)

    def resolved(self) -> dict:
        if self.kind not in DEFAULTS:
            raise InputError(f"unknown generator kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        p = dict(DEFAULTS[self.kind])
        unknown = set(self.params) - set(p) - {"circumferences"}
        if unknown:
            raise InputError(f"unknown parameters for {self.kind}: {sorted(unknown)}")
        p.update(self.params)
        return p

    def to_json(self) -> dict:
        return {"kind": self.kind, "params": self.resolved()}


def _tol(D: np.ndarray) -> float:
    return 1e-9 * float(D.max())


def _positive(p: dict, *keys: str) -> None:
    for k in keys:
        v = p[k]
        if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
            raise InputError(f"parameter {k} must be a positive number, got {v!r}")


def generate(spec: GeneratorSpec) -> FiniteMetricSpace:
    p = spec.resolved()
    build = {
        "circle": _circle,
        "circle-with-gap": _circle_with_gap,
        "square-boundary": _square,
        "hawaiian-earring": _earring,
        "rapunzel-comb-v0": _comb_v0,
        "rapunzel-comb-v1": lambda q: _comb_v12(q, 1),
        "rapunzel-comb-v2": lambda q: _comb_v12(q, 2),
        "rapunzel-comb-v3": _comb_v3,
        "trapezoid": _trapezoid,
    }[spec.kind]
    X = build(p)
    X.provenance = {"kind": spec.kind, "params": p}
    return X


# -- circles ------------------------------------------------------------------

def _cyclic_steps(n: int) -> np.ndarray:
    i = np.arange(n)
    k = np.abs(i[:, None] - i[None, :])
    return np.minimum(k, n - k)


def _circle(p: dict) -> FiniteMetricSpace:
    _positive(p, "circumference", "n")
    n = int(p["n"])
    if n < 3:
        raise MeshTooCoarse("a circle sample needs at least 3 points")
    C = float(p["circumference"])
    step = C / n
    # distances from integer step counts so equal arcs are bit-identical
    table = np.array([k * step for k in range(n // 2 + 1)])
    D = table[_cyclic_steps(n)]
    labels = ["base"] + [f"p{i}" for i in range(1, n)]
    t = np.arange(n) * step
    coords = np.c_[np.cos(2 * np.pi * t / C), np.sin(2 * np.pi * t / C)] * C / (2 * np.pi)
    return validate_metric(D, _tol(D), labels, coords=coords)


def _circle_with_gap(p: dict) -> FiniteMetricSpace:
    """Closed arc of length C(1-gap) inside the geodesic circle of length C."""
    _positive(p, "circumference", "gap", "n")
    C, g, n = float(p["circumference"]), float(p["gap"]), int(p["n"])
    if not g < 0.5:
        raise InputError("gap fraction must be below 1/2 so d(a,b) is the gap length")
    if n < 3:
        raise MeshTooCoarse("need at least 3 sample points")
    arc = C * (1 - g)
    step = arc / (n - 1)
    if not step < C * g / 4:
        raise MeshTooCoarse(f"sample spacing {step} must be below a quarter of the gap {C * g}")
    i = np.arange(n)
    k = np.abs(i[:, None] - i[None, :])
    along = k * step
    D = np.minimum(along, C - along)
    # endpoints sit exactly one gap apart
    D[0, n - 1] = D[n - 1, 0] = C * g
    labels = [f"p{j}" for j in range(n)]
    labels[0], labels[n - 1] = "a", "b"
    labels[(n - 1) // 2] = "base"
    return validate_metric(D, _tol(D), labels)


def _square(p: dict) -> FiniteMetricSpace:
    _positive(p, "side", "mesh")
    s, mesh = float(p["side"]), float(p["mesh"])
    m = int(round(s / mesh))
    if m < 4 or not s / m < s / 4:
        raise MeshTooCoarse("square mesh must be below a quarter of the side")
    pts = [(u, 0) for u in range(m)] + [(m, v) for v in range(m)] \
        + [(m - u, m) for u in range(m)] + [(0, m - v) for v in range(m)]
    P = np.array(pts)
    du = np.abs(P[:, None, 0] - P[None, :, 0])
    dv = np.abs(P[:, None, 1] - P[None, :, 1])
    step = s / m
    D = np.sqrt((du * du + dv * dv).astype(float)) * step
    labels = [f"p{i}" for i in range(len(pts))]
    for name, q in (("c00", (0, 0)), ("c10", (m, 0)), ("c11", (m, m)), ("c01", (0, m))):
        labels[pts.index(q)] = name
    labels[0] = "base"
    return validate_metric(D, _tol(D), labels, coords=P * step)


def _earring(p: dict) -> FiniteMetricSpace:
    """Wedge of K circles; geodesic metric routed through the wedge point."""
    if "circumferences" in p:
        circ = [float(c) for c in p["circumferences"]]
    else:
        K = int(p["circles"])
        if K < 1:
            raise InputError("need at least one circle")
        circ = [1.0 / (i + 1) for i in range(K)]
    if any(not c > 0 for c in circ) or any(a <= b for a, b in zip(circ, circ[1:])):
        raise InputError("circumferences must be positive and strictly decreasing")
    mesh = float(p["mesh"])
    _positive({"mesh": mesh}, "mesh")
    if not mesh < min(circ) / 4:
        raise MeshTooCoarse("mesh must be below a quarter of the smallest circumference")
    owner, pos, steps, counts = [-1], [0], [], []
    for ci, c in enumerate(circ):
        m = max(4, int(math.ceil(c / mesh)))
        counts.append(m)
        steps.append(c / m)
        for j in range(1, m):
            owner.append(ci)
            pos.append(j)
    n = len(owner)
    D = np.zeros((n, n))
    to_wedge = [0.0] + [min(pos[i], counts[owner[i]] - pos[i]) * steps[owner[i]] for i in range(1, n)]
    for a in range(n):
        for b in range(a + 1, n):
            if owner[a] == owner[b]:
                ci = owner[a]
                k = abs(pos[a] - pos[b])
                val = min(k, counts[ci] - k) * steps[ci]
            else:
                val = to_wedge[a] + to_wedge[b]
            D[a, b] = D[b, a] = val
    labels = ["wedge"] + [f"c{owner[i]}_{pos[i]}" for i in range(1, n)]
    return validate_metric(D, _tol(D), labels)


# -- polyline spaces (combs, trapezoid) ----------------------------------------

class _Polyline:
    """Collects sample points along segments, deduplicating exact repeats."""

    def __init__(self, mesh: float):
        self.mesh = mesh
        self.pts: list[tuple[float, float]] = []
        self.key: dict[tuple[float, float], int] = {}
        self.names: dict[int, str] = {}

    def add(self, q, name: str | None = None) -> int:
        q = (float(q[0]), float(q[1]))
        k = (round(q[0], 12), round(q[1], 12))
        if k not in self.key:
            self.key[k] = len(self.pts)
            self.pts.append(q)
        i = self.key[k]
        if name is not None:
            self.names[i] = name
        return i

    def segment(self, a, b, breaks=()) -> None:
        """Sample the straight segment a-b with spacing at most mesh.

        ``breaks`` are parameters in (0,1) that must be sample points.
        """
        ts = sorted({0.0, 1.0, *breaks})
        for t0, t1 in zip(ts, ts[1:]):
            length = math.dist(a, b) * (t1 - t0)
            m = max(1, int(math.ceil(length / self.mesh - 1e-12)))
            for j in range(m + 1):
                t = t0 + (t1 - t0) * j / m
                if j == 0:
                    t = t0
                elif j == m:
                    t = t1
                self.add((a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t))

    def space(self, overrides=()) -> FiniteMetricSpace:
        P = np.array(self.pts)
        diff = P[:, None, :] - P[None, :, :]
        D = np.hypot(diff[..., 0], diff[..., 1])
        for i, j, v in overrides:
            D[i, j] = D[j, i] = v
        labels = [self.names.get(i, f"p{i}") for i in range(len(P))]
        return validate_metric(D, _tol(D), labels, coords=P)


def _check_mesh(mesh: float, feature: float) -> None:
    if not mesh > 0:
        raise InputError("mesh must be positive")
    if not mesh < feature / 4:
        raise MeshTooCoarse(f"mesh {mesh} must be below a quarter of the smallest feature {feature}")


def _teeth(p: dict) -> int:
    N = int(p["teeth"])
    if N < 2:
        raise InputError("teeth count must be at least 2")
    return N


def _frame(pl: _Polyline, bottom: float, top: float, heights: list[float]) -> None:
    """Vertical sides at x=0 and x=3 through every tooth height, plus the top bar."""
    span = top - bottom
    br = [(y - bottom) / span for y in heights if bottom < y < top]
    pl.segment((0.0, bottom), (0.0, top), br)
    pl.segment((3.0, bottom), (3.0, top), br)
    pl.segment((0.0, top), (3.0, top), [0.5])


def _comb_v0(p: dict) -> FiniteMetricSpace:
    N = _teeth(p)
    mesh = float(p["mesh"])
    _check_mesh(mesh, 1.0)
    pl = _Polyline(mesh)
    heights = [0.5 ** k for k in range(N + 1)] + [0.0]
    for k in range(N + 1):
        y = 0.5 ** k
        pl.add((1.0, y), f"x{k}")
        pl.add((2.0, y), f"y{k}")
        pl.segment((0.0, y), (1.0, y))
        pl.segment((2.0, y), (3.0, y))
    pl.add((1.0, 0.0), "x_inf")
    pl.add((2.0, 0.0), "y_inf")
    pl.segment((0.0, 0.0), (1.0, 0.0))
    pl.segment((2.0, 0.0), (3.0, 0.0))
    _frame(pl, 0.0, 2.0, heights)
    pl.add((1.5, 2.0), "z0")
    X = pl.space()
    _self_check_v0(X, N)
    return X


def _self_check_v0(X: FiniteMetricSpace, N: int) -> None:
    for k in range(N + 1):
        if X.d(X.index(f"x{k}"), X.index(f"y{k}")) != 1.0:
            raise AssertionError(f"gap (x{k},y{k}) is not exactly 1")
    for k in range(1, N + 1):
        got = X.d(X.index(f"x{k - 1}"), X.index(f"y{k}"))
        want = math.sqrt(1 + 4.0 ** (-k))
        if abs(got - want) > 1e-12 * want:
            raise AssertionError(f"diagonal d_{k} = {got}, expected {want}")


def _comb_v12(p: dict, variant: int) -> FiniteMetricSpace:
    """Gaps 1 - 2^-n growing toward a limiting gap of length 1 at height H."""
    N = _teeth(p)
    mesh = float(p["mesh"])
    _check_mesh(mesh, 0.5)
    if variant == 1:
        h = [2.0 ** (-i / 2) for i in range(1, N + 1)]
        H = 1 + math.sqrt(2)
    else:
        h = [math.sqrt(3) / math.sqrt(2) ** i for i in range(1, N + 1)]
        H = math.sqrt(3) + math.sqrt(6)
    pl = _Polyline(mesh)
    heights = []
    for n in range(1, N + 1):
        y = math.fsum(h[: n - 1])
        heights.append(y)
        xl, xr = 1 + 0.5 ** (n + 1), 2 - 0.5 ** (n + 1)
        pl.add((xl, y), f"x{n}")
        pl.add((xr, y), f"y{n}")
        pl.segment((0.0, y), (xl, y))
        pl.segment((xr, y), (3.0, y))
    heights.append(H)
    pl.add((1.0, H), "x_inf")
    pl.add((2.0, H), "y_inf")
    pl.segment((0.0, H), (1.0, H))
    pl.segment((2.0, H), (3.0, H))
    _frame(pl, 0.0, H + 2, heights)
    pl.add((1.5, H + 2), "z0")
    return pl.space()


def _comb_v3(p: dict) -> FiniteMetricSpace:
    """Gaps 1 + 2^-n shrinking toward a limiting gap of length 1 at height 0,
    with one extra tooth pair a, b of gap l below it.

    The limit gap sits at the bottom, teeth x_n, y_n at heights
    sum_{i>=n} 2^{-i/2} above it, and a, b at depth -h with h chosen so that
    d(x_inf, b) = d(y_inf, a) = 1.
    """
    N = _teeth(p)
    mesh = float(p["mesh"])
    l = float(p["l"])
    if not 0 < l < 1:
        raise InputError("extra gap l must lie in (0, 1)")
    _check_mesh(mesh, l)
    hdepth = math.sqrt(1 - ((1 + l) / 2) ** 2)
    ratio = 1 / (1 - 1 / math.sqrt(2))
    pl = _Polyline(mesh)
    heights = [0.0, -hdepth]
    for n in range(1, N + 1):
        y = 2.0 ** (-n / 2) * ratio
        heights.append(y)
        xl, xr = 1 - 0.5 ** (n + 1), 2 + 0.5 ** (n + 1)
        pl.add((xl, y), f"x{n}")
        pl.add((xr, y), f"y{n}")
        pl.segment((0.0, y), (xl, y))
        pl.segment((xr, y), (3.0, y))
    pl.add((1.0, 0.0), "x_inf")
    pl.add((2.0, 0.0), "y_inf")
    pl.segment((0.0, 0.0), (1.0, 0.0))
    pl.segment((2.0, 0.0), (3.0, 0.0))
    ax, bx = 1.5 - l / 2, 1.5 + l / 2
    pl.add((ax, -hdepth), "a")
    pl.add((bx, -hdepth), "b")
    pl.segment((0.0, -hdepth), (ax, -hdepth))
    pl.segment((bx, -hdepth), (3.0, -hdepth))
    top = heights[2] + 2
    _frame(pl, -hdepth, top, heights)
    pl.add((1.5, top), "z0")
    idx = pl.key
    xi, yi = idx[(1.0, 0.0)], idx[(2.0, 0.0)]
    ai, bi = idx[(round(ax, 12), round(-hdepth, 12))], idx[(round(bx, 12), round(-hdepth, 12))]
    # these two distances are exactly 1 in the continuum; pin them
    return pl.space(overrides=[(xi, bi, 1.0), (yi, ai, 1.0)])


def _trapezoid(p: dict) -> FiniteMetricSpace:
    """Two facing brackets: the essential-gap example with corners x, y, u, v."""
    _positive(p, "L", "l1", "l2", "h", "mesh")
    L, l1, l2, h, mesh = (float(p[k]) for k in ("L", "l1", "l2", "h", "mesh"))
    if not (L > 3 * l1 and l2 <= l1 and h * h + (l1 + l2) ** 2 / 4 > l1 * l1):
        raise InputError("trapezoid parameters violate L > 3 l1, l2 <= l1, h^2 + (l1+l2)^2/4 > l1^2")
    _check_mesh(mesh, l2)
    pl = _Polyline(mesh)
    x, y = ((L - l1) / 2, h), ((L + l1) / 2, h)
    u, v = ((L - l2) / 2, 0.0), ((L + l2) / 2, 0.0)
    for q, name in ((x, "x"), (y, "y"), (u, "u"), (v, "v")):
        pl.add(q, name)
    pl.segment((0.0, h), x)
    pl.segment((0.0, 0.0), (0.0, h))
    pl.segment((0.0, 0.0), u)
    pl.segment(y, (L, h))
    pl.segment((L, 0.0), (L, h))
    pl.segment(v, (L, 0.0))
    return pl.space()


def comb_gamma(X: FiniteMetricSpace, n: int) -> list[int]:
    """The loop {x_n, x_{n+1}, y_{n+1}, y_n, x_n} on a v0 comb."""
    ix = X.index
    return [ix(f"x{n}"), ix(f"x{n + 1}"), ix(f"y{n + 1}"), ix(f"y{n}"), ix(f"x{n}")]
