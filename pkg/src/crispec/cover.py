"""Finite balls of the epsilon-cover: chain classes from a basepoint.

A cover vertex is a point together with the class of a chain reaching it
from the basepoint.  The class is stored as the reduced word of
chain + tree path back to the basepoint, so stepping along a hop p -> q
just appends that hop's generator and reduces.
"""

from __future__ import annotations

import logging
import random
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetExhausted, InputError, LeftBall
from .filtration import Filtration
from .groups import Word, free_reduce
from .metric import FiniteMetricSpace
from .presentation import engine

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CoverVertex:
    base: int
    class_id: Word


@dataclass(frozen=True)
class DeckElement:
    loop_class: Word

    def inverse(self) -> "DeckElement":
        return DeckElement(tuple(-x for x in reversed(self.loop_class)))


@dataclass
class CoverBall:
    X: FiniteMetricSpace
    scale: float
    basepoint: int
    vertices: list[CoverVertex]
    edges: list[tuple[int, int, float]]
    radius: int
    complete: bool
    exact: bool = True                       # False when classes were compared modulo unknown relators
    index: dict[CoverVertex, int] = field(default_factory=dict, repr=False)
    depth: list[int] = field(default_factory=list, repr=False)

    def __post_init__(self):
        if not self.index:
            self.index = {v: k for k, v in enumerate(self.vertices)}

    def __len__(self) -> int:
        return len(self.vertices)

    def projection(self, v: CoverVertex | int) -> int:
        return (self.vertices[v] if isinstance(v, int) else v).base

    def vertex_id(self, v: CoverVertex) -> int | None:
        return self.index.get(v)

    @property
    def root(self) -> CoverVertex:
        return self.vertices[0]

    def fiber(self, p: int) -> list[int]:
        return [k for k, v in enumerate(self.vertices) if v.base == p]

    def fibers(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for k, v in enumerate(self.vertices):
            out.setdefault(v.base, []).append(k)
        return out

    def step(self, v: CoverVertex, q: int) -> CoverVertex:
        """The neighbour of v lying over q (q must be within scale of v's base)."""
        return CoverVertex(q, _step_word(self.X, self.scale, v.class_id, v.base, q))

    def neighbors(self, k: int) -> list[int]:
        return self._adj[k]

    @property
    def _adj(self) -> list[list[int]]:
        adj = getattr(self, "_adj_cache", None)
        if adj is None:
            adj = [[] for _ in self.vertices]
            for a, b, _ in self.edges:
                adj[a].append(b)
                adj[b].append(a)
            self._adj_cache = adj
        return adj

    def interior(self) -> list[int]:
        """Vertices whose every base neighbour has its lift inside the ball."""
        A = self.X.dist < self.scale
        out = []
        for k, v in enumerate(self.vertices):
            nb = np.flatnonzero(A[v.base]).tolist()
            if len(self._adj[k]) == len(nb) - 1:       # the base point itself is in nb
                out.append(k)
        return out

    def to_json(self) -> dict:
        lab = self.X.labels
        return {
            "scale": self.scale, "basepoint": lab[self.basepoint], "complete": self.complete,
            "exact": self.exact, "radius": self.radius,
            "vertices": [{"id": k, "base": v.base, "label": lab[v.base], "class": list(v.class_id)}
                         for k, v in enumerate(self.vertices)],
            "edges": [[a, b, w] for a, b, w in self.edges],
            "fibers": {lab[p]: ids for p, ids in sorted(self.fibers().items())},
        }


def _step_word(X: FiniteMetricSpace, eps: float, w: Word, p: int, q: int) -> Word:
    if not X.dist[p, q] < eps:
        raise InputError(f"hop {p}->{q} has length {X.dist[p, q]!r}, not below {eps!r}")
    F = engine(X)
    tau = F.time_at(eps)
    x = F.letter(p, q)
    if not x:
        return w
    return free_reduce(w + F.nf_at(x, tau))


def build_cover_ball(X: FiniteMetricSpace, eps: float, basepoint, max_vertices: int | None = None,
                     strict: bool = False) -> CoverBall:
    """Breadth-first lift of the eps-graph from the basepoint.

    Stops after ``max_vertices`` (default 10 n) vertices; the result then has
    complete=False.  With ``strict=True`` that raises BudgetExhausted
    carrying the partial ball as ``.ball``.
    """
    eps = X.canonical_scale(eps)
    base = X.index(basepoint)
    cap = 10 * X.n if max_vertices is None else int(max_vertices)
    if cap < 1:
        raise InputError("max_vertices must be positive")
    F = engine(X)
    exact = F.free_at(eps)
    A = X.dist < eps
    np.fill_diagonal(A, False)
    nbrs = [np.flatnonzero(A[p]).tolist() for p in range(X.n)]
    root = CoverVertex(base, ())
    verts, index, depth = [root], {root: 0}, [0]
    edges: set[tuple[int, int]] = set()
    queue = deque([0])
    complete = True
    while queue:
        k = queue.popleft()
        v = verts[k]
        for q in nbrs[v.base]:
            u = CoverVertex(q, _step_word(X, eps, v.class_id, v.base, q))
            j = index.get(u)
            if j is None:
                if len(verts) >= cap:
                    complete = False
                    continue
                j = index[u] = len(verts)
                verts.append(u)
                depth.append(depth[k] + 1)
                queue.append(j)
            edges.add((min(j, k), max(j, k)))
    ball = CoverBall(X, eps, base, verts, [(a, b, X.d(verts[a].base, verts[b].base)) for a, b in sorted(edges)],
                     max(depth), complete and exact, exact, index, depth)
    if not complete:
        log.info("cover ball stopped at %d vertices", len(verts))
        if strict:
            err = BudgetExhausted(f"cover ball exceeded {cap} vertices")
            err.ball = ball
            raise err
    return ball


def lift_chain(ball: CoverBall, chain) -> list[CoverVertex]:
    pts = [int(p) for p in getattr(chain, "points", chain)]
    if not pts or pts[0] != ball.basepoint:
        raise InputError("chain must start at the ball's basepoint")
    cur = ball.root
    out = [cur]
    for i, q in enumerate(pts[1:], start=1):
        cur = ball.step(cur, q)
        if cur not in ball.index:
            raise LeftBall(i)
        out.append(cur)
    return out


def deck_element(ball: CoverBall, loop) -> DeckElement:
    """Deck transformation of a loop at the basepoint."""
    pts = [int(p) for p in getattr(loop, "points", loop)]
    if not pts or pts[0] != ball.basepoint or pts[-1] != ball.basepoint:
        raise InputError("deck elements come from loops at the basepoint")
    w: Word = ()
    for a, b in zip(pts, pts[1:]):
        w = _step_word(ball.X, ball.scale, w, a, b)
    return DeckElement(w)


def deck_translate(ball: CoverBall, g: DeckElement, v: CoverVertex) -> CoverVertex:
    """Pre-concatenate the loop class of g to v's chain class."""
    u = CoverVertex(v.base, free_reduce(g.loop_class + v.class_id))
    if u not in ball.index:
        raise LeftBall(-1)
    return u


# -- simple connectivity probe ---------------------------------------------------------------

@dataclass
class ProbeResult:
    passed: bool
    samples: int
    witness: list[int] | None = None       # vertex ids of an essential loop in the ball

    def __bool__(self) -> bool:
        return self.passed

    def to_json(self) -> dict:
        return {"passed": self.passed, "samples": self.samples, "witness": self.witness}


def _ball_filtration(ball: CoverBall) -> Filtration:
    iu = [a for a, _, _ in ball.edges]
    ju = [b for _, b, _ in ball.edges]
    w = [c for _, _, c in ball.edges]
    F = Filtration(len(ball.vertices), iu, ju, w)
    F.advance_all()
    return F


def simply_connected_probe(ball: CoverBall, sample_count: int = 50, seed: int = 0) -> ProbeResult:
    """Test loops of the ball for nullity in the ball's own clique complex.

    Random loops through interior vertices are tried first, then the
    fundamental loop of every generator that survives in the ball's
    complex and stays in the interior.  Any essential one fails the probe.
    """
    if not ball.edges:
        return ProbeResult(True, 0)
    F = _ball_filtration(ball)
    inner = set(ball.interior())
    rng = random.Random(seed)
    loops = []
    starts = sorted(inner) or [0]
    for _ in range(sample_count):
        s = rng.choice(starts)
        walk = [s]
        for _ in range(rng.randint(2, 3 * max(ball.radius, 2))):
            nb = [u for u in ball.neighbors(walk[-1]) if u in inner] or ball.neighbors(walk[-1])
            walk.append(rng.choice(nb))
        loops.append(walk + F.tree_path(walk[-1], s)[1:])
    for g in range(1, len(F.gen_edge)):
        if F.up[g] is None:
            a, b = F.gen_edge[g]
            loop = F.tree_path(0, a) + F.tree_path(b, 0)
            if all(v in inner for v in loop):
                loops.append(loop)
    for loop in loops:
        if F.nf_word(F.loop_letters(loop)):
            return ProbeResult(False, len(loops), loop)
    return ProbeResult(True, len(loops))


__all__ = ["CoverVertex", "CoverBall", "DeckElement", "ProbeResult", "build_cover_ball", "lift_chain",
           "deck_element", "deck_translate", "simply_connected_probe"]
