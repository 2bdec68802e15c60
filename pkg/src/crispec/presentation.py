"""The epsilon-graph, its triangle complex, and spanning-tree presentations."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .filtration import Filtration
from .groups import AbelianImage, Word, cyclic_reduce, exponent_vector, free_reduce, smith_normal_form
from .metric import FiniteMetricSpace

log = logging.getLogger(__name__)


def engine(X: FiniteMetricSpace) -> Filtration:
    """The space's filtration engine, built once and shared by all queries."""
    F = X._cache.get("filtration")
    if F is None:
        iu, ju = np.triu_indices(X.n, 1)
        F = X._cache["filtration"] = Filtration(X.n, iu, ju, X.dist[iu, ju])
    return F


def _components(n: int, iu, ju) -> np.ndarray:
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in zip(iu, ju):
        ra, rb = find(int(a)), find(int(b))
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    return np.array([find(i) for i in range(n)], dtype=int)


@dataclass
class EpsilonGraph:
    X: FiniteMetricSpace
    scale: float
    edges: list[tuple[int, int]]
    components: np.ndarray      # component label = smallest member index

    @cached_property
    def adjacency(self) -> np.ndarray:
        A = self.X.dist < self.scale
        np.fill_diagonal(A, False)
        return A

    @cached_property
    def triangles(self) -> list[tuple[int, int, int]]:
        A = self.adjacency
        out = []
        for i, j in self.edges:
            for k in np.flatnonzero(A[i] & A[j]).tolist():
                if k > j:
                    out.append((i, j, k))
        return out

    def component_of(self, x: int) -> list[int]:
        return np.flatnonzero(self.components == self.components[x]).tolist()


def build_graph(X: FiniteMetricSpace, eps: float) -> EpsilonGraph:
    iu, ju = np.nonzero(np.triu(X.dist < eps, 1))
    edges = sorted(zip(iu.tolist(), ju.tolist()), key=lambda e: (X.dist[e], e))
    return EpsilonGraph(X, float(eps), edges, _components(X.n, iu, ju))


@dataclass
class Presentation:
    basepoint: int
    vertices: list[int]
    generators: list[tuple[int, int]]            # generator k+1 is edge generators[k]
    relators: list[Word]
    tree: list[tuple[int, int]] = field(default_factory=list)

    def word_of(self, points) -> Word:
        """Tree rewriting of a chain's hops."""
        index = self._index
        out = []
        for a, b in zip(points, points[1:]):
            if a == b:
                continue
            g = index.get((min(a, b), max(a, b)))
            if g:
                out.append(g if a < b else -g)
        return tuple(out)

    @cached_property
    def _index(self) -> dict[tuple[int, int], int]:
        return {e: k + 1 for k, e in enumerate(self.generators)}

    def to_json(self) -> dict:
        return {"basepoint": self.basepoint, "generators": [list(e) for e in self.generators],
                "relators": [list(r) for r in self.relators]}

    def simplify(self) -> "SimplifiedPresentation":
        """Tietze-simplify by the same union/kill/define rules as the engine."""
        verts = self.vertices
        local = {v: k for k, v in enumerate(verts)}
        edges = self.tree + self.generators
        # weights only order the edges; tree first keeps the same spanning tree
        w = [0.0] * len(self.tree) + [1.0 + k for k in range(len(self.generators))]
        F = Filtration(len(verts), [local[a] for a, _ in edges], [local[b] for _, b in edges], w)
        F.advance_all()
        # every triangle of the complex must be present; the engine found them from the
        # full adjacency, which is exactly the complex when all edges are in
        to_gen = {}
        for g in range(1, len(F.gen_edge)):
            a, b = F.gen_edge[g]
            to_gen[g] = self._index[(min(verts[a], verts[b]), max(verts[a], verts[b]))]
        live = [g for g in range(1, len(F.gen_edge)) if F.up[g] is None]
        pend = [free_reduce(to_gen[abs(x)] * (1 if x > 0 else -1) for x in F._tri_word(t))
                for t in F.pending.values()]

        def nf(k: int) -> Word:
            a, b = self.generators[k - 1]
            la, lb = local[a], local[b]
            word = F.nf_at(F.letter(la, lb))
            return tuple(to_gen[abs(x)] * (1 if x > 0 else -1) for x in word)

        return SimplifiedPresentation(self, [to_gen[g] for g in live],
                                      [cyclic_reduce(r)[1] for r in pend], nf)


@dataclass
class SimplifiedPresentation:
    source: Presentation
    generators: list[int]        # surviving generator indices of the source
    relators: list[Word]
    rewrite: object              # generator index -> word over surviving generators

    @property
    def is_free(self) -> bool:
        return not self.relators

    @property
    def rank(self) -> int | None:
        return len(self.generators) if self.is_free else None

    def word(self, w: Word) -> Word:
        out: list[int] = []
        for x in w:
            img = self.rewrite(abs(x))
            out.extend(img if x > 0 else tuple(-a for a in reversed(img)))
        return free_reduce(out)


def present_pi_eps(G: EpsilonGraph, basepoint: int) -> Presentation:
    comp = set(G.component_of(basepoint))
    if len(comp) < G.X.n:
        log.warning("presentation covers the basepoint's component only (%d of %d points)",
                    len(comp), G.X.n)
    parent = {v: v for v in comp}

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    tree, gens = [], []
    for a, b in G.edges:
        if a not in comp:
            continue
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            tree.append((a, b))
        else:
            gens.append((a, b))
    P = Presentation(basepoint, sorted(comp), gens, [], tree)
    rel = []
    for i, j, k in G.triangles:
        if i in comp:
            rel.append(P.word_of((i, j, k, i)))
    P.relators = rel
    return P


@dataclass
class H1:
    rank: int
    torsion: list[int]
    generators: list[int]
    image: AbelianImage

    def is_zero(self, word: Word) -> bool:
        index = {g: k for k, g in enumerate(self.generators)}
        return self.image.is_zero(exponent_vector(word, index, len(index)))


def h1_invariants(P: Presentation | SimplifiedPresentation, direct: bool = False) -> H1:
    """Free rank and torsion of the abelianisation.

    By default the presentation is Tietze-simplified first (same group, far
    fewer rows); ``direct=True`` runs Smith normal form on the raw relator
    matrix instead.
    """
    if isinstance(P, Presentation) and not direct:
        P = P.simplify()
    if isinstance(P, Presentation):
        gens = list(range(1, len(P.generators) + 1))
    else:
        gens = list(P.generators)
    index = {g: k for k, g in enumerate(gens)}
    rows = [exponent_vector(r, index, len(gens)) for r in P.relators]
    img = AbelianImage(rows, len(gens))
    diag = img.diag
    return H1(len(gens) - len(diag), [d for d in diag if d > 1], gens, img)


__all__ = ["EpsilonGraph", "Presentation", "SimplifiedPresentation", "H1", "build_graph",
           "present_pi_eps", "h1_invariants", "engine", "smith_normal_form"]
