"""The eps-intrinsic metric D_eps (shortest eps-chain length) and its sweep over scales."""

from __future__ import annotations

import heapq
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .metric import FiniteMetricSpace

INF = math.inf


@dataclass
class IntrinsicMetricResult:
    scale: float
    dmat: np.ndarray            # inf between different eps-components
    hops: np.ndarray            # hop count of the chosen shortest chain, -1 if none
    lipschitz_M: float          # int-valued, or inf when disconnected

    @property
    def connected(self) -> bool:
        return bool(np.all(np.isfinite(self.dmat)))

    def to_json(self, fmt=float) -> dict:
        rows = [[fmt(v) if math.isfinite(v) else "inf" for v in row] for row in self.dmat]
        M = self.lipschitz_M
        return {"scale": fmt(self.scale), "lipschitz_M": int(M) if math.isfinite(M) else "inf",
                "dmat": rows}


_TIE = 1e-12


def shortest_chains_from(X: FiniteMetricSpace, eps: float, src: int) -> tuple[np.ndarray, np.ndarray]:
    """Dijkstra over the eps-graph ordered by (length, hop count), lengths compared up to rounding."""
    D = X.dist
    n = X.n
    best = [(INF, 0)] * n
    best[src] = (0.0, 0)
    done = [False] * n
    heap = [(0.0, 0, src)]
    nbrs = [np.flatnonzero(D[i] < eps) for i in range(n)] if n <= 64 else None
    while heap:
        length, h, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        row = D[u]
        cand = nbrs[u] if nbrs is not None else np.flatnonzero(row < eps)
        for v in cand.tolist():
            if done[v] or v == u:
                continue
            new = length + float(row[v])
            old, oh = best[v]
            # lengths equal up to rounding are ties, so the hop count decides
            if abs(new - old) <= _TIE * max(new, 1e-300):
                if h + 1 >= oh:
                    continue
                new = min(new, old)
            elif new > old:
                continue
            best[v] = (new, h + 1)
            heapq.heappush(heap, (new, h + 1, v))
    dist = np.array([b[0] for b in best])
    hops = np.array([b[1] if math.isfinite(b[0]) else -1 for b in best], dtype=int)
    return dist, hops


def _lipschitz(hops: np.ndarray, dmat: np.ndarray) -> float:
    if not np.all(np.isfinite(dmat)):
        return INF
    return float(max(1, int(hops.max()))) if hops.size else 1.0


def intrinsic_metric(X: FiniteMetricSpace, eps: float, threads: int = 1) -> IntrinsicMetricResult:
    n = X.n
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            rows = list(ex.map(lambda s: shortest_chains_from(X, eps, s), range(n)))
    else:
        rows = [shortest_chains_from(X, eps, s) for s in range(n)]
    dmat = np.vstack([r[0] for r in rows])
    hops = np.vstack([r[1] for r in rows])
    # symmetrize float noise from different summation orders
    dmat = np.minimum(dmat, dmat.T)
    return IntrinsicMetricResult(float(eps), dmat, hops, _lipschitz(hops, dmat))


@dataclass
class SweepResult:
    scales: list[float]                      # descending
    results: dict[float, np.ndarray] = field(default_factory=dict)
    summary: list[dict] = field(default_factory=list)
    monotone: bool = True
    d0_scale: float | None = None
    d0: np.ndarray | None = None
    divergent: bool = False


def intrinsic_metric_sweep(X: FiniteMetricSpace, floor: float | None = None,
                           keep_limit: int = 50_000_000) -> SweepResult:
    """D_eps at every candidate scale, built incrementally as edges appear.

    Adding an edge (u,v) of weight w can only shorten paths through it, so
    D <- min(D, D[:,u] + w + D[v,:], D[:,v] + w + D[u,:]) keeps all-pairs
    distances exact, and an edge no shorter than the current D[u,v] changes
    nothing.  Full matrices are kept while their total size stays under
    ``keep_limit`` entries; otherwise only per-scale summaries.  Hop counts
    (and so M) are left to :func:`intrinsic_metric` at individual scales.
    """
    n = X.n
    Dm = np.full((n, n), INF)
    np.fill_diagonal(Dm, 0.0)
    iu, ju = np.triu_indices(n, 1)
    w = X.dist[iu, ju]
    order = np.lexsort((ju, iu, w))
    iu, ju, w = iu[order], ju[order], w[order]
    scales = X.candidate_scales() + [X.top_scale()]
    keep = n * n * len(scales) <= keep_limit
    snaps = []
    k, m = 0, len(w)
    for s in scales:
        while k < m and w[k] < s:
            u, v, wt = int(iu[k]), int(ju[k]), float(w[k])
            k += 1
            if Dm[u, v] <= wt:
                continue
            via = np.minimum(Dm[:, u, None] + wt + Dm[None, v, :],
                             Dm[:, v, None] + wt + Dm[None, u, :])
            np.minimum(Dm, via, out=Dm)
        snaps.append((s, Dm.copy() if keep else None, _summary(X, s, Dm)))
    out = SweepResult(scales=[s for s in reversed(scales) if floor is None or s >= floor])
    prev = None
    for s, dm, summ in reversed(snaps):
        if floor is not None and s < floor:
            continue
        out.summary.append(summ)
        if dm is not None:
            out.results[s] = dm
            if prev is not None:
                shrink = (dm < prev) & ~np.isclose(dm, prev, rtol=1e-12, atol=0.0)
                if np.any(shrink):
                    out.monotone = False
            prev = dm
        if summ["connected"]:
            out.d0_scale = s
    if out.d0_scale is None:
        out.divergent = True
    elif out.d0_scale in out.results:
        out.d0 = out.results[out.d0_scale]
    else:
        out.d0 = intrinsic_metric(X, out.d0_scale).dmat
    return out


def _summary(X: FiniteMetricSpace, s: float, Dm: np.ndarray) -> dict:
    fin = np.isfinite(Dm)
    off = ~np.eye(X.n, dtype=bool)
    ratio = float(np.max(np.where(fin & off, Dm / np.where(off, X.dist, 1.0), 1.0))) if X.n > 1 else 1.0
    connected = bool(fin.all())
    return {"scale": s, "connected": connected, "components": _component_count(fin),
            "max_ratio": ratio}


def _component_count(fin: np.ndarray) -> int:
    seen = np.zeros(len(fin), dtype=bool)
    count = 0
    for i in range(len(fin)):
        if not seen[i]:
            count += 1
            seen |= fin[i]
    return count


def midpoint_check(D0: np.ndarray, pairs, tol: float) -> list[tuple[int, int]]:
    """Pairs (x,y) lacking an approximate D_0-midpoint; empty means the check passed."""
    failures = []
    for x, y in pairs:
        dxy = D0[x, y]
        ok = (np.abs(D0[x] - D0[y]) <= tol) & (D0[x] <= dxy / 2 + tol)
        if not ok.any():
            failures.append((x, y))
    return failures
