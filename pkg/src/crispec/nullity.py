"""Nullity of loops, refinability of hops, and induced maps between scales.

Every positive answer (Null, Refinable) carries a move list that
:func:`crispec.chains.verify_homotopy` accepts.  Negative answers carry the
algebraic facts they rest on: the reduced word of the loop in the free
group the engine maintains, or an abelian invariant when extra relators
keep the group from being known free.
"""

from __future__ import annotations

import heapq
import threading
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .chains import BasicMove, HomotopyTrace, invert_moves, make_chain
from .errors import BudgetExhausted, InputError
from .filtration import Filtration
from .groups import AbelianImage, FoldedGraph, Word, exponent_vector
from .metric import FiniteMetricSpace
from .presentation import engine
from .tracer import DEFAULT_MOVE_BUDGET, ScaleProofs, greedy_shorten, null_trace


@dataclass(frozen=True)
class Budgets:
    moves: int = DEFAULT_MOVE_BUDGET      # basic moves in one reconstructed homotopy
    bfs_states: int = 200_000             # chains visited by the bounded search
    bfs_slack: int = 2                    # extra length allowed over the input chain


@dataclass
class NullityVerdict:
    status: str                 # "null" | "nonnull" | "unknown"
    scale: float
    loop: list[int]
    tier: int = 0
    trace: HomotopyTrace | None = None
    certificate: dict | None = None
    reason: str = ""

    def to_json(self) -> dict:
        out = {"status": self.status, "scale": self.scale, "loop": list(self.loop), "tier": self.tier}
        if self.trace is not None:
            out["trace"] = self.trace.to_json()
        if self.certificate is not None:
            out["certificate"] = self.certificate
        if self.reason:
            out["reason"] = self.reason
        return out


@dataclass
class RefineVerdict:
    status: str                 # "refinable" | "not-refinable" | "unknown"
    pair: tuple[int, int]
    hi: float
    lo: float
    trace: HomotopyTrace | None = None
    certificate: dict | None = None
    reason: str = ""

    def to_json(self) -> dict:
        out = {"status": self.status, "pair": list(self.pair), "hi": self.hi, "lo": self.lo}
        if self.trace is not None:
            out["trace"] = self.trace.to_json()
        if self.certificate is not None:
            out["certificate"] = self.certificate
        if self.reason:
            out["reason"] = self.reason
        return out


# -- helpers ------------------------------------------------------------------------------

_PROOFS_LOCK = threading.Lock()


def _proofs(X: FiniteMetricSpace, F: Filtration, eps: float, tau: int) -> ScaleProofs:
    with _PROOFS_LOCK:
        cache = X._cache.setdefault("proofs", {})
        P = cache.get(eps)
        if P is None:
            if len(cache) > 8:
                cache.clear()
            P = cache[eps] = ScaleProofs(F, X.dist, eps, tau)
        return P


def loop_trace(X: FiniteMetricSpace, points, eps: float, budgets: Budgets = Budgets()) -> HomotopyTrace | None:
    """Trace from a loop to the constant loop at (canonical) scale eps, or None if essential."""
    F = engine(X)
    tau = F.time_at(eps)
    P = _proofs(X, F, eps, tau)
    with P.lock:
        moves = null_trace(F, list(points), tau, X.dist, eps, budgets.moves, P)
    if moves is None:
        return None
    return HomotopyTrace(eps, list(points), moves)


def _generators_json(F: Filtration, word) -> dict:
    return {str(abs(x)): list(F.gen_edge[abs(x)]) for x in word}


def _exponents(word) -> dict[int, int]:
    e: dict[int, int] = {}
    for x in word:
        e[abs(x)] = e.get(abs(x), 0) + (1 if x > 0 else -1)
    return {g: v for g, v in e.items() if v}


def _h1_image(F: Filtration, eps: float, base: int, word: Word) -> tuple[bool, dict]:
    """Is the abelianised word zero modulo the pending relators at eps?"""
    tau = F.time_at(eps)
    comp = F.components_at(eps)
    c = comp[base]
    k = F.batch_index_at(eps)
    roots = [g for g in F.live_roots_at(tau, upto_batch=k) if comp[F.gen_edge[g][0]] == c]
    index = {g: i for i, g in enumerate(roots)}
    rows = []
    for i, j, kk in F.pending_at(eps):
        if comp[i] == c:
            rows.append(exponent_vector(F.nf_word(F.loop_letters([i, j, kk, i]), tau), index, len(roots)))
    vec = exponent_vector(word, index, len(roots))
    img = AbelianImage(rows, len(roots))
    return img.is_zero(vec), {"relators": rows, "generators": roots, "vector": vec,
                              "invariant_factors": img.diag}


def bounded_search(X: FiniteMetricSpace, eps: float, start, goal, max_len: int,
                   max_states: int) -> list[BasicMove] | None:
    """Breadth-first search over chains (length <= max_len) for one satisfying ``goal``.

    Returns the moves, None when the reachable set was exhausted without a
    hit, and raises BudgetExhausted when ``max_states`` ran out first.
    """
    near = X.dist < eps
    s0 = tuple(start)
    if goal(s0):
        return []
    prev: dict[tuple, tuple] = {s0: None}
    queue = deque([s0])
    while queue:
        c = queue.popleft()
        L = len(c)
        nxt = []
        for p in range(1, L - 1):
            if near[c[p - 1], c[p + 1]]:
                nxt.append((c[:p] + c[p + 1:], BasicMove("remove", p)))
        if L < max_len:
            for p in range(1, L):
                for q in np.flatnonzero(near[c[p - 1]] & near[c[p]]).tolist():
                    nxt.append((c[:p] + (q,) + c[p:], BasicMove("insert", p, q)))
        for s, m in nxt:
            if s in prev:
                continue
            prev[s] = (c, m)
            if goal(s):
                moves = []
                while prev[s] is not None:
                    s, mv = prev[s]
                    moves.append(mv)
                return moves[::-1]
            if len(prev) >= max_states:
                raise BudgetExhausted(f"bounded search visited {max_states} chains")
            queue.append(s)
    return None


# -- decide_null -----------------------------------------------------------------------------

def decide_null(X: FiniteMetricSpace, eps: float, loop, budgets: Budgets = Budgets()) -> NullityVerdict:
    e = X.canonical_scale(eps)
    pts = list(make_chain(X, loop, e).points)
    if pts[0] != pts[-1]:
        raise InputError("decide_null needs a loop (first point == last point)")
    if len(pts) <= 2:
        return NullityVerdict("null", e, pts, 2, HomotopyTrace(e, pts, []))
    F = engine(X)
    tau = F.time_at(e)
    free = F.free_at(e)
    word = F.nf_word(F.loop_letters(pts), tau)
    # tier 1: abelian image
    if free:
        expo = _exponents(word)
        if expo:
            return NullityVerdict("nonnull", e, pts, 1, certificate={
                "kind": "h1-nonzero", "word": list(word), "exponents": {str(g): v for g, v in expo.items()},
                "generators": _generators_json(F, word)})
    else:
        zero, data = _h1_image(F, e, pts[0], word)
        if not zero:
            return NullityVerdict("nonnull", e, pts, 1, certificate={"kind": "h1-nonzero", **data})
    # tier 2: normal form in the simplified (free) presentation
    if not word:
        try:
            tr = loop_trace(X, pts, e, budgets)
        except BudgetExhausted as exc:
            return NullityVerdict("unknown", e, pts, 2, reason=str(exc))
        return NullityVerdict("null", e, pts, 2, tr)
    if free:
        return NullityVerdict("nonnull", e, pts, 2, certificate={
            "kind": "free-reduced-nontrivial", "word": list(word), "generators": _generators_json(F, word)})
    # tier 3: bounded search for a contraction; never concludes NonNull
    C, pre = greedy_shorten(pts, X.dist, e)
    try:
        found = bounded_search(X, e, C, lambda s: len(s) <= 2, len(C) + budgets.bfs_slack,
                               budgets.bfs_states)
    except BudgetExhausted as exc:
        return NullityVerdict("unknown", e, pts, 3, reason=str(exc))
    if found is None:
        return NullityVerdict("unknown", e, pts, 3, reason="no contraction within the search bounds")
    return NullityVerdict("null", e, pts, 3, HomotopyTrace(e, pts, pre + found))


# -- refinement -----------------------------------------------------------------------------------

def lo_path(X: FiniteMetricSpace, lo: float, x: int, y: int, within=None) -> list[int] | None:
    """Fewest-hop, then shortest, chain from x to y with hops < lo (optionally inside a point set)."""
    near = X.dist < lo
    np.fill_diagonal(near, False)
    allowed = np.ones(X.n, dtype=bool) if within is None else np.isin(np.arange(X.n), within)
    if not (allowed[x] and allowed[y]):
        return None
    best = {x: (0, 0.0)}
    prev = {x: None}
    heap = [(0, 0.0, x)]
    while heap:
        h, L, u = heapq.heappop(heap)
        if (h, L) != best[u]:
            continue
        if u == y:
            break
        for v in np.flatnonzero(near[u] & allowed).tolist():
            key = (h + 1, L + float(X.dist[u, v]))
            if v not in best or key < best[v]:
                best[v] = key
                prev[v] = u
                heapq.heappush(heap, (key[0], key[1], v))
    if y not in prev:
        return None
    path = [y]
    while prev[path[-1]] is not None:
        path.append(prev[path[-1]])
    return path[::-1]


def fan_moves(X: FiniteMetricSpace, hi: float, p: list[int]) -> list[BasicMove] | None:
    """Moves turning [p0, pk] into p at scale hi by inserting p's points from both ends."""
    near = X.dist < hi
    k = len(p) - 1
    start = (0, k)
    prev = {start: None}
    queue = deque([start])
    goal = None
    while queue:
        j, m = queue.popleft()
        if j + 1 == m:
            goal = (j, m)
            break
        for nj, nm, q in ((j + 1, m, p[j + 1]), (j, m - 1, p[m - 1])):
            if (nj, nm) in prev:
                continue
            if near[p[j], q] and near[q, p[m]]:
                prev[(nj, nm)] = (j, m, q)
                queue.append((nj, nm))
    if goal is None:
        return None
    moves = []
    s = goal
    while prev[s] is not None:
        j, m, q = prev[s]
        moves.append(BasicMove("insert", j + 1, q))
        s = (j, m)
    return moves[::-1]


def _path_to_trace(x: int, y: int, p: list[int], loop_moves: list[BasicMove], hi: float) -> HomotopyTrace:
    """[x, y] -> p, given moves contracting the loop [y, x] + p[1:] at scale hi."""
    sigma = [y, x] + p[1:]
    grow = invert_moves(sigma, loop_moves)      # [y, y] -> sigma
    moves = [BasicMove("insert", 1, y)]
    moves += [BasicMove(m.kind, m.pos + 1, m.point) for m in grow]
    moves += [BasicMove("remove", 1), BasicMove("remove", 1)]
    return HomotopyTrace(hi, [x, y], moves)


def _lollipop(F: Filtration, base: int, g: int, sign: int) -> list[int]:
    a, b = F.gen_edge[g]
    if sign < 0:
        a, b = b, a
    return F.tree_path(base, a) + F.tree_path(b, base)


def refine_check(X: FiniteMetricSpace, eps_hi: float, eps_lo: float, pair,
                 budgets: Budgets = Budgets()) -> RefineVerdict:
    hi, lo = X.canonical_scale(eps_hi), X.canonical_scale(eps_lo)
    x, y = (X.index(p) for p in pair)
    if not X.dist[x, y] < hi:
        raise InputError(f"d({x},{y}) = {X.dist[x, y]!r} is not below the upper scale {hi!r}")
    if X.dist[x, y] < lo or lo >= hi:
        return RefineVerdict("refinable", (x, y), hi, lo, HomotopyTrace(hi, [x, y], []))
    F = engine(X)
    comp = F.components_at(lo)
    if comp[x] != comp[y]:
        return RefineVerdict("not-refinable", (x, y), hi, lo, certificate={
            "kind": "lo-disconnected", "components": {"x": comp[x], "y": comp[y]}})
    # cheap geometric fans first
    cands = [lo_path(X, lo, x, y, X.ball(x, hi)), lo_path(X, lo, x, y, X.ball(y, hi)),
             lo_path(X, lo, x, y)]
    seen = set()
    for p in cands:
        if p is None or tuple(p) in seen:
            continue
        seen.add(tuple(p))
        mv = fan_moves(X, hi, p)
        if mv is not None:
            return RefineVerdict("refinable", (x, y), hi, lo, HomotopyTrace(hi, [x, y], mv))
    # algebraic: is the hop's class in the image of the lower group?
    tau_hi, tau_lo = F.time_at(hi), F.time_at(lo)
    k_lo = F.batch_index_at(lo)
    p0 = cands[2]
    w0 = F.nf_word(F.loop_letters(p0 + [x]), tau_hi)       # class of p0 . [y, x]
    roots = [g for g in F.live_roots_at(tau_lo, upto_batch=k_lo) if comp[F.gen_edge[g][0]] == comp[x]]
    images = {g: F.nf_word((g,), tau_hi) for g in roots}
    hi_free = F.free_at(hi) and F.free_at(lo)
    lam = _express(w0, images)
    if lam is not None:
        # p = lambda^-1 . p0 where lambda is a product of lower lollipops at x
        loop = [x]
        for g, s in reversed(lam):
            loop += _lollipop(F, x, g, -s)[1:]
        p = loop + p0[1:]
        try:
            sigma = [y, x] + p[1:]
            tr = loop_trace(X, sigma, hi, budgets)
        except BudgetExhausted as exc:
            return RefineVerdict("unknown", (x, y), hi, lo, reason=str(exc))
        if tr is not None:
            return RefineVerdict("refinable", (x, y), hi, lo, _path_to_trace(x, y, p, tr.moves, hi))
    if hi_free:
        fg = FoldedGraph(images.values())
        if not fg.contains(w0):
            return RefineVerdict("not-refinable", (x, y), hi, lo, certificate={
                "kind": "not-in-image", "word": list(w0),
                "images": {str(g): list(w) for g, w in images.items()},
                "path": p0})
    # bounded search for a lower chain
    try:
        found = bounded_search(X, hi, [x, y], lambda s: all(X.dist[a, b] < lo for a, b in zip(s, s[1:])),
                               len(p0) + budgets.bfs_slack, budgets.bfs_states)
    except BudgetExhausted as exc:
        return RefineVerdict("unknown", (x, y), hi, lo, reason=str(exc))
    if found is not None:
        return RefineVerdict("refinable", (x, y), hi, lo, HomotopyTrace(hi, [x, y], found))
    return RefineVerdict("unknown", (x, y), hi, lo, reason="no lower chain within the search bounds")


def _express(w: Word, images: dict[int, Word]) -> list[tuple[int, int]] | None:
    """Write w as a product of single-letter images, when the images allow it."""
    by_letter: dict[int, tuple[int, int]] = {}
    for g, img in images.items():
        if len(img) == 1:
            a = img[0]
            by_letter.setdefault(abs(a), (g, 1 if a > 0 else -1))
    out = []
    for a in w:
        hit = by_letter.get(abs(a))
        if hit is None:
            return None
        g, s = hit
        out.append((g, s * (1 if a > 0 else -1)))
    return out


# -- induced maps -------------------------------------------------------------------------------

@dataclass
class MapReport:
    lo: float
    hi: float
    injective: bool | None
    surjective: bool | None
    kernel_witnesses: list[dict] = field(default_factory=list)
    unrefinable: list[dict] = field(default_factory=list)
    method: str = ""

    def to_json(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "injective": self.injective, "surjective": self.surjective,
                "kernel_witnesses": self.kernel_witnesses, "unrefinable": self.unrefinable,
                "method": self.method}


def kernel_witness(X: FiniteMetricSpace, lo: float, hi: float, tri, fallback: list[int] | None,
                   budgets: Budgets = Budgets()) -> dict | None:
    """A loop essential at lo and null at hi, built around the triangle ``tri``.

    Each edge of the triangle missing at lo is replaced by a lower chain;
    the fallback loop is used when that does not give a kernel element.
    """
    F = engine(X)
    tau_lo, tau_hi = F.time_at(lo), F.time_at(hi)
    cands = []
    ok = tri is not None
    i, j, k = tri if ok else (0, 0, 0)
    loop = [i]
    for a, b in ((i, j), (j, k), (k, i)) if ok else ():
        if X.dist[a, b] < lo:
            loop.append(b)
            continue
        p = lo_path(X, lo, a, b)
        if p is None:
            ok = False
            break
        loop += p[1:]
    if ok:
        cands.append(loop)
    if fallback:
        cands.append(fallback)
    for W in cands:
        if not F.nf_word(F.loop_letters(W), tau_lo) or F.nf_word(F.loop_letters(W), tau_hi):
            continue
        below = decide_null(X, lo, W, budgets)
        if below.status != "nonnull":
            continue
        above = decide_null(X, hi, W, budgets)
        if above.status != "null":
            continue
        return {"loop": W, "below": below.to_json(), "above": above.to_json()}
    return None


def induced_map_report(X: FiniteMetricSpace, eps_lo: float, eps_hi: float,
                       budgets: Budgets = Budgets(), witnesses: bool = True) -> MapReport:
    lo, hi = X.canonical_scale(eps_lo), X.canonical_scale(eps_hi)
    if not lo < hi:
        raise InputError("need eps_lo < eps_hi after canonicalisation")
    F = engine(X)
    tau_lo, tau_hi = F.time_at(lo), F.time_at(hi)
    k_lo, k_hi = F.batch_index_at(lo), F.batch_index_at(hi)
    rep = MapReport(lo, hi, None, None, method="stallings")
    comp_lo = F.components_at(lo)
    # surjectivity: every new hop must be refinable
    unref = []
    roots = F.live_roots_at(tau_lo, upto_batch=k_lo)
    images = {g: F.nf_word((g,), tau_hi) for g in roots}
    by_comp: dict[int, list[int]] = {}
    for g in roots:
        by_comp.setdefault(comp_lo[F.gen_edge[g][0]], []).append(g)
    folded = {c: FoldedGraph(images[g] for g in gs) for c, gs in by_comp.items()}
    free = F.free_at(lo) and F.free_at(hi)
    surj_known = True
    for b in range(k_lo, k_hi):
        info = F.batches[b]
        for a, c in info.new_tree:
            unref.append({"pair": [a, c], "reason": "lo-disconnected"})
        for g in info.new_gens:
            a, c = F.gen_edge[g]
            if comp_lo[a] != comp_lo[c]:
                unref.append({"pair": [a, c], "reason": "lo-disconnected"})
                continue
            w = F.nf_word((g,), tau_hi)
            fg = folded.get(comp_lo[a])
            if not w or (fg is not None and fg.contains(w)):
                continue
            if free:
                unref.append({"pair": [a, c], "reason": "not-in-image", "word": list(w)})
            else:
                surj_known = False
    rep.unrefinable = unref
    rep.surjective = False if unref else (True if surj_known else None)
    # injectivity: images of the lower free basis must stay a free basis
    if not free:
        rep.injective = None
        rep.method = "unknown (relators left after simplification)"
    else:
        inj = True
        for c, gs in by_comp.items():
            if any(not images[g] for g in gs) or folded[c].rank() != len(gs):
                inj = False
        rep.injective = inj
        if not inj and witnesses:
            rep.kernel_witnesses = _kernel_witnesses(X, F, lo, hi, roots, images, comp_lo, budgets)
    return rep


def _kernel_witnesses(X, F, lo, hi, roots, images, comp_lo, budgets, limit: int = 3) -> list[dict]:
    out = []
    seen: dict[tuple, int] = {}
    for g in roots:
        img = images[g]
        base = F.gen_edge[g][0]
        fallback = None
        if not img:
            fallback = _lollipop(F, base, g, 1)
        elif len(img) == 1:
            key = (abs(img[0]), comp_lo[base])
            h = seen.get(key)
            if h is None:
                seen[key] = g
                continue
            s = 1 if (img[0] > 0) == (images[h][0] > 0) else -1
            fallback = _lollipop(F, base, g, 1) + _lollipop(F, base, h, -s)[1:]
        if fallback is None:
            continue
        w = kernel_witness(X, lo, hi, None, fallback, budgets)
        if w is not None:
            out.append(w)
        if len(out) >= limit:
            break
    return out
