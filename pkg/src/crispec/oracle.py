"""Brute-force cross-checks for small spaces.

Everything here works straight from the definition of a basic move and
shares no code with the filtration engine.  Chains are kept reduced:
stutters (a, a) and backtracks (a, b, a) can always be removed by valid
moves and put back again, so dropping them does not change the class.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field

import numpy as np

from .chains import random_loop, verify_homotopy
from .metric import FiniteMetricSpace, validate_metric
from .nullity import Budgets, decide_null, refine_check


def reduce_chain(c) -> tuple[int, ...]:
    out: list[int] = []
    for p in c:
        if out and out[-1] == p:
            continue
        if len(out) >= 2 and out[-2] == p:
            out.pop()
            continue
        out.append(p)
    return tuple(out)


def _join(left: tuple[int, ...], right: tuple[int, ...]) -> tuple[int, ...]:
    """Reduce left + right when both halves are already reduced."""
    out = list(left)
    clean = 0
    k = 0
    while k < len(right) and clean < 2:
        p = right[k]
        k += 1
        if out and out[-1] == p:
            clean = 0
        elif len(out) >= 2 and out[-2] == p:
            out.pop()
            clean = 0
        else:
            out.append(p)
            clean += 1
    return tuple(out) + right[k:]


def _neighbours(c: tuple[int, ...], near: np.ndarray, max_len: int):
    L = len(c)
    for i in range(1, L - 1):
        if near[c[i - 1], c[i + 1]]:
            yield _join(c[:i], c[i + 1:])
    if L < max_len:
        n = near.shape[0]
        for i in range(1, L):
            a, b = c[i - 1], c[i]
            for z in range(n):
                if z != a and z != b and near[a, z] and near[z, b]:
                    yield _join(_join(c[:i], (z,)), c[i:])


def brute_search(D: np.ndarray, eps: float, start, goal, slack: int = 3, max_states: int = 400_000):
    """Exhaustive search over reduced eps-chains of length <= len(start) + slack.

    Returns True when a chain satisfying ``goal`` is reachable, False when
    the bounded class was exhausted, None when ``max_states`` ran out.
    """
    near = D < eps
    s0 = reduce_chain(start)
    cap = max(len(s0), 2) + slack
    seen = {s0}
    heap = [(len(s0), s0)]         # shortest first: goals are short chains
    while heap:
        _, c = heapq.heappop(heap)
        if goal(c):
            return True
        for s in _neighbours(c, near, cap):
            if s not in seen:
                seen.add(s)
                if len(seen) > max_states:
                    return None
                heapq.heappush(heap, (len(s), s))
    return False


def brute_null(D: np.ndarray, eps: float, loop, slack: int = 3) -> bool | None:
    return brute_search(D, eps, loop, lambda c: len(c) == 1, slack)


def brute_refine(D: np.ndarray, hi: float, lo: float, x: int, y: int, slack: int | None = None) -> bool | None:
    # a lower chain may need to visit every point, so allow that much room
    slack = D.shape[0] if slack is None else slack
    return brute_search(D, hi, (x, y), lambda c: all(D[a, b] < lo for a, b in zip(c, c[1:])), slack)


def random_space(rng: random.Random, n: int | None = None) -> FiniteMetricSpace:
    """Small random metric: plane points, or a shortest-path metric with integer weights (ties)."""
    n = n or rng.randint(3, 8)
    if rng.random() < 0.5:
        P = np.array([(rng.random(), rng.random()) for _ in range(n)])
        D = np.hypot(*(P[:, None, :] - P[None, :, :]).transpose(2, 0, 1))
        return validate_metric(D, 1e-12)
    W = np.full((n, n), np.inf)
    np.fill_diagonal(W, 0.0)
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < 0.6 or j == i + 1:
                W[i, j] = W[j, i] = rng.randint(1, 4)
    for k in range(n):
        W = np.minimum(W, W[:, k, None] + W[None, k, :])
    return validate_metric(W)


@dataclass
class OracleReport:
    spaces: int = 0
    null_checks: int = 0
    refine_checks: int = 0
    traces_verified: int = 0
    disagreements: list[dict] = field(default_factory=list)
    inconclusive: int = 0
    keep: list | None = field(default=None, repr=False)    # (space, trace, claim) when collecting

    @property
    def ok(self) -> bool:
        return not self.disagreements

    def to_json(self) -> dict:
        return {"spaces": self.spaces, "null_checks": self.null_checks,
                "refine_checks": self.refine_checks, "traces_verified": self.traces_verified,
                "inconclusive": self.inconclusive, "disagreements": self.disagreements}


def check_space(X: FiniteMetricSpace, rng: random.Random, loops: int = 10, pairs: int = 5,
                budgets: Budgets = Budgets(), report: OracleReport | None = None) -> OracleReport:
    rep = report or OracleReport()
    rep.spaces += 1
    D = X.dist
    scales = X.candidate_scales() + [X.top_scale()]
    for k, eps in enumerate(scales):
        for _ in range(loops):
            base = rng.randrange(X.n)
            loop = random_loop(X, base, eps, rng.randint(1, 6), rng)
            v = decide_null(X, eps, loop, budgets)
            truth = brute_null(D, eps, loop)
            rep.null_checks += 1
            if truth is None or (truth is False and v.status == "null"):
                # a longer detour may exist; retry with more room before judging
                truth = brute_null(D, eps, loop, slack=5)
            if truth is None or v.status == "unknown":
                rep.inconclusive += 1
                continue
            if (v.status == "null") != truth:
                rep.disagreements.append({"kind": "null", "dist": D.tolist(), "scale": eps,
                                          "loop": loop, "verdict": v.status, "brute": truth})
            if v.trace is not None:
                if not verify_homotopy(X, v.trace):
                    rep.disagreements.append({"kind": "trace", "scale": eps, "loop": loop})
                rep.traces_verified += 1
                if rep.keep is not None:
                    rep.keep.append((X, v.trace, {"kind": "null"}))
        if k == 0:
            continue
        lo = scales[k - 1]
        cand = [(a, b) for a in range(X.n) for b in range(X.n) if a != b and D[a, b] < eps]
        for a, b in rng.sample(cand, min(pairs, len(cand))):
            r = refine_check(X, eps, lo, (a, b), budgets)
            truth = brute_refine(D, eps, lo, a, b)
            rep.refine_checks += 1
            if truth is None or r.status == "unknown":
                rep.inconclusive += 1
                continue
            if (r.status == "refinable") != truth:
                rep.disagreements.append({"kind": "refine", "dist": D.tolist(), "hi": eps, "lo": lo,
                                          "pair": [a, b], "verdict": r.status, "brute": truth})
            if r.trace is not None:
                if not verify_homotopy(X, r.trace):
                    rep.disagreements.append({"kind": "trace", "hi": eps, "pair": [a, b]})
                rep.traces_verified += 1
                if rep.keep is not None:
                    rep.keep.append((X, r.trace, {"kind": "refine", "lo": lo}))
    return rep


def run_oracle_suite(count: int = 300, seed: int = 0, loops: int = 10, pairs: int = 5,
                     budgets: Budgets = Budgets(), keep_traces: bool = False) -> OracleReport:
    rng = random.Random(seed)
    rep = OracleReport(keep=[] if keep_traces else None)
    for _ in range(count):
        check_space(random_space(rng), rng, loops, pairs, budgets, rep)
    return rep


__all__ = ["reduce_chain", "brute_search", "brute_null", "brute_refine", "random_space",
           "OracleReport", "check_space", "run_oracle_suite"]
