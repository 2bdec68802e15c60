"""Critical spectrum of a finite metric space, and gap certificates.

Transitions are read off the filtration engine: each candidate scale v
is compared with the next one up.  A class dying or two classes merging
means the induced map is not injective (a homotopy value).  A new
generator whose class is not an image of an older one means it is not
surjective (a refinement value).  Witnesses are then computed for every
flagged value and re-checked by the nullity and refinement deciders.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .metric import FiniteMetricSpace
from .nullity import Budgets, induced_map_report, kernel_witness, lo_path, refine_check
from .presentation import engine

log = logging.getLogger(__name__)

FLAGS = ("homotopy", "refinement", "upper-non-injective", "upper-non-surjective",
         "lower-non-injective", "lower-non-surjective", "unknown")


# -- gaps ---------------------------------------------------------------------------------

@dataclass
class GapCertificate:
    pair: tuple[int, int]
    l: float
    eps_star: float
    feasible_scales: list[float]
    dist_condition: bool = True
    dist_condition_note: str = "finite-space-trivial"
    refine_status: str | None = None        # filled in by cross-validation

    def to_json(self) -> dict:
        out = {"pair": list(self.pair), "l": self.l, "eps_star": self.eps_star,
               "feasible_scales": list(self.feasible_scales),
               "dist_condition": self.dist_condition, "dist_condition_note": self.dist_condition_note}
        if self.refine_status is not None:
            out["refine_status"] = self.refine_status
        return out


@dataclass
class GapInfeasible:
    pair: tuple[int, int]
    scale: float
    reason: str
    triple: tuple[int, int, int] | None

    def __bool__(self) -> bool:
        return False

    def to_json(self) -> dict:
        return {"pair": list(self.pair), "scale": self.scale, "reason": self.reason,
                "triple": None if self.triple is None else list(self.triple)}


def _gap_violation(D: np.ndarray, x: int, y: int, eps: float) -> tuple[str, int] | None:
    """First obstruction to the ball colouring at one scale, or None."""
    r = eps - D[x, y]
    Bx, By = D[x] < r, D[y] < r
    both = np.flatnonzero(Bx & By)
    if len(both):
        return "balls-intersect", int(both[0])
    # the balls themselves must stay l apart, or an l-chain could cross
    sub = D[np.ix_(np.flatnonzero(Bx), np.flatnonzero(By))]
    if sub.min() < D[x, y]:
        return "balls-closer-than-l", int(np.flatnonzero(Bx)[np.unravel_index(sub.argmin(), sub.shape)[0]])
    near_x = (D[:, Bx] < eps).any(axis=1)
    near_y = (D[:, By] < eps).any(axis=1)
    bad = np.flatnonzero(near_x & near_y & ~Bx & ~By)
    if len(bad):
        return "doubly-close", int(bad[0])
    return None


def _dist_condition(D: np.ndarray, x: int, y: int) -> bool:
    # smallest positive radius that is still below every positive distance
    pos = D[D > 0]
    r = float(pos.min()) if len(pos) else 1.0
    Bx, By = np.flatnonzero(D[x] < r), np.flatnonzero(D[y] < r)
    return bool(D[np.ix_(Bx, By)].min() == D[x, y])


def check_pre_essential_gap(X: FiniteMetricSpace, x, y, eps_star_hint: float | None = None):
    """Certificate listing every scale in (l, hint] where the gap colouring exists.

    Returns a :class:`GapCertificate`, or a falsy :class:`GapInfeasible`
    naming the pair and the offending third point at the first failing scale.
    """
    x, y = X.index(x), X.index(y)
    if x == y:
        raise ValueError("gap endpoints must differ")
    l = X.d(x, y)
    hint = X.next_scale(l) if eps_star_hint is None else float(eps_star_hint)
    if not engine(X).bottleneck()[x, y] < l:
        # a gap needs an l-chain joining its ends; without one the pair is just disconnected
        return GapInfeasible((x, y), l, "not-l-connected", None)
    scales = [s for s in X.candidate_scales() if l < s <= hint]
    if hint > X.diameter and hint not in scales:
        scales.append(X.top_scale() if hint >= X.top_scale() else hint)
    feasible = []
    first_bad = None
    for s in scales:
        v = _gap_violation(X.dist, x, y, s)
        if v is None:
            feasible.append(s)
        elif first_bad is None:
            first_bad = (s, v)
    if not feasible:
        s, (why, w) = first_bad if first_bad else (hint, ("no-scale", x))
        return GapInfeasible((x, y), s, why, (x, y, w))
    return GapCertificate((x, y), l, hint, feasible, _dist_condition(X.dist, x, y))


def gap_number(X: FiniteMetricSpace, chain, x, y, eps: float, check: bool = True) -> int:
    """Net count of hops from B(x, eps-l) into B(y, eps-l), minus those going back."""
    x, y = X.index(x), X.index(y)
    pts = [int(p) for p in getattr(chain, "points", chain)]
    r = eps - X.d(x, y)
    if check and _gap_violation(X.dist, x, y, eps) is not None:
        log.warning("no gap colouring for (%d,%d) at %r; gap number is not an invariant", x, y, eps)
    Bx, By = X.dist[x] < r, X.dist[y] < r
    total = 0
    for a, b in zip(pts, pts[1:]):
        if Bx[a] and By[b]:
            total += 1
        elif By[a] and Bx[b]:
            total -= 1
    return total


def _scale_array(X: FiniteMetricSpace) -> np.ndarray:
    return np.asarray(X.candidate_scales() + [X.top_scale()])


def gap_candidates(X: FiniteMetricSpace) -> list[tuple[int, int]]:
    """Pairs whose balls admit the colouring at the scale just above their distance.

    Only pairs already joined by a chain of shorter hops qualify.
    """
    D = X.dist
    S = _scale_array(X)
    F = engine(X)
    out = []
    for x in range(X.n - 1):
        ys = np.arange(x + 1, X.n)
        l = D[x, ys]
        keep = F.bottleneck()[x, ys] < l
        ys, l = ys[keep], l[keep]
        h = S[np.searchsorted(S, l, side="right")]
        r = h - l
        Bx = D[x][None, :] < r[:, None]
        By = D[ys] < r[:, None]
        common = (D[x][None, :] < h[:, None]) & (D[ys] < h[:, None]) & ~Bx & ~By
        ok = ~(Bx & By).any(axis=1) & ~common.any(axis=1)
        for k in np.flatnonzero(ok).tolist():
            y = int(ys[k])
            if _gap_violation(D, x, y, float(h[k])) is None:
                out.append((x, y))
    return out


def detect_essential_gaps(X: FiniteMetricSpace, budgets: Budgets = Budgets(),
                          threads: int = 1) -> tuple[list[GapCertificate], list[dict]]:
    """Certified gaps, each re-checked by the refinement decider.

    Returns the certificates and a list of disagreements (a gap the
    refinement check could refine), which indicate a bug.
    """
    certs = []
    for x, y in gap_candidates(X):
        c = check_pre_essential_gap(X, x, y)
        if c:
            certs.append(c)

    def confirm(c: GapCertificate) -> str:
        return refine_check(X, c.eps_star, c.l, c.pair, budgets).status

    statuses = _map(confirm, certs, threads)
    bad = []
    for c, st in zip(certs, statuses):
        c.refine_status = st
        if st == "refinable":
            bad.append({"pair": list(c.pair), "l": c.l, "refine_status": st})
    return certs, bad


def _map(fn, items, threads: int):
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


# -- spectrum -----------------------------------------------------------------------------

@dataclass
class CriticalValue:
    value: float
    flags: list[str]
    witness: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"value": self.value, "flags": list(self.flags), "witness": self.witness}


@dataclass
class SpectrumReport:
    space: dict
    candidates: list[float]
    critical_values: list[CriticalValue]
    consistency: dict
    resolution_floor: float = 0.0
    below_floor: int = 0

    @property
    def values(self) -> list[float]:
        return [c.value for c in self.critical_values]

    def by_flag(self, flag: str) -> list[float]:
        return [c.value for c in self.critical_values if flag in c.flags]

    @property
    def has_unknown(self) -> bool:
        return any("unknown" in c.flags for c in self.critical_values)

    @property
    def consistent(self) -> bool:
        return all(v.get("ok", True) for v in self.consistency.values())

    def to_json(self) -> dict:
        return {"space": self.space, "candidates": list(self.candidates),
                "resolution_floor": self.resolution_floor, "below_floor_transitions": self.below_floor,
                "critical_values": [c.to_json() for c in self.critical_values],
                "consistency": self.consistency}


def space_summary(X: FiniteMetricSpace) -> dict:
    out = {"n": X.n, "diameter": X.diameter, "labels": list(X.labels)}
    if X.provenance:
        out["provenance"] = X.provenance
    return out


def _pair_json(X, a, b) -> list[str]:
    return [X.labels[a], X.labels[b]]


def _classify(X: FiniteMetricSpace, b: int, budgets: Budgets, max_pairs: int) -> CriticalValue:
    F = engine(X)
    info = F.batches[b]
    v, hi = info.value, X.next_scale(info.value)
    flags: set[str] = set()
    wit: dict = {}
    injective = surjective = True
    if info.general:
        rep = induced_map_report(X, v, hi, budgets, witnesses=True)
        injective, surjective = rep.injective, rep.surjective
        wit["method"] = rep.method
    else:
        injective = not info.merges
        surjective = not (info.unrefinable or info.new_tree)
    if injective is None or surjective is None:
        flags.add("unknown")
    if injective is False:
        flags |= {"homotopy", "upper-non-injective"}
        loops = []
        for _kind, _a, _b, _s, tri in info.merges:
            w = kernel_witness(X, v, hi, tri, None, budgets)
            if w is not None:
                loops.append(w)
                break
        if not loops:
            loops = induced_map_report(X, v, hi, budgets, witnesses=True).kernel_witnesses[:1]
        if not loops:
            flags.add("unknown")
            wit["loop_budget"] = "no verified kernel loop within budget"
        wit["loops"] = loops
    if surjective is False:
        flags |= {"refinement", "upper-non-surjective"}
        pairs = [F.gen_edge[g] for g in info.unrefinable] + list(info.new_tree)
        gaps, verdicts = [], []
        for a, c in pairs[:max_pairs]:
            r = refine_check(X, hi, v, (a, c), budgets)
            verdicts.append({"pair": [a, c], "labels": _pair_json(X, a, c), "verdict": r.to_json()})
            g = check_pre_essential_gap(X, a, c, hi)
            if g:
                gaps.append(g.to_json())
            if r.status == "unknown":
                flags.add("unknown")
        wit["unrefinable"] = verdicts
        wit["unrefinable_total"] = len(pairs)
        wit["gaps"] = gaps
    return CriticalValue(v, sorted(flags, key=FLAGS.index), wit)


def _local_disconnection(X: FiniteMetricSpace, x: int, y: int, l: float, delta: float) -> bool:
    """x and y are not joined by an l-chain inside either ball of radius delta."""
    for c in (x, y):
        within = np.flatnonzero(X.dist[c] < delta).tolist()
        if lo_path(X, l, x, y, within=within) is not None:
            return False
    return True


def compute_spectrum(X: FiniteMetricSpace, budgets: Budgets = Budgets(), threads: int = 1,
                     floor: float | None = None, gaps: bool = True, max_pairs: int = 64) -> SpectrumReport:
    """Classify every candidate scale above the resolution floor.

    The floor defaults to the longest edge of a minimum spanning tree:
    below it the space is not chain connected and every transition only
    reflects the sampling.  Transitions at or below it are counted but not
    classified.
    """
    F = engine(X)
    F.advance_all()
    if floor is None:
        floor = F.tree_max
    flagged, below = [], 0
    for b, info in enumerate(F.batches):
        hit = bool(info.merges or info.unrefinable or info.new_tree or info.general)
        if not hit:
            continue
        if info.value <= floor:
            below += 1
        else:
            flagged.append(b)
    cvs = _map(lambda b: _classify(X, b, budgets, max_pairs), flagged, threads)
    cands = [s for s in X.candidate_scales() if s > floor]
    consistency = _consistency(X, cvs, budgets, threads, gaps)
    return SpectrumReport(space_summary(X), cands, cvs, consistency, floor, below)


def _consistency(X, cvs: list[CriticalValue], budgets: Budgets, threads: int, gaps: bool) -> dict:
    out: dict = {}
    known = [c for c in cvs if "unknown" not in c.flags]
    H = {c.value for c in known if "homotopy" in c.flags}
    R = {c.value for c in known if "refinement" in c.flags}
    out["spec_equals_closure"] = {"ok": {c.value for c in known} == H | R,
                                  "homotopy": len(H), "refinement": len(R)}
    out["isolated"] = {"ok": all("homotopy" in c.flags or "refinement" in c.flags for c in known)}
    bad = []
    for c in cvs:
        f = set(c.flags)
        if ("homotopy" in f) != ("upper-non-injective" in f) or ("refinement" in f) != ("upper-non-surjective" in f):
            bad.append(c.value)
        if f & {"lower-non-injective", "lower-non-surjective"}:
            bad.append(c.value)
    out["flag_implications"] = {"ok": not bad, "violations": bad}
    # homotopy witnesses must be essential below and null above
    wbad = []
    for c in cvs:
        for w in c.witness.get("loops", []):
            if w["below"]["status"] != "nonnull" or w["above"]["status"] != "null":
                wbad.append(c.value)
        for r in c.witness.get("unrefinable", []):
            if r["verdict"]["status"] == "refinable":
                wbad.append(c.value)
    out["witnesses"] = {"ok": not wbad, "violations": wbad}
    # balls around a certified gap cannot be joined by lower chains
    lbad, checked = [], 0
    for c in cvs:
        hi = X.next_scale(c.value)
        for g in c.witness.get("gaps", []):
            x, y = g["pair"]
            checked += 1
            if not _local_disconnection(X, x, y, c.value, hi):
                lbad.append([x, y])
    out["local_disconnection"] = {"ok": not lbad, "checked": checked, "violations": lbad}
    if gaps:
        certs, disagree = detect_essential_gaps(X, budgets, threads)
        missing = sorted({c.l for c in certs} - R)
        out["gaps_refinement"] = {"ok": not disagree and not _below_floor_missing(cvs, missing),
                                  "certified": len(certs), "disagreements": disagree,
                                  "values_without_refinement_flag": missing}
    return out


def _below_floor_missing(cvs, missing: list[float]) -> bool:
    # gaps at scales under the resolution floor are not classified, so they do not count
    if not cvs:
        return False
    lowest = min(c.value for c in cvs)
    return any(v >= lowest for v in missing)


# -- SVG ----------------------------------------------------------------------------------

_COLORS = {"homotopy": "#1f5fa8", "refinement": "#c0392b", "unknown": "#7f7f7f"}


def spectrum_svg(report: SpectrumReport, width: int = 720, height: int = 140) -> str:
    vals = report.values
    lo = report.resolution_floor
    hi = max([report.space.get("diameter", 1.0)] + vals) or 1.0
    pad = 40

    def xpos(v: float) -> float:
        return pad + (width - 2 * pad) * (v - lo) / ((hi - lo) or 1.0)

    y0 = height / 2
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="10">',
             f'<line x1="{pad}" y1="{y0}" x2="{width - pad}" y2="{y0}" stroke="black"/>']
    for v in (lo, hi):
        parts.append(f'<line x1="{xpos(v):.2f}" y1="{y0 - 4}" x2="{xpos(v):.2f}" y2="{y0 + 4}" stroke="black"/>')
        parts.append(f'<text x="{xpos(v):.2f}" y="{y0 + 18}" text-anchor="middle">{v:.4g}</text>')
    for k, c in enumerate(report.critical_values):
        kind = "unknown" if "unknown" in c.flags else ("homotopy" if "homotopy" in c.flags else "refinement")
        color = _COLORS[kind]
        x = xpos(c.value)
        dy = -14 - 12 * (k % 3)
        parts.append(f'<circle cx="{x:.2f}" cy="{y0}" r="4" fill="{color}"><title>{c.value:.12g} '
                     f'{" ".join(c.flags)}</title></circle>')
        parts.append(f'<text x="{x:.2f}" y="{y0 + dy}" text-anchor="middle" fill="{color}">{c.value:.4g}</text>')
    parts.append(f'<text x="{pad}" y="{height - 8}" fill="{_COLORS["homotopy"]}">homotopy</text>')
    parts.append(f'<text x="{pad + 70}" y="{height - 8}" fill="{_COLORS["refinement"]}">refinement</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


__all__ = ["GapCertificate", "GapInfeasible", "CriticalValue", "SpectrumReport", "gap_number",
           "check_pre_essential_gap", "detect_essential_gaps", "gap_candidates", "compute_spectrum",
           "spectrum_svg", "space_summary"]
