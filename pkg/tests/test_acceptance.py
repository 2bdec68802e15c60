"""Acceptance criteria, one printed PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v -s`` or directly with
``python3 tests/test_acceptance.py``.
"""

import json
import math
import os
import random
import sys
import tempfile
import time

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from conftest import cached, gen  # noqa: E402
from crispec.chains import random_loop, random_valid_moves, verify_homotopy  # noqa: E402
from crispec.cli import run, space_json  # noqa: E402
from crispec.cover import build_cover_ball, simply_connected_probe  # noqa: E402
from crispec.generators import comb_gamma  # noqa: E402
from crispec.intrinsic import intrinsic_metric  # noqa: E402
from crispec.nullity import refine_check  # noqa: E402
from crispec.oracle import random_space, run_oracle_suite  # noqa: E402
from crispec.spectrum import compute_spectrum, detect_essential_gaps, gap_number  # noqa: E402


def timed_spectrum(name, make):
    """Fresh space and spectrum with wall time; shared with the other test modules."""
    def build():
        X = make()
        t0 = time.perf_counter()
        rep = compute_spectrum(X)
        return X, rep, time.perf_counter() - t0
    X, rep, secs = cached(("acceptance", name), build)
    cached(name, lambda: X)
    cached(("spectrum", name), lambda: rep)
    return X, rep, secs


def flag_problems(rep) -> list[str]:
    bad = []
    for cv in rep.critical_values:
        f = set(cv.flags)
        if ("homotopy" in f) != ("upper-non-injective" in f) or ("refinement" in f) != ("upper-non-surjective" in f):
            bad.append(f"{cv.value}: implication")
        if f & {"lower-non-injective", "lower-non-surjective"}:
            bad.append(f"{cv.value}: lower flag")
        if "unknown" not in f and not f & {"homotopy", "refinement"}:
            bad.append(f"{cv.value}: unclassified")
    if not rep.consistent:
        bad.append(f"consistency {rep.consistency}")
    return bad


def loop_witness_ok(cv) -> bool:
    loops = cv.witness.get("loops", [])
    return bool(loops) and all(w["below"]["status"] == "nonnull" and w["above"]["status"] == "null"
                               for w in loops)


# -- criteria --------------------------------------------------------------------------------

def criterion_1():
    X, rep, secs = timed_spectrum("circle200", lambda: gen("circle", circumference=1.0, n=200))
    cvs = rep.critical_values
    ok = (len(cvs) == 1 and abs(cvs[0].value - 1 / 3) <= 2 / 200 and "homotopy" in cvs[0].flags
          and loop_witness_ok(cvs[0]) and not flag_problems(rep) and secs < 30)
    return ok, f"circle n=200: values {rep.values}, flags {[c.flags for c in cvs]}, {secs:.1f}s (< 30s)"


def criterion_2():
    X, rep, secs = timed_spectrum("gap200", lambda: gen("circle-with-gap", circumference=1.0, gap=0.25, n=200))
    cvs = rep.critical_values
    ab = sorted((X.index("a"), X.index("b")))
    ok = len(cvs) == 2 and secs < 60 and not flag_problems(rep)
    if ok:
        v1, v2 = cvs
        ok = (abs(v1.value - 0.25) <= 2 / 200 and "refinement" in v1.flags
              and any(sorted(g["pair"]) == ab for g in v1.witness.get("gaps", []))
              and abs(v2.value - 1 / 3) <= 2 / 200 and "homotopy" in v2.flags and loop_witness_ok(v2))
    return ok, f"circle with gap n=200: values {rep.values}, flags {[c.flags for c in cvs]}, {secs:.1f}s (< 60s)"


def criterion_3():
    side, mesh = 1.0, 0.01
    X, rep, secs = timed_spectrum("square", lambda: gen("square-boundary", side=side, mesh=mesh))
    cvs = rep.critical_values
    ok = (len(cvs) == 1 and abs(cvs[0].value - side) <= 2 * mesh and "homotopy" in cvs[0].flags
          and loop_witness_ok(cvs[0]) and not flag_problems(rep))
    return ok, f"square boundary s=1 mesh=0.01: values {rep.values}, {secs:.1f}s"


def criterion_4():
    mesh = 0.125
    X, rep, secs = timed_spectrum("comb0", lambda: gen("rapunzel-comb-v0", teeth=6, mesh=mesh))
    ix = X.index
    want = {tuple(sorted((ix(f"x{k}"), ix(f"y{k}")))) for k in range(7)}
    ref = [c for c in rep.critical_values if "refinement" in c.flags and abs(c.value - 1) <= mesh]
    gaps = {tuple(sorted(g["pair"])) for c in ref for g in c.witness.get("gaps", [])}
    problems = []
    if not ref:
        problems.append("no refinement value near 1")
    if not want <= gaps:
        problems.append(f"uncertified teeth {sorted(want - gaps)}")
    H = rep.by_flag("homotopy")
    near = {}
    for k in range(2, 7):
        target = math.sqrt(1 + 4.0 ** -k)
        hits = [v for v in H if abs(v - target) <= 2 * mesh]
        near[k] = min(hits, key=lambda v: abs(v - target)) if hits else None
        if not hits:
            problems.append(f"no homotopy value near d_{k}")
    gn = []
    for n in range(6):
        eps = math.sqrt(1 + 4.0 ** -(n + 1))
        gn.append(gap_number(X, comb_gamma(X, n), ix(f"x{n}"), ix(f"y{n}"), eps))
    if gn != [-1] * 6:
        problems.append(f"gap numbers {gn}")
    problems += flag_problems(rep)
    if secs >= 300:
        problems.append("too slow")
    closest = {k: (round(v, 6) if v is not None else None) for k, v in near.items()}
    return not problems, (f"comb v0 N=6: refinement {[c.value for c in ref]}, teeth certified "
                          f"{len(want & gaps)}/7, closest homotopy {closest}, gap numbers {gn}, "
                          f"{secs:.1f}s {problems or ''}")


def criterion_5():
    def build():
        X = gen("rapunzel-comb-v3", teeth=6)
        certs, bad = detect_essential_gaps(X)
        r = refine_check(X, X.next_scale(1.0), 1.0, ("x_inf", "y_inf"))
        return X, certs, bad, r
    X, certs, bad, r = cached(("acceptance", "comb3"), build)
    cached("comb3", lambda: X)
    lim = tuple(sorted((X.index("x_inf"), X.index("y_inf"))))
    absent = lim not in {tuple(sorted(c.pair)) for c in certs}
    end = r.trace.final() if r.trace is not None else []
    through = X.index("a") in end and X.index("b") in end
    lower = all(X.d(p, q) < 1.0 for p, q in zip(end, end[1:]))
    ok = (absent and not bad and r.status == "refinable" and bool(verify_homotopy(X, r.trace))
          and through and lower)
    labels = [X.labels[p] for p in end]
    return ok, (f"comb v3: limit pair absent from {len(certs)} certified gaps: {absent}; "
                f"refine {r.status}, end chain {labels}")


def criterion_6():
    def build():
        t0 = time.perf_counter()
        rep = run_oracle_suite(count=300, seed=0, loops=10, pairs=5, keep_traces=True)
        return rep, time.perf_counter() - t0
    rep, secs = cached(("acceptance", "oracle"), build)
    ok = rep.spaces == 300 and not rep.disagreements and rep.inconclusive == 0
    return ok, (f"oracle: {rep.spaces} spaces, {rep.null_checks} nullity and {rep.refine_checks} refinement "
                f"checks, {len(rep.disagreements)} disagreements, {rep.inconclusive} inconclusive, {secs:.1f}s")


def _intrinsic_violations(X) -> int:
    bad = 0
    prev = None
    for eps in X.candidate_scales() + [X.top_scale()]:
        R = intrinsic_metric(X, eps)
        fin = np.isfinite(R.dmat)
        bad += int(np.sum(R.dmat[fin] < X.dist[fin] - 1e-12))
        below = X.dist < eps
        bad += int(np.sum(~np.isclose(R.dmat[below], X.dist[below], rtol=1e-12, atol=0)))
        if R.connected:
            bad += int(np.sum(R.dmat > R.lipschitz_M * X.dist + 1e-9))
        if prev is not None:
            bad += int(np.sum(R.dmat > prev * (1 + 1e-12)))
        prev = R.dmat
    return bad


def _gap_spaces():
    out = []
    for name, make in (("comb0", lambda: gen("rapunzel-comb-v0", teeth=6)),
                       ("gap200", lambda: gen("circle-with-gap", circumference=1.0, gap=0.25, n=200)),
                       ("trapezoid", lambda: gen("trapezoid")),
                       ("comb3", lambda: gen("rapunzel-comb-v3", teeth=6))):
        X = cached(name, make)
        certs = cached(("gaps", name), lambda: detect_essential_gaps(X)[0])
        out.append((X, certs))
    return out


def _invariance_violations(X, certs, rng) -> tuple[int, int]:
    bad = runs = 0
    for c in certs:
        x, y = c.pair
        eps = rng.choice(c.feasible_scales)
        start = random_loop(X, x, eps, rng.randint(1, 8), rng)
        if X.d(start[-1], y) < eps and rng.random() < 0.5:
            start.append(y)
        g0 = gap_number(X, start, x, y, eps)
        cur = list(start)
        for m in random_valid_moves(X, start, eps, 200, rng, max_len=30):
            if m.kind == "insert":
                cur.insert(m.pos, m.point)
            else:
                del cur[m.pos]
            if gap_number(X, cur, x, y, eps, check=False) != g0:
                bad += 1
                break
        runs += 1
    return bad, runs


def criterion_7():
    def build():
        counts = {"intrinsic": 0, "gap_invariance": 0, "probe": 0, "flags": 0}
        done = {"spaces": 0, "gap_runs": 0, "balls": 0, "reports": 0}
        gap_spaces = _gap_spaces()
        for seed in range(10):
            rng = random.Random(seed)
            for _ in range(10):
                X = random_space(rng)
                done["spaces"] += 1
                counts["intrinsic"] += _intrinsic_violations(X)
                rep = compute_spectrum(X, floor=0.0)
                done["reports"] += 1
                counts["flags"] += len(flag_problems(rep))
                for eps in X.candidate_scales() + [X.top_scale()]:
                    ball = build_cover_ball(X, eps, rng.randrange(X.n))
                    if ball.complete:
                        done["balls"] += 1
                        if not simply_connected_probe(ball, 20, seed=seed):
                            counts["probe"] += 1
            for X, certs in gap_spaces:
                b, r = _invariance_violations(X, certs, rng)
                counts["gap_invariance"] += b
                done["gap_runs"] += r
        for name in ("circle200", "gap200", "square", "comb0"):
            rep = cached(("spectrum", name), lambda: compute_spectrum(cached(name, lambda: None)))
            done["reports"] += 1
            counts["flags"] += len(flag_problems(rep))
        return counts, done
    for k in (1, 2, 3, 4):
        run_criterion(k)            # the named spectra must exist first
    counts, done = cached(("acceptance", "props"), build)
    return not any(counts.values()), f"seeds 0-9: violations {counts}, checked {done}"


def _certificates():
    """Every Null/Refinable trace produced by criteria 1-6, as verify-ready JSON objects."""
    out = []
    for name in ("circle200", "gap200", "square", "comb0"):
        X = cached(name, lambda: None)
        rep = cached(("spectrum", name), lambda: None)
        sp = space_json(X)
        for cv in rep.critical_values:
            for w in cv.witness.get("loops", []):
                tr = w["above"].get("trace")
                if tr:
                    out.append({"space": sp, "claim": {"kind": "null"}, **tr})
            for u in cv.witness.get("unrefinable", []):
                v = u["verdict"]
                if v["status"] == "refinable" and v.get("trace"):
                    out.append({"space": sp, "claim": {"kind": "refine", "lo": v["lo"]}, **v["trace"]})
    X, _, _, r = cached(("acceptance", "comb3"), lambda: None)
    out.append({"space": space_json(X), "claim": {"kind": "refine", "lo": r.lo}, **r.trace.to_json()})
    rep, _ = cached(("acceptance", "oracle"), lambda: None)
    spaces: dict[int, dict] = {}
    for X, tr, claim in rep.keep:
        sp = spaces.setdefault(id(X), space_json(X))
        out.append({"space": sp, "claim": claim, **tr.to_json()})
    return out


def criterion_8():
    for k in range(1, 7):
        run_criterion(k)
    certs = _certificates()
    failed = 0
    t0 = time.perf_counter()
    with tempfile.TemporaryDirectory() as tmp:
        path, sink = os.path.join(tmp, "trace.json"), os.path.join(tmp, "out.json")
        for obj in certs:
            with open(path, "w") as fh:
                json.dump(obj, fh)
            if run(["verify", path, "-o", sink]) != 0:
                failed += 1
    secs = time.perf_counter() - t0
    return failed == 0 and len(certs) > 0, f"verify: {len(certs) - failed}/{len(certs)} certificates exit 0, {secs:.1f}s"


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4,
            5: criterion_5, 6: criterion_6, 7: criterion_7, 8: criterion_8}


def run_criterion(k: int):
    return cached(("criterion", k), CRITERIA[k])


def line(k: int, ok: bool, detail: str) -> str:
    return f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}"


@pytest.mark.parametrize("k", sorted(CRITERIA))
def test_criterion(k, capsys):
    ok, detail = run_criterion(k)
    with capsys.disabled():
        print("\n" + line(k, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    results = [run_criterion(k) for k in sorted(CRITERIA)]
    for k, (ok, detail) in zip(sorted(CRITERIA), results):
        print(line(k, ok, detail))
    sys.exit(0 if all(ok for ok, _ in results) else 1)
