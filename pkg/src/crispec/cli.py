"""Command-line entry point.

Exit codes: 0 success, 1 bad input, 2 finished but with unknown verdicts
or an exhausted budget, 3 a consistency check failed (a bug).
"""

from __future__ import annotations

import argparse
import functools
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from .chains import HomotopyTrace, verify_homotopy
from .errors import BudgetExhausted, ConsistencyFailure, CrispecError, InputError
from .generators import KINDS, GeneratorSpec, generate
from .metric import FiniteMetricSpace, load_space, read_json

EXIT_OK, EXIT_INPUT, EXIT_UNKNOWN, EXIT_CONSISTENCY = 0, 1, 2, 3

log = logging.getLogger("crispec")


# -- output -----------------------------------------------------------------------------------

def _round(obj):
    """Floats to 12 significant digits, recursively."""
    if isinstance(obj, float | np.floating):
        v = float(obj)
        return float(f"{v:.12g}") if math.isfinite(v) else str(v)
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, list | tuple):
        return [_round(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _dump(obj, path: str | None, exact: bool = False) -> None:
    text = json.dumps(obj if exact else _round(obj), indent=1) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def space_json(X: FiniteMetricSpace) -> dict:
    """Full-precision space record; traces embed this so they can be re-checked alone."""
    out = {"labels": list(X.labels), "dist": [[float(v) for v in row] for row in X.dist]}
    if X.provenance:
        out["provenance"] = X.provenance
        out["tol_metric"] = 1e-9 * X.diameter
    return out


def trace_json(X: FiniteMetricSpace, trace: HomotopyTrace, claim: dict) -> dict:
    return {"space": space_json(X), "claim": claim, **trace.to_json()}


# -- input ------------------------------------------------------------------------------------

def _number(text: str):
    try:
        return int(text)
    except ValueError:
        pass
    if "," in text:
        return [float(t) for t in text.split(",") if t]
    try:
        return float(text)
    except ValueError:
        raise InputError(f"generator parameter value {text!r} is not a number") from None


def _generator_params(extra: list[str]) -> dict:
    params, k = {}, 0
    while k < len(extra):
        tok = extra[k]
        if not tok.startswith("--"):
            raise InputError(f"unexpected argument {tok!r}")
        key, _, val = tok[2:].partition("=")
        if not val:
            if k + 1 >= len(extra):
                raise InputError(f"generator parameter --{key} needs a value")
            val = extra[k + 1]
            k += 1
        params[key.replace("-", "_")] = _number(val)
        k += 1
    return params


def _space(args, extra: list[str]) -> FiniteMetricSpace:
    if getattr(args, "generate", None):
        spec = GeneratorSpec(args.generate, _generator_params(extra))
        X = generate(spec)
        X.provenance = spec.to_json()
        return X
    if extra:
        raise InputError(f"unrecognized arguments: {' '.join(extra)}")
    if not getattr(args, "space", None):
        raise InputError("give a space file or --generate KIND")
    return load_space(args.space, args.tol_metric)


def _points(X: FiniteMetricSpace, text: str) -> list[int]:
    return [X.index(t.strip()) for t in text.split(",") if t.strip()]


def _budgets(args):
    from .nullity import Budgets
    return Budgets(moves=args.moves, bfs_states=args.bfs_states)


def _threads(args) -> int:
    if args.threads is not None:
        t = args.threads
    else:
        try:
            t = int(os.environ.get("CRISPEC_THREADS", "1"))
        except ValueError:
            raise InputError("CRISPEC_THREADS must be an integer") from None
    if t < 1:
        raise InputError("thread count must be positive")
    return t


# -- subcommands ------------------------------------------------------------------------------

def cmd_generate(args, extra) -> int:
    X = _space(args, extra)
    if args.format == "csv":
        from .metric import write_csv
        text = write_csv(X)
        if args.output in (None, "-"):
            sys.stdout.write(text)
        else:
            Path(args.output).write_text(text)
    else:
        _dump(space_json(X), args.output, exact=True)
    return EXIT_OK


def cmd_validate(args, extra) -> int:
    X = _space(args, extra)
    scales = X.candidate_scales() if X.n > 1 else []
    _dump({"valid": True, "n": X.n, "diameter": X.diameter, "candidate_scales": len(scales)}, args.output)
    return EXIT_OK


def cmd_spectrum(args, extra) -> int:
    from .spectrum import compute_spectrum, spectrum_svg
    X = _space(args, extra)
    rep = compute_spectrum(X, _budgets(args), threads=_threads(args), gaps=not args.no_gaps)
    _dump(rep.to_json(), args.output)
    if args.svg:
        Path(args.svg).write_text(spectrum_svg(rep))
    if not rep.consistent:
        return EXIT_CONSISTENCY
    return EXIT_UNKNOWN if rep.has_unknown else EXIT_OK


def cmd_null(args, extra) -> int:
    from .nullity import decide_null
    X = _space(args, extra)
    loop = _points(X, args.loop)
    v = decide_null(X, args.eps, loop, _budgets(args))
    out = v.to_json()
    if v.trace is not None and args.trace_out:
        _dump(trace_json(X, v.trace, {"kind": "null"}), args.trace_out, exact=True)
        out["trace_path"] = args.trace_out
    _dump(out, args.output)
    return EXIT_UNKNOWN if v.status == "unknown" else EXIT_OK


def cmd_refine(args, extra) -> int:
    from .nullity import refine_check
    X = _space(args, extra)
    pair = _points(X, args.pair)
    if len(pair) != 2:
        raise InputError("--pair takes exactly two points")
    r = refine_check(X, args.hi, args.lo, pair, _budgets(args))
    out = r.to_json()
    if r.trace is not None and args.trace_out:
        _dump(trace_json(X, r.trace, {"kind": "refine", "lo": r.lo}), args.trace_out, exact=True)
        out["trace_path"] = args.trace_out
    _dump(out, args.output)
    print({"refinable": "Refinable", "not-refinable": "NotRefinable"}.get(r.status, "Unknown"),
          file=sys.stderr)
    return EXIT_UNKNOWN if r.status == "unknown" else EXIT_OK


def cmd_d_eps(args, extra) -> int:
    from .intrinsic import intrinsic_metric
    X = _space(args, extra)
    res = intrinsic_metric(X, args.eps, threads=_threads(args))
    _dump(res.to_json(), args.output)
    return EXIT_OK


def cmd_gaps(args, extra) -> int:
    from .spectrum import detect_essential_gaps
    X = _space(args, extra)
    certs, bad = detect_essential_gaps(X, _budgets(args), threads=_threads(args))
    _dump({"gaps": [c.to_json() for c in certs], "disagreements": bad}, args.output)
    return EXIT_CONSISTENCY if bad else EXIT_OK


def cmd_cover(args, extra) -> int:
    from .cover import build_cover_ball, simply_connected_probe
    X = _space(args, extra)
    ball = build_cover_ball(X, args.eps, args.basepoint, args.max_vertices)
    out = ball.to_json()
    code = EXIT_OK
    if args.probe:
        pr = simply_connected_probe(ball, args.probe, args.seed)
        out["probe"] = pr.to_json()
        if not pr.passed:
            code = EXIT_CONSISTENCY
    _dump(out, args.output)
    if code == EXIT_OK and not ball.complete:
        code = EXIT_UNKNOWN
    return code


def verify_certificate(obj: dict, X: FiniteMetricSpace | None = None) -> tuple[bool, str]:
    """Check a trace file: the moves replay, and the end chain is what the claim says."""
    if X is None:
        if "space" not in obj:
            raise InputError("trace has no embedded space; pass --space")
        X = read_json(json.dumps(obj["space"]))
    h = HomotopyTrace.from_json(obj)
    res = verify_homotopy(X, h)
    if not res:
        return False, f"move {res.step}: {res.reason}"
    end = h.final()
    claim = obj.get("claim", {})
    kind = claim.get("kind")
    if kind == "null" and len(set(end)) != 1:
        return False, f"end chain {end} is not constant"
    if kind == "refine":
        lo = float(claim["lo"])
        if any(not X.dist[a, b] < lo for a, b in zip(end, end[1:])):
            return False, f"end chain {end} has a hop of length >= {lo!r}"
    return True, "ok"


def cmd_verify(args, extra) -> int:
    if extra:
        raise InputError(f"unrecognized arguments: {' '.join(extra)}")
    try:
        obj = json.loads(Path(args.trace).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read trace {args.trace}: {exc}") from None
    X = load_space(args.space) if args.space else None
    ok, why = verify_certificate(obj, X)
    _dump({"accepted": ok, "reason": why}, args.output)
    return EXIT_OK if ok else EXIT_INPUT


def cmd_oracle(args, extra) -> int:
    from .oracle import run_oracle_suite
    if extra:
        raise InputError(f"unrecognized arguments: {' '.join(extra)}")
    rep = run_oracle_suite(args.count, args.seed, args.loops, args.pairs, _budgets(args))
    _dump(rep.to_json(), args.output)
    return EXIT_OK if rep.ok else EXIT_CONSISTENCY


# -- parser -----------------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    # usage mistakes are input errors (exit 1), not argparse's exit 2
    def error(self, message):
        raise InputError(message)


def build_parser() -> argparse.ArgumentParser:
    from .tracer import DEFAULT_MOVE_BUDGET
    p = _Parser(prog="crispec", description="Critical spectra of finite metric spaces.",
                                allow_abbrev=False)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, space=True):
        sp.allow_abbrev = False
        if space:
            sp.add_argument("space", nargs="?", help="space file (CSV matrix or JSON)")
            sp.add_argument("--generate", metavar="KIND", choices=KINDS,
                            help="use a built-in sample; extra --name value pairs set its parameters")
            sp.add_argument("--tol-metric", type=float, default=0.0)
        sp.add_argument("-o", "--output", help="output file (default stdout)")
        sp.add_argument("--threads", type=int, default=None, help="worker threads (env CRISPEC_THREADS)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--moves", type=int, default=DEFAULT_MOVE_BUDGET, help="basic-move budget per trace")
        sp.add_argument("--bfs-states", type=int, default=200_000)
        return sp

    s = common(sub.add_parser("generate", help="write a built-in sample space"), space=False)
    s.add_argument("generate", metavar="KIND", choices=KINDS)
    s.add_argument("--format", choices=("json", "csv"), default="json")
    s.set_defaults(func=cmd_generate)
    common(sub.add_parser("validate", help="check a distance matrix")).set_defaults(func=cmd_validate)
    s = common(sub.add_parser("spectrum", help="classify all critical values"))
    s.add_argument("--svg", help="also write the spectrum diagram here")
    s.add_argument("--no-gaps", action="store_true", help="skip the essential-gap cross-check")
    s.set_defaults(func=cmd_spectrum)
    s = common(sub.add_parser("null", help="decide nullity of a loop"))
    s.add_argument("--eps", type=float, required=True)
    s.add_argument("--loop", required=True, help="comma-separated labels or indices")
    s.add_argument("--trace-out", help="write the homotopy certificate here")
    s.set_defaults(func=cmd_null)
    s = common(sub.add_parser("refine", help="decide refinability of a hop"))
    s.add_argument("--pair", required=True)
    s.add_argument("--hi", type=float, required=True)
    s.add_argument("--lo", type=float, required=True)
    s.add_argument("--trace-out")
    s.set_defaults(func=cmd_refine)
    s = common(sub.add_parser("d-eps", help="eps-intrinsic metric"))
    s.add_argument("--eps", type=float, required=True)
    s.set_defaults(func=cmd_d_eps)
    common(sub.add_parser("gaps", help="certified essential gaps")).set_defaults(func=cmd_gaps)
    s = common(sub.add_parser("cover", help="explore a ball of the eps-cover"))
    s.add_argument("--eps", type=float, required=True)
    s.add_argument("--basepoint", required=True)
    s.add_argument("--max-vertices", type=int, default=None)
    s.add_argument("--probe", type=int, default=0, help="simple-connectivity probe sample count")
    s.set_defaults(func=cmd_cover)
    s = common(sub.add_parser("verify", help="re-check a homotopy certificate"), space=False)
    s.add_argument("trace")
    s.add_argument("--space", help="space file, if the trace does not embed one")
    s.set_defaults(func=cmd_verify)
    s = common(sub.add_parser("oracle", help="brute-force cross-check on random small spaces"), space=False)
    s.add_argument("--count", type=int, default=300)
    s.add_argument("--loops", type=int, default=10)
    s.add_argument("--pairs", type=int, default=5)
    s.set_defaults(func=cmd_oracle)
    return p


def _split_generator_params(parser: argparse.ArgumentParser, argv: list[str]) -> tuple[list[str], list[str]]:
    """Pull ``--name value`` pairs the subcommand does not know out of argv."""
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    cmd = next((a for a in argv if a in sub.choices), None)
    generating = "--generate" in argv or any(a.startswith("--generate=") for a in argv)
    if cmd is None or not (generating or cmd == "generate"):
        return argv, []
    known = sub.choices[cmd]._option_string_actions
    keep, extra = [], []
    k = 0
    while k < len(argv):
        tok = argv[k]
        if tok.startswith("--") and tok.split("=", 1)[0] not in known:
            extra.append(tok)
            if "=" not in tok and k + 1 < len(argv):
                extra.append(argv[k + 1])
                k += 1
        else:
            keep.append(tok)
        k += 1
    return keep, extra


@functools.cache
def _parser() -> argparse.ArgumentParser:
    return build_parser()


def run(argv: list[str] | None = None) -> int:
    parser = _parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv, extra = _split_generator_params(parser, argv)
        args = parser.parse_args(argv)
    except InputError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.moves < 1 or args.bfs_states < 1:
            raise InputError("budgets must be positive")
        return args.func(args, extra)
    except BudgetExhausted as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return EXIT_UNKNOWN
    except ConsistencyFailure as exc:
        print(f"consistency failure: {exc}", file=sys.stderr)
        return EXIT_CONSISTENCY
    except (CrispecError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(run())
