"""Chains at a scale, basic moves, and the homotopy-trace proof checker."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import InputError, InvalidChain
from .metric import FiniteMetricSpace


@dataclass(frozen=True)
class Chain:
    points: tuple[int, ...]
    scale: float

    def __post_init__(self):
        if len(self.points) < 1:
            raise InvalidChain("a chain needs at least one point")

    def __len__(self) -> int:
        return len(self.points)

    @property
    def start(self) -> int:
        return self.points[0]

    @property
    def end(self) -> int:
        return self.points[-1]

    def is_loop(self) -> bool:
        return self.points[0] == self.points[-1]

    def reversed(self) -> "Chain":
        return Chain(self.points[::-1], self.scale)

    def concat(self, other: "Chain") -> "Chain":
        if self.end != other.start:
            raise InvalidChain("chains do not meet")
        return Chain(self.points + other.points[1:], max(self.scale, other.scale))


def first_bad_hop(X: FiniteMetricSpace, points: Sequence[int], eps: float) -> int | None:
    D = X.dist
    for i in range(1, len(points)):
        if not D[points[i - 1], points[i]] < eps:
            return i
    return None


def make_chain(X: FiniteMetricSpace, points: Iterable[int], eps: float) -> Chain:
    pts = tuple(int(p) for p in points)
    if any(not 0 <= p < X.n for p in pts):
        raise InvalidChain("chain refers to a point outside the space")
    bad = first_bad_hop(X, pts, eps)
    if bad is not None:
        raise InvalidChain(
            f"hop {bad} has length {X.d(pts[bad - 1], pts[bad])!r}, not below scale {eps!r}")
    return Chain(pts, float(eps))


def chain_length(X: FiniteMetricSpace, c: Chain | Sequence[int]) -> float:
    pts = c.points if isinstance(c, Chain) else c
    D = X.dist
    return float(sum(D[a, b] for a, b in zip(pts, pts[1:])))


class BasicMove(NamedTuple):
    kind: str  # "insert" | "remove"
    pos: int
    point: int | None = None

    def to_json(self) -> dict:
        out = {"kind": self.kind, "pos": self.pos}
        if self.kind == "insert":
            out["point"] = self.point
        return out


@dataclass
class HomotopyTrace:
    scale: float
    start: list[int]
    moves: list[BasicMove] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"scale": self.scale, "start": list(self.start),
                "moves": [m.to_json() for m in self.moves]}

    @classmethod
    def from_json(cls, obj: dict) -> "HomotopyTrace":
        try:
            moves = []
            for m in obj["moves"]:
                kind = m["kind"]
                if kind not in ("insert", "remove"):
                    raise InputError(f"unknown move kind {kind!r}")
                moves.append(BasicMove(kind, int(m["pos"]),
                                       int(m["point"]) if kind == "insert" else None))
            return cls(float(obj["scale"]), [int(p) for p in obj["start"]], moves)
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed homotopy trace: {exc}") from None

    def final(self) -> list[int]:
        c = list(self.start)
        for m in self.moves:
            if m.kind == "insert":
                c.insert(m.pos, m.point)
            else:
                del c[m.pos]
        return c


@dataclass(frozen=True)
class VerifyResult:
    accepted: bool
    step: int | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.accepted


def verify_homotopy(X: FiniteMetricSpace, h: HomotopyTrace) -> VerifyResult:
    """Replay ``h`` move by move; the certificate checker for everything downstream.

    ``step`` is the index of the offending move, or -1 when the start chain
    itself is not a chain at the trace's scale.
    """
    eps = h.scale
    D = X.dist
    n = X.n
    c = list(h.start)
    if not c:
        return VerifyResult(False, -1, "empty start chain")
    if any(not (isinstance(p, int) and 0 <= p < n) for p in c):
        return VerifyResult(False, -1, "start chain refers to unknown points")
    if not eps > 0:
        return VerifyResult(False, -1, "scale must be positive")
    bad = first_bad_hop(X, c, eps)
    if bad is not None:
        return VerifyResult(False, -1, f"start chain hop {bad} violates the distance bound")
    for k, m in enumerate(h.moves):
        L = len(c)
        if m.kind == "insert":
            p, q = m.pos, m.point
            if not (isinstance(q, int) and 0 <= q < n):
                return VerifyResult(False, k, "inserted point out of range")
            if not 1 <= p <= L - 1:
                return VerifyResult(False, k, "insertion would move an endpoint")
            if not (D[c[p - 1], q] < eps and D[q, c[p]] < eps):
                return VerifyResult(False, k, "distance bound")
            c.insert(p, q)
        elif m.kind == "remove":
            p = m.pos
            if not 1 <= p <= L - 2:
                return VerifyResult(False, k, "removal would drop an endpoint")
            if not D[c[p - 1], c[p + 1]] < eps:
                return VerifyResult(False, k, "distance bound")
            del c[p]
        else:
            return VerifyResult(False, k, f"unknown move kind {m.kind!r}")
    return VerifyResult(True)


def invert_moves(start: Sequence[int], moves: Sequence[BasicMove]) -> list[BasicMove]:
    """Moves that undo ``moves`` (applied to the chain they produce), in order."""
    c = list(start)
    inv = []
    for m in moves:
        if m.kind == "insert":
            c.insert(m.pos, m.point)
            inv.append(BasicMove("remove", m.pos))
        else:
            inv.append(BasicMove("insert", m.pos, c[m.pos]))
            del c[m.pos]
    inv.reverse()
    return inv


def random_valid_moves(X: FiniteMetricSpace, chain: Sequence[int], eps: float, count: int,
                       rng: random.Random, max_len: int | None = None) -> list[BasicMove]:
    """``count`` uniformly drawn valid basic moves starting from ``chain``."""
    near = X.dist < eps
    c = list(chain)
    out: list[BasicMove] = []
    while len(out) < count:
        L = len(c)
        inserts: list[tuple[int, np.ndarray]] = []
        if max_len is None or L < max_len:
            for p in range(1, L):
                q = np.flatnonzero(near[c[p - 1]] & near[c[p]])
                if len(q):
                    inserts.append((p, q))
        removes = [p for p in range(1, L - 1) if near[c[p - 1], c[p + 1]]]
        total = sum(len(q) for _, q in inserts) + len(removes)
        if not total:
            break
        k = rng.randrange(total)
        m = None
        for p, q in inserts:
            if k < len(q):
                m = BasicMove("insert", p, int(q[k]))
                break
            k -= len(q)
        if m is None:
            m = BasicMove("remove", removes[k])
        if m.kind == "insert":
            c.insert(m.pos, m.point)
        else:
            del c[m.pos]
        out.append(m)
    return out


def random_loop(X: FiniteMetricSpace, base: int, eps: float, length: int, rng: random.Random) -> list[int]:
    """Random walk in the eps-graph that returns to ``base`` along its own trail."""
    D = X.dist
    walk = [base]
    for _ in range(max(0, length)):
        nbrs = [q for q in range(X.n) if D[walk[-1], q] < eps and q != walk[-1]]
        if not nbrs:
            break
        walk.append(rng.choice(nbrs))
    # close up by a random short cut if possible, else retrace
    back = walk[-2::-1] if len(walk) > 1 else []
    loop = walk[:]
    for j, q in enumerate(back):
        if D[loop[-1], base] < eps and loop[-1] != base:
            loop.append(base)
            break
        loop.append(q)
    if loop[-1] != base:
        loop.append(base)
    if len(loop) == 1:
        loop.append(base)
    return loop
