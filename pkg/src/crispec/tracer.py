"""Explicit homotopies from the filtration's event log.

A loop at basepoint * is rewritten, by inserting "spurs" (tree path out to *
and back) at every interior point, into a product of *lollipops*: tree path
from * to p, the hop p -> q, tree path from q back to *.  A lollipop of a
tree edge or a stutter is a palindrome and folds away.  A generator whose
class was eliminated by an event is replaced, using that event's triangle,
by the lollipops of the word it equals; adjacent inverse lollipops fold
away.  Every step is a sequence of single-point insertions and removals, so
the resulting move list is a certificate checkable by
:func:`crispec.chains.verify_homotopy`.

All moves are valid at any scale above the weights of the edges involved.
"""

from __future__ import annotations

import heapq
import threading

import numpy as np

from .chains import BasicMove
from .errors import BudgetExhausted
from .filtration import INF_TIME, Filtration
from .groups import Word, cyclic_reduce, inverse

DEFAULT_MOVE_BUDGET = 5_000_000


class ScaleProofs:
    """Cheapest triangle derivations of every generator at one scale.

    Tree edges and the classes live at the scale are known for free; a
    triangle with exactly one unknown edge derives it at the summed cost of
    the other two plus one.  This is Knuth's generalisation of Dijkstra to
    superior functions, so each generator gets a derivation tree of minimum
    size.  Derivations replace the (possibly deep) event history when an
    explicit homotopy is rebuilt at this scale.
    """

    def __init__(self, F: Filtration, dist, eps: float, tau: int):
        self.F = F
        self.lock = threading.RLock()      # the closure grows lazily; queries may come from threads
        self.A = np.asarray(dist) < eps
        np.fill_diagonal(self.A, False)
        n = F.n
        self.cost = np.full((n, n), np.inf)
        self.done = np.zeros((n, n), dtype=bool)
        self.proof: dict[tuple[int, int], int] = {}
        self.live: set[int] = set()
        self.heap: list[tuple[float, int, int]] = []
        iu, ju = np.nonzero(np.triu(self.A))
        for i, j in zip(iu.tolist(), ju.tolist()):
            g = int(F.gid[i, j])
            if g == 0 or F.live_at(g, tau):
                if g:
                    self.live.add(g)
                self.cost[i, j] = self.cost[j, i] = 0.0
                self.heap.append((0.0, i, j))
        heapq.heapify(self.heap)

    def ensure(self, edges) -> bool:
        """Run the closure until every edge in ``edges`` is derived."""
        want = {(min(a, b), max(a, b)) for a, b in edges if a != b}
        want = {e for e in want if not self.done[e]}
        A, cost, done = self.A, self.cost, self.done
        while want and self.heap:
            c, i, j = heapq.heappop(self.heap)
            if done[i, j]:
                continue
            done[i, j] = done[j, i] = True
            want.discard((i, j))
            ks = np.flatnonzero(A[i] & A[j])
            di, dj = done[i, ks], done[j, ks]
            one = di ^ dj
            if not one.any():
                continue
            ks, di = ks[one], di[one]
            other = np.where(di, cost[i, ks], cost[j, ks])
            cand = c + other + 1.0
            ua = np.where(di, j, i)
            better = cand < cost[ua, ks]
            for a, k, v in zip(ua[better].tolist(), ks[better].tolist(), cand[better].tolist()):
                e = (min(a, k), max(a, k))
                cost[a, k] = cost[k, a] = v
                self.proof[e] = i + j - a
                heapq.heappush(self.heap, (v, e[0], e[1]))
        return not want

    def triangle(self, g: int) -> tuple[int, int, int]:
        a, b = self.F.gen_edge[g]
        return (a, b, self.proof[(a, b)])


class Tracer:
    def __init__(self, F: Filtration, base: int, budget: int = DEFAULT_MOVE_BUDGET,
                 _shared: dict | None = None, proofs: ScaleProofs | None = None):
        self.F = F
        self.base = base
        self.budget = budget
        self.proofs = proofs
        self.C: list[int] = []
        self.moves: list[BasicMove] = []
        self._sh = _shared if _shared is not None else {"paths": {}, "fwd": {}, "count": [0]}

    # -- bookkeeping --------------------------------------------------------------

    def _tick(self, k: int = 1) -> None:
        cnt = self._sh["count"]
        cnt[0] += k
        if cnt[0] > self.budget:
            raise BudgetExhausted(f"homotopy reconstruction exceeded {self.budget} moves")

    def ins(self, pos: int, pt: int) -> None:
        self._tick()
        self.C.insert(pos, pt)
        self.moves.append(BasicMove("insert", pos, pt))

    def rem(self, pos: int) -> None:
        self._tick()
        del self.C[pos]
        self.moves.append(BasicMove("remove", pos))

    def replay(self, rel: list[BasicMove], off: int) -> None:
        self._tick(len(rel))
        C, out = self.C, self.moves
        for m in rel:
            if m.kind == "insert":
                C.insert(m.pos + off, m.point)
                out.append(BasicMove("insert", m.pos + off, m.point))
            else:
                del C[m.pos + off]
                out.append(BasicMove("remove", m.pos + off))

    # -- geometry of words -------------------------------------------------------------

    def to_base(self, x: int) -> list[int]:
        cache = self._sh["paths"]
        p = cache.get(x)
        if p is None:
            p = cache[x] = self.F.tree_path(x, self.base)
        return p

    def edge_of(self, item) -> tuple[int, int]:
        if isinstance(item, tuple):
            return item
        a, b = self.F.gen_edge[abs(item)]
        return (a, b) if item > 0 else (b, a)

    def lollipop(self, item) -> list[int]:
        p, q = self.edge_of(item)
        return self.to_base(p)[::-1] + self.to_base(q)

    def lol_len(self, item) -> int:
        p, q = self.edge_of(item)
        return len(self.to_base(p)) + len(self.to_base(q))

    def walk(self, word) -> list[int]:
        pts = [self.base]
        for x in word:
            pts.extend(self.lollipop(x)[1:])
        return pts

    # -- primitive rewrites --------------------------------------------------------------

    def fold(self, pos: int, length: int) -> None:
        """Fold the palindromic walk C[pos:pos+length] down to its first point."""
        while length > 1:
            if length % 2:
                self.rem(pos + length // 2)
                length -= 1
                continue
            left = pos + length // 2 - 1
            if left >= 1:
                self.rem(left)
            elif left + 1 <= len(self.C) - 2:
                self.rem(left + 1)
            else:
                return
            length -= 1

    def unfold(self, pos: int, walk: list[int]) -> None:
        """Insert walk + reversed(walk) at C[pos] (which must equal walk[0])."""
        for r in range(1, len(walk)):
            self.ins(pos + r, walk[r - 1])
            self.ins(pos + r, walk[r])

    def spur_out(self, points: list[int]) -> list:
        """Start from loop ``points``; return the lollipop items in order."""
        self.C = list(points)
        pos = 1
        for t in range(1, len(points) - 1):
            path = self.to_base(points[t])
            self.unfold(pos, path)
            pos += 2 * (len(path) - 1) + 1
        items = []
        for a, b in zip(points, points[1:]):
            x = self.F.letter(a, b)
            items.append(x if x else (a, b))
        return items

    # -- group-level rewriting ----------------------------------------------------------------

    def _push(self, stack: list[int], cur: int, x: int) -> int:
        if stack and stack[-1] == -x:
            top = stack.pop()
            start = cur - (self.lol_len(top) - 1)
            self.fold(start, self.lol_len(top) + self.lol_len(x) - 1)
            return start
        stack.append(x)
        return cur + self.lol_len(x) - 1

    def reduce_words(self, pos: int, letters) -> list[int]:
        """Free reduction without substituting eliminated classes."""
        stack: list[int] = []
        cur = pos
        for x in letters:
            cur = self._push(stack, cur, x)
        return stack

    def normalize(self, pos: int, items, tau: int, hold: int = 0) -> list[int]:
        """Rewrite the lollipops at ``pos`` into the normal form at time ``tau``.

        Generator ``hold`` is left unexpanded.
        """
        stack: list[int] = []
        cur = pos
        for it in items:
            if isinstance(it, tuple):
                self.fold(cur, self.lol_len(it))
                continue
            res = [it] if abs(it) == hold else self.expand(cur, it, tau)
            for x in res:
                cur = self._push(stack, cur, x)
        return stack

    def expand(self, pos: int, x: int, tau: int) -> list[int]:
        g = abs(x)
        if self.proofs is not None:
            if g in self.proofs.live:
                return [x]
        else:
            e = self.F.up[g]
            if e is None or e.time >= tau:
                return [x]
        fwd_moves, rel = self.forward(g, 1)
        c, core = cyclic_reduce(rel)
        hits = [q for q, y in enumerate(core) if abs(y) == g]
        if len(hits) != 1:
            raise AssertionError(f"event relator of {g} does not isolate it: {rel}")
        idx = len(c) + hits[0]
        a = 1 if rel[idx] > 0 else -1
        u, v = rel[:idx], rel[idx + 1:]
        if (1 if x > 0 else -1) == a:
            pre = inverse(u)
            letters = list(pre) + list(inverse(rel)) + list(u) + [x]
            orient = -1
        else:
            pre = v
            letters = list(v) + list(rel) + list(inverse(v)) + [x]
            orient = 1
        w = self.walk(pre)
        self.unfold(pos, w)
        mid = pos + len(w) - 1
        rel_moves = fwd_moves if orient == 1 else self.forward(g, -1)[0]
        self.replay(rel_moves, mid)
        red = self.reduce_words(pos, letters)
        if any(abs(y) == g for y in red):
            raise AssertionError("substitution left the eliminated class in place")
        return self.normalize(pos, red, tau)

    def forward(self, g: int, orient: int) -> tuple[list[BasicMove], Word]:
        """Moves building the event triangle of g from [*] as its normal-form word."""
        key = (g, orient)
        memo = self._sh["fwd"]
        hit = memo.get(key)
        if hit is not None:
            return hit
        if self.proofs is not None:
            i, j, k = self.proofs.triangle(g)
            when, hold = INF_TIME, g
        else:
            e = self.F.up[g]
            i, j, k = e.tri
            when, hold = e.time, 0
        if orient < 0:
            j, k = k, j
        sub = Tracer(self.F, self.base, self.budget, self._sh, self.proofs)
        sub.C = [self.base, self.base]
        P = self.to_base(i)[::-1]
        sub.unfold(0, P)
        m = len(P) - 1
        sub.ins(m + 1, i)
        sub.ins(m + 1, j)
        sub.ins(m + 2, k)
        pj = self.to_base(j)
        sub.unfold(m + 1, pj)
        pk = self.to_base(k)
        sub.unfold(m + 2 + 2 * (len(pj) - 1), pk)
        items = []
        for a, b in ((i, j), (j, k), (k, i)):
            y = self.F.letter(a, b)
            items.append(y if y else (a, b))
        word = tuple(sub.normalize(0, items, when, hold))
        memo[key] = (sub.moves, word)
        return sub.moves, word


def null_trace(F: Filtration, points, tau: int, dist=None, eps: float | None = None,
               budget: int = DEFAULT_MOVE_BUDGET,
               proofs: ScaleProofs | None = None) -> list[BasicMove] | None:
    """Moves taking the loop ``points`` to [*, *], or None if its class is nontrivial.

    With ``dist``/``eps`` given, cheap shortcut removals are tried first.
    ``proofs`` (built for the same scale) are preferred over replaying the
    event history.
    """
    C = list(points)
    moves: list[BasicMove] = []
    if dist is not None and eps is not None:
        C, moves = greedy_shorten(C, dist, eps)
    if len(C) <= 2:
        return moves
    if F.nf_word(F.loop_letters(C), tau):
        return None
    if proofs is not None and proofs.ensure(zip(C, C[1:])):
        T = Tracer(F, C[0], budget, proofs=proofs)
        items = T.spur_out(C)
        if not T.normalize(0, items, tau) and len(T.C) == 2:
            return moves + T.moves
    T = Tracer(F, C[0], budget)
    items = T.spur_out(C)
    left = T.normalize(0, items, tau)
    if left or len(T.C) != 2:
        raise AssertionError("trivial class did not fold to the constant loop")
    return moves + T.moves


def greedy_shorten(C: list[int], dist, eps: float, stretch_rounds: int = 12
                   ) -> tuple[list[int], list[BasicMove]]:
    """Shorten a loop by local moves that never change its class.

    Three kinds, tried in order: drop C[i] when its neighbours are close;
    replace C[i], C[i+1] by one point q close to C[i-1..i+2]; and, when both
    are stuck, a bounded number of "stretch" passes that slide each point
    as far from its predecessor as the two neighbours allow, which tends to
    leave slack for removals further along.
    """
    C = list(C)
    D = np.asarray(dist)
    near = D < eps
    moves: list[BasicMove] = []
    rounds = 0
    while len(C) > 2:
        changed = False
        i = 1
        while i < len(C) - 1:
            if near[C[i - 1], C[i + 1]]:
                del C[i]
                moves.append(BasicMove("remove", i))
                changed = True
                if i > 1:
                    i -= 1
            else:
                i += 1
        if changed:
            continue
        for i in range(1, len(C) - 2):
            qs = np.flatnonzero(near[C[i - 1]] & near[C[i]] & near[C[i + 1]] & near[C[i + 2]])
            if len(qs):
                q = int(qs[0])
                moves += [BasicMove("insert", i, q), BasicMove("remove", i + 1),
                          BasicMove("remove", i + 1)]
                C[i:i + 2] = [q]
                changed = True
                break
        if changed:
            continue
        if rounds >= stretch_rounds:
            break
        rounds += 1
        for i in range(1, len(C) - 1):
            qs = np.flatnonzero(near[C[i - 1]] & near[C[i]] & near[C[i + 1]])
            q = int(qs[np.argmax(D[C[i - 1], qs])])
            if q != C[i] and D[C[i - 1], q] > D[C[i - 1], C[i]]:
                moves += [BasicMove("insert", i, q), BasicMove("remove", i + 1)]
                C[i] = q
                changed = True
        if not changed:
            break
    return C, moves
