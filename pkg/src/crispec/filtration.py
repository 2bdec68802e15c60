"""Incremental fundamental-group tracking along the Rips-style filtration.

Edges enter in order of (weight, i, j).  A minimum spanning forest fixes the
tree; every other edge is a generator.  Each triangle contributes the
relator "edge(i,j) edge(j,k) edge(k,i)".  Relators are simplified on the
fly:

* a relator reducing to one letter kills that generator class,
* a relator reducing to two distinct letters merges two classes
  (signed union-find, union by size),
* anything longer is kept pending; at the end of each scale a pending
  relator in which some class occurs exactly once eliminates that class
  by a definition word (a Tietze move).

Every elimination is an *event* with a global timestamp and the triangle
that justified it, so the state at any earlier scale can be replayed
(``nf_at``) and turned into explicit homotopies by :mod:`crispec.tracer`.

``lab[i, j]`` always holds the current class root of edge (i,j) (0 when
trivial) and ``sgn[i, j]`` the exponent of that root when the edge is
traversed from i to j, so most triangles are recognised as consistent by
a vectorised check without any Python-level work.
"""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass, field

import numpy as np

from .groups import Word, cyclic_reduce, free_reduce, inverse

INF_TIME = 1 << 62


@dataclass
class Event:
    kind: str            # "union" | "kill" | "define"
    time: int
    tri: tuple[int, int, int]
    target: int = 0      # union: parent root
    sign: int = 1        # union: child = target ** sign
    word: Word = ()      # define: child = word


@dataclass
class BatchInfo:
    """What happened when the edges of weight ``value`` entered."""

    index: int
    value: float
    end_time: int = 0
    free_after: bool = True
    new_tree: list[tuple[int, int]] = field(default_factory=list)
    new_gens: list[int] = field(default_factory=list)
    merges: list[tuple[str, int, int, int, tuple]] = field(default_factory=list)
    general: bool = False
    pending: list[tuple[int, int, int]] = field(default_factory=list)
    unrefinable: list[int] = field(default_factory=list)   # new generators outside the image


class Filtration:
    """Edge-path group of the clique 2-complex, tracked across all weights.

    Parameters
    ----------
    n : number of vertices
    iu, ju, w : edge endpoints (iu < ju) and weights, any order
    """

    def __init__(self, n: int, iu, ju, w):
        iu = np.asarray(iu, dtype=np.int64)
        ju = np.asarray(ju, dtype=np.int64)
        w = np.asarray(w, dtype=float)
        order = np.lexsort((ju, iu, w))
        self.n = n
        self.iu, self.ju, self.w = iu[order], ju[order], w[order]
        m = len(self.w)
        if m:
            cut = np.flatnonzero(np.diff(self.w) > 0) + 1
            self.bounds = np.concatenate(([0], cut, [m])).astype(np.int64)
            self.values = [float(v) for v in self.w[self.bounds[:-1]]]
        else:
            self.bounds = np.array([0], dtype=np.int64)
            self.values = []
        self._kruskal()
        self.adj = np.zeros((n, n), dtype=bool)
        self.lab = np.zeros((n, n), dtype=np.int32)
        self.sgn = np.zeros((n, n), dtype=np.int8)
        self.gid = np.zeros((n, n), dtype=np.int32)
        self.gen_edge: list[tuple[int, int]] = [(-1, -1)]
        self.born: list[int] = [-1]
        self.up: list[Event | None] = [None]
        self.members: list[list[int] | None] = [None]
        self.born_min: list[int] = [-1]
        self.pending: dict[int, tuple[int, int, int]] = {}
        self._pend_roots: dict[int, set[int]] = {}
        self._by_root: dict[int, set[int]] = defaultdict(set)
        self._next_pid = 0
        self.time = 0
        self.batches: list[BatchInfo] = []
        self._cur: BatchInfo | None = None
        self._nf_memo: dict[tuple[int, int], Word] = {}

    # -- spanning forest ------------------------------------------------------

    def _kruskal(self) -> None:
        n = self.n
        parent = list(range(n))

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        self.is_tree = np.zeros(len(self.w), dtype=bool)
        nbrs: list[list[int]] = [[] for _ in range(n)]
        self.tree_max = 0.0
        for e, (a, b) in enumerate(zip(self.iu.tolist(), self.ju.tolist())):
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb
                self.is_tree[e] = True
                nbrs[a].append(b)
                nbrs[b].append(a)
                self.tree_max = float(self.w[e])
        self.tparent = [-1] * n
        self.depth = [0] * n
        self.comp = [-1] * n
        for r in range(n):
            if self.comp[r] != -1:
                continue
            self.comp[r] = r
            queue = deque([r])
            while queue:
                u = queue.popleft()
                for v in nbrs[u]:
                    if self.comp[v] == -1:
                        self.comp[v] = r
                        self.tparent[v] = u
                        self.depth[v] = self.depth[u] + 1
                        queue.append(v)
        self._tree_set = {(int(a), int(b)) for a, b, t in zip(self.iu, self.ju, self.is_tree) if t}

    def bottleneck(self) -> np.ndarray:
        """Largest tree edge on the forest path between each pair (inf across components).

        x and y are joined by a chain with all hops < eps iff this is < eps.
        """
        if getattr(self, "_bottleneck", None) is None:
            B = np.full((self.n, self.n), np.inf)
            np.fill_diagonal(B, 0.0)
            members = {v: [v] for v in range(self.n)}
            owner = list(range(self.n))
            for e in np.flatnonzero(self.is_tree).tolist():   # edges are already sorted
                ra, rb = owner[int(self.iu[e])], owner[int(self.ju[e])]
                A, C = members[ra], members[rb]
                B[np.ix_(A, C)] = self.w[e]
                B[np.ix_(C, A)] = self.w[e]
                if len(A) < len(C):
                    ra, rb, A, C = rb, ra, C, A
                for v in C:
                    owner[v] = ra
                A.extend(C)
                del members[rb]
            self._bottleneck = B
        return self._bottleneck

    def is_tree_edge(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self._tree_set

    def tree_path(self, a: int, b: int) -> list[int]:
        """Vertices of the forest path from a to b (inclusive)."""
        left, right = [a], [b]
        x, y = a, b
        while self.depth[x] > self.depth[y]:
            x = self.tparent[x]
            left.append(x)
        while self.depth[y] > self.depth[x]:
            y = self.tparent[y]
            right.append(y)
        while x != y:
            x = self.tparent[x]
            y = self.tparent[y]
            left.append(x)
            right.append(y)
        right.pop()
        return left + right[::-1]

    # -- scale bookkeeping -------------------------------------------------------

    @property
    def processed(self) -> int:
        return len(self.batches)

    def advance_to(self, eps: float) -> None:
        """Process every batch whose weight is strictly below eps."""
        while self.processed < len(self.values) and self.values[self.processed] < eps:
            self._process_batch(self.processed)

    def advance_all(self) -> None:
        while self.processed < len(self.values):
            self._process_batch(self.processed)

    def time_at(self, eps: float) -> int:
        """Event-time boundary describing the complex at scale eps (edges < eps)."""
        self.advance_to(eps)
        t = 0
        for b in self.batches:
            if b.value < eps:
                t = b.end_time
            else:
                break
        return t

    def batch_index_at(self, eps: float) -> int:
        """Number of batches present at scale eps."""
        self.advance_to(eps)
        k = 0
        while k < len(self.batches) and self.batches[k].value < eps:
            k += 1
        return k

    def free_at(self, eps: float) -> bool:
        k = self.batch_index_at(eps)
        return k == 0 or self.batches[k - 1].free_after

    # -- words ------------------------------------------------------------------

    def letter(self, a: int, b: int) -> int:
        """Signed generator for the hop a -> b, 0 for tree edges and stutters."""
        if a == b:
            return 0
        g = int(self.gid[a, b])
        if g == 0:
            if not self.adj[a, b]:
                raise ValueError(f"({a},{b}) is not an edge yet")
            return 0
        return g if a < b else -g

    def loop_letters(self, points) -> list[int]:
        return [x for x in (self.letter(a, b) for a, b in zip(points, points[1:])) if x]

    def live_at(self, g: int, tau: int) -> bool:
        e = self.up[g]
        return e is None or e.time >= tau

    def nf_at(self, x: int, tau: int = INF_TIME) -> Word:
        """Reduced word of signed generator x over the classes live at time tau."""
        g = abs(x)
        key = (g, tau)
        w = self._nf_memo.get(key) if tau != INF_TIME else None
        if w is None:
            e = self.up[g]
            if e is None or e.time >= tau:
                w = (g,)
            elif e.kind == "kill":
                w = ()
            elif e.kind == "union":
                base = self.nf_at(e.target, tau)
                w = base if e.sign > 0 else inverse(base)
            else:
                w = self.nf_word(e.word, tau)
            if tau != INF_TIME:
                self._nf_memo[key] = w
        return w if x > 0 else inverse(w)

    def nf_word(self, letters, tau: int = INF_TIME) -> Word:
        out: list[int] = []
        for x in letters:
            for a in self.nf_at(x, tau):
                if out and out[-1] == -a:
                    out.pop()
                else:
                    out.append(a)
        return tuple(out)

    def live_roots_at(self, tau: int, upto_batch: int | None = None) -> list[int]:
        hi = len(self.gen_edge)
        out = []
        for g in range(1, hi):
            if upto_batch is not None and self.born[g] >= upto_batch:
                break
            if self.born[g] < len(self.batches) and self.live_at(g, tau):
                out.append(g)
        return out

    def pending_at(self, eps: float) -> list[tuple[int, int, int]]:
        """Triangles whose relators were still unresolved at scale eps."""
        k = self.batch_index_at(eps)
        return list(self.batches[k - 1].pending) if k else []

    def components_at(self, eps: float) -> list[int]:
        """Component label (smallest member) of every vertex at scale eps."""
        parent = list(range(self.n))

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for e in np.flatnonzero(self.is_tree & (self.w < eps)).tolist():
            ra, rb = find(int(self.iu[e])), find(int(self.ju[e]))
            parent[max(ra, rb)] = min(ra, rb)
        return [find(i) for i in range(self.n)]

    # -- batch processing -----------------------------------------------------------

    def _process_batch(self, b: int) -> None:
        lo, hi = int(self.bounds[b]), int(self.bounds[b + 1])
        info = BatchInfo(b, self.values[b])
        self._cur = info
        lab, sgn, adj = self.lab, self.sgn, self.adj
        edges = []
        for e in range(lo, hi):
            i, j = int(self.iu[e]), int(self.ju[e])
            adj[i, j] = adj[j, i] = True
            edges.append((i, j))
            if self.is_tree[e]:
                info.new_tree.append((i, j))
                continue
            g = len(self.gen_edge)
            self.gen_edge.append((i, j))
            self.born.append(b)
            self.up.append(None)
            self.members.append([g])
            self.born_min.append(b)
            self.gid[i, j] = self.gid[j, i] = g
            lab[i, j] = lab[j, i] = g
            sgn[i, j], sgn[j, i] = 1, -1
            info.new_gens.append(g)
        for i, j in edges:
            ks = np.flatnonzero(adj[i] & adj[j])
            while len(ks):
                L1, S1 = int(lab[i, j]), int(sgn[i, j])
                L2, S2 = lab[j, ks], sgn[j, ks].astype(np.int64)
                L3, S3 = lab[ks, i], sgn[ks, i].astype(np.int64)
                r = np.maximum(np.maximum(L2, L3), L1)
                quiet = ((L2 == 0) | (L2 == r)) & ((L3 == 0) | (L3 == r)) \
                    & ((L1 == 0) | (L1 == r)) & (S1 + S2 + S3 == 0)
                loud = np.flatnonzero(~quiet)
                if not len(loud):
                    break
                t0 = self.time
                stop = len(ks)
                for pos in loud.tolist():
                    self._relator((i, j, int(ks[pos])))
                    if self.time != t0:
                        stop = pos + 1
                        break
                ks = ks[stop:]
        self._eliminate_pending()
        info.end_time = self.time
        info.free_after = not self.pending
        info.pending = sorted(self.pending.values())
        for g in info.new_gens:
            i, j = self.gen_edge[g]
            r = int(self.lab[i, j])
            if r == 0:
                continue
            if self.up[r] is not None:
                info.general = True
            elif self.born_min[r] >= b:
                info.unrefinable.append(g)
        if b and not self.batches[-1].free_after:
            info.general = True
        self.batches.append(info)
        self._cur = None
        self._nf_memo.clear()

    def _tri_word(self, tri) -> Word:
        i, j, k = tri
        out: list[int] = []
        for a, c in ((i, j), (j, k), (k, i)):
            r = int(self.lab[a, c])
            if r == 0:
                continue
            s = int(self.sgn[a, c])
            e = self.up[r]
            if e is not None and e.kind == "define":
                out.extend(self.nf_at(s * r))
            else:
                out.append(s * r)
        return free_reduce(out)

    def _relator(self, tri, pid: int | None = None) -> None:
        queue = deque([(tri, pid)])
        while queue:
            tri, pid = queue.popleft()
            if pid is not None:
                if pid not in self.pending:
                    continue
                self._drop_pending(pid)
            _, core = cyclic_reduce(self._tri_word(tri))
            if not core:
                continue
            if len(core) == 1:
                touched = self._kill(abs(core[0]), tri)
            elif len(core) == 2 and abs(core[0]) != abs(core[1]):
                a, b = core
                touched = self._union(abs(a), abs(b), -(1 if a > 0 else -1) * (1 if b > 0 else -1), tri)
            else:
                self._add_pending(tri, core)
                continue
            for q in sorted(touched):
                if q in self.pending:
                    queue.append((self.pending[q], q))

    def _add_pending(self, tri, core: Word) -> None:
        pid = self._next_pid
        self._next_pid += 1
        self.pending[pid] = tri
        roots = {abs(a) for a in core}
        self._pend_roots[pid] = roots
        for r in roots:
            self._by_root[r].add(pid)

    def _drop_pending(self, pid: int) -> None:
        self.pending.pop(pid)
        for r in self._pend_roots.pop(pid):
            self._by_root[r].discard(pid)

    def _note_merge(self, kind: str, a: int, b: int, s: int, tri) -> None:
        cur = self._cur
        if cur is None:
            return
        old_a = self.born_min[a] < cur.index
        old_b = b == 0 or self.born_min[b] < cur.index
        if kind == "kill" and old_a:
            cur.merges.append((kind, a, 0, 0, tri))
        elif kind == "union" and old_a and old_b:
            cur.merges.append((kind, a, b, s, tri))
        elif kind == "define" and old_a:
            cur.general = True

    def _kill(self, r: int, tri) -> set[int]:
        self._note_merge("kill", r, 0, 0, tri)
        self.up[r] = Event("kill", self.time, tri)
        self.time += 1
        for g in self.members[r]:
            i, j = self.gen_edge[g]
            self.lab[i, j] = self.lab[j, i] = 0
            self.sgn[i, j] = self.sgn[j, i] = 0
        self.members[r] = None
        return set(self._by_root.pop(r, ()))

    def _union(self, r1: int, r2: int, s: int, tri) -> set[int]:
        """Record r1 = r2 ** s; the smaller class becomes the child."""
        child, parent = (r1, r2) if len(self.members[r1]) <= len(self.members[r2]) else (r2, r1)
        self._note_merge("union", child, parent, s, tri)
        self.up[child] = Event("union", self.time, tri, parent, s)
        self.time += 1
        for g in self.members[child]:
            i, j = self.gen_edge[g]
            self.lab[i, j] = self.lab[j, i] = parent
            if s < 0:
                self.sgn[i, j] = -self.sgn[i, j]
                self.sgn[j, i] = -self.sgn[j, i]
        self.members[parent].extend(self.members[child])
        self.members[child] = None
        self.born_min[parent] = min(self.born_min[parent], self.born_min[child])
        return set(self._by_root.pop(child, ()))

    def _eliminate_pending(self) -> None:
        while self.pending:
            progress = False
            for pid in sorted(self.pending):
                tri = self.pending.get(pid)
                if tri is None:
                    continue
                _, core = cyclic_reduce(self._tri_word(tri))
                counts: dict[int, int] = defaultdict(int)
                for a in core:
                    counts[abs(a)] += 1
                once = [r for r, c in counts.items() if c == 1]
                if not core:
                    self._drop_pending(pid)
                    progress = True
                    continue
                if not once:
                    continue
                cur = self._cur.index if self._cur else len(self.batches)
                once.sort(key=lambda r: (self.born_min[r] < cur, -r))
                r = once[0]
                at = next(q for q, a in enumerate(core) if abs(a) == r)
                x, y = core[:at], core[at + 1:]
                sol = free_reduce(inverse(x) + inverse(y)) if core[at] > 0 else free_reduce(y + x)
                self._drop_pending(pid)
                self._define(r, sol, tri)
                progress = True
                break
            if not progress:
                break

    def _define(self, r: int, word: Word, tri) -> None:
        self._note_merge("define", r, 0, 0, tri)
        self.up[r] = Event("define", self.time, tri, word=word)
        self.time += 1
        touched = set(self._by_root.pop(r, ()))
        for q in sorted(touched):
            if q in self.pending:
                self._relator(self.pending[q], q)
