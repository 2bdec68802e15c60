"""Free-group words, integer Smith normal form, and Stallings folding.

A word is a tuple of nonzero ints; ``g`` and ``-g`` are a generator and its
inverse.
"""

from __future__ import annotations

from typing import Iterable, Sequence

Word = tuple[int, ...]


def free_reduce(word: Iterable[int]) -> Word:
    out: list[int] = []
    for a in word:
        if out and out[-1] == -a:
            out.pop()
        else:
            out.append(a)
    return tuple(out)


def inverse(word: Sequence[int]) -> Word:
    return tuple(-a for a in reversed(word))


def cyclic_reduce(word: Sequence[int]) -> tuple[Word, Word]:
    """Split a reduced word as c . core . c^-1 with ``core`` cyclically reduced."""
    w = free_reduce(word)
    i, j = 0, len(w) - 1
    while i < j and w[i] == -w[j]:
        i += 1
        j -= 1
    return w[:i], w[i:j + 1]


def exponent_vector(word: Iterable[int], index: dict[int, int], size: int) -> list[int]:
    v = [0] * size
    for a in word:
        v[index[abs(a)]] += 1 if a > 0 else -1
    return v


# -- Smith normal form -----------------------------------------------------------

def smith_normal_form(rows: Sequence[Sequence[int]], ncols: int) -> tuple[list[int], list[list[int]]]:
    """Diagonal of the Smith form of an integer matrix plus the column transform.

    Returns ``(diag, V)`` with ``U A V = diag(d_1, ..., d_r, 0, ...)`` for some
    unimodular ``U``; each d_i > 0 divides d_{i+1}.  Python ints never
    overflow, so large entries are handled exactly.
    """
    A = [list(map(int, r)) for r in rows if any(r)]
    m, n = len(A), ncols
    V = [[int(i == j) for j in range(n)] for i in range(n)]

    def swap_cols(a: int, b: int) -> None:
        for row in A:
            row[a], row[b] = row[b], row[a]
        for row in V:
            row[a], row[b] = row[b], row[a]

    def add_col(dst: int, src: int, q: int) -> None:
        # column dst -= q * column src
        for row in A:
            row[dst] -= q * row[src]
        for row in V:
            row[dst] -= q * row[src]

    diag: list[int] = []
    t = 0
    while t < min(m, n):
        best = None
        for i in range(t, m):
            for j in range(t, n):
                a = A[i][j]
                if a and (best is None or abs(a) < best[0]):
                    best = (abs(a), i, j)
                    if best[0] == 1:
                        break
            if best and best[0] == 1:
                break
        if best is None:
            break
        _, i, j = best
        A[t], A[i] = A[i], A[t]
        if j != t:
            swap_cols(t, j)
        while True:
            p = A[t][t]
            dirty = False
            for i in range(t + 1, m):
                if A[i][t]:
                    q = A[i][t] // p
                    if q:
                        A[i] = [x - q * y for x, y in zip(A[i], A[t])]
                    if A[i][t]:
                        dirty = True
            for j in range(t + 1, n):
                if A[t][j]:
                    q = A[t][j] // p
                    if q:
                        add_col(j, t, q)
                    if A[t][j]:
                        dirty = True
            if dirty:
                # move the smallest remainder into the pivot slot and repeat
                cand = [(abs(A[i][t]), i, t) for i in range(t + 1, m) if A[i][t]]
                cand += [(abs(A[t][j]), t, j) for j in range(t + 1, n) if A[t][j]]
                _, i, j = min(cand)
                if j == t:
                    A[t], A[i] = A[i], A[t]
                else:
                    swap_cols(t, j)
                continue
            bad = next(((i, j) for i in range(t + 1, m) for j in range(t + 1, n) if A[i][j] % p), None)
            if bad is None:
                break
            A[t] = [x + y for x, y in zip(A[t], A[bad[0]])]
        if A[t][t] < 0:
            A[t] = [-x for x in A[t]]
        diag.append(A[t][t])
        t += 1
    return diag, V


def abelian_rank_and_torsion(rows: Sequence[Sequence[int]], ncols: int) -> tuple[int, list[int]]:
    diag, _ = smith_normal_form(rows, ncols)
    return ncols - len(diag), [d for d in diag if d > 1]


class AbelianImage:
    """Decides membership of exponent vectors in the row lattice of a relator matrix."""

    def __init__(self, rows: Sequence[Sequence[int]], ncols: int):
        self.ncols = ncols
        self.diag, self.V = smith_normal_form(rows, ncols)

    def is_zero(self, vec: Sequence[int]) -> bool:
        r = len(self.diag)
        for j in range(self.ncols):
            s = sum(vec[i] * self.V[i][j] for i in range(self.ncols) if vec[i])
            if j < r:
                if s % self.diag[j]:
                    return False
            elif s:
                return False
        return True


# -- Stallings folding -------------------------------------------------------------

class FoldedGraph:
    """Stallings graph of the subgroup generated by ``words`` (base vertex 0)."""

    def __init__(self, words: Iterable[Sequence[int]]):
        self.parent: list[int] = [0]
        self.out: list[dict[int, int]] = [{}]
        pending: list[tuple[int, int]] = []
        for w in words:
            w = free_reduce(w)
            if not w:
                continue
            v = 0
            for k, a in enumerate(w):
                u = 0 if k == len(w) - 1 else self._new()
                pending += self._link(v, a, u)
                v = u
        self._fold(pending)

    def _new(self) -> int:
        self.parent.append(len(self.parent))
        self.out.append({})
        return len(self.parent) - 1

    def find(self, v: int) -> int:
        while self.parent[v] != v:
            self.parent[v] = self.parent[self.parent[v]]
            v = self.parent[v]
        return v

    def _link(self, v: int, a: int, u: int) -> list[tuple[int, int]]:
        clash = []
        for s, t, lab in ((v, u, a), (u, v, -a)):
            cur = self.out[s].get(lab)
            if cur is None:
                self.out[s][lab] = t
            elif self.find(cur) != self.find(t):
                clash.append((cur, t))
        return clash

    def _fold(self, pending: list[tuple[int, int]]) -> None:
        while pending:
            a, b = pending.pop()
            a, b = self.find(a), self.find(b)
            if a == b:
                continue
            if len(self.out[a]) < len(self.out[b]):
                a, b = b, a
            self.parent[b] = a
            for lab, t in self.out[b].items():
                cur = self.out[a].get(lab)
                if cur is None:
                    self.out[a][lab] = t
                elif self.find(cur) != self.find(t):
                    pending.append((cur, t))
            self.out[b] = {}

    def vertices(self) -> list[int]:
        return [v for v in range(len(self.parent)) if self.find(v) == v]

    def rank(self) -> int:
        verts = self.vertices()
        edges = set()
        for v in verts:
            for lab, t in self.out[v].items():
                if lab > 0:
                    edges.add((v, lab, self.find(t)))
        return len(edges) - len(verts) + 1

    def contains(self, word: Sequence[int]) -> bool:
        v = self.find(0)
        for a in free_reduce(word):
            t = self.out[v].get(a)
            if t is None:
                return False
            v = self.find(t)
        return v == self.find(0)
