"""Integer homology through Smith normal form.

Boundary matrices are held sparsely as ``{row: {col: int}}``. Unit pivots
are eliminated first (the overwhelmingly common case for simplicial and
cubical boundaries); whatever is left is finished with a dense Smith
normal form over Python integers, so torsion is exact.
"""

import heapq
from dataclasses import dataclass


@dataclass(frozen=True)
class HomologyGroup:
    """``Z^betti + sum Z/t`` for ``t`` in ``torsion``."""

    betti: int
    torsion: tuple = ()

    def is_trivial(self):
        return self.betti == 0 and not self.torsion

    def __str__(self):
        parts = []
        if self.betti:
            parts.append("Z" if self.betti == 1 else f"Z^{self.betti}")
        parts.extend(f"Z/{t}" for t in self.torsion)
        return " + ".join(parts) if parts else "0"


def smith_normal_form_dense(M):
    """Nonzero diagonal of the Smith normal form of an integer matrix.

    ``M`` is a list of lists of ints. The result ``d`` satisfies
    ``d[i] | d[i+1]`` and all entries are positive.
    """
    A = [list(map(int, row)) for row in M]
    m = len(A)
    n = len(A[0]) if m else 0
    diag = []
    t = 0
    while t < m and t < n:
        # smallest nonzero entry in the trailing block
        best = None
        for i in range(t, m):
            for j in range(t, n):
                v = A[i][j]
                if v and (best is None or abs(v) < best[0]):
                    best = (abs(v), i, j)
                    if best[0] == 1:
                        break
            if best and best[0] == 1:
                break
        if best is None:
            break
        _, i, j = best
        A[t], A[i] = A[i], A[t]
        for row in A:
            row[t], row[j] = row[j], row[t]
        while True:
            p = A[t][t]
            done = True
            for i in range(t + 1, m):
                if A[i][t]:
                    q = A[i][t] // p
                    if q:
                        At, Ai = A[t], A[i]
                        for k in range(t, n):
                            Ai[k] -= q * At[k]
                    if A[i][t]:
                        done = False
            for j in range(t + 1, n):
                if A[t][j]:
                    q = A[t][j] // p
                    if q:
                        for row in A:
                            row[j] -= q * row[t]
                    if A[t][j]:
                        done = False
            if done:
                # enforce divisibility of the trailing block
                bad = None
                for i in range(t + 1, m):
                    for j in range(t + 1, n):
                        if A[i][j] % p:
                            bad = i
                            break
                    if bad is not None:
                        break
                if bad is None:
                    break
                for k in range(t, n):
                    A[t][k] += A[bad][k]
                continue
            # move the smallest remaining entry of row/col t to the pivot
            best = (abs(A[t][t]), t, t)
            for i in range(t + 1, m):
                if A[i][t] and abs(A[i][t]) < best[0]:
                    best = (abs(A[i][t]), i, t)
            for j in range(t + 1, n):
                if A[t][j] and abs(A[t][j]) < best[0]:
                    best = (abs(A[t][j]), t, j)
            _, i, j = best
            A[t], A[i] = A[i], A[t]
            for row in A:
                row[t], row[j] = row[j], row[t]
        diag.append(abs(A[t][t]))
        t += 1
    return diag


def elementary_divisors(rows, ncols=None):
    """Elementary divisors of a sparse integer matrix ``{r: {c: v}}``."""
    R = {r: {c: int(v) for c, v in cols.items() if v} for r, cols in rows.items()}
    R = {r: cols for r, cols in R.items() if cols}
    colidx = {}
    for r, cols in R.items():
        for c in cols:
            colidx.setdefault(c, set()).add(r)
    ones = 0
    heap = [(len(cols), r) for r, cols in R.items()]
    heapq.heapify(heap)
    deferred = set()
    while heap:
        size, r = heapq.heappop(heap)
        cols = R.get(r)
        if cols is None or len(cols) != size:
            if cols is not None and cols:
                heapq.heappush(heap, (len(cols), r))
            continue
        unit = None
        for c, v in cols.items():
            if v == 1 or v == -1:
                if unit is None or len(colidx[c]) < len(colidx[unit]):
                    unit = c
        if unit is None:
            deferred.add(r)
            continue
        deferred.discard(r)
        u = cols[unit]
        for s in list(colidx[unit]):
            if s == r:
                continue
            row_s = R[s]
            f = row_s[unit] * u
            for c, v in cols.items():
                nv = row_s.get(c, 0) - f * v
                if nv:
                    if c not in row_s:
                        colidx[c].add(s)
                    row_s[c] = nv
                else:
                    if c in row_s:
                        del row_s[c]
                        colidx[c].discard(s)
            if row_s:
                heapq.heappush(heap, (len(row_s), s))
                if s in deferred and any(abs(v) == 1 for v in row_s.values()):
                    deferred.discard(s)
            else:
                del R[s]
                deferred.discard(s)
        for c in cols:
            colidx[c].discard(r)
        del R[r]
        ones += 1
    rest = [r for r in R if R[r]]
    if not rest:
        return [1] * ones
    used = sorted({c for r in rest for c in R[r]})
    pos = {c: k for k, c in enumerate(used)}
    dense = [[0] * len(used) for _ in rest]
    for i, r in enumerate(rest):
        for c, v in R[r].items():
            dense[i][pos[c]] = v
    tail = smith_normal_form_dense(dense)
    return [1] * ones + tail


def homology_from_boundaries(sizes, boundaries, *, reduced=True):
    """Homology from chain group ranks and boundary maps.

    ``sizes[k]`` is the rank of ``C_k``. ``boundaries[k]`` is the sparse
    matrix of ``d_k: C_k -> C_{k-1}`` with rows indexed by ``k``-cells.
    With ``reduced=True`` the augmentation ``C_0 -> Z`` is included.
    """
    top = len(sizes) - 1
    divisors = {}
    for k in range(1, top + 1):
        divisors[k] = elementary_divisors(boundaries.get(k, {}))
    if reduced and sizes and sizes[0] > 0:
        divisors[0] = [1]
    else:
        divisors[0] = []
    groups = []
    for k in range(top + 1):
        rank_out = len(divisors[k])
        d_in = divisors.get(k + 1, [])
        betti = sizes[k] - rank_out - len(d_in)
        torsion = tuple(sorted(d for d in d_in if d > 1))
        groups.append(HomologyGroup(betti, torsion))
    return groups

