"""Reference computations that share no code with the package.

``integral_homology`` first shrinks the chain complex by algebraic
reductions along unit coefficients (each reduction deletes a pair of
cells and keeps the integral homology), then reads Betti numbers and
torsion off the Smith normal form of what is left, computed by sympy.
"""

from collections import defaultdict
from itertools import combinations

from sympy import Matrix, ZZ
from sympy.matrices.normalforms import smith_normal_form


def all_faces(maximal):
    out = set()
    for s in maximal:
        s = tuple(sorted(s))
        for k in range(1, len(s) + 1):
            out.update(combinations(s, k))
    return out


def free_pairs(maximal):
    """Brute force: pairs (f, g) where g is the only face strictly containing f."""
    faces = all_faces(maximal)
    out = []
    for f in faces:
        above = [g for g in faces if len(g) > len(f) and set(f) < set(g)]
        if len(above) == 1:
            out.append((f, above[0]))
    return sorted(out)


def _boundary(faces):
    bd = {}
    cobd = defaultdict(dict)
    for f in faces:
        row = {}
        if len(f) > 1:
            for j in range(len(f)):
                g = f[:j] + f[j + 1:]
                row[g] = (-1) ** j
                cobd[g][f] = (-1) ** j
        bd[f] = row
    return bd, cobd


def _reduce(bd, cobd):
    """Delete pairs (s, t) with <ds, t> = +-1 until none is left."""
    alive = set(bd)
    stack = sorted(alive, key=len)
    while stack:
        s = stack.pop()
        if s not in alive:
            continue
        t = next((t for t, c in bd[s].items() if abs(c) == 1 and t in alive), None)
        if t is None:
            continue
        c = bd[s][t]
        ds = bd[s]
        for u, cu in list(cobd[t].items()):
            if u == s:
                continue
            k = cu * c  # c is a unit, so cu / c == cu * c
            row = bd[u]
            for r, cr in ds.items():
                v = row.get(r, 0) - k * cr
                if v:
                    row[r] = v
                    cobd[r][u] = v
                else:
                    row.pop(r, None)
                    cobd[r].pop(u, None)
            stack.append(u)
        for r in ds:
            cobd[r].pop(s, None)
        for u in list(cobd[t]):
            bd[u].pop(t, None)
        for w in cobd.get(s, {}):
            bd[w].pop(s, None)
        for r in bd[t]:
            cobd[r].pop(t, None)
        alive.discard(s)
        alive.discard(t)
        del bd[s], bd[t]
        cobd.pop(s, None)
        cobd.pop(t, None)
    return alive


def integral_homology(maximal):
    """Unreduced integral homology as a list of ``(betti, torsion)`` by dimension."""
    faces = all_faces(maximal)
    top = max(len(f) for f in faces) - 1
    bd, cobd = _boundary(faces)
    alive = _reduce(bd, cobd)
    cells = defaultdict(list)
    for f in sorted(alive):
        cells[len(f) - 1].append(f)
    ranks, torsion = {}, {}
    for k in range(1, top + 1):
        rows, cols = cells[k - 1], cells[k]
        if not rows or not cols:
            ranks[k], torsion[k - 1] = 0, ()
            continue
        ri = {f: i for i, f in enumerate(rows)}
        M = [[0] * len(cols) for _ in rows]
        for j, f in enumerate(cols):
            for g, c in bd[f].items():
                M[ri[g]][j] = c
        D = smith_normal_form(Matrix(M), domain=ZZ)
        diag = [abs(int(D[i, i])) for i in range(min(D.shape)) if D[i, i] != 0]
        ranks[k] = len(diag)
        torsion[k - 1] = tuple(d for d in diag if d > 1)
    out = []
    for k in range(top + 1):
        b = len(cells[k]) - ranks.get(k, 0) - ranks.get(k + 1, 0)
        out.append((b, torsion.get(k, ())))
    return out


def is_homology_point(maximal):
    h = integral_homology(maximal)
    return h[0] == (1, ()) and all(x == (0, ()) for x in h[1:])


def euler_characteristic(maximal):
    return sum((-1) ** (len(f) - 1) for f in all_faces(maximal))
