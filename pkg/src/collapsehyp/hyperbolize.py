"""Piecewise hyperbolic realization of collapsible complexes.

A collapse ``C_n -> ... -> C_0 = point`` is replayed backwards. Undoing an
elementary collapse that removed a ``k``-simplex ``D`` with free face
``t`` attaches a ``k``-ball along the disk ``Gamma = D minus the open star
of t``. The ball is assembled from one block ``F_1 x [0,1]^i`` for every
chain ``F_1 < ... < F_i`` of interior faces of ``Gamma``. Each block is
attached to the old complex along ``F_1 x {0}^i`` and to the neighbouring
blocks along the chain inclusions.

Geometry. The chain coordinates of a block are orthonormal directions
normal to the old cells, and a block vertex ``(x, S)`` sits at distance
``edge_scale * sqrt(|S|)`` from ``x`` along the unit normal
``sum_{F in S} e_F / sqrt(|S|)``. Every block therefore meets the old
complex at right angles, which is what the realization is checked for.

Two levels are exposed. :func:`free_face_disk`, :func:`enumerate_chains`,
:func:`build_blocks` and :func:`realize_metric` work on a single step
over a simplicial complex. :func:`hyperbolize` runs the whole reverse
collapse, where from the second step on ``Gamma`` is a union of cells of
the blocks built so far. All those cells are cubes, so there a vertex is
a set of atoms ``(step, index)`` and a cell is an interval ``(m, A)`` of
atom sets.
"""

import json
import math
from dataclasses import dataclass, field
from itertools import combinations, permutations

import numpy as np
from scipy.optimize import least_squares
from scipy.sparse import lil_matrix

from .collapse import CollapseSequence, ElementaryCollapse, replay
from .complex import CellComplex, ProductCell, SimplicialComplex, _subfaces, make_face
from .errors import (
    ConstructionError,
    DegeneracyError,
    InvalidInputError,
    RealizationError,
    StaleStepError,
)
from .hypgeom import gram_to_coords_batch, minkowski_gram, simplex_dihedral_angles

RESIDUAL_TOL = 1e-8
DEFAULT_EDGE_SCALE = 0.25
RIGHT = math.pi / 2
METRIC_FORMAT = "collapsehyp-metric/1"


# ---------------------------------------------------------------------------
# One reverse step over a simplicial complex


@dataclass(frozen=True)
class FreeFaceDisk:
    """The disk ``Gamma`` along which a removed simplex is re-attached."""

    gamma: SimplicialComplex
    interior_faces: tuple
    free_face: tuple
    coface: tuple

    @property
    def apex(self):
        (w,) = set(self.coface) - set(self.free_face)
        return w


@dataclass(frozen=True)
class FaceChain:
    faces: tuple

    def __post_init__(self):
        if not self.faces:
            raise InvalidInputError("chains are nonempty")
        for a, b in zip(self.faces, self.faces[1:]):
            if not set(a) < set(b):
                raise InvalidInputError(f"chain is not strictly increasing at {a} < {b}")

    def __len__(self):
        return len(self.faces)

    @property
    def minimum(self):
        return self.faces[0]


@dataclass(frozen=True)
class Block:
    """``chain[0] x [0,1]^len(chain)``, glued to the old complex along ``glue_face``."""

    chain: FaceChain
    cell: ProductCell
    glue_face: ProductCell

    @property
    def dim(self):
        return self.cell.dim


def free_face_disk(sigma: SimplicialComplex, e: ElementaryCollapse) -> FreeFaceDisk:
    """``Gamma = coface`` minus the open star of the free face, with its interior.

    ``sigma`` is the complex in which ``e`` is a free pair. The interior
    faces are the faces of ``Gamma`` off its boundary sphere; a single
    vertex has empty boundary and is its own interior.
    """
    tau, delta = e.free_face, e.coface
    if delta not in sigma or tau not in sigma:
        raise StaleStepError(f"{e.to_line()} does not refer to faces of the complex")
    cof = [g for g in sigma.cofaces(tau)]
    if cof != [delta]:
        raise StaleStepError(f"{tau} is not free in the complex")
    ts = set(tau)
    faces = [f for f in _subfaces(delta) if f != delta and not ts <= set(f)]
    gamma = SimplicialComplex.from_faces(faces)
    if gamma.dimension == 0:
        boundary = set()
    else:
        if not gamma.is_pseudomanifold():
            raise DegeneracyError(f"Gamma of {e.to_line()} is not a pseudomanifold")
        boundary = set(gamma.boundary().faces)
        if not boundary:
            raise DegeneracyError(f"Gamma of {e.to_line()} has empty boundary")
    if not gamma.has_homology_of_point():
        raise DegeneracyError(f"Gamma of {e.to_line()} is not acyclic")
    interior = tuple(sorted((f for f in gamma.faces if f not in boundary), key=lambda f: (len(f), f)))
    w = e.apex
    if set(interior) != {f for f in gamma.faces if w in f}:
        raise DegeneracyError("interior faces of Gamma are not the faces through the apex")
    return FreeFaceDisk(gamma, interior, tau, delta)


def poset_chains(elements, above):
    """All nonempty chains of a finite poset.

    ``above[x]`` lists the elements strictly greater than ``x``. Chains are
    returned as tuples in increasing order, depth first from each element
    of ``elements`` in the given order.
    """
    out = []
    stack = []

    def extend(x):
        stack.append(x)
        out.append(tuple(stack))
        for y in above[x]:
            extend(y)
        stack.pop()

    for x in elements:
        extend(x)
    return out


def enumerate_chains(d: FreeFaceDisk):
    faces = list(d.interior_faces)
    above = {f: [g for g in faces if set(f) < set(g)] for f in faces}
    return [FaceChain(c) for c in poset_chains(faces, above)]


class BlockComplex(CellComplex):
    """Old complex plus the blocks of one reverse step."""

    def __init__(self, base: SimplicialComplex, disk: FreeFaceDisk, blocks):
        super().__init__([ProductCell(f, frozenset(), frozenset()) for f in base.facets])
        self.base = base
        self.disk = disk
        self.blocks = list(blocks)
        for b in self.blocks:
            self.add(b.cell)

    def block_cells(self):
        return CellComplex([b.cell for b in self.blocks])


def build_blocks(d: FreeFaceDisk, sigma_prime: SimplicialComplex) -> BlockComplex:
    """One block per chain of interior faces of ``Gamma``, glued to ``sigma_prime``.

    Cube coordinate ``F_j`` of a block is named by the face ``F_j`` itself,
    so blocks of nested chains share faces by construction.
    """
    for f in d.gamma.facets:
        if f not in sigma_prime:
            raise ConstructionError(f"Gamma face {f} missing from the old complex")
    blocks = []
    for ch in enumerate_chains(d):
        cell = ProductCell(ch.minimum, frozenset(), frozenset(ch.faces))
        glue = ProductCell(ch.minimum, frozenset(), frozenset())
        blocks.append(Block(ch, cell, glue))
    bc = BlockComplex(sigma_prime, d, blocks)
    ball = bc.block_cells()
    h = ball.cellular_homology()
    if not all(g.is_trivial() for g in h) or ball.euler_characteristic() != 1:
        raise ConstructionError(
            f"blocks over {d.coface} do not form a ball: homology {[str(g) for g in h]}, "
            f"chains {[b.chain.faces for b in blocks]}"
        )
    return bc


# ---------------------------------------------------------------------------
# Normal-exponential edge lengths


def normal_edge_length(base_length, n_s, n_t, n_common, edge_scale):
    """Distance between ``exp_x(v_S)`` and ``exp_y(v_T)``.

    ``x, y`` lie in a totally geodesic plane at distance ``base_length``;
    ``v_S = edge_scale * sum_{F in S} e_F`` for orthonormal ``e_F`` normal
    to that plane, and ``n_common = |S & T|``.
    """
    a = edge_scale * math.sqrt(n_s)
    b = edge_scale * math.sqrt(n_t)
    c = math.cosh(a) * math.cosh(b) * math.cosh(base_length)
    if n_s and n_t:
        c -= math.sinh(a) * math.sinh(b) * n_common / math.sqrt(n_s * n_t)
    return math.acosh(max(c, 1.0))


def _pair(u, v):
    return frozenset((u, v))


class _Lengths(dict):
    """Edge lengths keyed by unordered vertex pairs."""

    def of(self, u, v):
        return 0.0 if u == v else self[_pair(u, v)]


# ---------------------------------------------------------------------------
# Residuals and polishing


@dataclass
class _Ridge:
    """A codimension-2 face of a block where a right angle is prescribed."""

    block: int
    ridge: tuple
    simplices: list  # (simplex labels, i, j): angle at the face opposite i, j
    target: float = RIGHT


def _simplex_gram(simplex, lengths):
    m = len(simplex)
    L = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            L[i, j] = L[j, i] = lengths.of(simplex[i], simplex[j])
    return -np.cosh(L)


def _ridge_angle(r: _Ridge, lengths, cache=None):
    total = 0.0
    for simplex, i, j in r.simplices:
        key = simplex
        ang = None if cache is None else cache.get(key)
        if ang is None:
            ang = simplex_dihedral_angles(_simplex_gram(simplex, lengths))
            if cache is not None:
                cache[key] = ang
        total += ang[i, j]
    return total


def _ridge_for(block_index, ridge_chain, block_chains):
    """Collect the block simplices around a ridge simplex."""
    rs = set(ridge_chain)
    simplices = []
    for ch in block_chains:
        if rs <= set(ch):
            i, j = [k for k, v in enumerate(ch) if v not in rs]
            simplices.append((tuple(ch), i, j))
    return _Ridge(block_index, tuple(ridge_chain), simplices)


def _bound_residual(length, edge_scale):
    lo, hi = edge_scale / 2, 2 * edge_scale
    if length < lo:
        return lo - length
    if length > hi:
        return length - hi
    return 0.0


@dataclass
class ResidualReport:
    """Constraint residuals of a realization (all in radians or length units)."""

    max_angle_error: float = 0.0
    max_length_spread: float = 0.0
    max_bound_violation: float = 0.0
    n_glue_ridges: int = 0
    n_edges: int = 0
    polished: bool = False
    worst: str = ""

    @property
    def residual(self):
        return max(self.max_angle_error, self.max_length_spread, self.max_bound_violation)

    @property
    def ok(self):
        return self.residual < RESIDUAL_TOL

    def as_dict(self):
        return {
            "residual": self.residual,
            "max_angle_error": self.max_angle_error,
            "max_length_spread": self.max_length_spread,
            "max_bound_violation": self.max_bound_violation,
            "n_glue_ridges": self.n_glue_ridges,
            "n_edges": self.n_edges,
            "polished": self.polished,
            "worst": self.worst,
        }


def _evaluate(ridges, bound_edges, lengths, edge_scale):
    rep = ResidualReport(n_glue_ridges=len(ridges), n_edges=len(bound_edges))
    cache = {}
    worst = (0.0, "")
    for r in ridges:
        err = abs(_ridge_angle(r, lengths, cache) - r.target)
        if err > rep.max_angle_error:
            rep.max_angle_error = err
        if err > worst[0]:
            worst = (err, f"dihedral angle at ridge {_fmt_labels(r.ridge)} of block {r.block}")
    for e in bound_edges:
        u, v = tuple(e)
        err = _bound_residual(lengths[e], edge_scale)
        if err > rep.max_bound_violation:
            rep.max_bound_violation = err
        if err > worst[0]:
            worst = (err, f"length of edge {_fmt_labels((u, v))}")
    rep.worst = worst[1]
    return rep


def _polish(ridges, bound_edges, lengths, free_edges, edge_scale, max_nfev=500):
    """Least-squares adjustment of ``free_edges`` towards all constraints.

    Variables are log edge lengths; residuals are the ridge angle errors
    and the edge-length bound violations. ``lengths`` is updated in place.
    """
    free_edges = list(free_edges)
    if not free_edges:
        return
    col = {e: k for k, e in enumerate(free_edges)}
    x0 = np.log([lengths[e] for e in free_edges])
    nres = len(ridges) + len(bound_edges)
    if nres == 0:
        return
    sparsity = lil_matrix((nres, len(free_edges)), dtype=int)
    for r_i, r in enumerate(ridges):
        for simplex, _, _ in r.simplices:
            for a, b in combinations(simplex, 2):
                k = col.get(_pair(a, b))
                if k is not None:
                    sparsity[r_i, k] = 1
    for b_i, e in enumerate(bound_edges):
        k = col.get(e)
        if k is not None:
            sparsity[len(ridges) + b_i, k] = 1

    def fun(x):
        for e, v in zip(free_edges, np.exp(x)):
            lengths[e] = float(v)
        cache = {}
        out = [_ridge_angle(r, lengths, cache) - r.target for r in ridges]
        out.extend(_bound_residual(lengths[e], edge_scale) for e in bound_edges)
        return np.asarray(out)

    sol = least_squares(fun, x0, jac_sparsity=sparsity, method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=max_nfev)
    fun(sol.x)


# ---------------------------------------------------------------------------
# Metric complex


class MetricComplex:
    """A simplicial complex whose maximal simplices are hyperbolic simplices.

    ``labels[i]`` is the combinatorial label of vertex ``i``; ``simplices``
    are the maximal simplices as tuples of vertex indices; ``coords[k]``
    holds one hyperboloid point per vertex of ``simplices[k]`` (rows, time
    coordinate first). Edge lengths are shared by all simplices through
    ``edge_lengths``, keyed by ``(i, j)`` with ``i < j``.
    """

    def __init__(self, names, simplices, edge_lengths, *, born=None, coords=None,
                 cells=(), glue_ridges=(), steps=(), edge_scale=None, meta=None):
        self.names = list(names)
        self.simplices = [tuple(s) for s in simplices]
        self.edge_lengths = {tuple(sorted(k)): float(v) for k, v in edge_lengths.items()}
        self.born = list(born) if born is not None else [0] * len(self.names)
        self.cells = list(cells)
        self.glue_ridges = list(glue_ridges)
        self.steps = list(steps)
        self.edge_scale = edge_scale
        self.meta = dict(meta or {})
        self.coords = coords if coords is not None else self._realize()
        self._complex = None
        self._star = None

    # -- construction ------------------------------------------------------

    def length(self, i, j):
        if i == j:
            return 0.0
        return self.edge_lengths[(i, j) if i < j else (j, i)]

    def gram(self, simplex):
        """Minkowski Gram matrix ``-cosh(l_ij)`` from the stored edge lengths."""
        m = len(simplex)
        L = np.zeros((m, m))
        for a in range(m):
            for b in range(a + 1, m):
                L[a, b] = L[b, a] = self.length(simplex[a], simplex[b])
        return -np.cosh(L)

    def _realize(self):
        coords = [None] * len(self.simplices)
        by_size = {}
        for k, s in enumerate(self.simplices):
            by_size.setdefault(len(s), []).append(k)
        for m, ks in by_size.items():
            if m == 1:
                for k in ks:
                    coords[k] = np.array([[1.0, 0.0]])
                continue
            G = np.stack([self.gram(self.simplices[k]) for k in ks])
            X = gram_to_coords_batch(G)
            for k, x in zip(ks, X):
                coords[k] = x
        return coords

    # -- queries -------------------------------------------------------------

    @property
    def n_vertices(self):
        return len(self.names)

    @property
    def dimension(self):
        return max((len(s) for s in self.simplices), default=0) - 1

    @property
    def complex(self) -> SimplicialComplex:
        if self._complex is None:
            self._complex = SimplicialComplex(self.simplices)
        return self._complex

    def star(self, v):
        """Indices of the maximal simplices containing vertex ``v``."""
        if self._star is None:
            star = [[] for _ in self.names]
            for k, s in enumerate(self.simplices):
                for x in s:
                    star[x].append(k)
            self._star = star
        return self._star[v]

    def coords_gram(self, k):
        """Gram matrix of simplex ``k`` recomputed from its coordinates."""
        return minkowski_gram(self.coords[k])

    def length_spread(self):
        """Largest disagreement between realized edge lengths and the shared table.

        Every maximal simplex is realized independently, so this measures
        how well simplices sharing a face agree on it.
        """
        worst = 0.0
        for s, X in zip(self.simplices, self.coords):
            if len(s) < 2:
                continue
            G = minkowski_gram(X)
            D = np.arccosh(np.maximum(-G, 1.0))
            for a in range(len(s)):
                for b in range(a + 1, len(s)):
                    worst = max(worst, abs(D[a, b] - self.length(s[a], s[b])))
        return worst

    def image(self, step):
        """Vertices of the image of ``C_step`` (cells created at or before ``step``)."""
        return {i for i, b in enumerate(self.born) if b <= step}

    def image_complex(self, step):
        keep = self.image(step)
        faces = set()
        for s in self.simplices:
            sub = tuple(v for v in s if v in keep)
            if sub:
                faces.add(sub)
        return SimplicialComplex(faces)

    @property
    def n_steps(self):
        return max(self.born, default=0)

    def glue_angles(self):
        return np.array([g["angle"] for g in self.glue_ridges])

    def max_residual(self):
        return max((st["residual"] for st in self.steps), default=0.0)

    # -- serialization -------------------------------------------------------

    def to_dict(self):
        return {
            "format": METRIC_FORMAT,
            "edge_scale": self.edge_scale,
            "meta": self.meta,
            "vertices": [{"name": n, "born": b} for n, b in zip(self.names, self.born)],
            "edges": [[i, j, l] for (i, j), l in sorted(self.edge_lengths.items())],
            "simplices": [list(s) for s in self.simplices],
            "coords": [np.asarray(x).tolist() for x in self.coords],
            "cells": self.cells,
            "glue_ridges": self.glue_ridges,
            "steps": self.steps,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")) + "\n"

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != METRIC_FORMAT:
            raise InvalidInputError(f"not a metric file (format {d.get('format')!r})")
        try:
            names = [v["name"] for v in d["vertices"]]
            born = [int(v["born"]) for v in d["vertices"]]
            edges = {(int(i), int(j)): float(l) for i, j, l in d["edges"]}
            simplices = [tuple(int(x) for x in s) for s in d["simplices"]]
            coords = [np.asarray(x, dtype=float) for x in d["coords"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed metric file: {exc}") from None
        if len(coords) != len(simplices) or any(len(x) != len(s) for x, s in zip(coords, simplices)):
            raise InvalidInputError("malformed metric file: coordinates do not match simplices")
        n = len(names)
        for s in simplices:
            if any(not 0 <= v < n for v in s):
                raise InvalidInputError("malformed metric file: vertex index out of range")
            for a, b in combinations(sorted(s), 2):
                if (a, b) not in edges:
                    raise InvalidInputError(f"malformed metric file: missing edge {a}-{b}")
        return cls(names, simplices, edges, born=born, coords=coords, cells=d.get("cells", []),
                   glue_ridges=d.get("glue_ridges", []), steps=d.get("steps", []),
                   edge_scale=d.get("edge_scale"), meta=d.get("meta", {}))

    @classmethod
    def from_json(cls, text):
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"malformed metric file: {exc}") from None
        return cls.from_dict(d)

    @classmethod
    def from_lengths(cls, simplices, lengths, names=None):
        """Metric complex from maximal simplices and an edge-length table.

        ``lengths`` maps vertex pairs (any order) to lengths; vertices are
        numbered in sorted order of their labels.
        """
        labels = sorted({v for s in simplices for v in s}, key=repr)
        pos = {v: i for i, v in enumerate(labels)}
        edges = {}
        for (a, b), l in lengths.items():
            i, j = sorted((pos[a], pos[b]))
            edges[(i, j)] = l
        simp = [tuple(pos[v] for v in s) for s in simplices]
        return cls(names or [str(v) for v in labels], simp, edges)


def _fmt_labels(labels):
    return "(" + ", ".join(_name(v) for v in labels) + ")"


def _name(v):
    if isinstance(v, frozenset):
        return "+".join(f"{s}.{i}" for s, i in sorted(v)) if v else "o"
    if isinstance(v, tuple) and len(v) == 2 and isinstance(v[1], frozenset):
        x, S = v
        parts = ["-".join(map(str, a)) if isinstance(a, tuple) else str(a) for a in sorted(S, key=repr)]
        return "|".join([str(x)] + parts)
    return str(v)


# ---------------------------------------------------------------------------
# Single step: realize a block complex over a simplicial base


def _block_constraints(cells, edge_scale, base_lengths=None):
    """Closed-form edge lengths, right-angle ridges and bounded edges of some cells."""
    base_lengths = {frozenset(k): v for k, v in (base_lengths or {}).items()}
    lengths = _Lengths()

    def base_len(x, y):
        if x == y:
            return 0.0
        return base_lengths.get(frozenset((x, y)), edge_scale)

    for c in cells:
        for ch in c.staircase():
            for u, v in combinations(ch, 2):
                key = _pair(u, v)
                if key in lengths:
                    continue
                (x, S), (y, T) = u, v
                lengths[key] = normal_edge_length(base_len(x, y), len(S), len(T), len(S & T), edge_scale)
    ridges = []
    blocks = [c for c in cells if c.axes and not c.pinned]
    for bi, c in enumerate(blocks):
        chains = c.staircase()
        for r in _block_ridge_cells(c):
            ridges.append(_ridge_for(bi, r.staircase()[0], chains))
    bound = sorted({_pair(*f.vertices()) if f.dim == 1 else None for c in cells for f in c.faces()} - {None}, key=repr)
    return lengths, ridges, bound


def realize_metric(b: CellComplex, edge_scale=DEFAULT_EDGE_SCALE, *, base_lengths=None, polish=True):
    """Realize every cell of ``b`` with hyperbolic simplices.

    Cells without cube factor are base simplices; their edges get
    ``base_lengths`` (a map from vertex pairs of the base) or
    ``edge_scale``. A cell ``F x [0,1]^A`` is a block glued along
    ``F x {0}^A`` and gets normal-exponential edge lengths. Returns
    ``(MetricComplex, ResidualReport)``; raises
    :class:`RealizationError` when the residual stays above tolerance.
    """
    if not edge_scale > 0:
        raise InvalidInputError("edge_scale must be positive")
    cells = b.cells
    lengths, ridges, bound = _block_constraints(cells, edge_scale, base_lengths)
    rep = _evaluate(ridges, bound, lengths, edge_scale)
    if polish and not rep.ok:
        new_edges = sorted((e for e in lengths if any(v[1] for v in e)), key=repr)
        _polish(ridges, bound, lengths, new_edges, edge_scale)
        rep = _evaluate(ridges, bound, lengths, edge_scale)
        rep.polished = True
    labels = sorted({v for c in cells for v in c.vertices()}, key=_label_key)
    pos = {v: i for i, v in enumerate(labels)}
    simplices = []
    for c in _maximal_cells(cells):
        for ch in c.staircase():
            simplices.append(tuple(pos[v] for v in ch))
    edges = {}
    for e, l in lengths.items():
        u, v = tuple(e)
        i, j = sorted((pos[u], pos[v]))
        edges[(i, j)] = l
    glue = []
    for r in ridges:
        glue.append({"block": r.block, "ridge": [pos[v] for v in r.ridge], "angle": _ridge_angle(r, lengths)})
    m = MetricComplex([_name(v) for v in labels], simplices, edges, glue_ridges=glue, edge_scale=edge_scale)
    rep.max_length_spread = m.length_spread()
    m.steps = [{"step": 1, **rep.as_dict()}]
    if not rep.ok:
        raise RealizationError(f"realization residual {rep.residual:.3e} above tolerance; worst: {rep.worst}",
                               worst_constraint=rep.worst, residual=rep.residual)
    return m, rep


def _block_ridge_cells(c: ProductCell):
    """Codimension-2 faces of a block comparable with its glue face."""
    out = []
    if len(c.axes) == 1:
        if len(c.base) > 1:
            for j in range(len(c.base)):
                out.append(ProductCell(c.base[:j] + c.base[j + 1:], frozenset(), frozenset()))
    else:
        for a, b in combinations(sorted(c.axes, key=repr), 2):
            out.append(ProductCell(c.base, frozenset(), c.axes - {a, b}))
    return out


def _maximal_cells(cells):
    faces = set()
    for c in cells:
        faces.update(f for f in c.faces() if f != c)
    return [c for c in cells if c not in faces]


def _label_key(v):
    x, S = v
    return (repr(x), len(S), sorted(repr(a) for a in S))


# ---------------------------------------------------------------------------
# Full reverse collapse over cubes


def _cube_faces(cube):
    m, A = cube
    A = sorted(A)
    out = []

    def rec(i, P, B):
        if i == len(A):
            out.append((m | frozenset(P), frozenset(B)))
            return
        rec(i + 1, P, B)
        rec(i + 1, P + [A[i]], B)
        rec(i + 1, P, B + [A[i]])

    rec(0, [], [])
    return out


def _cube_key(cube):
    m, A = cube
    return (len(A), sorted(m), sorted(A))


def _cube_chains(cube):
    """Staircase simplices of a cube as chains of vertex labels."""
    m, A = cube
    out = []
    for perm in permutations(sorted(A)):
        cur = m
        ch = [cur]
        for a in perm:
            cur = cur | {a}
            ch.append(cur)
        out.append(tuple(ch))
    return out


def _is_face(f, g):
    return g[0] <= f[0] and (f[0] | f[1]) <= (g[0] | g[1])


@dataclass
class StepRecord:
    step: int
    collapse: str
    dim: int
    interior_cells: int
    chains: int
    new_cells: int
    report: ResidualReport = field(default_factory=ResidualReport)

    def as_dict(self):
        return {
            "step": self.step,
            "collapse": self.collapse,
            "dim": self.dim,
            "interior_cells": self.interior_cells,
            "chains": self.chains,
            "new_cells": self.new_cells,
            **self.report.as_dict(),
        }


class _CubeRealizer:
    def __init__(self, terminal, edge_scale):
        root = frozenset()
        self.s = edge_scale
        self.owner = {(root, root): (terminal,)}
        self.by_owner = {(terminal,): [(root, root)]}
        self.lengths = _Lengths()
        self.blocks = []  # (cube, glue cube, step)
        self.ridges = []
        self.records = []

    def _add(self, cube, owner):
        self.owner[cube] = owner
        self.by_owner.setdefault(owner, []).append(cube)

    def step(self, k, e: ElementaryCollapse, polish=True):
        tau, delta, w = e.free_face, e.coface, e.apex
        ts = set(tau)
        gamma_faces = [f for f in _subfaces(delta) if f != delta and not ts <= set(f) and w in f]
        interior = [cu for f in gamma_faces for cu in self.by_owner.get(f, ())]
        if not interior:
            raise ConstructionError(f"step {k}: Gamma has no realized interior cells")
        interior.sort(key=_cube_key)
        iset = set(interior)
        above = {cu: [] for cu in interior}
        for cu in interior:
            for f in _cube_faces(cu):
                if f != cu and f in iset:
                    above[f].append(cu)
        for f in above:
            above[f].sort(key=_cube_key)
        chains = poset_chains(interior, above)
        atom = {cu: (k, i) for i, cu in enumerate(interior)}
        new = {}
        first_block = len(self.blocks)
        for ch in chains:
            m, A = ch[0]
            cube = (m, A | frozenset(atom[f] for f in ch))
            self.blocks.append((cube, ch[0], k))
            for f in _cube_faces(cube):
                if f not in self.owner:
                    new[f] = None
        kdim = len(delta) - 1
        count = {}
        for f in new:
            if len(f[1]) == kdim:
                for g in _cube_faces(f):
                    if len(g[1]) == kdim - 1 and g in new:
                        count[g] = count.get(g, 0) + 1
        far = set()
        for g, n in count.items():
            if n == 1:
                far.update(h for h in _cube_faces(g) if h in new)
        for f in new:
            self._add(f, tau if f in far else delta)
        # lengths of the new edges
        new_edges = []
        for cube, _, _ in self.blocks[first_block:]:
            for ch in _cube_chains(cube):
                for u, v in combinations(ch, 2):
                    key = _pair(u, v)
                    if key in self.lengths:
                        continue
                    x = frozenset(a for a in u if a[0] < k)
                    y = frozenset(a for a in v if a[0] < k)
                    S, T = u - x, v - y
                    self.lengths[key] = normal_edge_length(self.lengths.of(x, y), len(S), len(T), len(S & T), self.s)
                    new_edges.append(key)
        # prescribed right angles
        ridges = []
        for bi in range(first_block, len(self.blocks)):
            cube, glue, _ = self.blocks[bi]
            m, A = cube
            new_axes = sorted(A - glue[1])
            chains_b = _cube_chains(cube)
            if len(new_axes) == 1:
                rcubes = [f for f in _cube_faces(glue) if len(f[1]) == len(glue[1]) - 1]
            else:
                rcubes = [(m, A - {a, b}) for a, b in combinations(new_axes, 2)]
            for rc in rcubes:
                ridges.append(_ridge_for(bi, _cube_chains(rc)[0], chains_b))
        bound = [_pair(f[0], f[0] | f[1]) for f in new if len(f[1]) == 1]
        rep = _evaluate(ridges, bound, self.lengths, self.s)
        if polish and not rep.ok:
            _polish(ridges, bound, self.lengths, new_edges, self.s)
            rep = _evaluate(ridges, bound, self.lengths, self.s)
            rep.polished = True
        self.ridges.extend(ridges)
        rec = StepRecord(k, e.to_line(), kdim, len(interior), len(chains), len(new), rep)
        self.records.append(rec)
        if not rep.ok:
            raise RealizationError(f"step {k} ({e.to_line()}): residual {rep.residual:.3e}; worst: {rep.worst}",
                                   worst_constraint=rep.worst, residual=rep.residual)

    def metric(self, meta):
        nonmax = set()
        for cube, _, _ in self.blocks:
            nonmax.update(f for f in _cube_faces(cube) if f != cube)
        maximal = sorted((c for c in self.owner if c not in nonmax), key=_cube_key)
        labels = sorted({f[0] for f in self.owner if not f[1]}, key=lambda v: (max((a[0] for a in v), default=0), sorted(v)))
        pos = {v: i for i, v in enumerate(labels)}
        born = [max((a[0] for a in v), default=0) for v in labels]
        simplices = []
        for cube in maximal:
            for ch in _cube_chains(cube):
                simplices.append(tuple(pos[v] for v in ch))
        edges = {}
        for e, l in self.lengths.items():
            u, v = tuple(e)
            i, j = sorted((pos[u], pos[v]))
            edges[(i, j)] = l
        cells = []
        for bi, (cube, glue, k) in enumerate(self.blocks):
            m, A = cube
            gm, gA = glue
            cells.append({
                "block": bi,
                "step": k,
                "vertices": sorted(pos[m | frozenset(B)] for r in range(len(A) + 1) for B in combinations(sorted(A), r)),
                "glue": sorted(pos[gm | frozenset(B)] for r in range(len(gA) + 1) for B in combinations(sorted(gA), r)),
                "owner": list(self.owner[cube]),
            })
        cache = {}
        glue = [{"block": r.block, "ridge": [pos[v] for v in r.ridge], "angle": _ridge_angle(r, self.lengths, cache)}
                for r in self.ridges]
        m = MetricComplex([_name(v) for v in labels], simplices, edges, born=born, cells=cells,
                          glue_ridges=glue, steps=[r.as_dict() for r in self.records], edge_scale=self.s, meta=meta)
        return m


def hyperbolize(c: SimplicialComplex, s, edge_scale=DEFAULT_EDGE_SCALE, *, polish=True) -> MetricComplex:
    """Piecewise hyperbolic complex built along the reverse of the collapse ``s``.

    ``s`` is a :class:`CollapseSequence` or a list of elementary collapses
    ending at a single vertex. The vertex ``born`` numbers of the result
    give the nested images: ``C_i`` is the full subcomplex on the vertices
    born at or before reverse step ``i``.
    """
    if not edge_scale > 0:
        raise InvalidInputError("edge_scale must be positive")
    steps = list(s.steps if isinstance(s, CollapseSequence) else s)
    verdict = replay(c, steps)
    if not verdict.valid:
        raise StaleStepError(f"certificate fails at step {verdict.failing_step}: {verdict.reason}",
                             step_index=verdict.failing_step)
    terminal = verdict.terminal
    if len(terminal.faces) != 1:
        raise InvalidInputError("certificate does not end at a single vertex")
    (point,) = terminal.vertices
    rz = _CubeRealizer(point, edge_scale)
    n = len(steps)
    for k, e in enumerate(reversed(steps), start=1):
        try:
            rz.step(k, e, polish=polish)
        except (ConstructionError, DegeneracyError) as exc:
            raise type(exc)(f"reverse step {k} (collapse {n - k + 1}): {exc}") from None
    meta = {"input_facets": [list(f) for f in c.canonical_key()], "collapse_steps": n, "terminal": str(point)}
    m = rz.metric(meta)
    spread = m.length_spread()
    for st in m.steps:
        st["max_length_spread"] = spread
        st["residual"] = max(st["residual"], spread)
    if spread >= RESIDUAL_TOL:
        raise RealizationError(f"shared-face length spread {spread:.3e} above tolerance",
                               worst_constraint="shared-face edge lengths", residual=spread)
    return m


def underlying_complex(m: MetricComplex) -> SimplicialComplex:
    return m.complex
