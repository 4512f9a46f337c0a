"""Finite simplicial complexes and product-cell complexes.

A face is a sorted tuple of vertex labels. Labels may be any mutually
comparable hashables; the corpus and the CLI use integers.

Product cells ``F x [0,1]^A`` are keyed by a base simplex ``F`` (a sorted
tuple), a set of axes already pinned to 1 and a set of free axes ``A``.
A vertex of such a cell is the pair ``(x, S)`` with ``x`` in ``F`` and
``S`` a frozenset of axes set to 1. Vertices are compared by
``(x, S) <= (y, T)  iff  x <= y and S <= T``; every cell is then the
product of a chain and a Boolean lattice, and the staircase triangulation
is the set of its maximal chains. Cells sharing vertex labels are glued
along the common vertices, so the attaching maps are label identities.
"""

from collections import defaultdict
from dataclasses import dataclass
from itertools import combinations, permutations
from math import factorial
from typing import Iterable

from .errors import GluingError, InvalidInputError, MissingFaceError
from .homology import homology_from_boundaries

Face = tuple


def make_face(vertices) -> Face:
    f = tuple(sorted(set(vertices)))
    if not f:
        raise InvalidInputError("faces are nonempty")
    return f


def _subfaces(f):
    for k in range(1, len(f) + 1):
        yield from combinations(f, k)


class SimplicialComplex:
    """Finite abstract simplicial complex given by its facets."""

    def __init__(self, facets: Iterable = ()):
        fs = {make_face(f) for f in facets}
        # keep only maximal faces
        by_size = sorted(fs, key=len, reverse=True)
        maximal = []
        covered = set()
        for f in by_size:
            if f in covered:
                continue
            maximal.append(f)
            covered.update(_subfaces(f))
        self._facets = frozenset(maximal)
        self._faces = frozenset(covered)
        self._cofaces = None

    @classmethod
    def from_faces(cls, faces):
        """Build from a downward closed face set (checked)."""
        faces = {make_face(f) for f in faces}
        for f in faces:
            for g in combinations(f, len(f) - 1):
                if g and g not in faces:
                    raise InvalidInputError(f"face set not downward closed: {g} missing")
        c = cls.__new__(cls)
        c._faces = frozenset(faces)
        covered = set()
        for f in faces:
            if len(f) > 1:
                covered.update(combinations(f, len(f) - 1))
        c._facets = frozenset(faces - covered)
        c._cofaces = None
        return c

    # -- basic queries -----------------------------------------------------

    @property
    def facets(self):
        return self._facets

    @property
    def faces(self):
        return self._faces

    def faces_of_dim(self, k):
        return sorted(f for f in self._faces if len(f) == k + 1)

    @property
    def vertices(self):
        return sorted(f[0] for f in self._faces if len(f) == 1)

    @property
    def dimension(self):
        return max((len(f) for f in self._facets), default=0) - 1

    def f_vector(self):
        counts = [0] * (self.dimension + 1)
        for f in self._faces:
            counts[len(f) - 1] += 1
        return counts

    def euler_characteristic(self):
        return sum((-1) ** k * n for k, n in enumerate(self.f_vector()))

    def __contains__(self, f):
        return tuple(sorted(f)) in self._faces

    def __len__(self):
        return len(self._faces)

    def __eq__(self, other):
        return isinstance(other, SimplicialComplex) and self._faces == other._faces

    def __hash__(self):
        return hash(self._faces)

    def __repr__(self):
        return f"SimplicialComplex(dim={self.dimension}, f={self.f_vector()})"

    def canonical_key(self):
        return tuple(sorted(self._facets, key=lambda f: (len(f), f)))

    def require(self, f) -> Face:
        f = tuple(sorted(f))
        if f not in self._faces:
            raise MissingFaceError(f"face {f} not in complex")
        return f

    def cofaces(self, f):
        """Faces strictly containing ``f``."""
        f = self.require(f)
        if self._cofaces is None:
            index = defaultdict(set)
            for g in self._faces:
                for h in _subfaces(g):
                    if h != g:
                        index[h].add(g)
            self._cofaces = index
        return set(self._cofaces.get(f, ()))

    # -- star, link, closure ----------------------------------------------

    def closure(self, faces):
        return SimplicialComplex(faces)

    def star(self, f) -> "SimplicialComplex":
        """Union of the closures of all faces containing ``f``."""
        f = self.require(f)
        fs = set(f)
        return SimplicialComplex(g for g in self._facets if fs <= set(g))

    def link(self, f) -> "SimplicialComplex":
        """Complements of ``f`` in its proper cofaces."""
        f = self.require(f)
        fs = set(f)
        out = set()
        for g in self._facets:
            if fs < set(g):
                out.add(tuple(v for v in g if v not in fs))
        return SimplicialComplex(out)

    def link_by_definition(self, f) -> "SimplicialComplex":
        """Link as the faces disjoint from ``f`` whose join with ``f`` exists."""
        f = self.require(f)
        fs = set(f)
        out = [g for g in self._faces if not fs & set(g) and make_face(fs | set(g)) in self._faces]
        return SimplicialComplex.from_faces(out) if out else SimplicialComplex()

    def deletion(self, faces_to_remove) -> "SimplicialComplex":
        """Remove faces (which must be closed upwards in the result)."""
        remove = {tuple(sorted(f)) for f in faces_to_remove}
        return SimplicialComplex.from_faces(self._faces - remove)

    def boundary(self) -> "SimplicialComplex":
        """Closure of the codimension-one faces lying in exactly one facet.

        Meaningful for pure complexes (pseudomanifolds with boundary).
        """
        count = defaultdict(int)
        top = self.dimension
        for g in self._facets:
            if len(g) - 1 != top:
                continue
            for h in combinations(g, len(g) - 1):
                if h:
                    count[h] += 1
        return SimplicialComplex(h for h, n in count.items() if n == 1)

    def is_pure(self):
        return len({len(f) for f in self._facets}) <= 1

    def is_pseudomanifold(self):
        """Pure, every ridge in one or two facets."""
        if not self.is_pure() or not self._facets:
            return False
        count = defaultdict(int)
        for g in self._facets:
            for h in combinations(g, len(g) - 1):
                if h:
                    count[h] += 1
        return all(n <= 2 for n in count.values())

    def cone(self, apex) -> "SimplicialComplex":
        if (apex,) in self._faces:
            raise InvalidInputError("apex already a vertex")
        if not self._facets:
            return SimplicialComplex([(apex,)])
        return SimplicialComplex(tuple(f) + (apex,) for f in self._facets)

    def relabel(self, mapping) -> "SimplicialComplex":
        return SimplicialComplex(tuple(mapping[v] for v in f) for f in self._facets)

    # -- homology ----------------------------------------------------------

    def boundary_matrices(self):
        """Sizes of chain groups and sparse boundary matrices."""
        by_dim = defaultdict(list)
        for f in self._faces:
            by_dim[len(f) - 1].append(f)
        top = self.dimension
        index = {}
        sizes = []
        for k in range(top + 1):
            fs = sorted(by_dim[k])
            sizes.append(len(fs))
            for i, f in enumerate(fs):
                index[f] = i
        boundaries = {}
        for k in range(1, top + 1):
            rows = {}
            for f in by_dim[k]:
                row = {}
                for j in range(len(f)):
                    g = f[:j] + f[j + 1:]
                    row[index[g]] = (-1) ** j
                rows[index[f]] = row
            boundaries[k] = rows
        return sizes, boundaries

    def homology(self, *, reduced=True):
        """Integral (reduced) homology groups in each dimension."""
        if not self._faces:
            return []
        sizes, boundaries = self.boundary_matrices()
        return homology_from_boundaries(sizes, boundaries, reduced=reduced)

    def reduced_betti(self):
        return [g.betti for g in self.homology()]

    def has_homology_of_point(self):
        return all(g.is_trivial() for g in self.homology())

    # -- subdivision -------------------------------------------------------

    def barycentric_subdivision(self) -> "SimplicialComplex":
        """Order complex of the face poset, relabelled by integers.

        The integer ``i`` stands for the ``i``-th face in
        ``(dimension, face)`` order; see :meth:`face_order`.
        """
        order = self.face_order()
        pos = {f: i for i, f in enumerate(order)}
        chains = []
        for top in self._facets:
            for perm in permutations(top):
                chain = [make_face(perm[: k + 1]) for k in range(len(perm))]
                chains.append(tuple(pos[c] for c in chain))
        return SimplicialComplex(chains)

    def face_order(self):
        return sorted(self._faces, key=lambda f: (len(f), f))


# ---------------------------------------------------------------------------
# Facet-list text format


def parse_facet_list(text, *, source="<string>"):
    """Parse one facet per line; ``#`` starts a comment.

    Labels are integers when every token parses as one, otherwise strings.
    """
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        rows.append((lineno, line.split()))
    if not rows:
        raise InvalidInputError(f"{source}: no facets found")
    all_int = all(_is_int(tok) for _, toks in rows for tok in toks)
    facets = []
    for lineno, toks in rows:
        labels = [int(t) for t in toks] if all_int else toks
        if len(set(labels)) != len(labels):
            raise InvalidInputError(f"{source}:{lineno}: repeated vertex in facet")
        facets.append(labels)
    return SimplicialComplex(facets)


def _is_int(tok):
    try:
        int(tok)
    except ValueError:
        return False
    return True


def read_facet_list(path):
    with open(path) as fh:
        return parse_facet_list(fh.read(), source=str(path))


def format_facet_list(c: SimplicialComplex, comment=None):
    lines = []
    if comment:
        lines.extend(f"# {line}" for line in comment.splitlines())
    for f in sorted(c.facets, key=lambda f: (len(f), f)):
        lines.append(" ".join(str(v) for v in f))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Product cells


@dataclass(frozen=True)
class ProductCell:
    """The cell ``base x {pinned = 1} x [0,1]^axes``."""

    base: tuple
    pinned: frozenset
    axes: frozenset

    def __post_init__(self):
        if not self.base:
            raise InvalidInputError("product cell needs a nonempty base simplex")
        if self.pinned & self.axes:
            raise InvalidInputError("pinned and free axes overlap")

    @property
    def dim(self):
        return len(self.base) - 1 + len(self.axes)

    @property
    def cube_exponent(self):
        return len(self.axes)

    def vertices(self):
        out = []
        axes = sorted(self.axes, key=repr)
        for x in self.base:
            for k in range(len(axes) + 1):
                for S in combinations(axes, k):
                    out.append((x, self.pinned | frozenset(S)))
        return out

    def vertex_set(self):
        return frozenset(self.vertices())

    def faces(self):
        """All nonempty faces, including the cell itself."""
        axes = sorted(self.axes, key=repr)
        out = []
        for b in _subfaces(self.base):
            # each axis: 0, 1 or free
            for choice in _ternary(len(axes)):
                pinned = set(self.pinned)
                free = set()
                for a, ch in zip(axes, choice):
                    if ch == 1:
                        pinned.add(a)
                    elif ch == 2:
                        free.add(a)
                out.append(ProductCell(b, frozenset(pinned), frozenset(free)))
        return out

    def facets(self):
        """Codimension-one faces with their incidence signs (cellular boundary)."""
        out = []
        n = len(self.base) - 1
        for j in range(len(self.base)):
            if n == 0:
                break
            out.append((ProductCell(self.base[:j] + self.base[j + 1:], self.pinned, self.axes), (-1) ** j))
        axes = sorted(self.axes, key=repr)
        for j, a in enumerate(axes):
            rest = frozenset(self.axes - {a})
            sign = (-1) ** (n + j)
            out.append((ProductCell(self.base, self.pinned | {a}, rest), sign))
            out.append((ProductCell(self.base, self.pinned, rest), -sign))
        return out

    def staircase(self):
        """Maximal chains of the vertex poset: the staircase triangulation."""
        axes = sorted(self.axes, key=repr)
        moves = [_BASE_MOVE] * (len(self.base) - 1) + axes
        seen = set()
        chains = []
        for perm in permutations(moves):
            if perm in seen:
                continue
            seen.add(perm)
            bi = 0
            S = set(self.pinned)
            chain = [(self.base[0], frozenset(S))]
            for mv in perm:
                if mv is _BASE_MOVE:
                    bi += 1
                else:
                    S.add(mv)
                chain.append((self.base[bi], frozenset(S)))
            chains.append(tuple(chain))
        return chains


_BASE_MOVE = None


def _ternary(n):
    if n == 0:
        yield ()
        return
    for rest in _ternary(n - 1):
        for c in (0, 1, 2):
            yield rest + (c,)


def staircase_count(base_dim, cube_exponent):
    """Number of top simplices in the staircase triangulation of ``simplex x cube``."""
    return factorial(base_dim + cube_exponent) // factorial(base_dim)


class CellComplex:
    """Complex of product cells glued along shared vertex labels."""

    def __init__(self, cells=()):
        self._cells = {}
        for c in cells:
            self.add(c)

    def add(self, cell: ProductCell):
        self._cells[cell] = None

    @property
    def cells(self):
        return list(self._cells)

    def __len__(self):
        return len(self._cells)

    def all_faces(self):
        out = set()
        for c in self._cells:
            out.update(c.faces())
        return out

    @property
    def dimension(self):
        return max((c.dim for c in self._cells), default=-1)

    def euler_characteristic(self):
        return sum((-1) ** f.dim for f in self.all_faces())

    def check_gluing(self):
        """Cells must meet in common faces; raises :class:`GluingError`."""
        faces = self.all_faces()
        by_vertices = {}
        for f in faces:
            key = f.vertex_set()
            other = by_vertices.setdefault(key, f)
            if other != f and other.dim != f.dim:
                raise GluingError(f"cells {other} and {f} have equal vertex sets but different dimensions")
        vindex = defaultdict(list)
        for c in self._cells:
            for v in c.vertices():
                vindex[v].append(c)
        seen = set()
        for v, cs in vindex.items():
            for a, b in combinations(cs, 2):
                if (a, b) in seen:
                    continue
                seen.add((a, b))
                common = a.vertex_set() & b.vertex_set()
                if common not in by_vertices:
                    raise GluingError(f"cells {a} and {b} meet in a non-face")

    def cellular_homology(self, *, reduced=True):
        """Homology from the cellular boundary operator of the product cells."""
        faces = sorted(self.all_faces(), key=lambda f: (f.dim, repr(f)))
        by_dim = defaultdict(list)
        for f in faces:
            by_dim[f.dim].append(f)
        top = max(by_dim) if by_dim else -1
        index = {}
        sizes = []
        for k in range(top + 1):
            sizes.append(len(by_dim[k]))
            for i, f in enumerate(by_dim[k]):
                index[f] = i
        boundaries = {}
        for k in range(1, top + 1):
            rows = {}
            for f in by_dim[k]:
                row = defaultdict(int)
                for g, s in f.facets():
                    row[index[g]] += s
                rows[index[f]] = dict(row)
            boundaries[k] = rows
        return homology_from_boundaries(sizes, boundaries, reduced=reduced)


def triangulate_cells(b: CellComplex):
    """Staircase triangulation of every cell.

    Returns ``(complex, labels, membership)`` where ``complex`` is a
    :class:`SimplicialComplex` on integer vertices, ``labels[i]`` is the
    composite label ``(x, S)`` of vertex ``i`` and ``membership`` maps every
    top simplex of each cell to that cell.
    """
    b.check_gluing()
    labels = sorted({v for c in b.cells for v in c.vertices()}, key=_label_key)
    pos = {v: i for i, v in enumerate(labels)}
    simplices = []
    membership = {}
    for c in b.cells:
        for chain in c.staircase():
            s = tuple(sorted(pos[v] for v in chain))
            simplices.append(s)
            membership[s] = c
    return SimplicialComplex(simplices), labels, membership


def _label_key(v):
    x, S = v
    return (repr(x), len(S), sorted(repr(a) for a in S))
