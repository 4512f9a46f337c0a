"""Standard test complexes.

Collapsible inputs (simplices, cones, small 2-complexes) and two classic
contractible but non-collapsible 2-complexes: the dunce hat and Bing's
house with two rooms.
"""

from itertools import combinations

from .complex import SimplicialComplex


def simplex(n):
    """The full ``n``-simplex on vertices ``0..n``."""
    return SimplicialComplex([tuple(range(n + 1))])


def simplex_boundary(n):
    """Boundary of the ``n``-simplex, a triangulated ``(n-1)``-sphere."""
    return SimplicialComplex(combinations(range(n + 1), n))


def octahedron_boundary():
    """Boundary of the cross-polytope on the antipodal pairs (0,1), (2,3), (4,5)."""
    return SimplicialComplex((a, b, c) for a in (0, 1) for b in (2, 3) for c in (4, 5))


def path(n):
    """Path with ``n`` edges."""
    return SimplicialComplex((i, i + 1) for i in range(n))


def cycle(n):
    return SimplicialComplex([(i, (i + 1) % n) for i in range(n)])


def cone(c: SimplicialComplex, apex=None):
    """Cone over ``c``; the apex defaults to one more than the largest label."""
    if apex is None:
        apex = max(c.vertices) + 1 if c.vertices else 0
    return c.cone(apex)


# 8 vertices, 17 triangles. The boundary of the big triangle reads
# 1 2 3 1 2 3 1 3 2, i.e. the word a a a^-1 with a = (1 2 3 1).
_DUNCE_HAT = [
    (1, 2, 4), (1, 2, 5), (1, 2, 8), (1, 3, 6), (1, 3, 7), (1, 3, 8),
    (1, 4, 5), (1, 6, 7), (2, 3, 4), (2, 3, 6), (2, 3, 7), (2, 5, 7),
    (2, 6, 8), (3, 4, 8), (4, 5, 8), (5, 6, 7), (5, 6, 8),
]


def dunce_hat():
    """8-vertex triangulation of the dunce hat (contractible, no free faces)."""
    return SimplicialComplex(_DUNCE_HAT)


def bing_house():
    """Bing's house with two rooms, built from unit squares of a voxel grid.

    The box ``[0,5] x [0,3] x [0,4]`` is split by a floor at height 2. The
    lower room is entered through a tunnel at column ``(1, 1)`` that runs
    up through the upper room; the upper room through a tunnel at column
    ``(3, 1)`` running down through the lower room. A small wall ties each
    tunnel to the outer wall so that both rooms are balls. Every square is
    cut along the diagonal from its lowest corner.
    """
    squares = _bing_squares()
    points = sorted({p for s in squares for p in s})
    index = {p: i for i, p in enumerate(points)}
    tris = []
    for s in sorted(squares):
        a, b, c, d = (index[p] for p in s)
        tris.append((a, b, c))
        tris.append((a, c, d))
    return SimplicialComplex(tris)


def _bing_squares():
    nx, ny, nz = 5, 3, 4

    def label(x, y, z):
        if not (0 <= x < nx and 0 <= y < ny and 0 <= z < nz):
            return 0
        if (x, y) == (1, 1) and z >= 2:
            return 1
        if (x, y) == (3, 1) and z < 2:
            return 2
        return 1 if z < 2 else 2

    steps = [(1, 0, 0), (0, 1, 0), (0, 0, 1)]
    squares = set()
    for x in range(-1, nx + 1):
        for y in range(-1, ny + 1):
            for z in range(-1, nz + 1):
                for axis, (dx, dy, dz) in enumerate(steps):
                    a = label(x, y, z)
                    b = label(x + dx, y + dy, z + dz)
                    if a != b and (a, b) != (0, 0):
                        squares.add(_square(axis, x + dx, y + dy, z + dz))
    # the two entrances
    squares.discard(_square(2, 1, 1, 4))
    squares.discard(_square(2, 3, 1, 0))
    # walls tying the tunnels to the outer wall
    for z in (0, 1):
        squares.add(_square(1, 4, 2, z))
    for z in (2, 3):
        squares.add(_square(1, 0, 2, z))
    return squares


def _square(axis, x, y, z):
    """Unit square normal to ``axis`` with lowest corner ``(x, y, z)``, as a 4-cycle."""
    if axis == 0:
        return ((x, y, z), (x, y + 1, z), (x, y + 1, z + 1), (x, y, z + 1))
    if axis == 1:
        return ((x, y, z), (x + 1, y, z), (x + 1, y, z + 1), (x, y, z + 1))
    return ((x, y, z), (x + 1, y, z), (x + 1, y + 1, z), (x, y + 1, z))


def collapsible_2_complexes():
    """Small collapsible 2-complexes that are not all cones."""
    return {
        "two-triangles": SimplicialComplex([(0, 1, 2), (1, 2, 3)]),
        "strip": SimplicialComplex([(0, 1, 2), (1, 2, 3), (2, 3, 4)]),
        "fan": SimplicialComplex([(0, 1, 2), (0, 2, 3), (0, 3, 4)]),
        "triangle-with-tail": SimplicialComplex([(0, 1, 2), (2, 3), (3, 4)]),
        "bowtie": SimplicialComplex([(0, 1, 2), (0, 3, 4)]),
    }


def small_cones():
    """Cones over small complexes, keyed by a short name."""
    return {
        "cone-two-points": cone(SimplicialComplex([(0,), (1,)])),
        "cone-path": cone(path(3)),
        "cone-cycle": cone(cycle(4)),
        "cone-two-edges": cone(SimplicialComplex([(0, 1), (2, 3)])),
        "cone-triangle-boundary": cone(simplex_boundary(2)),
    }


def collapsible_corpus(max_simplex_dim=4):
    """Name -> complex for every collapsible corpus entry."""
    out = {f"simplex-{n}": simplex(n) for n in range(1, max_simplex_dim + 1)}
    out.update(small_cones())
    out.update(collapsible_2_complexes())
    return out


def non_collapsible_corpus():
    return {"dunce-hat": dunce_hat(), "bing-house": bing_house()}
