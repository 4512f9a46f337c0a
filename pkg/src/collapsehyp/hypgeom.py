"""Constant curvature model geometry.

Hyperbolic space H^n is the upper sheet of the hyperboloid
``<x, x>_M = -1`` in Minkowski space R^{n,1} (time coordinate first) and
the round sphere S^n is the unit sphere in R^{n+1}. Curvature is fixed at
-1 and +1 respectively.

Besides distances and angles, the module realizes simplices from their
edge lengths through Gram matrices, which is how the rest of the package
turns combinatorial data into coordinates.
"""

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial import ConvexHull

from ._jit import njit
from .errors import DegeneracyError, InvalidInputError

MODEL_TOL = 1e-10
GEOM_TOL = 1e-8


def minkowski_dot(x, y):
    """Minkowski product ``-x0*y0 + sum_i xi*yi`` along the last axis."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return -x[..., 0] * y[..., 0] + np.sum(x[..., 1:] * y[..., 1:], axis=-1)


def minkowski_gram(points):
    """Matrix of pairwise Minkowski products of the rows of ``points``."""
    P = np.asarray(points, dtype=float)
    Q = P.copy()
    Q[:, 0] = -Q[:, 0]
    return Q @ P.T


def project_to_hyperboloid(x):
    """Renormalize a timelike vector onto the upper sheet."""
    x = np.asarray(x, dtype=float)
    q = minkowski_dot(x, x)
    if np.any(q >= 0):
        raise InvalidInputError("vector is not timelike; cannot project onto H^n")
    y = x / np.sqrt(-q)[..., None]
    return np.where(y[..., :1] < 0, -y, y)


@dataclass(frozen=True)
class HPoint:
    """A point of H^n in hyperboloid coordinates (length n+1)."""

    coords: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coords, dtype=float)
        if c.ndim != 1 or c.size < 2:
            raise InvalidInputError("HPoint needs a 1-d coordinate vector of length >= 2")
        if abs(minkowski_dot(c, c) + 1.0) > MODEL_TOL * max(1.0, c[0] ** 2):
            raise InvalidInputError(f"Minkowski norm {minkowski_dot(c, c)!r} != -1")
        if c[0] <= 0:
            raise InvalidInputError("HPoint must lie on the upper sheet (x0 > 0)")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @property
    def dim(self):
        return self.coords.size - 1

    @classmethod
    def origin(cls, n):
        c = np.zeros(n + 1)
        c[0] = 1.0
        return cls(c)

    @classmethod
    def from_tangent(cls, v):
        """Exponential map at the origin applied to ``v`` in R^n."""
        v = np.asarray(v, dtype=float)
        r = float(np.linalg.norm(v))
        c = np.empty(v.size + 1)
        c[0] = np.cosh(r)
        c[1:] = v * (np.sinh(r) / r) if r > 0 else 0.0
        return cls(c)

    def __eq__(self, other):
        return isinstance(other, HPoint) and np.array_equal(self.coords, other.coords)

    def __hash__(self):
        return hash(self.coords.tobytes())


@dataclass(frozen=True)
class SPoint:
    """A unit vector on the round sphere."""

    coords: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coords, dtype=float)
        if c.ndim != 1 or abs(np.linalg.norm(c) - 1.0) > MODEL_TOL:
            raise InvalidInputError("SPoint must be a unit vector")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    def __eq__(self, other):
        return isinstance(other, SPoint) and np.array_equal(self.coords, other.coords)

    def __hash__(self):
        return hash(self.coords.tobytes())


def hdist(p: HPoint, q: HPoint) -> float:
    """Hyperbolic distance ``acosh(-<p, q>_M)``."""
    if p.dim != q.dim:
        raise InvalidInputError("points live in different dimensions")
    # 2 asinh(|p - q|_M / 2) avoids the cancellation of acosh near 1
    d = p.coords - q.coords
    return float(2.0 * np.arcsinh(0.5 * np.sqrt(max(0.0, minkowski_dot(d, d)))))


def spherical_dist(p: SPoint, q: SPoint) -> float:
    return float(np.arccos(np.clip(np.dot(p.coords, q.coords), -1.0, 1.0)))


def geodesic_point(p, q, t):
    """Point at arclength fraction ``t`` on the geodesic from ``p`` to ``q``.

    Works on raw hyperboloid coordinate arrays.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    d = float(np.arccosh(max(1.0, -minkowski_dot(p, q))))
    if d < 1e-15:
        return p.copy()
    x = (np.sinh((1.0 - t) * d) * p + np.sinh(t * d) * q) / np.sinh(d)
    return project_to_hyperboloid(x)


# ---------------------------------------------------------------------------
# Gram matrices and simplices


def hyperbolic_gram(lengths):
    """Minkowski Gram matrix ``-cosh(l_ij)`` of a simplex with edge lengths ``l``."""
    return -np.cosh(np.asarray(lengths, dtype=float))


def spherical_gram(lengths):
    return np.cos(np.asarray(lengths, dtype=float))


def gram_to_coords(G, *, tol=1e-12):
    """Realize a Minkowski Gram matrix as points on the hyperboloid.

    Returns an ``(m, r)`` array whose rows are hyperboloid coordinates in
    R^{r-1,1}, where ``r`` is the rank of ``G``. Raises
    :class:`DegeneracyError` when ``G`` does not have Lorentzian signature.
    """
    G = np.asarray(G, dtype=float)
    G = 0.5 * (G + G.T)
    w, U = np.linalg.eigh(G)
    scale = max(1.0, float(np.max(np.abs(w))))
    neg = np.where(w < -tol * scale)[0]
    pos = np.where(w > tol * scale)[0]
    if len(neg) != 1:
        raise DegeneracyError("Gram matrix is not Lorentzian (need exactly one negative eigenvalue)")
    idx = np.concatenate([neg, pos])
    X = U[:, idx] * np.sqrt(np.abs(w[idx]))
    if X[0, 0] < 0:
        X[:, 0] = -X[:, 0]
    # rows should already satisfy the model equation; renormalize for drift
    return project_to_hyperboloid(X)


def simplex_from_lengths(lengths):
    """Hyperboloid coordinates of a hyperbolic simplex with given edge lengths."""
    L = np.asarray(lengths, dtype=float)
    m = L.shape[0]
    if m == 1:
        return np.array([[1.0]])
    X = gram_to_coords(hyperbolic_gram(L))
    if X.shape[1] != m:
        raise DegeneracyError("edge lengths do not span a nondegenerate simplex")
    return X


@njit
def _dihedral_from_gram(G):
    C = np.linalg.inv(G)
    m = G.shape[0]
    out = np.zeros((m, m))
    for i in range(m):
        for j in range(m):
            if i != j:
                c = -C[i, j] / np.sqrt(C[i, i] * C[j, j])
                if c > 1.0:
                    c = 1.0
                elif c < -1.0:
                    c = -1.0
                out[i, j] = np.arccos(c)
    return out


def simplex_dihedral_angles(G):
    """Interior dihedral angles of a simplex from its Gram matrix.

    ``G`` is the Minkowski Gram matrix (hyperbolic) or the Euclidean Gram
    matrix of unit vectors (spherical). Entry ``[i, j]`` is the angle at
    the codimension-2 face opposite vertices ``i`` and ``j``.
    """
    G = np.asarray(G, dtype=float)
    C = np.linalg.inv(G)
    if np.any(np.diag(C) <= 0):
        raise DegeneracyError("degenerate facet normals")
    return _dihedral_from_gram(G)


@njit
def _vertex_angles(G, v, sign):
    m = G.shape[0]
    out = np.zeros((m, m))
    for j in range(m):
        for k in range(m):
            if j == v or k == v or j == k:
                continue
            tjk = G[j, k] + sign * G[j, v] * G[k, v]
            tjj = G[j, j] + sign * G[j, v] * G[j, v]
            tkk = G[k, k] + sign * G[k, v] * G[k, v]
            c = tjk / np.sqrt(tjj * tkk)
            if c > 1.0:
                c = 1.0
            elif c < -1.0:
                c = -1.0
            out[j, k] = np.arccos(c)
    return out


def vertex_angles(G, v, *, curvature=-1):
    """Angles at vertex ``v`` between the edges to the other vertices.

    These are the edge lengths of the (spherical) link of ``v`` in the
    simplex with Gram matrix ``G``.
    """
    sign = 1.0 if curvature < 0 else -1.0
    return _vertex_angles(np.asarray(G, dtype=float), int(v), sign)


# ---------------------------------------------------------------------------
# Polytopes


def _intrinsic_coords(P):
    """Coordinates of the points in the hyperbolic subspace they span."""
    return gram_to_coords(minkowski_gram(P), tol=1e-10)


def _facet_normal(Y, idx, interior):
    """Outward Minkowski normal of the hyperplane through the rows ``Y[idx]``."""
    A = Y[idx].copy()
    A[:, 0] = -A[:, 0]  # rows act as <., y>_M
    _, s, Vt = np.linalg.svd(A)
    rank = int(np.sum(s > 1e-10 * max(1.0, s[0])))
    if rank != Y.shape[1] - 1:
        raise DegeneracyError("facet does not span a hyperplane")
    n = Vt[-1]
    if minkowski_dot(n, interior) > 0:
        n = -n
    q = minkowski_dot(n, n)
    if q <= 0:
        raise DegeneracyError("degenerate facet normal")
    return n / np.sqrt(q)


def _hull_facets(Y):
    """Facets of the convex hull of hyperboloid points as index tuples."""
    k = Y.shape[1] - 1
    klein = Y[:, 1:] / Y[:, :1]
    if k == 1:
        order = np.argsort(klein[:, 0])
        return [(int(order[0]),), (int(order[-1]),)]
    if Y.shape[0] == k + 1:
        return [tuple(j for j in range(k + 1) if j != i) for i in range(k + 1)]
    hull = ConvexHull(klein)
    facets = {}
    for eq in hull.equations:
        key = tuple(np.round(eq / np.linalg.norm(eq[:-1]), 9))
        facets.setdefault(key, None)
    out = []
    for key in facets:
        eq = np.array(key)
        on = np.where(np.abs(klein @ eq[:-1] + eq[-1]) < 1e-8)[0]
        out.append(tuple(int(i) for i in on))
    return out


def dihedral_angle(cell: Sequence[HPoint], ridge: Sequence[int]) -> float:
    """Interior dihedral angle of a convex hyperbolic polytope at a ridge.

    Parameters
    ----------
    cell : sequence of HPoint
        Vertices of the polytope (its convex hull is the cell).
    ridge : sequence of int
        Indices into ``cell`` of the vertices of a codimension-2 face.

    Raises
    ------
    DegeneracyError
        If the ridge is not contained in exactly two facets or a facet
        normal degenerates.
    """
    P = np.array([p.coords for p in cell])
    Y = _intrinsic_coords(P)
    ridge = set(int(i) for i in ridge)
    if not ridge or max(ridge) >= len(cell):
        raise InvalidInputError("ridge indices out of range")
    interior = project_to_hyperboloid(Y.sum(axis=0))
    facets = [f for f in _hull_facets(Y) if ridge <= set(f)]
    if len(facets) != 2:
        raise DegeneracyError(f"ridge lies in {len(facets)} facets, expected 2")
    n1 = _facet_normal(Y, list(facets[0]), interior)
    n2 = _facet_normal(Y, list(facets[1]), interior)
    return float(np.arccos(np.clip(-minkowski_dot(n1, n2), -1.0, 1.0)))


def euclidean_dihedral_angle(points, ridge):
    """Euclidean counterpart of :func:`dihedral_angle` for a point cloud in R^n."""
    X = np.asarray(points, dtype=float)
    ridge = set(int(i) for i in ridge)
    c = X.mean(axis=0)
    Xc = X - c
    _, s, Vt = np.linalg.svd(Xc)
    k = int(np.sum(s > 1e-12 * max(1.0, s[0])))
    Z = Xc @ Vt[:k].T
    if Z.shape[0] == k + 1:
        facets = [tuple(j for j in range(k + 1) if j != i) for i in range(k + 1)]
    else:
        hull = ConvexHull(Z)
        facets = []
        for eq in hull.equations:
            on = tuple(np.where(np.abs(Z @ eq[:-1] + eq[-1]) < 1e-9)[0])
            if on not in facets:
                facets.append(on)
    facets = [f for f in facets if ridge <= set(f)]
    if len(facets) != 2:
        raise DegeneracyError(f"ridge lies in {len(facets)} facets, expected 2")
    normals = []
    for f in facets:
        A = Z[list(f)] - Z[f[0]]
        n = np.linalg.svd(A)[2][-1]
        if np.dot(n, -Z[f[0]]) > 0:  # centroid is at the origin
            n = -n
        normals.append(n / np.linalg.norm(n))
    return float(np.arccos(np.clip(-np.dot(normals[0], normals[1]), -1.0, 1.0)))


# ---------------------------------------------------------------------------
# Comparison triangles

_SIDES = {"AB": (0, 1), "BC": (1, 2), "CA": (2, 0)}


@dataclass(frozen=True)
class ComparisonTriangle:
    """Geodesic triangle in H^2 with side lengths ``a = |BC|, b = |CA|, c = |AB|``."""

    a: float
    b: float
    c: float
    vertices: tuple = field(init=False, repr=False)

    def __post_init__(self):
        a, b, c = float(self.a), float(self.b), float(self.c)
        if min(a, b, c) < 0:
            raise InvalidInputError("side lengths must be nonnegative")
        slack = 1e-12 * max(1.0, a + b + c)
        if a > b + c + slack or b > c + a + slack or c > a + b + slack:
            raise InvalidInputError("side lengths violate the triangle inequality")
        A = np.array([1.0, 0.0, 0.0])
        B = np.array([np.cosh(c), np.sinh(c), 0.0])
        if b == 0.0:
            C = A.copy()
        elif c == 0.0:
            C = np.array([np.cosh(b), np.sinh(b), 0.0])
        else:
            cos_alpha = (np.cosh(b) * np.cosh(c) - np.cosh(a)) / (np.sinh(b) * np.sinh(c))
            alpha = float(np.arccos(np.clip(cos_alpha, -1.0, 1.0)))
            C = np.array([np.cosh(b), np.sinh(b) * np.cos(alpha), np.sinh(b) * np.sin(alpha)])
        object.__setattr__(self, "vertices", tuple(HPoint(v) for v in (A, B, C)))


def comparison_point(tri: ComparisonTriangle, side: str, t: float) -> HPoint:
    """Point at fraction ``t`` along side ``"AB"``, ``"BC"`` or ``"CA"``."""
    if not 0.0 <= t <= 1.0:
        raise InvalidInputError("t must lie in [0, 1]")
    if side not in _SIDES:
        raise InvalidInputError(f"unknown side {side!r}")
    i, j = _SIDES[side]
    if t == 0.0:
        return tri.vertices[i]
    if t == 1.0:
        return tri.vertices[j]
    return HPoint(geodesic_point(tri.vertices[i].coords, tri.vertices[j].coords, t))


def comparison_distance(a, b, c, t):
    """Distance in H^2 from vertex C to the point at fraction ``t`` on AB."""
    tri = ComparisonTriangle(a, b, c)
    return hdist(tri.vertices[2], comparison_point(tri, "AB", t))


# ---------------------------------------------------------------------------
# Isometries


def random_lorentz(n, rng):
    """Random element of the identity component of O(n, 1)."""
    rng = np.random.default_rng(rng)
    Q, R = np.linalg.qr(rng.normal(size=(n, n)))
    Q = Q * np.sign(np.diag(R))
    rot = np.eye(n + 1)
    rot[1:, 1:] = Q
    u = rng.normal(size=n)
    u /= np.linalg.norm(u)
    r = rng.uniform(0.0, 2.0)
    boost = np.eye(n + 1)
    boost[0, 0] = np.cosh(r)
    boost[0, 1:] = boost[1:, 0] = np.sinh(r) * u
    boost[1:, 1:] += (np.cosh(r) - 1.0) * np.outer(u, u)
    return boost @ rot


def gram_to_coords_batch(G, *, tol=1e-12):
    """Vectorized :func:`gram_to_coords` for a stack of full-rank simplex Grams.

    ``G`` has shape ``(N, m, m)``; the result has the same shape with the
    time coordinate first.
    """
    G = np.asarray(G, dtype=float)
    if G.shape[0] == 0:
        return np.zeros_like(G)
    G = 0.5 * (G + np.swapaxes(G, 1, 2))
    w, U = np.linalg.eigh(G)
    scale = np.maximum(1.0, np.max(np.abs(w), axis=1))
    if np.any(w[:, 0] >= -tol * scale) or (G.shape[1] > 1 and np.any(w[:, 1] <= tol * scale)):
        raise DegeneracyError("Gram matrix is not Lorentzian of full rank")
    X = U * np.sqrt(np.abs(w))[:, None, :]
    flip = X[:, 0, 0] < 0
    X[flip, :, 0] *= -1
    return project_to_hyperboloid(X)
