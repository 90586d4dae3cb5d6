"""Convex geometry for sampled moment polytopes.

Hulls of point clouds are computed inside their affine hull (qhull for
dimension >= 2, analytically below), nearest points by Wolfe's
minimum-norm-point iteration over the vertex list, and region comparisons by
vertex enumeration of the H-representation.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from . import kernels
from .errors import InvalidArgument
from .lie import RationalVector

__all__ = [
    "Polytope",
    "HRep",
    "AffineHull",
    "ComparisonReport",
    "hull_from_points",
    "project_point",
    "membership",
    "affine_hull_basis",
    "rationalize_vector",
    "enumerate_vertices",
    "compare_regions",
    "hausdorff",
]


@dataclass
class HRep:
    """Region {x : N x >= b, E x = e}; rows of ``normals`` need not be unit."""

    normals: np.ndarray
    offsets: np.ndarray
    eq_normals: np.ndarray = None
    eq_offsets: np.ndarray = None

    def __post_init__(self):
        self.normals = np.atleast_2d(np.asarray(self.normals, dtype=float))
        self.offsets = np.asarray(self.offsets, dtype=float).reshape(-1)
        d = self.normals.shape[1]
        if self.eq_normals is None or len(self.eq_normals) == 0:
            self.eq_normals = np.zeros((0, d))
            self.eq_offsets = np.zeros(0)
        else:
            self.eq_normals = np.atleast_2d(np.asarray(self.eq_normals, dtype=float))
            self.eq_offsets = np.asarray(self.eq_offsets, dtype=float).reshape(-1)

    @property
    def ambient_dim(self) -> int:
        return self.normals.shape[1]

    def slacks(self, X) -> np.ndarray:
        """Signed slacks N x - b, shape (points, halfspaces)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return X @ self.normals.T - self.offsets

    def eq_residuals(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return X @ self.eq_normals.T - self.eq_offsets

    def intersect(self, other: "HRep") -> "HRep":
        return HRep(
            np.vstack([self.normals, other.normals]),
            np.concatenate([self.offsets, other.offsets]),
            np.vstack([self.eq_normals, other.eq_normals]),
            np.concatenate([self.eq_offsets, other.eq_offsets]),
        )

    def to_json(self) -> dict:
        return {
            "ambient_dim": self.ambient_dim,
            "halfspaces": [
                {"normal": n.tolist(), "offset": float(o)} for n, o in zip(self.normals, self.offsets)
            ],
            "equalities": [
                {"normal": n.tolist(), "offset": float(o)} for n, o in zip(self.eq_normals, self.eq_offsets)
            ],
        }


@dataclass
class Polytope:
    """Bounded polytope carrying both representations and its affine hull."""

    ambient_dim: int
    vertices: np.ndarray
    normals: np.ndarray
    offsets: np.ndarray
    affine_basepoint: np.ndarray
    affine_basis: np.ndarray  # rows span the direction space of the affine hull
    normal_basis: np.ndarray  # rows span its orthogonal complement

    @property
    def dim(self) -> int:
        return self.affine_basis.shape[0]

    @property
    def eq_normals(self) -> np.ndarray:
        return self.normal_basis

    @property
    def eq_offsets(self) -> np.ndarray:
        return self.normal_basis @ self.affine_basepoint

    def hrep(self) -> HRep:
        return HRep(self.normals, self.offsets, self.eq_normals, self.eq_offsets)

    def to_json(self) -> dict:
        doc = self.hrep().to_json()
        doc["vertices"] = self.vertices.tolist()
        return doc

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, doc: dict) -> "Polytope":
        V = np.atleast_2d(np.asarray(doc["vertices"], dtype=float))
        return hull_from_points(V)


@dataclass
class AffineHull:
    basepoint: np.ndarray
    basis: np.ndarray
    normal_basis: np.ndarray
    rational_normals: list = field(default_factory=list)


def rationalize_vector(v, max_den: int = 64, tol: float = 1e-6) -> RationalVector | None:
    """Integer vector with content 1 parallel to ``v``, or None.

    Coordinates are rescaled so the largest has modulus one and each is
    reconstructed by continued fractions with denominator <= ``max_den``.  The
    result is rejected when its direction differs from that of ``v`` by more
    than ``tol``.
    """
    v = np.asarray(v, dtype=float)
    nv = np.linalg.norm(v)
    if nv == 0:
        return None
    u = v / np.max(np.abs(v))
    fr = [Fraction(float(c)).limit_denominator(max_den) for c in u]
    den = math.lcm(*(f.denominator for f in fr))
    ints = [int(f * den) for f in fr]
    g = math.gcd(*ints)
    if g == 0:
        return None
    ints = [i // g for i in ints]
    r = np.array(ints, dtype=float)
    if np.linalg.norm(r / np.linalg.norm(r) - v / nv) > tol:
        return None
    return RationalVector(ints)


def affine_hull_basis(points, tol: float = 1e-9, subspace=None, max_den: int = 64,
                      rational_tol: float = 1e-6) -> AffineHull:
    """Orthonormal bases of the affine hull of ``points`` and of its complement.

    ``subspace`` (rows spanning a linear subspace R_s of the ambient space)
    restricts the complement to R_s; default is the whole ambient space.
    """
    X = np.atleast_2d(np.asarray(points, dtype=float))
    if X.size == 0:
        raise InvalidArgument("affine hull of an empty point set")
    d = X.shape[1]
    base = X.mean(axis=0)
    Y = X - base
    if subspace is None:
        R = np.eye(d)
    else:
        R = np.linalg.qr(np.atleast_2d(np.asarray(subspace, dtype=float)).T)[0].T
    scale = max(1.0, float(np.max(np.abs(X))))
    if len(X) > 1:
        _, s, Vt = np.linalg.svd(Y, full_matrices=False)
        rank = int(np.sum(s / math.sqrt(len(X)) > tol * scale))
        B = Vt[:rank]
    else:
        B = np.zeros((0, d))
    # complement of span(B) inside span(R)
    Rp = R - (R @ B.T) @ B
    if Rp.size:
        _, s2, V2 = np.linalg.svd(Rp, full_matrices=False)
        Nb = V2[: int(np.sum(s2 > 1e-9))]
    else:
        Nb = np.zeros((0, d))
    Nb, echelon = _canonical_rows(Nb)
    rats = [rationalize_vector(u, max_den, rational_tol) for u in echelon]
    return AffineHull(base, B, Nb, rats)


def _canonical_rows(Nb: np.ndarray) -> np.ndarray:
    # Prefer a rationalizable basis: reduced row echelon form, then orthonormalize.
    if len(Nb) == 0:
        return Nb, Nb
    M = Nb.copy()
    rows, cols = M.shape
    r = 0
    for c in range(cols):
        if r == rows:
            break
        piv = r + int(np.argmax(np.abs(M[r:, c])))
        if abs(M[piv, c]) < 1e-9:
            continue
        M[[r, piv]] = M[[piv, r]]
        M[r] /= M[r, c]
        for i in range(rows):
            if i != r:
                M[i] -= M[i, c] * M[r]
        r += 1
    out = []
    for row in M:
        for u in out:
            row = row - (row @ u) * u
        nrm = np.linalg.norm(row)
        if nrm > 1e-12:
            row = row / nrm
            if row[np.argmax(np.abs(row) > 1e-12)] < 0:
                row = -row
            out.append(row)
    return np.array(out).reshape(len(out), cols), M[:r]


def _dedupe_halfspaces(N: np.ndarray, b: np.ndarray, tol: float = 1e-9):
    keep_n, keep_b = [], []
    for n, o in zip(N, b):
        if any(np.linalg.norm(n - m) < tol and abs(o - c) < tol for m, c in zip(keep_n, keep_b)):
            continue
        keep_n.append(n)
        keep_b.append(o)
    return np.array(keep_n).reshape(len(keep_n), N.shape[1]), np.array(keep_b)


def hull_from_points(points, tol: float = 1e-9) -> Polytope:
    """Convex hull of a point cloud with facets lifted to ambient coordinates.

    Halfspaces read <x, normal> >= offset with unit normals lying in the
    direction space of the affine hull; the affine hull itself is carried as
    equality constraints through ``normal_basis``.
    """
    X = np.atleast_2d(np.asarray(points, dtype=float))
    if X.shape[0] == 0 or X.size == 0:
        raise InvalidArgument("hull of an empty point set")
    d = X.shape[1]
    aff = affine_hull_basis(X, tol)
    B, base = aff.basis, aff.basepoint
    r = B.shape[0]
    Y = (X - base) @ B.T
    if r == 0:
        V = base[None, :]
        N, off = np.zeros((0, d)), np.zeros(0)
    elif r == 1:
        i, j = int(np.argmin(Y[:, 0])), int(np.argmax(Y[:, 0]))
        V = np.vstack([X[i], X[j]])
        u = B[0]
        N = np.vstack([u, -u])
        off = np.array([u @ X[i], -(u @ X[j])])
    else:
        try:
            hull = ConvexHull(Y)
        except QhullError:
            hull = ConvexHull(Y, qhull_options="QJ")
        V = X[hull.vertices]
        A = hull.equations[:, :-1]
        c = hull.equations[:, -1]
        N = -(A @ B)
        off = c + N @ base
        N, off = _dedupe_halfspaces(N, off)
    return Polytope(d, V, N, off, base, B, aff.normal_basis)


def membership(p, xi, tol: float = 1e-8) -> tuple[bool, float]:
    """Whether ``xi`` satisfies every constraint of ``p`` up to ``tol``.

    The reported violation is the largest signed distance outside a facet
    (negative for interior points) or off an equality hyperplane.
    """
    h = p.hrep() if isinstance(p, Polytope) else p
    x = np.asarray(xi, dtype=float)
    viol = []
    if len(h.normals):
        nn = np.linalg.norm(h.normals, axis=1)
        viol.append(np.max((h.offsets - h.normals @ x) / nn))
    if len(h.eq_normals):
        ne = np.linalg.norm(h.eq_normals, axis=1)
        viol.append(np.max(np.abs(h.eq_normals @ x - h.eq_offsets) / ne))
    v = float(max(viol)) if viol else 0.0
    return v <= tol, v


def project_point(p: Polytope, xi) -> tuple[np.ndarray, float]:
    """Nearest point of ``p`` to ``xi`` and the distance."""
    proj, dist = kernels.project_points(p.vertices, np.asarray(xi, dtype=float)[None, :])
    return proj[0], float(dist[0])


def enumerate_vertices(h: HRep, tol: float = 1e-9) -> np.ndarray:
    """Vertices of a bounded H-region by brute-force basis enumeration."""
    d = h.ambient_dim
    E, e = h.eq_normals, h.eq_offsets
    if len(E):
        x0, *_ = np.linalg.lstsq(E, e, rcond=None)
        if np.max(np.abs(E @ x0 - e), initial=0.0) > 1e-7 * max(1.0, np.max(np.abs(e))):
            return np.zeros((0, d))
        _, s, Vt = np.linalg.svd(E)
        rank = int(np.sum(s > 1e-10 * max(1.0, s[0])))
        Nsp = Vt[rank:].T
    else:
        x0 = np.zeros(d)
        Nsp = np.eye(d)
    q = Nsp.shape[1]
    A = h.normals @ Nsp
    b = h.offsets - h.normals @ x0
    if q == 0:
        return x0[None, :] if np.all(A @ np.zeros(0) - b >= -tol) else np.zeros((0, d))
    combos = np.array(list(itertools.combinations(range(len(A)), q)), dtype=int)
    if len(combos) == 0:
        return np.zeros((0, d))
    M = A[combos]
    rhs = b[combos]
    dets = np.linalg.det(M)
    ok = np.abs(dets) > 1e-12
    if not ok.any():
        return np.zeros((0, d))
    Y = np.linalg.solve(M[ok], rhs[ok][..., None])[..., 0]
    scale = 1.0 + np.max(np.abs(b))
    feas = np.all(Y @ A.T - b >= -tol * scale, axis=1)
    Y = Y[feas]
    out: list[np.ndarray] = []
    for y in Y:
        if not any(np.linalg.norm(y - z) < 1e-8 * scale for z in out):
            out.append(y)
    if not out:
        return np.zeros((0, d))
    return x0 + np.array(out) @ Nsp.T


def facet_defining(h: HRep, vertices: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """Mask of halfspaces of ``h`` whose tight vertices span a facet of the region."""
    V = np.atleast_2d(vertices)
    if len(V) == 0:
        return np.zeros(len(h.normals), dtype=bool)
    aff = affine_hull_basis(V, 1e-9)
    q = aff.basis.shape[0]
    S = h.slacks(V)
    out = np.zeros(len(h.normals), dtype=bool)
    for j in range(len(h.normals)):
        tight = V[np.abs(S[:, j]) <= tol * (1.0 + np.abs(h.offsets[j]))]
        if len(tight) == 0 or len(tight) == len(V):
            continue
        out[j] = (affine_hull_basis(tight, 1e-9).basis.shape[0] == q - 1) if q > 0 else False
    return out


def hausdorff(V1, V2) -> float:
    """Hausdorff distance between conv(V1) and conv(V2).

    Distance to a convex set is convex, so the maximum over a polytope is
    attained at a vertex and probing vertices is exact.
    """
    V1 = np.atleast_2d(np.asarray(V1, dtype=float))
    V2 = np.atleast_2d(np.asarray(V2, dtype=float))
    if len(V1) == 0 or len(V2) == 0:
        return math.inf
    _, d12 = kernels.project_points(V2, V1)
    _, d21 = kernels.project_points(V1, V2)
    return float(max(d12.max(), d21.max()))


@dataclass
class ComparisonReport:
    soundness: float  # max violation over the cloud (<= 0 means sound)
    tightness: np.ndarray  # per-halfspace minimal slack over the cloud
    hausdorff: float
    bounded: bool
    region_vertices: np.ndarray
    hull_vertices: np.ndarray

    def to_json(self) -> dict:
        return {
            "soundness": float(self.soundness),
            "tightness": [float(t) for t in self.tightness],
            "hausdorff": float(self.hausdorff),
            "bounded": bool(self.bounded),
            "region_vertices": self.region_vertices.tolist(),
            "hull_vertex_count": int(len(self.hull_vertices)),
        }


def compare_regions(h: HRep, cloud, chamber: HRep | None = None, box_margin: float = 10.0) -> ComparisonReport:
    """Check a cloud against an H-region: soundness, tightness and Hausdorff distance.

    The region (intersected with ``chamber``) is clipped to a box around the
    cloud; ``bounded`` is False when the clipped region touches that box.
    """
    X = np.atleast_2d(np.asarray(cloud, dtype=float))
    if X.shape[1] != h.ambient_dim:
        raise InvalidArgument("cloud and region live in different dimensions")
    S = h.slacks(X) if len(h.normals) else np.zeros((len(X), 0))
    R = np.abs(h.eq_residuals(X)) if len(h.eq_normals) else np.zeros((len(X), 0))
    parts = [-S.min(axis=0)] if S.shape[1] else []
    if R.shape[1]:
        parts.append(R.max(axis=0))
    soundness = float(max((p.max() for p in parts), default=-math.inf))
    tight = S.min(axis=0) if S.shape[1] else np.zeros(0)

    region = h if chamber is None else h.intersect(chamber)
    lo, hi = X.min(axis=0), X.max(axis=0)
    pad = box_margin * (1.0 + float(np.max(hi - lo)))
    d = h.ambient_dim
    box = HRep(np.vstack([np.eye(d), -np.eye(d)]), np.concatenate([lo - pad, -(hi + pad)]))
    Vr = enumerate_vertices(region.intersect(box))
    bounded = bool(len(Vr)) and not np.any(box.slacks(Vr) <= 1e-7 * pad)
    hull = hull_from_points(X)
    H = hausdorff(Vr, hull.vertices) if len(Vr) else math.inf
    return ComparisonReport(soundness, tight, H, bounded, Vr, hull.vertices)
