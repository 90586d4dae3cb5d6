import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from momentpoly.errors import InvalidArgument
from momentpoly.lie import RationalVector
from momentpoly.polytope import (
    HRep,
    Polytope,
    affine_hull_basis,
    compare_regions,
    enumerate_vertices,
    hausdorff,
    hull_from_points,
    membership,
    project_point,
    rationalize_vector,
)

TRIANGLE = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
SEGMENT = np.array([[1.0, 1.0], [2.0, 0.0]])


def test_triangle_hull():
    P = hull_from_points(TRIANGLE)
    assert P.dim == 2 and len(P.normals) == 3 and len(P.vertices) == 3
    assert P.normal_basis.shape == (0, 2)


def test_segment_hull():
    P = hull_from_points(SEGMENT)
    assert P.dim == 1
    assert np.allclose(np.abs(P.normal_basis[0]), [1 / math.sqrt(2)] * 2)


def test_empty_hull():
    with pytest.raises(InvalidArgument):
        hull_from_points(np.zeros((0, 2)))


def test_projection_examples():
    seg = hull_from_points(SEGMENT)
    x, d = project_point(seg, [3.0, 1.0])
    assert np.allclose(x, [2, 0]) and d == pytest.approx(math.sqrt(2))
    x, d = project_point(seg, [1.5, 0.5])
    assert d == pytest.approx(0, abs=1e-12) and np.allclose(x, [1.5, 0.5])
    tri = hull_from_points(TRIANGLE)
    x, _ = project_point(tri, [1.0, 1.0])
    assert np.allclose(x, [0.5, 0.5])


def test_membership_examples():
    tri = hull_from_points(TRIANGLE)
    ok, v = membership(tri, [0.2, 0.2], 1e-9)
    assert ok and v <= 0
    ok, v = membership(tri, [1.0, 1.0], 1e-9)
    assert not ok and v == pytest.approx(1 / math.sqrt(2))
    assert membership(hull_from_points(SEGMENT), [1.5, 0.5], 1e-9)[0]


def test_affine_hull_examples():
    aff = affine_hull_basis(SEGMENT)
    assert aff.rational_normals == [RationalVector([1, 1])]
    assert affine_hull_basis(TRIANGLE).normal_basis.shape[0] == 0
    aff = affine_hull_basis(np.array([[3.0, 1.0]]))
    assert aff.basis.shape[0] == 0 and aff.normal_basis.shape[0] == 2


def test_rationalize():
    assert rationalize_vector([0.5, -1.0, 0.25]) == RationalVector([2, -4, 1])
    assert rationalize_vector([1.0, math.pi]) is None
    assert rationalize_vector([0.0, 0.0]) is None


def test_json_roundtrip():
    P = hull_from_points(TRIANGLE)
    doc = json.loads(P.dumps())
    assert set(doc) >= {"ambient_dim", "vertices", "halfspaces", "equalities"}
    Q = Polytope.from_json(doc)
    assert hausdorff(P.vertices, Q.vertices) == 0.0


def test_enumerate_vertices_square_with_equality():
    # unit square embedded in the plane x + y + z = 1 of R^3
    h = HRep([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0]], [0, -1, 0, -1], [[1, 1, 1]], [1])
    V = enumerate_vertices(h)
    assert len(V) == 4
    assert np.allclose(np.sort(V[:, 2]), [-1, 0, 0, 1])


def test_compare_regions_self_and_dropped_facet(horn2):
    from momentpoly.orbit import moment_chamber_batch, sample_array

    X = moment_chamber_batch(sample_array(horn2, 0, 10000))
    P = hull_from_points(X)
    rep = compare_regions(P.hrep(), X)
    assert rep.soundness <= 1e-9
    assert np.all(rep.tightness <= 1e-6)
    assert rep.hausdorff <= 1e-9
    # drop the facet c1 <= 2: the region becomes unbounded inside the box
    keep = np.array([n[0] > 0 for n in P.normals])
    h = HRep(P.normals[keep], P.offsets[keep], P.eq_normals, P.eq_offsets)
    assert compare_regions(h, X).hausdorff > 0.1


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, (12, 3), elements=st.floats(-3, 3)), arrays(np.float64, 3, elements=st.floats(-6, 6)))
def test_hull_and_projection_properties(X, xi):
    if np.linalg.matrix_rank(X - X.mean(0), tol=1e-6) < 3:
        return
    P = hull_from_points(X)
    # every point is a member; every facet is supported by a vertex
    for x in X:
        assert membership(P, x, 1e-8)[0]
    S = P.hrep().slacks(P.vertices)
    assert np.all(S >= -1e-8)
    assert np.all(np.min(np.abs(S), axis=0) <= 1e-8)
    y, d = project_point(P, xi)
    assert d == pytest.approx(np.linalg.norm(xi - y))
    # variational inequality and idempotence
    assert np.all((P.vertices - y) @ (xi - y) <= 1e-8 * (1 + d) * (1 + np.abs(P.vertices).max()))
    y2, _ = project_point(P, y)
    assert np.allclose(y2, y, atol=1e-8)
