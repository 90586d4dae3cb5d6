from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from momentpoly.errors import InvalidArgument, ResourceLimit
from momentpoly.lie import (
    RationalVector,
    build_root_system,
    chamber_face,
    chamber_faces,
    coroot,
    dominant_sweep,
    face_point,
    gamma_s,
    weyl_elements,
    weyl_order,
)

FAMILIES = [("A", 1), ("A", 2), ("A", 3), ("B", 2), ("C", 2), ("B", 3), ("C", 3), ("D", 3), ("D", 4)]


def test_rational_vector_is_exact():
    v = RationalVector(["1/3", 2, 0.5])
    w = v + v + v
    assert w.coords == (Fraction(1), Fraction(6), Fraction(3, 2))
    assert (v - v).is_zero()
    assert v.dot(RationalVector([3, 0, 0])) == 1
    assert v.to_strings() == ["1/3", "2", "1/2"]


def test_a1_and_a2_roots():
    a1 = build_root_system("A", 1)
    assert set(a1.roots) == {RationalVector([1, -1]), RationalVector([-1, 1])}
    a2 = build_root_system("A", 2)
    assert len(a2.roots) == 6 and len(a2.positive_roots) == 3
    for r in a2.roots:
        assert sorted(r.coords) == [-1, 0, 1]


def test_b2_roots():
    b2 = build_root_system("B", 2)
    expected = {(1, 1), (1, -1), (-1, 1), (-1, -1), (1, 0), (-1, 0), (0, 1), (0, -1)}
    assert {tuple(int(x) for x in r) for r in b2.roots} == expected


@pytest.mark.parametrize("family,rank", [("E", 6), ("A", 0), ("D", 1)])
def test_unsupported_root_system(family, rank):
    with pytest.raises(InvalidArgument):
        build_root_system(family, rank)


@pytest.mark.parametrize("alpha,h", [((1, -1, 0), (1, -1, 0)), ((1, 0, -1), (1, 0, -1))])
def test_type_a_coroots(alpha, h):
    rs = build_root_system("A", 2)
    assert coroot(rs, RationalVector(alpha)) == RationalVector(h)


def test_b2_short_coroot_and_non_root():
    rs = build_root_system("B", 2)
    assert coroot(rs, RationalVector([1, 0])) == RationalVector([1, 0])
    with pytest.raises(InvalidArgument):
        coroot(rs, RationalVector([2, 0]))


@pytest.mark.parametrize("family,rank", FAMILIES)
def test_structure(family, rank):
    rs = build_root_system(family, rank)
    for a in rs.roots:
        assert -a in rs.roots
        assert a.dot(coroot(rs, a)) == rs.form(a, a) > 0
    for a in rs.positive_roots:
        c = rs.simple_expansion(a)
        assert all(x >= 0 and x.denominator == 1 for x in c)


def test_gamma_s_examples():
    rs = build_root_system("A", 2)
    assert gamma_s(rs, chamber_face(rs, [])).is_zero()
    assert gamma_s(rs, chamber_face(rs, [0])) == RationalVector([-1, 1, 0])
    assert gamma_s(rs, chamber_face(rs, [0, 1])) == RationalVector([-2, 0, 2])


@pytest.mark.parametrize("family,rank", FAMILIES)
def test_gamma_s_kills_face_and_pairs_negatively(family, rank):
    rs = build_root_system(family, rank)
    for face in chamber_faces(rs):
        g = gamma_s(rs, face)
        for a in face.sigma_plus_s:
            assert a.dot(g) < 0
        x = face_point(rs, face)
        assert all(a.dot(x) == 0 for a in face.sigma_plus_s)


@pytest.mark.parametrize("family,rank,order", [("A", 1, 2), ("A", 2, 6), ("B", 2, 8), ("C", 3, 48), ("D", 3, 24)])
def test_weyl_orders(family, rank, order):
    rs = build_root_system(family, rank)
    W = weyl_elements(rs)
    assert len(W) == order == weyl_order(family, rank)
    keys = {(w.perm, w.signs) for w in W}
    for a in W[:5]:
        for b in W[:5]:
            c = a.compose(b)
            assert (c.perm, c.signs) in keys


def test_weyl_bound():
    with pytest.raises(ResourceLimit):
        weyl_elements(build_root_system("A", 4), bound=10)


def test_dominant_sweep_examples():
    a2 = build_root_system("A", 2)
    v, _ = dominant_sweep(a2, [0, 2, 1])
    assert np.allclose(v, [2, 1, 0])
    v, w = dominant_sweep(a2, [1, 1, 1])
    assert np.allclose(v, [1, 1, 1]) and w.perm == (0, 1, 2)
    b2 = build_root_system("B", 2)
    v, w = dominant_sweep(b2, [-3, 1])
    assert np.allclose(v, [3, 1])
    assert np.allclose(w.apply([-3, 1]), [3, 1])


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(FAMILIES[:6]), st.lists(st.floats(-5, 5), min_size=4, max_size=4))
def test_dominant_sweep_lands_in_chamber(fr, coords):
    rs = build_root_system(*fr)
    v = coords[: rs.dim]
    vp, w = dominant_sweep(rs, v)
    assert rs.in_chamber(vp, tol=1e-12)
    assert np.allclose(dominant_sweep(rs, vp)[0], vp)
    assert np.allclose(np.sort(np.abs(vp)), np.sort(np.abs(v)))
