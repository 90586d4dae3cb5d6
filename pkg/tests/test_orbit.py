import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.linalg import expm
from scipy.stats import special_ortho_group

from momentpoly.errors import InvalidArgument, ResourceLimit
from momentpoly.lie import RationalVector
from momentpoly.orbit import (
    BBControls,
    ComponentDescriptor,
    OrbitPoint,
    OrbitProblem,
    bb_limit,
    component_moment_value,
    component_point,
    descriptor_of_point,
    fixed_components,
    g_action,
    moment_chamber,
    moment_chamber_batch,
    moment_p,
    sample,
    sample_array,
    stabilizer_p_dim,
    tangent_action,
)

HALF = np.array([[0.5, 0.5], [0.5, 0.5]])


def test_problem_validation():
    with pytest.raises(InvalidArgument):
        OrbitProblem([[1, 1]])
    with pytest.raises(InvalidArgument):
        OrbitProblem([[0, 1]])
    with pytest.raises(InvalidArgument):
        OrbitProblem([[1]])
    with pytest.raises(InvalidArgument):
        OrbitProblem([[1, 0], [2, 1, 0]])
    p = OrbitProblem([["1/2", 0]])
    assert p.spectra[0][0] == Fraction(1, 2)


def test_moment_examples(horn2):
    z = OrbitPoint(np.stack([np.diag([1.0, 0.0]), np.diag([1.0, 0.0])]))
    assert np.allclose(moment_p(horn2, z), np.diag([2, 0]))
    assert np.allclose(moment_chamber(horn2, z), [2, 0])
    z = OrbitPoint(np.stack([np.diag([1.0, 0.0]), HALF]))
    assert np.allclose(moment_p(horn2, z), [[1.5, 0.5], [0.5, 0.5]])
    c = moment_chamber(horn2, z)
    assert np.allclose(c, [1 + 1 / math.sqrt(2), 1 - 1 / math.sqrt(2)], atol=1e-9)


def test_single_factor_is_isospectral():
    p = OrbitProblem([[3, 1, -2]])
    for z in sample(p, 4, 5):
        assert np.allclose(moment_chamber(p, z), [3, 1, -2], atol=1e-12)


def test_sampling_contract(horn2):
    z = sample(horn2, 9, 1)[0]
    assert z.spectral_drift(horn2) <= 1e-10
    assert np.array_equal(sample_array(horn2, 3, 20), sample_array(horn2, 3, 20))
    X = moment_chamber_batch(sample_array(horn2, 0, 10000))
    assert X[:, 0].min() <= 1.01 and X[:, 0].max() >= 1.99
    assert np.allclose(X.sum(1), 2)


def test_hermitian_sampling_is_complex(horn2):
    M = sample_array(horn2.with_mode("hermitian"), 0, 5)
    assert np.iscomplexobj(M)
    assert np.allclose(M, np.conj(np.swapaxes(M, -1, -2)))
    with pytest.raises(InvalidArgument):
        g_action(horn2.with_mode("hermitian"), np.eye(2), OrbitPoint(M[0]))


def test_g_action_examples(horn3):
    z = sample(horn3, 1, 1)[0]
    assert np.allclose(g_action(horn3, np.eye(3), z).matrices, z.matrices, atol=1e-12)
    k = special_ortho_group.rvs(3, random_state=4)
    out = g_action(horn3, k, z)
    assert np.allclose(out.matrices, k[None] @ z.matrices @ k.T[None], atol=1e-10)
    # equivariance of the moment map
    assert np.allclose(moment_p(horn3, out), k @ moment_p(horn3, z) @ k.T, atol=1e-10)
    p = OrbitProblem([[1, 0]])
    out = g_action(p, np.diag([1e3, 1e-3]), OrbitPoint(HALF[None]))
    # off-diagonal decays like t^-2
    assert np.allclose(out.matrices[0], np.diag([1, 0]), atol=2e-6)


def test_g_action_rejects_bad_g(horn2):
    z = sample(horn2, 0, 1)[0]
    with pytest.raises(InvalidArgument):
        g_action(horn2, np.zeros((2, 2)), z)
    with pytest.raises(InvalidArgument):
        g_action(horn2, np.diag([1.0, -1.0]), z)


def test_isospectral_chain(horn3, rng):
    z = sample(horn3, 2, 1)[0]
    for _ in range(50):
        g = np.eye(3) + 0.5 * rng.standard_normal((3, 3))
        if np.linalg.det(g) < 0:
            g[:, 0] *= -1
        z = g_action(horn3, g, z)
    assert z.spectral_drift(horn3) <= 1e-9


def test_tangent_skew_and_commuting(horn3, rng):
    z = sample(horn3, 3, 1)[0]
    W = rng.standard_normal((3, 3))
    X = W - W.T
    T = tangent_action(horn3, X, z)
    for i, A in enumerate(z.matrices):
        assert np.allclose(T[i], X @ A - A @ X, atol=1e-12)
    d = OrbitPoint.diagonal(horn3)
    assert np.allclose(tangent_action(horn3, d.matrices[0], d), 0, atol=1e-14)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_tangent_matches_finite_differences(n):
    p = OrbitProblem([list(range(n, 0, -1)), [2 * i for i in range(n)][::-1]])
    rng = np.random.default_rng(n)
    h = 1e-5
    for trial in range(10):
        z = sample(p, 100 + trial, 1)[0]
        X = rng.standard_normal((n, n))
        fd = (g_action(p, expm(h * X), z).matrices - g_action(p, expm(-h * X), z).matrices) / (2 * h)
        T = tangent_action(p, X, z)
        assert np.linalg.norm(fd - T) <= 1e-6 * np.linalg.norm(T)


def test_stabilizer_dims(horn2):
    z = sample(horn2, 5, 1)[0]
    assert stabilizer_p_dim(horn2, z) == 1
    p = OrbitProblem([[3, 1, 0]])
    assert stabilizer_p_dim(p, OrbitPoint.diagonal(p)) == 3
    p = OrbitProblem([[3, 2, 1, 0], [3, 2, 1, 0]])
    for c in fixed_components(p, [1, 1, 0, 0])[:4]:
        dims = {stabilizer_p_dim(p, component_point(p, c, s)) for s in range(3)}
        assert dims == {2}


def test_fixed_component_counts(horn2):
    assert len(fixed_components(horn2, [1, 0])) == 4
    assert len(fixed_components(OrbitProblem([[2, 1, 0]]), [1, 1, 0])) == 3
    assert len(fixed_components(horn2, [1, 1])) == 1
    with pytest.raises(InvalidArgument):
        fixed_components(horn2, [0, 0])
    with pytest.raises(ResourceLimit):
        fixed_components(OrbitProblem([[3, 2, 1, 0]] * 3), [3, 2, 1, 0], bound=100)


def test_component_points_and_values(horn2):
    g = RationalVector([1, 0])
    comps = {c.assignments: c for c in fixed_components(horn2, g)}
    ee = comps[((0, 1), (0, 1))]
    es = comps[((0, 1), (1, 0))]
    for s in range(3):
        assert np.allclose(component_point(horn2, ee, s).matrices[0], np.diag([1, 0]))
        assert np.allclose(component_point(horn2, es, s).matrices[1], np.diag([0, 1]))
    assert component_moment_value(horn2, ee) == 2
    assert component_moment_value(horn2, es) == 1
    central = fixed_components(horn2, [1, 1])[0]
    assert component_moment_value(horn2, central) == 2


def test_component_point_big_block():
    p = OrbitProblem([[2, 1, 0]])
    comps = fixed_components(p, [1, 1, 0])
    c = next(c for c in comps if c.assignments[0] == (0, 1, 0))
    A = component_point(p, c, 7).matrices[0]
    assert np.allclose(np.linalg.eigvalsh(A[:2, :2]), [0, 2])
    assert A[2, 2] == pytest.approx(1) and np.allclose(A[:2, 2], 0)
    assert descriptor_of_point(p, c.gamma, OrbitPoint(A[None])) == c


def test_moment_value_constant_on_component(horn3):
    g = RationalVector([2, 1, 1])
    for c in fixed_components(horn3, g)[::5]:
        val = float(component_moment_value(horn3, c))
        for s in range(3):
            S = moment_p(horn3, component_point(horn3, c, s))
            assert float(np.diag(S) @ g.to_numpy()) == pytest.approx(val, abs=1e-12)


def test_bb_limit_fixed_point(horn2):
    c = fixed_components(horn2, [1, 0])[1]
    z = component_point(horn2, c, 0)
    z_inf, d, steps = bb_limit(horn2, z, [1, 0])
    assert steps == 0 and d == c


def test_bb_limit_generic(horn3, rng):
    g = RationalVector([1, 0, -1])
    z = sample(horn3, 11, 1)[0]
    z_inf, c, steps = bb_limit(horn3, z, g)
    assert steps > 0
    S = moment_p(horn3, z_inf)
    assert float(np.diag(S) @ g.to_numpy()) == pytest.approx(float(component_moment_value(horn3, c)), abs=1e-8)
    # a long fixed-step iteration reaches the same component
    cur = z
    G = np.diag(np.exp(0.05 * g.to_numpy()))
    for _ in range(1000):
        cur = g_action(horn3, G, cur)
    assert descriptor_of_point(horn3, g, cur, tol=1e-6) == c


def test_bb_limit_two_by_two_power_iteration(horn2):
    z = sample(horn2, 12, 1)[0]
    _, c, _ = bb_limit(horn2, z, [1, 0])
    for i, A in enumerate(z.matrices):
        _, V = np.linalg.eigh(A)
        top = V[:, -1]
        # the top eigenvector goes to e_1 unless it is orthogonal to it
        assert c.assignments[i] == ((0, 1) if abs(top[0]) > 1e-12 else (1, 0))


def test_gradient_monotonicity(horn3):
    g = np.array([1.0, 0.0, -1.0])
    z = sample(horn3, 13, 1)[0]
    vals = []
    for t in np.linspace(-3, 3, 61):
        w = g_action(horn3, np.diag(np.exp(t * g)), z)
        vals.append(float(np.diag(moment_p(horn3, w)) @ g))
    assert np.all(np.diff(vals) >= -1e-8)


def test_descriptor_rejects_non_fixed(horn2):
    z = sample(horn2, 14, 1)[0]
    with pytest.raises(InvalidArgument):
        descriptor_of_point(horn2, [1, 0], z)


def test_descriptor_json(horn2):
    c = fixed_components(horn2, [1, 0])[0]
    doc = c.to_json()
    assert doc["gamma"] == ["1", "0"] and doc["blocks"] == [[0], [1]]
    assert isinstance(c, ComponentDescriptor)


@pytest.mark.slow
def test_real_and_hermitian_hulls_agree(horn2):
    from momentpoly.polytope import hausdorff, hull_from_points

    Xr = moment_chamber_batch(sample_array(horn2, 0, 20000))
    Xh = moment_chamber_batch(sample_array(horn2.with_mode("hermitian"), 0, 20000))
    assert hausdorff(hull_from_points(Xr).vertices, hull_from_points(Xh).vertices) <= 1e-2
