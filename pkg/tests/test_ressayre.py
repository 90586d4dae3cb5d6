import json

import numpy as np
import pytest

from momentpoly.errors import InvalidArgument
from momentpoly.lie import RationalVector
from momentpoly.orbit import OrbitProblem, fixed_components
from momentpoly.polytope import enumerate_vertices, hausdorff
from momentpoly.ressayre import (
    RessayrePair,
    VerificationBudget,
    best_pair,
    emit_inequalities,
    generate_affine_pairs,
    generate_exhaustive_pairs,
    generate_facet_pairs,
    generate_gamma_s_pair,
    generate_projection_pair,
    infinitesimal_pair_test,
    is_admissible,
    sampled_polytope,
    verify_theorem,
)

HORN3_VERTICES = np.array([[2, 2, 2], [4, 1, 1], [3, 3, 0], [4, 2, 0]], dtype=float)


def _component(p, gamma, assignments):
    return next(c for c in fixed_components(p, gamma) if c.assignments == assignments)


def test_pair_examples(horn2):
    g = RationalVector([1, 0])
    ok, wd, wit = infinitesimal_pair_test(horn2, g, _component(horn2, g, ((0, 1), (1, 0))))
    assert ok and wit.dims_match and (wit.n_dim, wit.t_dim, wit.rank) == (1, 1, 1)
    assert wd.leak <= 1e-12
    ok, _, wit = infinitesimal_pair_test(horn2, g, _component(horn2, g, ((0, 1), (0, 1))))
    # the positive tangent space has dimension 2 here: both factors move
    assert not ok and not wit.dims_match and (wit.n_dim, wit.t_dim) == (1, 2)
    central = RationalVector([1, 1])
    ok, _, wit = infinitesimal_pair_test(horn2, central, fixed_components(horn2, central)[0])
    assert ok and wit.n_dim == wit.t_dim == 0


def test_pair_test_rejects_mismatched_component(horn2):
    c = fixed_components(horn2, [1, 0])[0]
    with pytest.raises(InvalidArgument):
        infinitesimal_pair_test(horn2, RationalVector([1, 1]), c)


def test_scaling_invariance(horn3):
    for g in ([1, 0, 0], [1, 1, 0], [2, 1, 0]):
        g = RationalVector(g)
        for c in fixed_components(horn3, g)[:6]:
            c2 = next(d for d in fixed_components(horn3, g * 2) if d.assignments == c.assignments)
            assert infinitesimal_pair_test(horn3, g, c)[0] == infinitesimal_pair_test(horn3, g * 2, c2)[0]


def test_admissibility_examples(horn2, horn3):
    assert is_admissible(horn2, [1, 0]) == (True, 1, 2)
    assert is_admissible(horn2, [1, 1]) == (True, 1, 1)
    ok, dz, dzg = is_admissible(horn3, [2, 1, 0])
    assert (ok, dz, dzg) == (False, 1, 3)
    with pytest.raises(InvalidArgument):
        is_admissible(horn2, [0, 0])


def test_best_pair_is_strongest_valid(horn2):
    pr = best_pair(horn2, [-1, 0])
    # -c1 >= -2, i.e. c1 <= 2
    assert pr.is_pair and pr.value == -2
    pr = best_pair(horn2, [1, 0])
    assert pr.value == 1


def test_pair_json_and_provenance(horn2):
    pr = best_pair(horn2, [1, 0], "facet")
    doc = json.loads(json.dumps(pr.to_json()))
    assert doc["gamma"] == ["1", "0"] and doc["value"] == "1" and doc["provenance"] == "facet"
    assert pr.holds_at([1.5, 0.5]) and not pr.holds_at([0.9, 1.1])
    with pytest.raises(InvalidArgument):
        RessayrePair(pr.gamma, pr.component, pr.value, True, True, True, pr.rank_witness, "guess")


def test_generators_horn2(horn2):
    sp = sampled_polytope(horn2, 5000)
    assert generate_gamma_s_pair(horn2, sp) == []
    aff = generate_affine_pairs(horn2, sp)
    assert {(tuple(p.gamma.coords), p.value) for p in aff} == {((1, 1), 2), ((-1, -1), -2)}
    facets = generate_facet_pairs(horn2, sp)
    sysm = emit_inequalities(aff + facets, 2)
    assert [(e.coords, o) for e, o in sysm.equalities] == [((1, 1), 2)]
    keys = sysm.keys()
    assert ((1, -1), 0) in keys and ((-1, 1), -2) in keys


def test_gamma_s_single_orbit():
    p = OrbitProblem([[1, 0]])
    assert generate_gamma_s_pair(p, sampled_polytope(p, 50)) == []


def test_emit_no_pairs_and_dedup(horn2):
    s = emit_inequalities([], 3)
    assert not s.equalities and len(s.inequalities) == 2
    assert all(i.sources == ["chamber"] for i in s.inequalities)
    g = RationalVector([1, 0])
    a = best_pair(horn2, g, prefer=_component(horn2, g, ((0, 1), (1, 0))))
    b = best_pair(horn2, g, prefer=_component(horn2, g, ((1, 0), (0, 1))))
    assert a.value == b.value == 1 and a.component != b.component
    s = emit_inequalities([a, b], 2, chamber=False)
    assert len(s.inequalities) == 1


def test_emit_reduces_modulo_equalities(horn2):
    pairs = [best_pair(horn2, g) for g in ([1, 1], [-1, -1], [1, 0], [0, -1])]
    s = emit_inequalities(pairs, 2, chamber=False)
    # c1 >= 1 and -c2 >= -1 coincide on the trace line
    assert len(s.inequalities) == 1
    assert sorted(s.inequalities[0].sources) == ["exhaustive"]


def test_projection_pair_separates(horn2):
    pp = generate_projection_pair(horn2, [3.0, -1.0])
    assert pp.pair.gamma == RationalVector([-1, 1])
    assert pp.pair.value == -2
    assert float(np.dot(pp.pair.gamma.to_numpy(), pp.xi)) == pytest.approx(-4)
    assert pp.separation < 0 and pp.distance == pytest.approx(np.sqrt(2), abs=1e-6)
    pp = generate_projection_pair(horn2, [1.2, -1.0])
    assert pp.separation < 0


def test_projection_pair_rejects_interior(horn2):
    with pytest.raises(InvalidArgument):
        generate_projection_pair(horn2, [1.5, 0.5])


def test_projection_fiber_contains_component(horn3):
    pp = generate_projection_pair(horn3, [7.0, 0.0, -1.0])
    assert pp.separation < 0
    # the projection lies on the emitted halfspace boundary
    g = pp.pair.gamma.to_numpy()
    assert float(g @ pp.xi_prime) == pytest.approx(float(pp.pair.value), abs=1e-4)


def test_exhaustive_pairs_horn3(horn3):
    pairs = generate_exhaustive_pairs(horn3)
    s = emit_inequalities(pairs, 3)
    V = enumerate_vertices(s.hrep())
    assert hausdorff(V, HORN3_VERTICES) <= 1e-9
    with pytest.raises(InvalidArgument):
        generate_exhaustive_pairs(OrbitProblem([[5, 4, 3, 2, 1]]))


def test_verify_horn3_exact(horn3):
    rep = verify_theorem(horn3, VerificationBudget(samples=20000, fixed_points=True))
    assert rep.passed and rep.soundness_ok and rep.completeness_ok
    V = enumerate_vertices(rep.system.hrep())
    assert hausdorff(V, HORN3_VERTICES) <= 1e-9
    # the classical Horn inequalities for (2,1,0),(2,1,0) all hold on the region
    horn = [([1, 0, 0], 4), ([0, 1, 0], 3), ([0, 0, 1], 2), ([1, 1, 0], 6), ([1, 0, 1], 5), ([0, 1, 1], 4)]
    for a, b in horn:
        assert np.all(V @ np.array(a, dtype=float) <= b + 1e-9)
    certs = [c for c in rep.certificates if c.inequality.sources != ["chamber"]]
    assert len(certs) == 2 and all(c.pair_indices for c in certs)


def test_verify_single_orbit():
    p = OrbitProblem([[2, 1, 0]])
    rep = verify_theorem(p, VerificationBudget(samples=200))
    assert rep.passed
    assert len(rep.system.equalities) == 3
    V = enumerate_vertices(rep.system.hrep())
    assert np.allclose(V, [[2, 1, 0]])


def test_verify_tiny_budget_fails_completeness(horn2):
    rep = verify_theorem(horn2, VerificationBudget(samples=10))
    assert rep.soundness_ok
    assert not rep.completeness_ok and not rep.passed
    doc = rep.to_json()
    assert doc["passed"] is False
