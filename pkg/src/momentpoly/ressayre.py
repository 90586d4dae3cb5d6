"""Real Ressayre pairs and the inequalities they certify.

A pair (gamma, C) couples a one-parameter direction gamma with a connected
component C of the gamma-fixed locus of Z.  It is an infinitesimal pair when
the graded tangent map

    rho_x^gamma : n^{gamma>0} -> (T_x Z)^{gamma>0}

is an isomorphism at some x in C, and then every point of the moment polytope
satisfies <xi, gamma> >= <Phi_p(C), gamma>.

Orientation.  The pair criterion is stated for the action under which
exp(t gamma) lowers <Phi_p, gamma>.  The eigenflag action of ``orbit.g_action``
raises it, and the two differ by the Cartan involution g -> g^{-T}.  So here
Y in n acts through ``tangent_action(-Y^T)``, and at a block point the slot
pair (a, b), a < b, of a factor carries the weight
gamma(block of a) - gamma(block of b).
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidArgument, StageFailure
from .flow import FlowControls, shifted_flow
from .lie import RationalVector, _solve_exact, build_root_system, chamber_face, coroot, gamma_s
from .orbit import (
    ComponentDescriptor,
    OrbitPoint,
    OrbitProblem,
    component_moment_value,
    component_point,
    descriptor_of_point,
    diagonalize_moment,
    fixed_components,
    gamma_blocks,
    moment_chamber_batch,
    ordered_eigh,
    sample_array,
    stabilizer_p_dim,
    tangent_action,
)
from .polytope import (
    AffineHull,
    ComparisonReport,
    HRep,
    Polytope,
    affine_hull_basis,
    compare_regions,
    enumerate_vertices,
    facet_defining,
    hull_from_points,
)

log = logging.getLogger(__name__)

__all__ = [
    "RankWitness",
    "WeightDecomposition",
    "RessayrePair",
    "SampledPolytope",
    "InequalitySystem",
    "VerificationBudget",
    "VerificationReport",
    "sampled_polytope",
    "fixed_point_images",
    "is_admissible",
    "infinitesimal_pair_test",
    "best_pair",
    "generate_gamma_s_pair",
    "generate_affine_pairs",
    "generate_facet_pairs",
    "generate_projection_pair",
    "generate_exhaustive_pairs",
    "emit_inequalities",
    "verify_theorem",
]

PROVENANCES = ("gamma_s", "affine", "facet", "projection", "exhaustive")


# ---------------------------------------------------------------------------
# the graded tangent map


@dataclass(frozen=True)
class RankWitness:
    dims_match: bool
    n_dim: int
    t_dim: int
    rank: int
    tol: float
    singular_values: tuple[float, ...] = ()


@dataclass
class WeightDecomposition:
    """Bases of n^{gamma>0} and (T_x Z)^{gamma>0} and the matrix of rho_x^gamma.

    ``n_basis`` lists coordinate pairs (i, j), i < j, gamma_i > gamma_j
    (elementary matrices E_ij).  ``t_basis`` lists (factor, a, b), a < b, for
    the tangent direction rotating eigenvector a towards b.  ``matrix`` is
    None when the dimensions differ or no trial was run.  ``leak`` is the
    largest relative norm of an image outside the positive weight space;
    it vanishes when the grading is respected.
    """

    gamma: RationalVector
    n_basis: list[tuple[int, int]]
    t_basis: list[tuple[int, int, int]]
    matrix: np.ndarray | None = None
    point: OrbitPoint | None = None
    leak: float = 0.0


def _positive_root_basis(gamma: RationalVector) -> list[tuple[int, int]]:
    n = len(gamma)
    return [(i, j) for i in range(n) for j in range(i + 1, n) if gamma[i] > gamma[j]]


def _positive_tangent_basis(c: ComponentDescriptor) -> list[tuple[int, int, int]]:
    vals = c.block_values()
    out = []
    for f, asg in enumerate(c.assignments):
        n = len(asg)
        for a in range(n):
            for b in range(a + 1, n):
                if vals[asg[a]] - vals[asg[b]] > 0:
                    out.append((f, a, b))
    return out


def _rho_matrix(p: OrbitProblem, x: OrbitPoint, n_basis, t_basis) -> tuple[np.ndarray, float]:
    frames = [ordered_eigh(A) for A in x.matrices]
    rows = {t: r for r, t in enumerate(t_basis)}
    M = np.zeros((len(t_basis), len(n_basis)))
    leak = 0.0
    for col, (i, j) in enumerate(n_basis):
        X = np.zeros((p.n, p.n))
        X[j, i] = -1.0  # -E_ij^T
        V = tangent_action(p, X, x)
        tot = outside = 0.0
        for f, (w, Q) in enumerate(frames):
            C = Q.T @ V[f] @ Q
            for a in range(p.n):
                for b in range(a + 1, p.n):
                    coef = C[a, b] / (w[a] - w[b])
                    tot += coef * coef
                    r = rows.get((f, a, b))
                    if r is None:
                        outside += coef * coef
                    else:
                        M[r, col] = coef
        if tot > 0:
            leak = max(leak, math.sqrt(outside / tot))
    return M, leak


def infinitesimal_pair_test(p: OrbitProblem, gamma, c: ComponentDescriptor, trials: int = 8,
                            tol: float = 1e-7, seed=0) -> tuple[bool, WeightDecomposition, RankWitness]:
    """Whether rho_x^gamma is an isomorphism at a random point x of ``c``.

    The dimension comparison is exact.  When the dimensions agree the rank
    is computed at up to ``trials`` random points of the component, with
    singular values counted above ``tol`` times the largest one.
    """
    p = p.with_mode("real") if p.mode != "real" else p
    gamma = gamma if isinstance(gamma, RationalVector) else RationalVector(gamma)
    if len(gamma) != p.n or len(c.assignments) != p.k:
        raise InvalidArgument("gamma or component does not match the problem")
    if [list(b) for b in c.blocks] != [list(b) for b in gamma_blocks(gamma)]:
        raise InvalidArgument("component blocks do not match gamma")
    n_basis = _positive_root_basis(gamma)
    t_basis = _positive_tangent_basis(c)
    wd = WeightDecomposition(gamma, n_basis, t_basis)
    if len(n_basis) != len(t_basis):
        return False, wd, RankWitness(False, len(n_basis), len(t_basis), -1, tol)
    if not n_basis:
        return True, wd, RankWitness(True, 0, 0, 0, tol)
    rng = np.random.default_rng(seed)
    best = RankWitness(True, len(n_basis), len(t_basis), 0, tol)
    for _ in range(max(1, trials)):
        x = component_point(p, c, rng)
        M, leak = _rho_matrix(p, x, n_basis, t_basis)
        s = np.linalg.svd(M, compute_uv=False)
        rank = int(np.sum(s > tol * s[0])) if s[0] > 1e-300 else 0
        if rank >= best.rank:
            best = RankWitness(True, len(n_basis), len(t_basis), rank, tol, tuple(float(v) for v in s))
            wd.matrix, wd.point, wd.leak = M, x, leak
        if rank == len(n_basis):
            return True, wd, best
    return False, wd, best


# ---------------------------------------------------------------------------
# dimensions of stabilizers


def _dim_z(p: OrbitProblem, budget: int, seed: int = 0) -> int:
    q = p.with_mode("real")
    pts = sample_array(q, seed, max(1, budget))
    return min(stabilizer_p_dim(q, OrbitPoint(m)) for m in pts)


def _dim_component(p: OrbitProblem, c: ComponentDescriptor, budget: int, rng) -> int:
    q = p.with_mode("real")
    return min(stabilizer_p_dim(q, component_point(q, c, rng)) for _ in range(max(1, budget)))


def is_admissible(p: OrbitProblem, gamma, sampling_budget: int = 4, seed: int = 0,
                  dim_z: int | None = None) -> tuple[bool, int, int]:
    """Admissibility of a rational gamma: dim_p(Z^gamma) - dim_p(Z) in {0, 1}.

    Both dimensions are generic stabilizer dimensions in p, estimated as
    minima over random points (of Z, and of every component of Z^gamma).
    """
    gamma = gamma if isinstance(gamma, RationalVector) else RationalVector(gamma)
    if gamma.is_zero():
        raise InvalidArgument("gamma must be nonzero")
    if dim_z is None:
        dim_z = _dim_z(p, sampling_budget, seed)
    rng = np.random.default_rng(seed)
    dim_zg = min(_dim_component(p, c, sampling_budget, rng) for c in fixed_components(p, gamma))
    return dim_zg - dim_z in (0, 1), dim_z, dim_zg


# ---------------------------------------------------------------------------
# pairs


@dataclass
class RessayrePair:
    gamma: RationalVector
    component: ComponentDescriptor
    value: Fraction
    admissible: bool
    regular: bool
    is_pair: bool
    rank_witness: RankWitness
    provenance: str
    note: str = ""

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise InvalidArgument(f"unknown provenance {self.provenance!r}")

    def holds_at(self, xi, tol: float = 1e-8) -> bool:
        return float(np.dot(self.gamma.to_numpy(), xi)) >= float(self.value) - tol

    def to_json(self) -> dict:
        w = self.rank_witness
        doc = self.component.to_json()
        doc.update(
            value=_frac_str(self.value),
            admissible=bool(self.admissible),
            regular=bool(self.regular),
            is_pair=bool(self.is_pair),
            rank={"dims_match": w.dims_match, "n_dim": w.n_dim, "t_dim": w.t_dim,
                  "rank": w.rank, "tol": w.tol},
            provenance=self.provenance,
        )
        if self.note:
            doc["note"] = self.note
        return doc


def _frac_str(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


@dataclass
class _Context:
    """Per-problem caches shared by the generators."""

    p: OrbitProblem
    trials: int = 8
    rank_tol: float = 1e-7
    dim_budget: int = 4
    seed: int = 0
    component_bound: int = 100000
    _dim_z: int | None = None
    _dims: dict = field(default_factory=dict)

    @property
    def dim_z(self) -> int:
        if self._dim_z is None:
            self._dim_z = _dim_z(self.p, self.dim_budget, self.seed)
        return self._dim_z

    def dim_component(self, c: ComponentDescriptor) -> int:
        # stabilizers depend on the block partition and the assignment, not on gamma's values
        key = (c.blocks, c.assignments)
        if key not in self._dims:
            rng = np.random.default_rng(self.seed)
            self._dims[key] = _dim_component(self.p, c, self.dim_budget, rng)
        return self._dims[key]

    def admissible(self, gamma: RationalVector) -> bool:
        dim_zg = min(self.dim_component(c) for c in fixed_components(self.p, gamma, self.component_bound))
        return dim_zg - self.dim_z in (0, 1)


def _make_pair(ctx: _Context, gamma: RationalVector, c: ComponentDescriptor, provenance: str,
               flags: bool = True) -> RessayrePair:
    ok, _wd, wit = infinitesimal_pair_test(ctx.p, gamma, c, ctx.trials, ctx.rank_tol, ctx.seed)
    value = component_moment_value(ctx.p, c)
    admissible = regular = False
    if flags:
        admissible = ctx.admissible(gamma)
        regular = ctx.dim_component(c) - ctx.dim_z in (0, 1)
    return RessayrePair(gamma, c, value, admissible, regular, ok, wit, provenance)


def best_pair(p: OrbitProblem, gamma, provenance: str = "exhaustive", ctx: _Context | None = None,
              prefer: ComponentDescriptor | None = None) -> RessayrePair | None:
    """Pair with the largest value among the components of the gamma-fixed locus.

    Every pair certifies a valid inequality, so the largest value is the
    strongest one available for this gamma.  Components whose dimensions do
    not match are rejected without numerics; ``prefer`` is tested first and
    wins ties.
    """
    ctx = ctx or _Context(p)
    gamma = gamma if isinstance(gamma, RationalVector) else RationalVector(gamma)
    comps = fixed_components(ctx.p, gamma, ctx.component_bound)
    tpos = {c: len(_positive_tangent_basis(c)) for c in comps}
    ndim = len(_positive_root_basis(gamma))
    cands = [c for c in comps if tpos[c] == ndim]
    cands.sort(key=lambda c: (c != prefer, -component_moment_value(ctx.p, c), c.assignments))
    for c in cands:
        ok, _wd, _wit = infinitesimal_pair_test(ctx.p, gamma, c, ctx.trials, ctx.rank_tol, ctx.seed)
        if ok:
            return _make_pair(ctx, gamma, c, provenance)
    return None


# ---------------------------------------------------------------------------
# sampled polytopes


@dataclass
class SampledPolytope:
    problem: OrbitProblem
    cloud: np.ndarray  # chamber coordinates, one row per sample
    hull: Polytope
    affine: AffineHull
    seed: int = 0

    @property
    def count(self) -> int:
        return len(self.cloud)


def fixed_point_images(p: OrbitProblem, bound: int = 100000) -> np.ndarray:
    """Chamber images of the k-tuples of diagonal matrices (permuted spectra).

    These are the fixed points of the diagonal torus on Z.  Haar sampling
    reaches the corners of the polytope they map to only with tiny
    probability, so they are a cheap, exact enrichment of a sample cloud.
    """
    total = math.factorial(p.n) ** p.k
    if total > bound:
        return np.zeros((0, p.n))
    lam = p.lam
    perms = list(itertools.permutations(range(p.n)))
    rows = []
    for choice in itertools.product(perms, repeat=p.k):
        v = sum(lam[i][list(pi)] for i, pi in enumerate(choice))
        rows.append(np.sort(v)[::-1])
    return np.unique(np.array(rows), axis=0)


def sampled_polytope(p: OrbitProblem, count: int, seed: int = 0, batch: int = 50000,
                     fixed_points: bool = False) -> SampledPolytope:
    """Moment images of ``count`` Haar samples and their convex hull.

    With ``fixed_points`` the images of the torus-fixed points are appended
    to the cloud.
    """
    if count < 1:
        raise InvalidArgument("count must be >= 1")
    parts = []
    done = 0
    rng = np.random.SeedSequence(seed)
    seeds = rng.spawn((count + batch - 1) // batch)
    for s in seeds:
        m = min(batch, count - done)
        parts.append(moment_chamber_batch(sample_array(p, s, m)))
        done += m
    if fixed_points:
        parts.append(fixed_point_images(p))
    X = np.vstack(parts)
    return SampledPolytope(p, X, hull_from_points(X), affine_hull_basis(X), seed)


def _type_a(p: OrbitProblem):
    return build_root_system("A", p.n - 1)


def _saturated_walls(sp: SampledPolytope, tol: float) -> tuple[list[int], list[int]]:
    rs = _type_a(sp.problem)
    scale = 1.0 + float(np.max(np.abs(sp.cloud)))
    exact, ambiguous = [], []
    for i, a in enumerate(rs.simple_roots):
        h = coroot(rs, a).to_numpy()
        top = float(np.max(sp.cloud @ h))
        if top <= tol * scale:
            exact.append(i)
        elif top <= 1e-4 * scale:
            ambiguous.append(i)
    return exact, ambiguous


def _gamma_s_vector(sp: SampledPolytope, tol: float) -> tuple[RationalVector, list[int]]:
    rs = _type_a(sp.problem)
    walls, ambiguous = _saturated_walls(sp, tol)
    if ambiguous:
        log.warning("chamber walls %s are nearly but not exactly saturated", ambiguous)
    return gamma_s(rs, chamber_face(rs, walls)), walls


def generate_gamma_s_pair(p: OrbitProblem, sp: SampledPolytope, tol: float = 1e-9,
                          ctx: _Context | None = None) -> list[RessayrePair]:
    """The pair attached to the open chamber face containing the polytope, if that face is proper."""
    ctx = ctx or _Context(p)
    gs, _ = _gamma_s_vector(sp, tol)
    if gs.is_zero():
        return []
    pair = best_pair(p, gs, "gamma_s", ctx)
    return [pair] if pair is not None else []


def generate_affine_pairs(p: OrbitProblem, sp: SampledPolytope, tol: float = 1e-9,
                          ctx: _Context | None = None) -> list[RessayrePair]:
    """Pairs for +-eta + gamma_s over rational normals eta of the affine hull."""
    ctx = ctx or _Context(p)
    gs, _ = _gamma_s_vector(sp, tol)
    out = []
    for eta in sp.affine.rational_normals:
        if eta is None:
            log.warning("affine normal could not be rationalized; skipped")
            continue
        for sgn in (1, -1):
            g = eta * sgn + gs
            if g.is_zero():
                continue
            pair = best_pair(p, g, "affine", ctx)
            if pair is not None:
                out.append(pair)
    return out


def small_rational_direction(u, max_den: int = 12, tol: float = 0.02) -> RationalVector | None:
    """Integer vector of smallest denominator whose direction is within ``tol`` of ``u``.

    Coordinates are scaled so the largest has modulus one, then rounded to
    the grid 1/D for D = 1, 2, ..., max_den.
    """
    u = np.asarray(u, dtype=float)
    nu = np.linalg.norm(u)
    if nu == 0:
        return None
    s = u / np.max(np.abs(u))
    for D in range(1, max_den + 1):
        r = np.round(s * D)
        nr = np.linalg.norm(r)
        if nr == 0:
            continue
        if np.linalg.norm(r / nr - u / nu) <= tol:
            ints = [int(v) for v in r]
            g = math.gcd(*ints)
            return RationalVector([i // g for i in ints])
    return None


def _height_directions(aff: AffineHull, n: int, max_height: int) -> list[tuple[RationalVector, np.ndarray]]:
    """Primitive integer vectors of height <= max_height with their unit projections onto the hull directions."""
    out = {}
    for v in itertools.product(range(-max_height, max_height + 1), repeat=n):
        if math.gcd(*v) != 1:
            continue
        r = np.array(v, dtype=float)
        if len(aff.normal_basis):
            r = r - aff.normal_basis.T @ (aff.normal_basis @ r)
        nr = np.linalg.norm(r)
        if nr < 1e-9:
            continue
        key = tuple(np.round(r / nr, 9))
        cur = out.get(key)
        h = max(abs(x) for x in v)
        if cur is None or (h, sum(abs(x) for x in v)) < cur[0]:
            out[key] = ((h, sum(abs(x) for x in v)), RationalVector(v), r / nr)
    return [(g, u) for _, g, u in out.values()]


def facet_candidates(sp: SampledPolytope, max_den: int = 12, normal_tol: float = 0.02,
                     max_height: int = 4, angle: float = 0.25) -> list[RationalVector]:
    """Rational directions near the facet normals of the sampled hull.

    The sampled hull sits inside the polytope and its facets are tilted
    where the sampling density thins out towards the boundary, so besides
    the nearest small-denominator direction of every hull normal all integer
    directions of small height within ``angle`` radians are proposed
    (for n <= 4).
    """
    n = sp.problem.n
    pool = _height_directions(sp.affine, n, max_height) if n <= 4 else []
    seen: set = set()
    out = []

    def push(eta):
        key = _canonical_direction(eta, sp.affine)
        if key not in seen and key != ("zero",):
            seen.add(key)
            out.append(eta)

    for nrm in sp.hull.normals:
        u = nrm / np.linalg.norm(nrm)
        eta = small_rational_direction(u, max_den, normal_tol)
        if eta is not None:
            push(eta)
        near = [(float(np.arccos(np.clip(w @ u, -1, 1))), g) for g, w in pool]
        for ang, g in sorted(((a, g) for a, g in near if a <= angle), key=lambda t: t[0]):
            push(g)
    return out


def generate_facet_pairs(p: OrbitProblem, sp: SampledPolytope, max_den: int = 12, normal_tol: float = 0.02,
                         tol: float = 1e-9, ctx: _Context | None = None) -> list[RessayrePair]:
    """Pairs gamma_F = eta_F + gamma_s for rational directions near the facets of the sampled hull.

    For every candidate direction the strongest pair is kept.  A pair whose
    value exceeds the sampled minimum of <xi, gamma> would be unsound and
    is dropped with a warning.
    """
    ctx = ctx or _Context(p)
    gs, _ = _gamma_s_vector(sp, tol)
    out = []
    scale = 1.0 + float(np.max(np.abs(sp.cloud)))
    for eta in facet_candidates(sp, max_den, normal_tol):
        g = eta + gs
        if g.is_zero():
            continue
        pair = best_pair(p, g, "facet", ctx)
        if pair is None:
            continue
        lo = float(np.min(sp.cloud @ g.to_numpy()))
        if float(pair.value) > lo + 1e-8 * scale:
            log.warning("pair for %r exceeds the sampled minimum (%g > %g); dropped", g, float(pair.value), lo)
            continue
        out.append(pair)
    return out


def _canonical_direction(eta: RationalVector, aff: AffineHull) -> tuple:
    v = eta.to_numpy()
    if len(aff.normal_basis):
        v = v - aff.normal_basis.T @ (aff.normal_basis @ v)
    nv = np.linalg.norm(v)
    if nv < 1e-12:
        return ("zero",)
    return tuple(np.round(v / nv, 9))


def _group_gamma(gamma: np.ndarray, tol: float) -> RationalVector:
    """Rational vector with the same block pattern as a float ``gamma``."""
    order = np.argsort(-gamma, kind="stable")
    groups: list[list[int]] = []
    for i in order:
        if groups and abs(gamma[groups[-1][0]] - gamma[i]) <= tol:
            groups[-1].append(int(i))
        else:
            groups.append([int(i)])
    out = [Fraction(0)] * len(gamma)
    prev = None
    for grp in groups:
        v = Fraction(float(np.mean(gamma[grp]))).limit_denominator(10**6)
        if prev is not None and v >= prev:
            v = prev - Fraction(1, 10**6)
        for i in grp:
            out[i] = v
        prev = v
    return RationalVector(out)


@dataclass
class ProjectionPair:
    pair: RessayrePair
    xi: np.ndarray
    xi_prime: np.ndarray
    gamma_numeric: np.ndarray
    distance: float
    separation: float  # <xi, gamma> - value, negative when the probe is cut off
    located: bool  # component read off the flow limit (else by enumeration)


def generate_projection_pair(p: OrbitProblem, xi, controls: FlowControls = FlowControls(), seed: int = 0,
                             inside_tol: float = 1e-6, ctx: _Context | None = None) -> ProjectionPair:
    """Pair separating an exterior probe ``xi`` from the polytope.

    The shifted flow gives the projection xi' and gamma = xi' - xi.  The
    limit restricted to the original factors lies over xi', hence (after
    rotating its moment to diagonal form) in the gamma-fixed locus; its
    component is the candidate, with enumeration as fallback.
    """
    ctx = ctx or _Context(p)
    q = p.with_mode("real")
    sf = shifted_flow(q, xi, controls, seed=seed)
    g = sf.gamma
    scale = 1.0 + float(np.max(np.abs(sf.xi)))
    if sf.distance <= inside_tol * scale:
        raise InvalidArgument(f"probe lies in the polytope (distance {sf.distance:.3e})")
    gq = _group_gamma(g, 1e-5 * scale)
    located = True
    try:
        z = diagonalize_moment(q, sf.M_point)
        c = descriptor_of_point(q, gq, z, tol=1e-2)
    except InvalidArgument:
        c, located = None, False
    pair = None
    if c is not None:
        cand = _make_pair(ctx, gq, c, "projection")
        if cand.is_pair:
            pair = cand
    if pair is None:
        located = False
        pair = best_pair(q, gq, "projection", ctx)
        if pair is None:
            raise StageFailure("projection", InvalidArgument("no pair found for the projection direction"))
    sep = float(np.dot(gq.to_numpy(), sf.xi) - float(pair.value))
    return ProjectionPair(pair, sf.xi, sf.xi_prime, g, sf.distance, sep, located)


def generate_exhaustive_pairs(p: OrbitProblem, ctx: _Context | None = None, max_n: int = 4) -> list[RessayrePair]:
    """Pairs for +-(1, ..., 1) and every two-block gamma (+-indicators of proper coordinate subsets)."""
    if p.n > max_n:
        raise InvalidArgument(f"exhaustive mode is limited to n <= {max_n}")
    ctx = ctx or _Context(p)
    # the central direction carries the trace equality
    ones = RationalVector([1] * p.n)
    out = [pr for pr in (best_pair(p, ones, "exhaustive", ctx), best_pair(p, -ones, "exhaustive", ctx)) if pr is not None]
    for r in range(1, p.n):
        for S in itertools.combinations(range(p.n), r):
            ind = RationalVector([1 if i in S else 0 for i in range(p.n)])
            for g in (ind, -ind):
                pair = best_pair(p, g, "exhaustive", ctx)
                if pair is not None:
                    out.append(pair)
    return out


# ---------------------------------------------------------------------------
# inequality systems


def _exact_project(g: RationalVector, v: Fraction, eqs: list[tuple[RationalVector, Fraction]]):
    """Reduce <xi, g> >= v modulo the equalities: g minus its component in their span."""
    if not eqs:
        return g, v
    E = [e for e, _ in eqs]
    G = [[a.dot(b) for b in E] for a in E]
    rhs = [a.dot(g) for a in E]
    c = _solve_exact(G, rhs)
    if c is None:
        return g, v
    for cj, (e, off) in zip(c, eqs):
        g = g - e * cj
        v = v - cj * off
    return g, v


def _primitive(g: RationalVector, v: Fraction) -> tuple[RationalVector, Fraction]:
    den = math.lcm(*(x.denominator for x in g))
    ints = [int(x * den) for x in g]
    gcd = math.gcd(*ints)
    if gcd == 0:
        return g, v
    s = Fraction(den, gcd)
    return RationalVector([x * s for x in g]), v * s


@dataclass
class Inequality:
    normal: RationalVector
    offset: Fraction
    sources: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"normal": self.normal.to_strings(), "offset": _frac_str(self.offset), "sources": sorted(self.sources)}


@dataclass
class InequalitySystem:
    """Exact region {<xi, a> = e for equalities, <xi, g> >= v for inequalities}.

    Inequality normals are reduced modulo the equality directions and scaled
    to primitive integer vectors, so equivalent inequalities coincide.
    """

    dim: int
    equalities: list[tuple[RationalVector, Fraction]]
    inequalities: list[Inequality]

    def hrep(self) -> HRep:
        N = np.array([i.normal.to_numpy() for i in self.inequalities]).reshape(-1, self.dim)
        b = np.array([float(i.offset) for i in self.inequalities])
        E = np.array([e.to_numpy() for e, _ in self.equalities]).reshape(-1, self.dim)
        e = np.array([float(o) for _, o in self.equalities])
        return HRep(N, b, E, e)

    def chamber_hrep(self) -> HRep:
        rows = [i for i in self.inequalities if "chamber" in i.sources]
        return HRep(np.array([i.normal.to_numpy() for i in rows]).reshape(-1, self.dim),
                    np.array([float(i.offset) for i in rows]))

    def keys(self) -> set:
        ineq = {(tuple(i.normal.coords), i.offset) for i in self.inequalities}
        return ineq

    def restrict(self, keep: Sequence[bool]) -> "InequalitySystem":
        return InequalitySystem(self.dim, list(self.equalities),
                                [i for i, k in zip(self.inequalities, keep) if k])

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "equalities": [{"normal": e.to_strings(), "offset": _frac_str(o)} for e, o in self.equalities],
            "inequalities": [i.to_json() for i in self.inequalities],
        }


def _equality_basis(eqs: list[tuple[RationalVector, Fraction]]):
    # drop equalities dependent on earlier ones (exactly)
    out: list[tuple[RationalVector, Fraction]] = []
    for g, v in eqs:
        r, w = _exact_project(g, v, out)
        if not r.is_zero():
            r, w = _primitive(r, w)
            if next(x for x in r if x != 0) < 0:
                r, w = -r, -w
            out.append((r, w))
    return out


def emit_inequalities(pairs: Iterable[RessayrePair], n: int, chamber: bool = True) -> InequalitySystem:
    """Chamber inequalities plus <xi, gamma> >= value for every verified pair.

    Pairs (gamma, v) and (-gamma, -v) merge into an equality.  Remaining
    inequalities are reduced modulo the equalities; duplicates collapse and,
    for parallel normals, the larger offset wins.
    """
    pairs = [pr for pr in pairs if pr.is_pair]
    raw = [(pr.gamma, pr.value, pr.provenance) for pr in pairs]
    if chamber:
        rs = build_root_system("A", n - 1)
        raw += [(coroot(rs, a), Fraction(0), "chamber") for a in rs.simple_roots]
    index = {(tuple(g.coords), v) for g, v, _ in raw}
    eqs = []
    for g, v, _ in raw:
        if (tuple((-g).coords), -v) in index and (tuple((-g).coords), -v, ) != (tuple(g.coords), v):
            eqs.append((g, v))
    eqs = _equality_basis(eqs)
    merged: dict[tuple, Inequality] = {}
    for g, v, src in raw:
        r, w = _exact_project(g, v, eqs)
        if r.is_zero():
            continue
        r, w = _primitive(r, w)
        key = tuple(r.coords)
        cur = merged.get(key)
        if cur is None or w > cur.offset:
            merged[key] = Inequality(r, w, [src] if cur is None or w > cur.offset else cur.sources)
            if cur is not None and w > cur.offset:
                merged[key].sources = [src]
        elif w == cur.offset and src not in cur.sources:
            cur.sources.append(src)
    ineqs = sorted(merged.values(), key=lambda i: (i.normal.coords, i.offset))
    return InequalitySystem(n, eqs, ineqs)


# ---------------------------------------------------------------------------
# verification


@dataclass(frozen=True)
class VerificationBudget:
    samples: int = 10000
    seed: int = 0
    trials: int = 8
    rank_tol: float = 1e-7
    dim_budget: int = 4
    membership_tol: float = 1e-8
    hausdorff_tol: float = 1e-2
    max_den: int = 12
    normal_tol: float = 0.02
    wall_tol: float = 1e-9
    exhaustive: bool = False
    fixed_points: bool = False


@dataclass
class FacetCertificate:
    inequality: Inequality
    pair_indices: list[int]
    min_slack: float

    def to_json(self) -> dict:
        return {"inequality": self.inequality.to_json(), "pairs": self.pair_indices,
                "min_slack": float(self.min_slack)}


@dataclass
class VerificationReport:
    problem: OrbitProblem
    pairs: list[RessayrePair]
    system: InequalitySystem
    comparison: ComparisonReport
    certificates: list[FacetCertificate]
    soundness_ok: bool
    completeness_ok: bool
    warnings: list[str] = field(default_factory=list)
    sample_count: int = 0

    @property
    def passed(self) -> bool:
        return self.soundness_ok and self.completeness_ok

    def to_json(self) -> dict:
        return {
            "problem": {"n": self.problem.n, "k": self.problem.k, "mode": self.problem.mode,
                        "spectra": [[_frac_str(x) for x in s] for s in self.problem.spectra]},
            "sample_count": self.sample_count,
            "pairs": [pr.to_json() for pr in self.pairs],
            "inequalities": self.system.to_json(),
            "comparison": self.comparison.to_json(),
            "certificates": [c.to_json() for c in self.certificates],
            "soundness_ok": self.soundness_ok,
            "completeness_ok": self.completeness_ok,
            "passed": self.passed,
            "warnings": list(self.warnings),
        }


def _stage(name, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except StageFailure:
        raise
    except Exception as exc:  # noqa: BLE001 - re-raised with its stage tag
        raise StageFailure(name, exc) from exc


def _pair_key(pr: RessayrePair) -> tuple:
    return (pr.provenance, pr.gamma.coords, pr.component.assignments)


def verify_theorem(p: OrbitProblem, budget: VerificationBudget = VerificationBudget()) -> VerificationReport:
    """Sample, hull, generate pairs, emit inequalities and compare with the samples.

    Soundness: every sample satisfies every emitted inequality.
    Completeness: the emitted region (inside the chamber) is within the
    Hausdorff threshold of the sampled hull.  Pair inequalities that do not
    define a facet of the emitted region are dropped from the final system.
    """
    warnings: list[str] = []
    ctx = _Context(p.with_mode("real"), budget.trials, budget.rank_tol, budget.dim_budget, budget.seed)
    sp = _stage("sample", sampled_polytope, p, budget.samples, budget.seed, fixed_points=budget.fixed_points)
    _, ambiguous = _saturated_walls(sp, budget.wall_tol)
    if ambiguous:
        warnings.append(f"walls {ambiguous} nearly saturated")
    pairs: list[RessayrePair] = []
    pairs += _stage("gamma_s", generate_gamma_s_pair, ctx.p, sp, budget.wall_tol, ctx)
    pairs += _stage("affine", generate_affine_pairs, ctx.p, sp, budget.wall_tol, ctx)
    if sp.hull.dim >= 1:
        pairs += _stage("facet", generate_facet_pairs, ctx.p, sp, budget.max_den, budget.normal_tol,
                        budget.wall_tol, ctx)
    if budget.exhaustive:
        pairs += _stage("exhaustive", generate_exhaustive_pairs, ctx.p, ctx)
    uniq = {}
    for pr in pairs:
        uniq.setdefault(_pair_key(pr), pr)
    pairs = sorted(uniq.values(), key=lambda pr: (PROVENANCES.index(pr.provenance), pr.gamma.coords,
                                                  pr.component.assignments))
    system = _stage("emit", emit_inequalities, pairs, p.n)
    system = _stage("reduce", _drop_redundant, system)
    comp = _stage("compare", compare_regions, system.hrep(), sp.cloud)
    scale = 1.0 + float(np.max(np.abs(sp.cloud)))
    sound = comp.soundness <= budget.membership_tol * scale
    complete = comp.bounded and comp.hausdorff <= budget.hausdorff_tol
    if not comp.bounded:
        warnings.append("emitted region is unbounded inside the sampling box")
    certs = []
    for j, ineq in enumerate(system.inequalities):
        idx = [i for i, pr in enumerate(pairs) if pr.is_pair and _reduces_to(pr, ineq, system)]
        certs.append(FacetCertificate(ineq, idx, float(comp.tightness[j]) if len(comp.tightness) else 0.0))
    return VerificationReport(p, pairs, system, comp, certs, bool(sound), bool(complete), warnings, sp.count)


def _reduces_to(pr: RessayrePair, ineq: Inequality, system: InequalitySystem) -> bool:
    r, w = _exact_project(pr.gamma, pr.value, system.equalities)
    if r.is_zero():
        return False
    r, w = _primitive(r, w)
    return r == ineq.normal and w == ineq.offset


def _drop_redundant(system: InequalitySystem) -> InequalitySystem:
    """Keep chamber inequalities and the pair inequalities that define facets of the region."""
    h = system.hrep()
    if len(h.normals) == 0:
        return system
    lo = -1e6
    d = system.dim
    box = HRep(np.vstack([np.eye(d), -np.eye(d)]), np.concatenate([np.full(d, lo), np.full(d, lo)]))
    V = enumerate_vertices(h.intersect(box))
    if len(V) == 0:
        return system
    mask = facet_defining(h, V)
    keep = [bool(m) or "chamber" in i.sources for m, i in zip(mask, system.inequalities)]
    return system.restrict(keep)
