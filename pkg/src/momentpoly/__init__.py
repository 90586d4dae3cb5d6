"""Moment polytopes of products of real isospectral orbits.

The polytope of GL(n, R)+ acting on a product of real symmetric orbits is
described by inequalities coming from real Ressayre pairs; the package
generates them, checks the rank criterion numerically, and compares the
result with sampled moment images, the norm-square gradient flow and
projections through the shifting trick.
"""
__version__ = "0.1.0"

from .errors import InvalidArgument, MomentPolyError, NumericFailure, ResourceLimit, StageFailure
from .flow import FlowControls, FlowResult, kirwan_flow, shifted_flow
from .kernels import BACKEND
from .lie import RationalVector, RootSystem, build_root_system, coroot, dominant_sweep, gamma_s
from .orbit import (
    BBControls,
    ComponentDescriptor,
    OrbitPoint,
    OrbitProblem,
    bb_limit,
    fixed_components,
    g_action,
    moment_chamber,
    sample,
    stabilizer_p_dim,
    tangent_action,
)
from .polytope import HRep, Polytope, compare_regions, hull_from_points, membership, project_point
from .ressayre import (
    InequalitySystem,
    RessayrePair,
    VerificationBudget,
    VerificationReport,
    emit_inequalities,
    infinitesimal_pair_test,
    is_admissible,
    verify_theorem,
)

__all__ = [name for name in dir() if not name.startswith("_")]
