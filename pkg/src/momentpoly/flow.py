"""Norm-square gradient flow of the moment map on orbit products.

On a product of isospectral orbits the gradient flow of f = 1/2 ||S||^2,
S = sum_i A_i, is the double-bracket flow dA_i/dt = [[A_i, S], A_i].  It is
integrated by orthogonal (unitary) conjugation steps so every iterate stays
exactly on the orbit.  The limit spectrum of S is the minimal type: the
point of smallest norm in the moment polytope.  Adding a factor with spectrum
-xi turns this into a projection of xi onto the polytope.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import InvalidArgument, NumericFailure
from .orbit import OrbitPoint, OrbitProblem, moment_p, sample_array

__all__ = ["FlowControls", "FlowResult", "kirwan_flow", "shifted_flow", "ShiftedFlowResult"]


@dataclass(frozen=True)
class FlowControls:
    step: float = 0.1
    tol: float = 1e-9
    max_steps: int = 200000
    shrink_factor: float = 0.5
    grow_factor: float = 1.5
    max_step: float = 10.0

    def __post_init__(self):
        if not self.step > 0:
            raise InvalidArgument("step must be positive")
        if not 0 < self.shrink_factor < 1:
            raise InvalidArgument("shrink_factor must lie in (0, 1)")


@dataclass
class FlowResult:
    limit: OrbitPoint
    limit_moment: np.ndarray
    type_vector: np.ndarray
    f_trace: np.ndarray
    residual_trace: np.ndarray
    converged: bool
    residual: float
    steps: int

    def trace_rows(self):
        for i, (f, r) in enumerate(zip(self.f_trace, self.residual_trace)):
            yield i, float(f), float(r)

    def to_json(self) -> dict:
        S = self.limit_moment
        return {
            "converged": bool(self.converged),
            "residual": float(self.residual),
            "steps": int(self.steps),
            "f_final": float(self.f_trace[-1]) if len(self.f_trace) else None,
            "type_vector": [float(x) for x in self.type_vector],
            "limit_moment_real": np.real(S).tolist(),
            "limit_moment_imag_max": float(np.max(np.abs(np.imag(S)))),
        }


def kirwan_flow(p: OrbitProblem, z: OrbitPoint, controls: FlowControls = FlowControls(), record: bool = True) -> FlowResult:
    """Run the norm-square gradient flow from ``z`` until max_i ||[A_i, S]|| <= tol."""
    A = np.asarray(z.matrices)
    if A.shape != (p.k, p.n, p.n):
        raise InvalidArgument(f"point has shape {A.shape}, expected {(p.k, p.n, p.n)}")
    A2, fs, rs, steps, conv, res = kernels.double_bracket_descent(
        A,
        step=controls.step,
        tol=controls.tol,
        max_steps=controls.max_steps,
        shrink=controls.shrink_factor,
        grow=controls.grow_factor,
        max_step=controls.max_step,
        record=record,
    )
    limit = OrbitPoint(A2)
    S = moment_p(p, limit)
    tv = np.linalg.eigvalsh(S)[::-1].copy()
    return FlowResult(limit, S, tv, fs, rs, conv, res, steps)


@dataclass
class ShiftedFlowResult:
    xi: np.ndarray
    xi_prime: np.ndarray
    gamma: np.ndarray
    distance: float  # ||S|| of the augmented limit
    result: FlowResult
    shifted_problem: OrbitProblem = field(repr=False, default=None)

    @property
    def M_point(self) -> OrbitPoint:
        """The limit restricted to the original factors."""
        return OrbitPoint(self.result.limit.matrices[:-1])


def shifted_flow(p: OrbitProblem, xi, controls: FlowControls = FlowControls(), seed=0,
                 start: OrbitPoint | None = None, record: bool = False,
                 interior_tol: float = 1e-5) -> ShiftedFlowResult:
    """Project ``xi`` onto the moment polytope with the flow on M x O(-xi).

    ``xi`` must be strictly decreasing.  The limit of the flow on the
    augmented product has moment S = S_M + C; the descending spectrum of S_M
    is the projection xi' and gamma = xi' - xi has norm ||S||.  An
    unconverged run is accepted only when ||S|| <= interior_tol (relative),
    i.e. when xi is numerically inside the polytope.
    """
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (p.n,):
        raise InvalidArgument(f"xi must have length {p.n}")
    if np.any(np.diff(xi) >= 0):
        raise InvalidArgument("xi must be strictly decreasing")
    q = p.with_factor([float(x) for x in -xi[::-1]])
    z0 = start if start is not None else OrbitPoint(sample_array(q, seed, 1)[0])
    res = kirwan_flow(q, z0, controls, record=record)
    dist = float(np.linalg.norm(res.limit_moment))
    # near an interior xi the norm square has a degenerate zero and the flow
    # slows down; a vanishing moment is already the answer there
    if not res.converged and dist > interior_tol * (1.0 + float(np.max(np.abs(xi)))):
        raise NumericFailure(
            f"shifted flow did not converge in {res.steps} steps (residual {res.residual:.3e})",
            residual=res.residual,
        )
    SM = res.limit.matrices[:-1].sum(axis=0)
    xi_p = np.linalg.eigvalsh(SM)[::-1].copy()
    return ShiftedFlowResult(xi, xi_p, xi_p - xi, dist, res, q)
