"""Pure numpy versions of the hot kernels.

These mirror ``_ckernels.pyx`` argument for argument.  They are used when the
compiled extension is unavailable, for complex (Hermitian) input, and as the
reference in the kernel benchmark.
"""
from __future__ import annotations

import numpy as np

__all__ = ["min_norm_point", "project_points", "double_bracket_descent"]


def _affine_min_norm(P: np.ndarray) -> np.ndarray:
    # KKT system for min ||P^T v|| subject to sum(v) = 1; nonsingular for affinely independent rows.
    m = P.shape[0]
    K = np.zeros((m + 1, m + 1))
    K[:m, :m] = P @ P.T
    K[:m, m] = 1.0
    K[m, :m] = 1.0
    rhs = np.zeros(m + 1)
    rhs[m] = 1.0
    try:
        sol = np.linalg.solve(K, rhs)
    except np.linalg.LinAlgError:
        sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
    return sol[:m]


def min_norm_point(P, tol: float = 1e-12, max_iter: int = 500):
    """Wolfe's minimum-norm-point algorithm on the convex hull of the rows of ``P``.

    Returns ``(x, weights)`` with ``x = weights @ P`` the point of smallest
    Euclidean norm in the hull.
    """
    P = np.ascontiguousarray(P, dtype=float)
    m = P.shape[0]
    scale = max(float(np.max(np.einsum("ij,ij->i", P, P))), 1e-300)
    norms = np.einsum("ij,ij->i", P, P)
    j0 = int(np.argmin(norms))
    S = [j0]
    w = np.array([1.0])
    x = P[j0].copy()
    for _ in range(max_iter):
        dots = P @ x
        j = int(np.argmin(dots))
        if x @ x - dots[j] <= tol * scale or j in S:
            break
        S.append(j)
        w = np.append(w, 0.0)
        for _minor in range(len(S) + 2):
            v = _affine_min_norm(P[S])
            if np.all(v > 1e-15):
                w = v
                break
            neg = v <= 1e-15
            denom = w[neg] - v[neg]
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(denom > 0, w[neg] / denom, np.inf)
            theta = min(1.0, float(np.min(ratios)))
            w = w + theta * (v - w)
            keep = w > 1e-15
            if keep.all():
                keep[int(np.argmin(w))] = False
            S = [s for s, k in zip(S, keep) if k]
            w = w[keep]
            w = w / w.sum()
        x = w @ P[S]
    weights = np.zeros(m)
    weights[S] = w
    return x, weights


def project_points(V, X, tol: float = 1e-12):
    """Nearest points of conv(rows of ``V``) to every row of ``X``.

    Returns ``(projections, distances)``.
    """
    V = np.ascontiguousarray(V, dtype=float)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    proj = np.empty_like(X)
    for i, xi in enumerate(X):
        y, _ = min_norm_point(V - xi, tol=tol)
        proj[i] = y + xi
    dist = np.linalg.norm(X - proj, axis=1)
    return proj, dist


def _cayley_minus_identity(M: np.ndarray) -> np.ndarray:
    # Q - I for the Cayley transform Q = (I - M/2)^{-1} (I + M/2), computed without cancellation
    n = M.shape[-1]
    eye = np.eye(n, dtype=M.dtype)
    return np.linalg.solve(eye - 0.5 * M, M)


def _commutators(A: np.ndarray, S: np.ndarray) -> np.ndarray:
    return A @ S - S @ A


def _residual(Om: np.ndarray) -> float:
    return float(np.max(np.sqrt(np.einsum("kij,kij->k", Om.conj(), Om).real)))


def double_bracket_descent(
    A,
    step: float = 0.1,
    tol: float = 1e-9,
    max_steps: int = 100000,
    shrink: float = 0.5,
    grow: float = 1.5,
    max_step: float = 10.0,
    record: bool = True,
):
    """Descend f = 1/2 ||sum_i A_i||^2 by isospectral conjugations.

    ``A`` has shape (k, n, n) and holds real symmetric or complex Hermitian
    matrices.  A step replaces A_i by Q_i A_i Q_i^* with Q_i the Cayley
    transform of h [A_i, S].  The increment of f is evaluated from the
    increments of the A_i (not as a difference of two f values), so the
    Armijo test stays meaningful down to residuals near machine precision.
    The step h is multiplied by ``shrink`` on rejection and by ``grow`` on
    acceptance.

    Returns ``(A, f_trace, residual_trace, steps, converged, residual)``.
    """
    A = np.array(A, copy=True)
    S = A.sum(axis=0)
    f = 0.5 * float(np.vdot(S, S).real)
    Om = _commutators(A, S)
    res = _residual(Om)
    fs = [f] if record else []
    rs = [res] if record else []
    h = step
    steps = 0
    while res > tol and steps < max_steps:
        g2 = float(np.einsum("kij,kij->", Om.conj(), Om).real)
        E = _cayley_minus_identity(h * Om)
        Q = E + np.eye(A.shape[-1])
        dA = E @ A @ np.conj(np.swapaxes(Q, -1, -2)) + A @ np.conj(np.swapaxes(E, -1, -2))
        dA = 0.5 * (dA + np.conj(np.swapaxes(dA, -1, -2)))
        dS = dA.sum(axis=0)
        df = float(np.vdot(S, dS).real) + 0.5 * float(np.vdot(dS, dS).real)
        if df <= -1e-4 * h * g2:
            A = A + dA
            S = A.sum(axis=0)
            f = f + df
            Om = _commutators(A, S)
            res = _residual(Om)
            steps += 1
            if record:
                fs.append(f)
                rs.append(res)
            h = min(h * grow, max_step)
        else:
            h *= shrink
            if h < 1e-14:
                break
    return A, np.array(fs), np.array(rs), steps, res <= tol, res
