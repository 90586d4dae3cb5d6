"""Products of isospectral matrix orbits and their real loci.

A point of M is a k-tuple of Hermitian matrices with prescribed distinct
spectra; its real locus Z consists of the real symmetric tuples.  The moment
map is the sum of the factors.  The group GL(n, R)+ acts on each factor
through its ordered eigenflag: g sends A = Q diag(lam) Q^T to
Q' diag(lam) Q'^T where g Q = Q' R is a QR factorization with positive
diagonal.  For g in SO(n) this is plain conjugation.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .errors import InvalidArgument, NumericFailure, ResourceLimit
from .lie import RationalVector, to_fraction

__all__ = [
    "OrbitProblem",
    "OrbitPoint",
    "ComponentDescriptor",
    "BBControls",
    "moment_p",
    "moment_chamber",
    "moment_chamber_batch",
    "sample",
    "sample_array",
    "haar",
    "ordered_eigh",
    "g_action",
    "tangent_action",
    "stabilizer_p_dim",
    "gamma_blocks",
    "fixed_components",
    "component_point",
    "component_moment_value",
    "descriptor_of_point",
    "bb_limit",
    "diagonalize_moment",
]


@dataclass(frozen=True)
class OrbitProblem:
    n: int
    k: int
    spectra: tuple[tuple[Fraction, ...], ...]
    mode: str = "real"

    def __init__(self, spectra: Sequence[Sequence], mode: str = "real"):
        specs = tuple(tuple(to_fraction(x) for x in lam) for lam in spectra)
        if len(specs) < 1:
            raise InvalidArgument("need at least one orbit factor")
        n = len(specs[0])
        if n < 2:
            raise InvalidArgument("matrix size n must be at least 2")
        for lam in specs:
            if len(lam) != n:
                raise InvalidArgument("all spectra must have the same length")
            if any(a <= b for a, b in zip(lam, lam[1:])):
                raise InvalidArgument(f"spectrum {[str(x) for x in lam]} is not strictly decreasing")
        if mode not in ("real", "hermitian"):
            raise InvalidArgument(f"mode must be 'real' or 'hermitian', got {mode!r}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "k", len(specs))
        object.__setattr__(self, "spectra", specs)
        object.__setattr__(self, "mode", mode)

    @property
    def lam(self) -> np.ndarray:
        """Spectra as a (k, n) float array."""
        return np.array([[float(x) for x in s] for s in self.spectra])

    @property
    def total_trace(self) -> Fraction:
        return sum((sum(s, Fraction(0)) for s in self.spectra), Fraction(0))

    def with_mode(self, mode: str) -> "OrbitProblem":
        return OrbitProblem(self.spectra, mode)

    def with_factor(self, spectrum: Sequence) -> "OrbitProblem":
        return OrbitProblem(self.spectra + (tuple(spectrum),), self.mode)

    @property
    def dtype(self):
        return float if self.mode == "real" else complex


@dataclass
class OrbitPoint:
    """k matrices stacked in an array of shape (k, n, n)."""

    matrices: np.ndarray

    def __post_init__(self):
        self.matrices = np.asarray(self.matrices)

    def copy(self) -> "OrbitPoint":
        return OrbitPoint(self.matrices.copy())

    def spectral_drift(self, p: OrbitProblem) -> float:
        ev = np.linalg.eigvalsh(self.matrices)[:, ::-1]
        return float(np.max(np.abs(ev - p.lam)))

    @classmethod
    def diagonal(cls, p: OrbitProblem, perms: Sequence[Sequence[int]] | None = None) -> "OrbitPoint":
        """diag(lambda_i) with slots permuted: entry j of factor i holds slot perms[i][j]."""
        lam = p.lam
        out = np.zeros((p.k, p.n, p.n), dtype=p.dtype)
        for i in range(p.k):
            order = range(p.n) if perms is None else perms[i]
            out[i] = np.diag(lam[i][list(order)])
        return cls(out)


def moment_p(p: OrbitProblem, z: OrbitPoint) -> np.ndarray:
    return np.asarray(z.matrices).sum(axis=0)


def moment_chamber(p: OrbitProblem, z: OrbitPoint) -> np.ndarray:
    """Descending spectrum of the moment value."""
    S = moment_p(p, z)
    try:
        return np.linalg.eigvalsh(S)[::-1].copy()
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericFailure(f"eigensolver failed: {exc}") from exc


def moment_chamber_batch(matrices: np.ndarray) -> np.ndarray:
    """Descending moment spectra for a stack of shape (count, k, n, n)."""
    return np.linalg.eigvalsh(matrices.sum(axis=1))[:, ::-1].copy()


def haar(rng: np.random.Generator, n: int, count: int = 1, complex_: bool = False) -> np.ndarray:
    """Haar-distributed orthogonal (or unitary) matrices via QR with the diagonal sign fixed."""
    G = rng.standard_normal((count, n, n))
    if complex_:
        G = (G + 1j * rng.standard_normal((count, n, n))) / math.sqrt(2)
    Q, R = np.linalg.qr(G)
    d = np.diagonal(R, axis1=-2, axis2=-1)
    ph = d / np.abs(d)
    return Q * ph[:, None, :]


def sample_array(p: OrbitProblem, seed: int, count: int) -> np.ndarray:
    """Stack of ``count`` Haar samples of M (or Z), shape (count, k, n, n).

    Deterministic in ``seed``; factor i of sample j is Q diag(lambda_i) Q^*.
    """
    if count < 1:
        raise InvalidArgument("count must be >= 1")
    rng = np.random.default_rng(seed)
    cplx = p.mode == "hermitian"
    lam = p.lam
    out = np.empty((count, p.k, p.n, p.n), dtype=complex if cplx else float)
    for i in range(p.k):
        Q = haar(rng, p.n, count, cplx)
        out[:, i] = (Q * lam[i][None, None, :]) @ np.conj(np.swapaxes(Q, -1, -2))
    out = 0.5 * (out + np.conj(np.swapaxes(out, -1, -2)))
    return out


def sample(p: OrbitProblem, seed: int, count: int) -> list[OrbitPoint]:
    return [OrbitPoint(m) for m in sample_array(p, seed, count)]


def _fix_signs(Q: np.ndarray) -> np.ndarray:
    # first entry of modulus > 1e-12 in each column made real positive
    Q = Q.copy()
    for j in range(Q.shape[1]):
        col = Q[:, j]
        i = int(np.argmax(np.abs(col) > 1e-12))
        c = col[i]
        Q[:, j] = col * (np.conj(c) / abs(c))
    return Q


def ordered_eigh(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs sorted by decreasing eigenvalue with deterministic vector signs."""
    w, Q = np.linalg.eigh(A)
    return w[::-1].copy(), _fix_signs(Q[:, ::-1])


def _require_real(p: OrbitProblem, what: str) -> None:
    if p.mode != "real":
        raise InvalidArgument(f"{what} is only defined in real mode")


def _qr_positive(M: np.ndarray) -> np.ndarray:
    Q, R = np.linalg.qr(M)
    return Q * np.sign(np.diag(R))[None, :]


def g_action(p: OrbitProblem, g, z: OrbitPoint) -> OrbitPoint:
    """Act by an invertible real matrix with positive determinant through eigenflags."""
    _require_real(p, "g_action")
    g = np.asarray(g, dtype=float)
    det = np.linalg.det(g)
    if not np.isfinite(det) or abs(det) < 1e-300 or np.linalg.cond(g) > 1e15:
        raise InvalidArgument("g is singular")
    if det < 0:
        raise InvalidArgument("g must have positive determinant")
    lam = p.lam
    out = np.empty_like(z.matrices, dtype=float)
    for i, A in enumerate(z.matrices):
        _, Q = ordered_eigh(A)
        Qn = _qr_positive(g @ Q)
        B = (Qn * lam[i]) @ Qn.T
        out[i] = 0.5 * (B + B.T)
    return OrbitPoint(out)


def tangent_action(p: OrbitProblem, X, z: OrbitPoint) -> np.ndarray:
    """Infinitesimal action of X in gl(n, R) at z, as a (k, n, n) array of symmetric matrices."""
    _require_real(p, "tangent_action")
    X = np.asarray(X, dtype=float)
    out = np.empty_like(z.matrices, dtype=float)
    for i, A in enumerate(z.matrices):
        w, Q = ordered_eigh(A)
        if np.min(np.abs(np.diff(w))) < 1e-10:
            raise InvalidArgument("repeated eigenvalues in a factor")
        Y = Q.T @ X @ Q
        L = np.tril(Y, -1)
        K = Q @ (L - L.T) @ Q.T
        out[i] = K @ A - A @ K
    return out


def _sym_basis(n: int) -> list[np.ndarray]:
    basis = []
    for i in range(n):
        for j in range(i, n):
            E = np.zeros((n, n))
            if i == j:
                E[i, i] = 1.0
            else:
                E[i, j] = E[j, i] = 1.0 / math.sqrt(2)
            basis.append(E)
    return basis


def stabilizer_p_dim(p: OrbitProblem, z: OrbitPoint, tol: float = 1e-7) -> int:
    """Dimension of {X symmetric : X . z = 0}, by a relative singular-value cut."""
    _require_real(p, "stabilizer_p_dim")
    basis = _sym_basis(p.n)
    M = np.stack([tangent_action(p, E, z).ravel() for E in basis], axis=1)
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return len(basis)
    rank = int(np.sum(s > tol * s[0]))
    return len(basis) - rank


def gamma_blocks(gamma) -> tuple[tuple[int, ...], ...]:
    """Coordinates grouped by equal gamma-value, blocks ordered by decreasing value."""
    vals = [to_fraction(g) for g in gamma]
    distinct = sorted(set(vals), reverse=True)
    return tuple(tuple(i for i, v in enumerate(vals) if v == d) for d in distinct)


@dataclass(frozen=True)
class ComponentDescriptor:
    """Connected component of the fixed locus of gamma.

    ``assignments[i][slot]`` is the block receiving eigenvalue ``slot`` (in
    decreasing order) of factor i.
    """

    gamma: RationalVector
    blocks: tuple[tuple[int, ...], ...]
    assignments: tuple[tuple[int, ...], ...]

    def block_values(self) -> list[Fraction]:
        return [self.gamma[b[0]] for b in self.blocks]

    def to_json(self) -> dict:
        return {
            "gamma": self.gamma.to_strings(),
            "blocks": [list(b) for b in self.blocks],
            "assignments": [list(a) for a in self.assignments],
        }


def _block_assignments(n: int, sizes: Sequence[int]) -> Iterator[tuple[int, ...]]:
    labels = [b for b, s in enumerate(sizes) for _ in range(s)]
    seen = set()
    for perm in itertools.permutations(labels):
        if perm not in seen:
            seen.add(perm)
            yield perm


def _multinomial(n: int, sizes: Sequence[int]) -> int:
    out = math.factorial(n)
    for s in sizes:
        out //= math.factorial(s)
    return out


def fixed_components(p: OrbitProblem, gamma, bound: int = 100000) -> list[ComponentDescriptor]:
    """All connected components of the fixed locus of ``gamma`` in Z."""
    gamma = gamma if isinstance(gamma, RationalVector) else RationalVector(gamma)
    if len(gamma) != p.n:
        raise InvalidArgument("gamma has the wrong length")
    if gamma.is_zero():
        raise InvalidArgument("gamma must be nonzero")
    blocks = gamma_blocks(gamma)
    sizes = [len(b) for b in blocks]
    total = _multinomial(p.n, sizes) ** p.k
    if total > bound:
        raise ResourceLimit(f"{total} components exceed bound {bound}")
    per_factor = list(_block_assignments(p.n, sizes))
    return [ComponentDescriptor(gamma, blocks, tuple(a)) for a in itertools.product(per_factor, repeat=p.k)]


def component_point(p: OrbitProblem, c: ComponentDescriptor, seed=None) -> OrbitPoint:
    """Block-diagonal point of the component with independent Haar rotations inside each block."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    cplx = p.mode == "hermitian"
    lam = p.lam
    out = np.zeros((p.k, p.n, p.n), dtype=complex if cplx else float)
    for i in range(p.k):
        for b, coords in enumerate(c.blocks):
            slots = [s for s in range(p.n) if c.assignments[i][s] == b]
            m = len(coords)
            R = haar(rng, m, 1, cplx)[0] if m > 1 else np.ones((1, 1))
            blk = (R * lam[i][slots]) @ np.conj(R.T)
            out[i][np.ix_(coords, coords)] = 0.5 * (blk + np.conj(blk.T))
    return OrbitPoint(out)


def component_moment_value(p: OrbitProblem, c: ComponentDescriptor) -> Fraction:
    """Exact value of <Phi_p, gamma> on the component."""
    vals = c.block_values()
    total = Fraction(0)
    for i, lam in enumerate(p.spectra):
        for slot, b in enumerate(c.assignments[i]):
            total += lam[slot] * vals[b]
    return total


def _off_block_norm(A: np.ndarray, blocks) -> float:
    mask = np.ones(A.shape[-2:], dtype=bool)
    for b in blocks:
        mask[np.ix_(b, b)] = False
    return float(np.sqrt(np.sum(np.abs(A[..., mask]) ** 2)))


def descriptor_of_point(p: OrbitProblem, gamma, z: OrbitPoint, tol: float = 1e-6) -> ComponentDescriptor:
    """Component of the gamma-fixed locus containing the (block-diagonal) point ``z``."""
    gamma = gamma if isinstance(gamma, RationalVector) else RationalVector(gamma)
    blocks = gamma_blocks(gamma)
    assignments = []
    for A in z.matrices:
        _, Q = ordered_eigh(A)
        weights = np.array([[np.sum(np.abs(Q[list(b), s]) ** 2) for b in blocks] for s in range(p.n)])
        a = tuple(int(np.argmax(w)) for w in weights)
        if np.min(np.max(weights, axis=1)) < 1 - tol:
            raise InvalidArgument("point is not in the fixed locus of gamma")
        counts = Counter(a)
        if any(counts[b] != len(blk) for b, blk in enumerate(blocks)):
            raise InvalidArgument("eigenvector block counts do not match block sizes")
        assignments.append(a)
    return ComponentDescriptor(gamma, blocks, tuple(assignments))


@dataclass(frozen=True)
class BBControls:
    dt: float = 1.0
    tol: float = 1e-10
    max_steps: int = 5000


def bb_limit(p: OrbitProblem, z: OrbitPoint, gamma, controls: BBControls = BBControls()):
    """Limit of exp(t gamma) z as t -> infinity.

    The time step is rescaled so that the smallest gap between distinct
    gamma-values advances by ``controls.dt`` per iteration.  Returns
    ``(z_inf, descriptor, steps)``.
    """
    _require_real(p, "bb_limit")
    gamma = gamma if isinstance(gamma, RationalVector) else RationalVector(gamma)
    if gamma.is_zero():
        raise InvalidArgument("gamma must be nonzero")
    blocks = gamma_blocks(gamma)
    if len(blocks) == 1:
        return z.copy(), descriptor_of_point(p, gamma, z), 0
    vals = sorted({float(v) for v in gamma}, reverse=True)
    gap = min(a - b for a, b in zip(vals, vals[1:]))
    gv = gamma.to_numpy()
    # scalar factors do not move flags; centring keeps g well conditioned
    g = np.diag(np.exp(controls.dt / gap * (gv - gv.mean())))
    cur = z
    steps = 0
    res = max(_off_block_norm(A, blocks) for A in cur.matrices)
    while res > controls.tol:
        if steps >= controls.max_steps:
            raise NumericFailure(f"BB limit did not converge in {steps} steps", residual=res)
        cur = g_action(p, g, cur)
        steps += 1
        res = max(_off_block_norm(A, blocks) for A in cur.matrices)
    return cur, descriptor_of_point(p, gamma, cur), steps


def diagonalize_moment(p: OrbitProblem, z: OrbitPoint) -> OrbitPoint:
    """Rotate z by K so that its moment value is diagonal with decreasing entries."""
    S = moment_p(p, z)
    _, U = ordered_eigh(S)
    M = np.conj(U.T)[None] @ z.matrices @ U[None]
    M = 0.5 * (M + np.conj(np.swapaxes(M, -1, -2)))
    return OrbitPoint(M)
