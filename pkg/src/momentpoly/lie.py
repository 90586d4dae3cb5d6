"""Exact root-system combinatorics for the classical families A, B, C, D.

Vectors live in the standard diagonal coordinates e_1..e_n of the Cartan
subspace.  The inner product is the trace form (identity Gram matrix), so the
b-dual of a root is the root itself read as an element of the Cartan subspace.
All arithmetic on roots, coroots and the distinguished face vectors uses
:class:`fractions.Fraction`.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidArgument, ResourceLimit

__all__ = [
    "RationalVector",
    "RootSystem",
    "ChamberFace",
    "WeylElement",
    "build_root_system",
    "coroot",
    "gamma_s",
    "chamber_faces",
    "weyl_elements",
    "weyl_order",
    "dominant_sweep",
    "to_fraction",
]


def to_fraction(x) -> Fraction:
    """Parse ``x`` ("p/q" strings, ints, Fractions, or floats) exactly."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, (float, np.floating)):
        return Fraction(float(x))
    raise InvalidArgument(f"cannot interpret {x!r} as a rational number")


@dataclass(frozen=True)
class RationalVector:
    """Exact rational vector in e-coordinates."""

    coords: tuple[Fraction, ...]

    def __init__(self, coords: Iterable):
        object.__setattr__(self, "coords", tuple(to_fraction(c) for c in coords))

    def __len__(self) -> int:
        return len(self.coords)

    def __iter__(self):
        return iter(self.coords)

    def __getitem__(self, i):
        return self.coords[i]

    def __add__(self, other: "RationalVector") -> "RationalVector":
        _check_len(self, other)
        return RationalVector(a + b for a, b in zip(self.coords, other.coords))

    def __sub__(self, other: "RationalVector") -> "RationalVector":
        _check_len(self, other)
        return RationalVector(a - b for a, b in zip(self.coords, other.coords))

    def __neg__(self) -> "RationalVector":
        return RationalVector(-a for a in self.coords)

    def __mul__(self, s) -> "RationalVector":
        s = to_fraction(s)
        return RationalVector(s * a for a in self.coords)

    __rmul__ = __mul__

    def dot(self, other) -> Fraction:
        if isinstance(other, RationalVector):
            other = other.coords
        if len(other) != len(self.coords):
            raise InvalidArgument("length mismatch in pairing")
        return sum((a * to_fraction(b) for a, b in zip(self.coords, other)), Fraction(0))

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coords)

    def to_numpy(self) -> np.ndarray:
        return np.array([float(c) for c in self.coords])

    def to_strings(self) -> list[str]:
        return [str(c) for c in self.coords]

    def __repr__(self) -> str:
        return "RationalVector(" + ", ".join(str(c) for c in self.coords) + ")"

    @classmethod
    def zeros(cls, n: int) -> "RationalVector":
        return cls([0] * n)


def _check_len(a: RationalVector, b: RationalVector) -> None:
    if len(a) != len(b):
        raise InvalidArgument(f"length mismatch: {len(a)} vs {len(b)}")


def _unit(n: int, i: int, scale: int = 1) -> list[Fraction]:
    v = [Fraction(0)] * n
    v[i] = Fraction(scale)
    return v


def _regular_vector(n: int) -> list[Fraction]:
    return [Fraction(1, 2**i) for i in range(n)]


def _solve_exact(A: list[list[Fraction]], b: list[Fraction]) -> list[Fraction] | None:
    """Solve the (possibly overdetermined but consistent) system A x = b exactly.

    Returns None when the system is inconsistent.  Free variables are set to 0.
    """
    rows = len(A)
    cols = len(A[0]) if rows else 0
    M = [list(A[r]) + [b[r]] for r in range(rows)]
    pivots = []
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, rows) if M[i][c] != 0), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        inv = 1 / M[r][c]
        M[r] = [x * inv for x in M[r]]
        for i in range(rows):
            if i != r and M[i][c] != 0:
                f = M[i][c]
                M[i] = [x - f * y for x, y in zip(M[i], M[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    for i in range(r, rows):
        if M[i][cols] != 0:
            return None
    x = [Fraction(0)] * cols
    for i, c in enumerate(pivots):
        x[c] = M[i][cols]
    return x


@dataclass(frozen=True)
class RootSystem:
    family: str
    rank: int
    roots: tuple[RationalVector, ...]
    positive_roots: tuple[RationalVector, ...]
    simple_roots: tuple[RationalVector, ...]
    form_matrix: tuple[tuple[Fraction, ...], ...]

    @property
    def dim(self) -> int:
        """Number of e-coordinates (rank + 1 for type A)."""
        return len(self.form_matrix)

    def form(self, x, y) -> Fraction:
        """The inner product (x, y)_b in e-coordinates."""
        x = [to_fraction(a) for a in x]
        y = [to_fraction(a) for a in y]
        return sum(
            (x[i] * self.form_matrix[i][j] * y[j] for i in range(self.dim) for j in range(self.dim)),
            Fraction(0),
        )

    def simple_coroots(self) -> list[RationalVector]:
        return [coroot(self, a) for a in self.simple_roots]

    def simple_expansion(self, alpha: RationalVector) -> list[Fraction]:
        """Coefficients of ``alpha`` in the basis of simple roots."""
        A = [[s[i] for s in self.simple_roots] for i in range(self.dim)]
        x = _solve_exact(A, list(alpha.coords))
        if x is None:
            raise InvalidArgument(f"{alpha!r} is not in the span of the simple roots")
        return x

    def in_chamber(self, v, tol: float = 0.0) -> bool:
        return all(float(h.dot(list(v))) >= -tol for h in self.simple_coroots())


def build_root_system(family: str, rank: int) -> RootSystem:
    """Construct the root system of type ``family`` and rank ``rank``.

    Positivity is induced by the regular vector (1, 1/2, 1/4, ...), so type A
    positive roots are e_i - e_j with i < j and the closed chamber consists of
    weakly decreasing vectors.
    """
    family = str(family).upper()
    if family not in "ABCD" or len(family) != 1:
        raise InvalidArgument(f"unsupported root system family {family!r}")
    if not isinstance(rank, (int, np.integer)) or rank < 1:
        raise InvalidArgument(f"rank must be a positive integer, got {rank!r}")
    if family == "D" and rank < 2:
        raise InvalidArgument("type D requires rank >= 2")
    rank = int(rank)

    n = rank + 1 if family == "A" else rank
    roots: list[list[Fraction]] = []
    if family == "A":
        for i, j in itertools.permutations(range(n), 2):
            v = _unit(n, i)
            v[j] = Fraction(-1)
            roots.append(v)
    else:
        for i, j in itertools.combinations(range(n), 2):
            for si, sj in itertools.product((1, -1), repeat=2):
                v = [Fraction(0)] * n
                v[i], v[j] = Fraction(si), Fraction(sj)
                roots.append(v)
        if family in "BC":
            scale = 1 if family == "B" else 2
            for i in range(n):
                roots.append(_unit(n, i, scale))
                roots.append(_unit(n, i, -scale))

    reg = _regular_vector(n)
    root_vecs = [RationalVector(r) for r in roots]
    positive = [r for r in root_vecs if r.dot(reg) > 0]
    pos_set = set(positive)
    sums = {a + b for a in positive for b in positive}
    simple = [r for r in positive if r not in sums]
    simple.sort(key=lambda r: [-c for c in r.coords])
    assert len(simple) == rank and all(r in pos_set for r in simple)

    gram = tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n))
    return RootSystem(
        family=family,
        rank=rank,
        roots=tuple(root_vecs),
        positive_roots=tuple(positive),
        simple_roots=tuple(simple),
        form_matrix=gram,
    )


def coroot(rs: RootSystem, alpha: RationalVector) -> RationalVector:
    """b-dual of ``alpha``: the unique h with <alpha, X> = (h, X)_b for all X."""
    if not isinstance(alpha, RationalVector):
        alpha = RationalVector(alpha)
    if alpha not in rs.roots:
        raise InvalidArgument(f"{alpha!r} is not a root of {rs.family}{rs.rank}")
    G = [list(row) for row in rs.form_matrix]
    h = _solve_exact(G, list(alpha.coords))
    return RationalVector(h)


@dataclass(frozen=True)
class ChamberFace:
    """Open face of the closed chamber cut out by the simple roots in ``vanishing_simple_roots``."""

    vanishing_simple_roots: frozenset[int]
    sigma_plus_s: tuple[RationalVector, ...] = field(default=())


def chamber_face(rs: RootSystem, vanishing: Iterable[int]) -> ChamberFace:
    S = frozenset(int(i) for i in vanishing)
    if any(i < 0 or i >= rs.rank for i in S):
        raise InvalidArgument(f"simple root indices out of range: {sorted(S)}")
    sigma = []
    for alpha in rs.positive_roots:
        coeffs = rs.simple_expansion(alpha)
        if all(c == 0 for i, c in enumerate(coeffs) if i not in S):
            sigma.append(alpha)
    return ChamberFace(S, tuple(sigma))


def chamber_faces(rs: RootSystem) -> list[ChamberFace]:
    """All 2**rank faces of the closed chamber."""
    out = []
    for r in range(rs.rank + 1):
        for S in itertools.combinations(range(rs.rank), r):
            out.append(chamber_face(rs, S))
    return out


def face_point(rs: RootSystem, face: ChamberFace) -> RationalVector:
    """A rational point in the relative interior of ``face``.

    Solves <xi, h_alpha> = 0 on the vanishing simple roots and = 1 on the rest.
    """
    A = [list(coroot(rs, a).coords) for a in rs.simple_roots]
    b = [Fraction(0) if i in face.vanishing_simple_roots else Fraction(1) for i in range(rs.rank)]
    x = _solve_exact(A, b)
    return RationalVector(x)


def gamma_s(rs: RootSystem, face: ChamberFace) -> RationalVector:
    """Minus the sum of the coroots of the positive roots orthogonal to ``face``."""
    total = RationalVector.zeros(rs.dim)
    for alpha in face.sigma_plus_s:
        total = total + coroot(rs, alpha)
    return -total


@dataclass(frozen=True)
class WeylElement:
    """Signed permutation v -> (signs[i] * v[perm[i]])_i."""

    perm: tuple[int, ...]
    signs: tuple[int, ...]

    def apply(self, v):
        out = [self.signs[i] * v[self.perm[i]] for i in range(len(self.perm))]
        if isinstance(v, np.ndarray):
            return np.array(out, dtype=v.dtype)
        if isinstance(v, RationalVector):
            return RationalVector(out)
        return out

    def compose(self, other: "WeylElement") -> "WeylElement":
        """(self o other)(v) = self(other(v))."""
        n = len(self.perm)
        perm = tuple(other.perm[self.perm[i]] for i in range(n))
        signs = tuple(self.signs[i] * other.signs[self.perm[i]] for i in range(n))
        return WeylElement(perm, signs)

    @classmethod
    def identity(cls, n: int) -> "WeylElement":
        return cls(tuple(range(n)), (1,) * n)


def weyl_order(family: str, rank: int) -> int:
    family = family.upper()
    if family == "A":
        return math.factorial(rank + 1)
    if family in "BC":
        return 2**rank * math.factorial(rank)
    if family == "D":
        return 2 ** (rank - 1) * math.factorial(rank)
    raise InvalidArgument(f"unsupported family {family!r}")


def weyl_elements(rs: RootSystem, bound: int = math.factorial(10)) -> list[WeylElement]:
    """Enumerate the Weyl group as (signed) permutations."""
    order = weyl_order(rs.family, rs.rank)
    if order > bound:
        raise ResourceLimit(f"|W({rs.family}{rs.rank})| = {order} exceeds bound {bound}")
    n = rs.dim
    out = []
    for perm in itertools.permutations(range(n)):
        if rs.family == "A":
            out.append(WeylElement(perm, (1,) * n))
            continue
        for signs in itertools.product((1, -1), repeat=n):
            if rs.family == "D" and signs.count(-1) % 2:
                continue
            out.append(WeylElement(perm, signs))
    return out


def _reflection(rs: RootSystem, alpha: RationalVector) -> WeylElement:
    n = rs.dim
    aa = rs.form(alpha, alpha)
    perm, signs = [0] * n, [0] * n
    for j in range(n):
        e = _unit(n, j)
        c = 2 * rs.form(e, alpha) / aa
        img = [e[i] - c * alpha[i] for i in range(n)]
        (i,) = [i for i in range(n) if img[i] != 0]
        perm[i], signs[i] = j, int(img[i])
    return WeylElement(tuple(perm), tuple(signs))


def dominant_sweep(rs: RootSystem, v: Sequence) -> tuple[np.ndarray, WeylElement]:
    """Move ``v`` into the closed chamber by simple reflections.

    Returns ``(v_plus, w)`` with ``v_plus = w.apply(v)``.
    """
    x = np.asarray(v, dtype=float).copy()
    if x.shape != (rs.dim,):
        raise InvalidArgument(f"expected a vector of length {rs.dim}")
    refl = [_reflection(rs, a) for a in rs.simple_roots]
    cor = [coroot(rs, a).to_numpy() for a in rs.simple_roots]
    w = WeylElement.identity(rs.dim)
    # Each reflection strictly raises <x, rho>, so this terminates after <= |W| moves.
    for _ in range(weyl_order(rs.family, rs.rank) + 1):
        bad = next((i for i, h in enumerate(cor) if h @ x < 0), None)
        if bad is None:
            return x, w
        x = refl[bad].apply(x)
        w = refl[bad].compose(w)
    raise AssertionError("dominant sweep did not terminate")
