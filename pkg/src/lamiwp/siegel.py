"""Siegel disk D(n), its Sp(2n) action, Cayley transform and Kahler potential."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CodomainError, NearBoundaryError, NotAPeriodMatrixError, ValidationError
from .subgroup_lattice import CosetTable

SYM_TOL = 1e-12
EIG_TOL = 1e-12
COND_MAX = 1e12


def _square(Z) -> np.ndarray:
    Z = np.atleast_2d(np.asarray(Z, dtype=complex))
    if Z.ndim != 2 or Z.shape[0] != Z.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {Z.shape}")
    return Z


def _gram(Z: np.ndarray) -> np.ndarray:
    """1 - Z^dagger Z, symmetrized to be exactly Hermitian."""
    H = np.eye(Z.shape[0]) - Z.conj().T @ Z
    return 0.5 * (H + H.conj().T)


def in_disk(Z) -> tuple[bool, tuple[float, float]]:
    """(inside?, (symmetry defect, min eigenvalue of 1 - Z^dagger Z))."""
    Z = _square(Z)
    sym = float(np.max(np.abs(Z - Z.T), initial=0.0))
    lam = float(np.linalg.eigvalsh(_gram(Z)).min())
    return bool(sym <= SYM_TOL and lam > EIG_TOL), (sym, lam)


@dataclass(frozen=True, eq=False)
class SiegelPoint:
    Z: np.ndarray

    def __post_init__(self):
        Z = _square(self.Z)
        ok, (sym, lam) = in_disk(Z)
        if not ok:
            raise CodomainError(f"not in the Siegel disk: symmetry defect {sym:.3g}, min eigenvalue {lam:.3g}")
        object.__setattr__(self, "Z", 0.5 * (Z + Z.T))

    @property
    def n(self) -> int:
        return self.Z.shape[0]


@dataclass(frozen=True, eq=False)
class SpElement:
    """Block matrix [[a, b], [conj(b), conj(a)]] acting on D(n)."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a, b = _square(self.a), _square(self.b)
        if a.shape != b.shape:
            raise ValidationError("a and b must have the same shape")
        r1 = np.max(np.abs(a.T @ b.conj() - b.conj().T @ a))
        r2 = np.max(np.abs(a.T @ a.conj() - b.conj().T @ b - np.eye(a.shape[0])))
        scale = max(1.0, float(np.max(np.abs(a))) ** 2)
        if max(r1, r2) > 1e-10 * scale:
            raise ValidationError(f"not a symplectic element (residuals {r1:.3g}, {r2:.3g})")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def identity(cls, n: int) -> "SpElement":
        return cls(np.eye(n), np.zeros((n, n)))

    @classmethod
    def from_unitary(cls, u) -> "SpElement":
        return cls(np.asarray(u, dtype=complex), np.zeros_like(u, dtype=complex))

    @classmethod
    def boost(cls, t) -> "SpElement":
        """Diagonal hyperbolic element; t is a vector of rapidities."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return cls(np.diag(np.cosh(t)).astype(complex), np.diag(np.sinh(t)).astype(complex))

    def __matmul__(self, other: "SpElement") -> "SpElement":
        a = self.a @ other.a + self.b @ other.b.conj()
        b = self.a @ other.b + self.b @ other.a.conj()
        return SpElement(a, b)


def sp_action(g: SpElement, Z: SiegelPoint) -> SiegelPoint:
    """(a Z + b)(conj(b) Z + conj(a))^{-1}."""
    den = g.b.conj() @ Z.Z + g.a.conj()
    if np.linalg.cond(den) > COND_MAX:
        raise NearBoundaryError("denominator is numerically singular")
    return SiegelPoint(np.linalg.solve(den.T, (g.a @ Z.Z + g.b).T).T)


def kahler_potential(Z) -> float:
    """-tr log(1 - Z^dagger Z)."""
    M = Z.Z if isinstance(Z, SiegelPoint) else _square(Z)
    lam = np.linalg.eigvalsh(_gram(M))
    if lam.min() <= 0:
        raise CodomainError(f"outside the disk (min eigenvalue {lam.min():.3g})")
    return 0.0 - float(np.sum(np.log(lam)))


def cayley(Pi) -> SiegelPoint:
    """(Pi - i)(Pi + i)^{-1} for a symmetric Pi with positive-definite imaginary part."""
    Pi = _square(Pi)
    if np.max(np.abs(Pi - Pi.T), initial=0.0) > 1e-10:
        raise NotAPeriodMatrixError("period matrix is not symmetric")
    im = 0.5 * (Pi.imag + Pi.imag.T)
    if np.linalg.eigvalsh(im).min() <= 0:
        raise NotAPeriodMatrixError("imaginary part is not positive definite")
    I = np.eye(Pi.shape[0])
    Z = np.linalg.solve((Pi + 1j * I).T, (Pi - 1j * I).T).T
    return SiegelPoint(Z)


def inverse_cayley(Z: SiegelPoint) -> np.ndarray:
    I = np.eye(Z.n)
    return 1j * np.linalg.solve((I - Z.Z).T, (I + Z.Z).T).T


@dataclass(frozen=True, eq=False)
class SiegelFunction:
    level: CosetTable
    values: tuple[SiegelPoint, ...]

    def __post_init__(self):
        if len(self.values) != self.level.degree:
            raise ValidationError(f"need {self.level.degree} values, got {len(self.values)}")
        if len({v.n for v in self.values}) > 1:
            raise ValidationError("values have different sizes")

    @property
    def per_coset(self) -> dict[int, SiegelPoint]:
        return dict(enumerate(self.values))

    def permuted(self, sigma) -> "SiegelFunction":
        return SiegelFunction(self.level, tuple(self.values[int(s)] for s in sigma))


def siegel_function_potential(zeta: SiegelFunction) -> float:
    """Haar average of the Kahler potential over cosets."""
    terms = sorted(kahler_potential(v) for v in zeta.values)
    return math.fsum(terms) / len(terms)


def matrix_to_json(Z: np.ndarray) -> list:
    return [[[float(x.real), float(x.imag)] for x in row] for row in np.asarray(Z)]


def matrix_from_json(rows) -> np.ndarray:
    try:
        return np.array([[complex(x[0], x[1]) if isinstance(x, (list, tuple)) else complex(x) for x in row]
                         for row in rows], dtype=complex)
    except (TypeError, IndexError, ValueError) as exc:
        raise ValidationError(f"malformed matrix: {exc}") from exc
