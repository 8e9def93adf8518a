"""Disk isometries in the SU(1,1) model.

A transform is stored as the pair (a, b) with |a|^2 - |b|^2 = 1 and acts by
z -> (a z + b) / (conj(b) z + conj(a)).  Everything here also accepts numpy
arrays for ``z`` so that whole quadrature grids can be pushed through at once.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericDegeneracyError, ValidationError

UNRESOLVED_DET = 1e10
DET_TOL = 1e-12
EQ_TOL = 1e-9


@dataclass(frozen=True)
class MobiusTransform:
    a: complex
    b: complex

    def __post_init__(self):
        a, b = complex(self.a), complex(self.b)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        # relative tolerance: rounding in |a|^2 scales with the displacement
        scale = max(1.0, abs(a) ** 2)
        if abs(abs(a) ** 2 - abs(b) ** 2 - 1.0) > DET_TOL * scale:
            raise ValidationError(f"not unit determinant: |a|^2-|b|^2 = {abs(a)**2 - abs(b)**2!r}")

    # constructors
    @classmethod
    def identity(cls) -> "MobiusTransform":
        return cls(1.0, 0.0)

    @classmethod
    def rotation(cls, theta: float) -> "MobiusTransform":
        """z -> e^{i theta} z."""
        return cls(cmath.exp(0.5j * theta), 0.0)

    @classmethod
    def translation(cls, d: float) -> "MobiusTransform":
        """Hyperbolic translation by distance d along the real diameter."""
        return cls(math.cosh(0.5 * d), math.sinh(0.5 * d))

    @classmethod
    def normalized(cls, a: complex, b: complex) -> "MobiusTransform":
        if abs(a) ** 2 > UNRESOLVED_DET:
            # |a|^2 - |b|^2 cancels below double precision; a product of
            # unimodular factors is left as is.
            return cls(a, b)
        det = abs(a) ** 2 - abs(b) ** 2
        if det <= 0:
            raise NumericDegeneracyError("cannot normalize: non-positive determinant")
        s = math.sqrt(det)
        return cls(a / s, b / s)

    # algebra
    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.b.conjugate(), self.a.conjugate()]])

    def det(self) -> float:
        return abs(self.a) ** 2 - abs(self.b) ** 2

    def inverse(self) -> "MobiusTransform":
        return MobiusTransform(self.a.conjugate(), -self.b)

    def __matmul__(self, other: "MobiusTransform") -> "MobiusTransform":
        return compose(self, other)

    def __call__(self, z):
        return apply(self, z)

    def displacement(self) -> float:
        """Hyperbolic distance from 0 to self(0)."""
        return 2.0 * math.acosh(max(1.0, abs(self.a)))

    def trace_abs(self) -> float:
        return 2.0 * abs(self.a.real)

    def equals(self, other: "MobiusTransform", tol: float = EQ_TOL) -> bool:
        return projective_distance(self, other) < tol

    def to_json(self) -> dict:
        return {"a": [self.a.real, self.a.imag], "b": [self.b.real, self.b.imag]}

    @classmethod
    def from_json(cls, rec: dict) -> "MobiusTransform":
        try:
            a = complex(rec["a"][0], rec["a"][1])
            b = complex(rec["b"][0], rec["b"][1])
        except (KeyError, IndexError, TypeError) as exc:
            raise ValidationError(f"malformed transform record: {rec!r}") from exc
        return cls(a, b)


def compose(m1: MobiusTransform, m2: MobiusTransform) -> MobiusTransform:
    """m1 o m2, renormalized to unit determinant."""
    a = m1.a * m2.a + m1.b * m2.b.conjugate()
    b = m1.a * m2.b + m1.b * m2.a.conjugate()
    return MobiusTransform.normalized(a, b)


def apply(m: MobiusTransform, z):
    den = m.b.conjugate() * z + m.a.conjugate()
    if np.any(np.abs(den) < 1e-300):
        raise NumericDegeneracyError("degenerate denominator in apply")
    return (m.a * z + m.b) / den


def derivative(m: MobiusTransform, z):
    den = m.b.conjugate() * z + m.a.conjugate()
    if np.any(np.abs(den) < 1e-300):
        raise NumericDegeneracyError("degenerate denominator in derivative")
    return 1.0 / den**2


def projective_distance(m1: MobiusTransform, m2: MobiusTransform) -> float:
    """Max-entry distance between matrices, minimized over the sign ambiguity."""
    plus = max(abs(m1.a - m2.a), abs(m1.b - m2.b))
    minus = max(abs(m1.a + m2.a), abs(m1.b + m2.b))
    return min(plus, minus)


def hyperbolic_distance(z, w):
    """Poincare distance in the unit disk (curvature -1)."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    num = np.abs(z - w)
    den = np.abs(1.0 - np.conj(w) * z)
    return 2.0 * np.arctanh(np.clip(num / den, 0.0, 1.0))


# Vectorized helpers on arrays of (a, b): used for large tile sets.

def compose_arrays(a1, b1, a2, b2):
    a = a1 * a2 + b1 * np.conj(b2)
    b = a1 * b2 + b1 * np.conj(a2)
    s = np.sqrt(np.abs(a) ** 2 - np.abs(b) ** 2)
    return a / s, b / s


def apply_arrays(a, b, z):
    return (a * z + b) / (np.conj(b) * z + np.conj(a))


def derivative_arrays(a, b, z):
    return 1.0 / (np.conj(b) * z + np.conj(a)) ** 2
