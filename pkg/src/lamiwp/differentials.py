"""Coset-indexed (laminated) differentials sampled on the fundamental domain.

A field at a normal level N stores one sampled function h_c on F per coset
c of N.  Off F it is extended by the equivariance

    phi(c . g) = alpha(g)^* phi(c),   (alpha(g)^* mu)(z) = mu(g z) conj(g'(z)) / g'(z),

so for z with reduction alpha(w)(z) = z' in F,

    phi(c)(z) = h_{c . w^{-1}}(z') conj(gamma'(z)) / gamma'(z),   gamma = alpha(w).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import LevelMismatchError, ValidationError
from .mobius import MobiusTransform, apply, derivative, derivative_arrays
from .quadrature import QuadratureGrid, build_grid
from .subgroup_lattice import (
    CosetTable,
    is_subgroup,
    normal_core,
    quotient_map,
)
from .surface_group import SurfaceGroup, Word, build_genus_group, evaluate_word, reduce_points


@dataclass(frozen=True, eq=False)
class GridField:
    grid: QuadratureGrid
    values: np.ndarray
    sup_bound: float = field(default=-1.0)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != self.grid.nodes.shape:
            raise ValidationError(f"expected {self.grid.nodes.size} values, got {vals.shape}")
        object.__setattr__(self, "values", vals)
        m = float(np.max(np.abs(vals), initial=0.0))
        if self.sup_bound < 0:
            object.__setattr__(self, "sup_bound", m)
        elif m > self.sup_bound * (1 + 1e-12):
            raise ValidationError("value exceeds sup bound")

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def weights(self) -> np.ndarray:
        return self.grid.weights

    def __call__(self, z):
        return self.grid.interpolate(self.values, z)


@dataclass(frozen=True, eq=False)
class LaminatedField:
    """Per-coset samples on a shared grid; ``values`` has shape (n, n_nodes)."""

    level: CosetTable
    values: np.ndarray
    grid: QuadratureGrid
    is_beltrami: bool = False

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.ndim != 2 or vals.shape != (self.level.degree, self.grid.nodes.size):
            raise ValidationError(
                f"values must have shape ({self.level.degree}, {self.grid.nodes.size}), got {vals.shape}"
            )
        if not self.level.is_normal:
            raise LevelMismatchError("level must be a normal subgroup (take normal_core first)")
        if not np.all(np.isfinite(vals)):
            raise ValidationError("non-finite field values")
        object.__setattr__(self, "values", vals)
        if self.is_beltrami and self.sup_bound >= 1.0:
            raise ValidationError(f"Beltrami field needs sup < 1, got {self.sup_bound}")

    @property
    def degree(self) -> int:
        return self.level.degree

    @property
    def group(self) -> SurfaceGroup:
        return build_genus_group(self.level.genus)

    @property
    def sup_bound(self) -> float:
        return float(np.max(np.abs(self.values), initial=0.0))

    @property
    def per_coset(self) -> dict[int, GridField]:
        return {c: GridField(self.grid, self.values[c]) for c in range(self.degree)}

    def with_values(self, values: np.ndarray) -> "LaminatedField":
        return LaminatedField(self.level, values, self.grid, self.is_beltrami and np.max(np.abs(values)) < 1)

    def __add__(self, other: "LaminatedField") -> "LaminatedField":
        a, b = common_level(self, other)
        return LaminatedField(a.level, a.values + b.values, a.grid)

    def scale(self, s: complex) -> "LaminatedField":
        return LaminatedField(self.level, s * self.values, self.grid)

    @classmethod
    def from_cosets(cls, table: CosetTable, values: np.ndarray, grid: QuadratureGrid,
                    is_beltrami: bool = False) -> "LaminatedField":
        """Lift per-coset data of any finite-index table to its normal core."""
        values = np.asarray(values, dtype=complex)
        if table.is_normal:
            return cls(table, values, grid, is_beltrami)
        core = normal_core(table)
        q = quotient_map(core, table)
        return cls(core, values[q], grid, is_beltrami)


# ---------------------------------------------------------------- evaluation

def pullback(g: MobiusTransform, mu: Callable, z):
    """(alpha(g)^* mu)(z) = mu(g z) conj(g'(z)) / g'(z)."""
    d = derivative(g, z)
    return mu(apply(g, z)) * np.conj(d) / d


def _reduced_cosets(level: CosetTable, steps: np.ndarray, start: np.ndarray) -> np.ndarray:
    """c . w^{-1} for the reduction words encoded in ``steps`` (application order)."""
    lp = level.letter_perms
    d = np.array(start, dtype=np.int64, copy=True)
    for s in range(steps.shape[1]):
        col = steps[:, s]
        on = col >= 0
        if d.ndim == 1:
            d[on] = lp[col[on] ^ 1, d[on]]
        else:
            d[on] = lp[(col[on] ^ 1)[:, None], d[on]]
    return d


def evaluate_all(mu: LaminatedField, z) -> np.ndarray:
    """phi(c)(z) for every coset c; returns shape (n, P)."""
    z = np.atleast_1d(np.asarray(z, dtype=complex)).ravel()
    G = mu.group
    red = reduce_points(G, z)
    n = mu.degree
    d = _reduced_cosets(mu.level, red.steps, np.tile(np.arange(n), (z.size, 1)))  # (P, n)
    idx, wts = mu.grid.locate(red.reduced)  # (P, 3)
    vals = np.sum(mu.values[d[:, :, None], idx[:, None, :]] * wts[:, None, :], axis=-1)  # (P, n)
    gp = derivative_arrays(red.a, red.b, z)
    return (vals * (np.conj(gp) / gp)[:, None]).T


def evaluate(mu: LaminatedField, c, z) -> np.ndarray:
    """phi(c)(z) for a coset label (or array of labels broadcast against z)."""
    z = np.atleast_1d(np.asarray(z, dtype=complex)).ravel()
    c = np.broadcast_to(np.asarray(c, dtype=np.int64), z.shape)
    if np.any((c < 0) | (c >= mu.degree)):
        raise ValidationError("coset label out of range")
    G = mu.group
    red = reduce_points(G, z)
    d = _reduced_cosets(mu.level, red.steps, c)
    idx, wts = mu.grid.locate(red.reduced)
    vals = np.sum(mu.values[d[:, None], idx] * wts, axis=-1)
    gp = derivative_arrays(red.a, red.b, z)
    return vals * np.conj(gp) / gp


# ---------------------------------------------------------------- constructions

def tile_sum(G: SurfaceGroup, h: GridField, T: CosetTable) -> LaminatedField:
    """The G-automorphic field sum_g alpha(g)^*(h chi_F), replicated over cosets of T."""
    if not T.is_normal:
        raise LevelMismatchError("tile_sum needs a normal level")
    vals = np.tile(h.values, (T.degree, 1))
    return LaminatedField(T, vals, h.grid, bool(h.sup_bound < 1))


def common_level(mu: LaminatedField, nu: LaminatedField) -> tuple[LaminatedField, LaminatedField]:
    """Refine both fields to the normal core of the intersection of their levels."""
    if mu.level == nu.level:
        return mu, nu
    from .subgroup_lattice import intersect

    if mu.grid is not nu.grid:
        raise ValidationError("fields live on different grids")
    N = normal_core(intersect(mu.level, nu.level))
    return refine(mu, N), refine(nu, N)


def refine(mu: LaminatedField, finer: CosetTable) -> LaminatedField:
    if finer == mu.level:
        return mu
    if not is_subgroup(finer, mu.level):
        raise LevelMismatchError("target level is not contained in the field's level")
    q = quotient_map(finer, mu.level)
    return LaminatedField(finer, mu.values[q], mu.grid, mu.is_beltrami)


def canonical_net(mu: LaminatedField, T: CosetTable) -> LaminatedField:
    """Mean of the per-coset data over the fibres of N -> T."""
    if not T.is_normal:
        raise LevelMismatchError("target level must be normal")
    if not is_subgroup(mu.level, T):
        raise LevelMismatchError("field level is not contained in the target level")
    q = quotient_map(mu.level, T)
    out = np.zeros((T.degree, mu.values.shape[1]), dtype=complex)
    np.add.at(out, q, mu.values)
    counts = np.bincount(q, minlength=T.degree)
    return LaminatedField(T, out / counts[:, None], mu.grid, mu.is_beltrami)


def sample_in_F(G: SurfaceGroup, samples: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform (Euclidean) random points of F by rejection from a disc."""
    poly = G.fundamental_domain
    r = poly.vertex_radius
    out = []
    have = 0
    while have < samples:
        k = max(64, 2 * (samples - have))
        z = r * np.sqrt(rng.uniform(0, 1, k)) * np.exp(2j * np.pi * rng.uniform(0, 1, k))
        z = z[poly.contains(z, tol=1e-9)]
        out.append(z)
        have += z.size
    return np.concatenate(out)[:samples]


def pulled_back_all(mu: LaminatedField, w: Word, z) -> np.ndarray:
    """(alpha(w)^* phi(c))(z) for every coset c, z in F; shape (n, P).

    The letters of w are applied one at a time (rightmost first), each
    followed by a reduction back into F, so no intermediate point leaves a
    bounded neighbourhood of F even when alpha(w) z is close to the circle.
    The composite Gamma of all steps satisfies Gamma = gamma o alpha(w) with
    gamma reducing alpha(w) z, and the cocycle factors combine into
    conj(Gamma'(z)) / Gamma'(z).
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex)).ravel()
    G = mu.group
    lp = mu.level.letter_perms
    la, lb = G.letter_arrays
    n = mu.degree
    d = np.arange(n)
    for code in w.codes:
        d = lp[code][d]
    d = np.tile(d, (z.size, 1))
    cur = z.copy()
    dgam = np.ones_like(z)
    for code in reversed(w.codes):
        a, b = la[code], lb[code]
        dgam = dgam * derivative_arrays(a, b, cur)
        cur = (a * cur + b) / (np.conj(b) * cur + np.conj(a))
        d = lp[code ^ 1][d]
        red = reduce_points(G, cur)
        dgam = dgam * derivative_arrays(red.a, red.b, cur)
        cur = red.reduced
        d = _reduced_cosets(mu.level, red.steps, d)
    idx, wts = mu.grid.locate(cur)
    vals = np.sum(mu.values[d[:, :, None], idx[:, None, :]] * wts[:, None, :], axis=-1)
    return (vals * (np.conj(dgam) / dgam)[:, None]).T


def automorphy_defect(mu: LaminatedField, w: Word, samples: int = 64,
                      rng: np.random.Generator | None = None, cosets=None) -> float:
    """Sampled sup of |alpha(w)^* phi(c) - phi(c)| over points of F and cosets."""
    if not len(w):
        return 0.0
    rng = rng if rng is not None else np.random.default_rng(0)
    z = sample_in_F(mu.group, samples, rng)
    diff = np.abs(pulled_back_all(mu, w, z) - evaluate_all(mu, z))
    if cosets is not None:
        diff = diff[np.asarray(cosets)]
    return float(diff.max(initial=0.0))


def net_defect(mu: LaminatedField, T: CosetTable) -> float:
    """Sup over nodes and cosets of |mu - canonical_net(mu, T)| (compared at mu's level)."""
    return float(np.max(np.abs(mu.values - refine(canonical_net(mu, T), mu.level).values), initial=0.0))


def polynomial_values(grid: QuadratureGrid, coeffs: np.ndarray) -> np.ndarray:
    """sum_{j,k} coeffs[..., j, k] z^j conj(z)^k at the grid nodes."""
    z = grid.nodes
    deg = coeffs.shape[-1]
    zp = z[None, :] ** np.arange(deg)[:, None]
    zc = np.conj(zp)
    return np.einsum("...jk,jl,kl->...l", coeffs, zp, zc)


def random_coset_data(grid: QuadratureGrid, n: int, rng: np.random.Generator, degree: int = 3,
                      sup: float = 0.8) -> np.ndarray:
    """Smooth random per-coset data: low-degree polynomials in z and conj(z)."""
    coeffs = rng.standard_normal((n, degree, degree)) + 1j * rng.standard_normal((n, degree, degree))
    mask = np.add.outer(np.arange(degree), np.arange(degree)) < degree
    vals = polynomial_values(grid, coeffs * mask)
    return sup * vals / np.max(np.abs(vals))


def random_field(table: CosetTable, grid: QuadratureGrid | None = None, seed: int = 0,
                 depth: int = 4, sup: float = 0.8) -> LaminatedField:
    """A random Beltrami-type field whose data factors through the cosets of ``table``."""
    from .config import make_rng

    grid = grid or build_grid(table.genus, depth)
    rng = make_rng(seed)
    data = random_coset_data(grid, table.degree, rng, sup=sup)
    return LaminatedField.from_cosets(table, data, grid, is_beltrami=sup < 1)
