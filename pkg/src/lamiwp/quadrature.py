"""Quadrature grid on the fundamental polygon.

F is split into a fan of 4g sector triangles (0, v_k, v_{k+1}) whose outer
side is the geodesic arc.  Each sector is the image of the reference
triangle {u, v >= 0, u + v <= 1} under the blended map

    x(u, v) = u v_k + v v_{k+1} + u v eps(s),   s = v / (u + v),

where eps corrects the chord to the arc, so straight sides stay straight and
the outer side lands exactly on the arc.  The reference triangle is 2-refined
``depth`` times, and every subtriangle carries the three interior points of
the degree-2 Gauss rule (barycentric 2/3, 1/6, 1/6).  The weight of a node is
the integral of jacobian * (its linear Lagrange basis function) over the
subtriangle, computed with a 7-point degree-5 rule, so the weights sum to
the Euclidean area of F up to the degree-5 error.

Off-node values are interpolated by the linear function through the three
nodes of the containing subtriangle, with its barycentric weights clipped to
a convex combination; this keeps interpolants inside the sup bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .surface_group import SurfaceGroup, build_genus_group

GAUSS_BARY = np.array([[2 / 3, 1 / 6, 1 / 6], [1 / 6, 2 / 3, 1 / 6], [1 / 6, 1 / 6, 2 / 3]])
_A1, _B1 = 0.059715871789770, 0.470142064105115
_A2, _B2 = 0.797426985353087, 0.101286507323456
GAUSS7_BARY = np.array([
    [1 / 3, 1 / 3, 1 / 3],
    [_A1, _B1, _B1], [_B1, _A1, _B1], [_B1, _B1, _A1],
    [_A2, _B2, _B2], [_B2, _A2, _B2], [_B2, _B2, _A2],
])
GAUSS7_W = np.array([0.225] + [0.132394152788506] * 3 + [0.125939180544827] * 3)
_S_EPS = 1e-9
_FD_H = 1e-6


def reference_triangles(m: int) -> np.ndarray:
    """Subtriangles of the reference triangle, array (T, 3, 2) in (u, v)."""
    tris = []
    for i in range(m):
        for j in range(m - i):
            tris.append([(i, j), (i + 1, j), (i, j + 1)])
            if i + j < m - 1:
                tris.append([(i + 1, j), (i + 1, j + 1), (i, j + 1)])
    return np.array(tris, dtype=float) / m


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    genus: int
    depth: int
    nodes: np.ndarray
    weights: np.ndarray
    # sector geometry, one entry per sector
    v0: np.ndarray
    v1: np.ndarray
    arc_center: np.ndarray
    arc_radius: float
    arc_p0: np.ndarray
    arc_dp: np.ndarray
    start_angle: float
    tri_lookup: np.ndarray  # (m, m, 2) -> subtriangle index

    @property
    def n_sectors(self) -> int:
        return self.v0.size

    @property
    def m(self) -> int:
        return 2**self.depth

    @property
    def n_tris(self) -> int:
        return self.m * self.m

    def __len__(self) -> int:
        return self.nodes.size

    def map(self, k, u, v):
        """Curved sector map; k, u, v broadcast together."""
        k = np.asarray(k)
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        v0, v1 = self.v0[k], self.v1[k]
        t = u + v
        s = np.clip(np.where(t > 0, v / np.where(t > 0, t, 1.0), 0.5), _S_EPS, 1 - _S_EPS)
        arc = self.arc_center[k] + self.arc_radius * np.exp(1j * (self.arc_p0[k] + s * self.arc_dp[k]))
        eps = (arc - ((1 - s) * v0 + s * v1)) / (s * (1 - s))
        return u * v0 + v * v1 + u * v * eps

    def jacobian(self, k, u, v):
        h = _FD_H
        du = (self.map(k, u + h, v) - self.map(k, u - h, v)) / (2 * h)
        dv = (self.map(k, u, v + h) - self.map(k, u, v - h)) / (2 * h)
        return du, dv

    def sector_of(self, z) -> np.ndarray:
        step = 2 * math.pi / self.n_sectors
        ang = np.angle(z)
        return np.floor((ang - self.start_angle) / step).astype(np.int64) % self.n_sectors

    def reference_coords(self, z, iters: int = 12):
        """Invert the sector map by Newton's method."""
        z = np.asarray(z, dtype=complex)
        k = self.sector_of(z)
        v0, v1 = self.v0[k], self.v1[k]
        det = v0.real * v1.imag - v1.real * v0.imag
        u = (z.real * v1.imag - v1.real * z.imag) / det
        v = (v0.real * z.imag - z.real * v0.imag) / det
        for _ in range(iters):
            r = self.map(k, u, v) - z
            du, dv = self.jacobian(k, u, v)
            jd = du.real * dv.imag - dv.real * du.imag
            su = (r.real * dv.imag - dv.real * r.imag) / jd
            sv = (du.real * r.imag - r.real * du.imag) / jd
            u, v = u - su, v - sv
            if np.max(np.abs(su) + np.abs(sv), initial=0.0) < 1e-15:
                break
        return k, u, v

    def locate(self, z):
        """Containing subtriangle, and clipped nodal interpolation weights.

        Returns (node_index (P, 3), weight (P, 3)).
        """
        k, u, v = self.reference_coords(z)
        m = self.m
        u = np.clip(u, 0.0, 1.0)
        v = np.clip(v, 0.0, 1.0)
        excess = np.maximum(u + v - 1.0, 0.0)
        u, v = u - excess / 2, v - excess / 2
        U, V = u * m, v * m
        i = np.clip(np.floor(U), 0, m - 1).astype(np.int64)
        j = np.clip(np.floor(V), 0, m - 1 - i).astype(np.int64)
        fu, fv = U - i, V - j
        upper = (fu + fv > 1.0) & (i + j <= m - 2)
        lam = np.where(
            upper[:, None],
            np.stack([1 - fv, fu + fv - 1, 1 - fu], axis=1),
            np.stack([1 - fu - fv, fu, fv], axis=1),
        )
        lam = np.clip(lam, 0.0, None)
        lam /= lam.sum(axis=1, keepdims=True)
        mu = np.clip(2.0 * lam - 1.0 / 3.0, 0.0, None)
        mu /= mu.sum(axis=1, keepdims=True)
        tri = self.tri_lookup[i, j, upper.astype(np.int64)]
        base = (k * self.n_tris + tri) * 3
        idx = base[:, None] + np.arange(3)[None, :]
        return idx, mu

    def interpolate(self, values: np.ndarray, z) -> np.ndarray:
        """values: (..., n_nodes); returns (..., P)."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        idx, mu = self.locate(z)
        return np.sum(values[..., idx] * mu, axis=-1)

    def euclidean_area(self) -> float:
        return float(math.fsum(self.weights))


@lru_cache(maxsize=8)
def build_grid(genus: int, depth: int = 4) -> QuadratureGrid:
    if depth < 1:
        raise ValueError("quad depth must be >= 1")
    G: SurfaceGroup = build_genus_group(genus)
    poly = G.fundamental_domain
    n = poly.n_sides
    verts = poly.vertices
    v0 = verts.copy()
    v1 = np.roll(verts, -1)
    centers = poly.side_centers
    rho = poly.side_circle_radius
    p0 = np.angle(v0 - centers)
    p1 = np.angle(v1 - centers)
    dp = (p1 - p0 + math.pi) % (2 * math.pi) - math.pi
    m = 2**depth
    tris = reference_triangles(m)
    lookup = np.full((m, m, 2), -1, dtype=np.int64)
    for t, tri in enumerate(tris):
        lo = np.round(tri.min(axis=0) * m).astype(int)
        upper = int(round(tri[0, 0] * m)) != lo[0]  # first vertex (i+1, j) marks the upper triangle
        lookup[lo[0], lo[1], int(upper)] = t
    area_ref = 0.5 / (m * m)
    grid = QuadratureGrid(genus, depth, np.empty(0, complex), np.empty(0), v0, v1, centers, rho,
                          p0, dp, poly.start_angle, lookup)
    pts = np.einsum("qa,tab->tqb", GAUSS_BARY, tris)  # (T, 3, 2)
    pts7 = np.einsum("qa,tab->tqb", GAUSS7_BARY, tris)  # (T, 7, 2)
    basis7 = 2.0 * GAUSS7_BARY - 1.0 / 3.0  # node Lagrange functions at the 7 points
    nodes, weights = [], []
    for k in range(n):
        nodes.append(grid.map(k, pts[..., 0], pts[..., 1]).ravel())
        du, dv = grid.jacobian(k, pts7[..., 0], pts7[..., 1])
        jac = np.abs(du.real * dv.imag - dv.real * du.imag)
        weights.append((area_ref * np.einsum("tq,q,qn->tn", jac, GAUSS7_W, basis7)).ravel())
    object.__setattr__(grid, "nodes", np.concatenate(nodes))
    object.__setattr__(grid, "weights", np.concatenate(weights))
    return grid
