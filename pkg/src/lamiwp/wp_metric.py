"""Weil-Petersson kernel, classical and renormalized pairings, and identity checks.

The inner integral over the disk is truncated to a tile set B (by default the
displacement ball of radius ``tile_radius``).  For the renormalized pairing
the kernel is expanded as

    (1 - z conj(zeta))^{-4} = sum_k C(k+3, 3) z^k conj(zeta)^k,

which converges geometrically because |z| stays below the vertex radius of F.
The inner moments are accumulated once per (tile set, level, grid) and cached.
"""

from __future__ import annotations

import math
import time
from collections import OrderedDict
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import comb

from .differentials import (
    GridField,
    LaminatedField,
    automorphy_defect,
    common_level,
    evaluate_all,
    tile_sum,
)
from .errors import CodomainError, NotAutomorphicError, ParityError, ResourceLimitError, ValidationError
from .mobius import apply_arrays, derivative_arrays
from .quadrature import QuadratureGrid
from .subgroup_lattice import CosetTable, trivial_table
from .surface_group import SurfaceGroup, Word, build_genus_group, evaluate_word
from .tiles import TileSet, displacement_ball, word_ball_tiles

SERIES_TOL = 1e-16
MOMENT_CACHE_BYTES = 1 << 30
DIRECT_MAX_EVALS = 6e8


@dataclass(frozen=True)
class PairingConfig:
    tile_radius: float = 8.0
    quad_depth: int = 4
    tail_report: bool = True

    def __post_init__(self):
        if self.tile_radius < 0:
            raise ValidationError("tile_radius must be >= 0")
        if self.quad_depth < 1:
            raise ValidationError("quad_depth must be >= 1")

    def tiles(self, G: SurfaceGroup) -> TileSet:
        return displacement_ball(G, float(self.tile_radius))


def wp_kernel(z, zeta):
    return 1.0 / (1.0 - z * np.conj(zeta)) ** 4


def series_order(rmax: float, tol: float = SERIES_TOL) -> int:
    """Smallest K whose kernel-series tail bound at |z conj(zeta)| <= rmax is below tol."""
    k = 0
    while comb(k + 3, 3) * rmax**k / (1 - rmax) ** 1 > tol:
        k += 1
    return k


def _bergman_weights(K: int) -> np.ndarray:
    return comb(np.arange(K) + 3, 3)


# ---------------------------------------------------------------- moments

class _MomentCache:
    def __init__(self, budget: int = MOMENT_CACHE_BYTES):
        self.budget = budget
        self.store: OrderedDict = OrderedDict()

    def get(self, key):
        if key in self.store:
            self.store.move_to_end(key)
            return self.store[key]
        return None

    def put(self, key, value):
        self.store[key] = value
        while sum(v[0].nbytes for v in self.store.values()) > self.budget and len(self.store) > 1:
            self.store.popitem(last=False)

    def clear(self):
        self.store.clear()


_CACHE = _MomentCache()


def tile_classes(tiles: TileSet, level: CosetTable) -> np.ndarray:
    """Image of the basepoint under each tile (determines its class for a normal level)."""
    return tiles.coset_perms(level.letter_perms)[:, 0]


def coset_products(level: CosetTable) -> np.ndarray:
    """mult[c, q] = c . g for any g with 0 . g = q (normal level)."""
    u = level.transversal
    return np.array([[level.act(u[q], c) for q in range(level.degree)] for c in range(level.degree)])


def class_moments(tiles: TileSet, level: CosetTable, grid: QuadratureGrid, chunk: int = 128):
    """S[q, l, k] = sum over tiles g of class q of w_l conj(g'(z_l))^2 conj(g z_l)^k."""
    K = series_order(float(np.max(np.abs(grid.nodes))))
    key = (id(tiles), level.key, grid.genus, grid.depth, K)
    hit = _CACHE.get(key)
    if hit is not None and hit[1] is tiles:
        return hit[0]
    n, L = level.degree, grid.nodes.size
    nbytes = n * L * K * 16
    if nbytes > MOMENT_CACHE_BYTES:
        raise ResourceLimitError(f"moment table needs {nbytes / 2**20:.0f} MiB; lower quad_depth or index")
    cls = tile_classes(tiles, level)
    a, b = tiles.a, tiles.b
    z, w = grid.nodes, grid.weights
    S = np.zeros((n, L, K), dtype=complex)
    for lo in range(0, a.size, chunk):
        aa, bb = a[lo:lo + chunk, None], b[lo:lo + chunk, None]
        onehot = np.zeros((aa.shape[0], n))
        onehot[np.arange(aa.shape[0]), cls[lo:lo + chunk]] = 1.0
        zeta = np.conj(apply_arrays(aa, bb, z[None, :]))
        P = w[None, :] * np.conj(derivative_arrays(aa, bb, z[None, :])) ** 2
        for k in range(K):
            S[:, :, k] += onehot.T @ P
            P = P * zeta
    _CACHE.put(key, (S, tiles))
    return S


def _outer_series(grid: QuadratureGrid, K: int) -> np.ndarray:
    """V[i, k] = C(k+3, 3) z_i^k."""
    z = grid.nodes
    V = np.empty((z.size, K), dtype=complex)
    V[:, 0] = 1.0
    for k in range(1, K):
        V[:, k] = V[:, k - 1] * z
    return V * _bergman_weights(K)[None, :]


def inner_integrals(nu_values: np.ndarray, level: CosetTable, tiles: TileSet, grid: QuadratureGrid,
                    classwise: bool = True) -> np.ndarray:
    """I[c, i] = sum_{g, l} conj(phi_nu(c)(g z_l)) K(z_i, g z_l) |g'(z_l)|^2 w_l.

    With ``classwise`` the data of coset c . g is used on tile g (equivariant
    extension); otherwise every tile carries the data of coset c (tile sum).
    """
    S = class_moments(tiles, level, grid)
    K = S.shape[2]
    V = _outer_series(grid, K)
    n = level.degree
    conj_h = np.conj(nu_values)
    if classwise:
        mult = coset_products(level)
        M = np.einsum("cql,qlk->ck", conj_h[mult], S)
    else:
        M = np.einsum("cl,lk->ck", conj_h, S.sum(axis=0))
    return M @ V.T  # (n, L)


def _fsum_complex(terms) -> complex:
    terms = list(terms)
    return complex(math.fsum(t.real for t in terms), math.fsum(t.imag for t in terms))


def _outer(mu_values: np.ndarray, inner: np.ndarray, grid: QuadratureGrid) -> np.ndarray:
    """Per-coset outer integrals sum_i w_i h_c(z_i) I_c(z_i)."""
    prod = grid.weights[None, :] * mu_values * inner
    return np.array([_fsum_complex(row) for row in prod])


# ---------------------------------------------------------------- pairings

def wp_pair_renormalized(mu: LaminatedField, nu: LaminatedField, config: PairingConfig | None = None,
                         tiles: TileSet | None = None) -> complex:
    """Haar average over cosets of the single-tile outer integral against the truncated inner one."""
    config = config or PairingConfig()
    mu, nu = common_level(mu, nu)
    if not np.any(nu.values) or not np.any(mu.values):
        return 0j
    G = mu.group
    tiles = tiles if tiles is not None else config.tiles(G)
    inner = inner_integrals(nu.values, nu.level, tiles, nu.grid)
    per = _outer(mu.values, inner, mu.grid)
    return _fsum_complex(per) / mu.degree


def wp_pair_G(h_mu: GridField, h_nu: GridField, config: PairingConfig | None = None,
              tiles: TileSet | None = None, genus: int = 2) -> complex:
    """WP_G of the tile-sum (G-automorphic) fields built from data on F."""
    config = config or PairingConfig()
    G = build_genus_group(genus)
    tiles = tiles if tiles is not None else config.tiles(G)
    T = trivial_table(genus)
    inner = inner_integrals(h_nu.values[None, :], T, tiles, h_nu.grid)
    return _outer(h_mu.values[None, :], inner, h_mu.grid)[0]


def tail_bound(mu: LaminatedField, nu: LaminatedField, tiles: TileSet, outer_tiles: int = 1) -> float:
    """Bound on the part of the inner integral outside the covered tiles."""
    G = mu.group
    grid = mu.grid
    poly = G.fundamental_domain
    covered = 0.0
    a, b = tiles.a, tiles.b
    for lo in range(0, a.size, 256):
        d = derivative_arrays(a[lo:lo + 256, None], b[lo:lo + 256, None], grid.nodes[None, :])
        covered += float(np.sum(grid.weights[None, :] * np.abs(d) ** 2))
    uncovered = max(math.pi - covered, 0.0)
    kmax = (1.0 - poly.vertex_radius) ** -4
    return outer_tiles * poly.euclidean_area() * mu.sup_bound * nu.sup_bound * kmax * uncovered


def _direct_pairing(mu: LaminatedField, nu: LaminatedField, outer: list[tuple[complex, complex]],
                    inner_tiles: TileSet, coset_weights: np.ndarray) -> complex:
    """sum over outer tiles t and cosets c of coset_weights[c] *
    int_{t F} int_{t B} phi_mu(c)(z) conj(phi_nu(c)(zeta)) K(z, zeta), by direct kernel sums.

    Field values come from equivariant evaluation at the displaced points.
    """
    grid = mu.grid
    z, w = grid.nodes, grid.weights
    ia, ib = inner_tiles.a, inner_tiles.b
    evals = len(outer) * z.size * z.size * ia.size
    if evals > DIRECT_MAX_EVALS:
        raise ResourceLimitError(f"direct pairing needs {evals:.2e} kernel evaluations")
    active = np.nonzero(coset_weights)[0]
    total = []
    for ta, tb in outer:
        zo = apply_arrays(ta, tb, z)
        wo = w * np.abs(derivative_arrays(ta, tb, z)) ** 2
        ga, gb = _compose(ta, tb, ia, ib)
        zi = apply_arrays(ga[:, None], gb[:, None], z[None, :]).ravel()
        wi = (w[None, :] * np.abs(derivative_arrays(ga[:, None], gb[:, None], z[None, :])) ** 2).ravel()
        mu_o = evaluate_all(mu, zo)[active]
        src = (np.conj(evaluate_all(nu, zi)[active]) * wi[None, :]).T  # (inner, cosets)
        acc = np.zeros((zo.size, active.size), dtype=complex)
        for lo in range(0, zi.size, 8192):
            acc += wp_kernel(zo[:, None], zi[None, lo:lo + 8192]) @ src[lo:lo + 8192]
        for j, c in enumerate(active):
            total.append(coset_weights[c] * _fsum_complex(wo * mu_o[j] * acc[:, j]))
    return _fsum_complex(total)


def _compose(ta, tb, a, b):
    from .mobius import compose_arrays

    return compose_arrays(ta, tb, a, b)


def wp_pair_classical(mu: LaminatedField, nu: LaminatedField, T: CosetTable,
                      config: PairingConfig | None = None, tiles: TileSet | None = None,
                      check_tol: float = 1e-4) -> complex:
    """WP_{G'} of the basepoint differentials phi_mu(0), phi_nu(0), with G' the stabilizer in T.

    The outer domain is the union of t_i(F) over a transversal of T; on t_i(F)
    the inner integral runs over t_i(B).  Kernel sums are direct.
    """
    config = config or PairingConfig()
    mu, nu = common_level(mu, nu)
    if not np.any(nu.values) or not np.any(mu.values):
        return 0j
    G = mu.group
    for s in T.schreier_generators():
        for f in (mu, nu):
            if automorphy_defect(f, s, samples=16, cosets=[0]) > check_tol:
                raise NotAutomorphicError(f"field is not automorphic under {s}")
    tiles = tiles if tiles is not None else config.tiles(G)
    outer = []
    for u in T.transversal:
        m = evaluate_word(G, u)
        outer.append((m.a, m.b))
    weights = np.zeros(mu.degree)
    weights[0] = 1.0
    return _direct_pairing(mu, nu, outer, tiles, weights)


# ---------------------------------------------------------------- checks

@dataclass
class CheckResult:
    lhs: complex
    rhs: complex
    tail_bound: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def abs_err(self) -> float:
        return abs(self.lhs - self.rhs)

    @property
    def rel_err(self) -> float:
        return self.abs_err / max(abs(self.lhs), abs(self.rhs), 1e-300)


def bergman_check(psi, z: complex, config: PairingConfig | None = None, genus: int = 2):
    """Tile-sum quadrature of int (1-|zeta|^2)^2 psi(zeta) K(z, zeta) dA against (pi/3) psi(z).

    ``psi`` is a coefficient sequence (constant term first) of degree <= 6.
    """
    from .quadrature import build_grid

    config = config or PairingConfig()
    coeffs = np.asarray(psi, dtype=complex)
    if coeffs.size > 7:
        raise ValidationError("psi must have degree <= 6")
    if abs(z) > 0.9:
        raise ValidationError("|z| must be <= 0.9")
    G = build_genus_group(genus)
    grid = build_grid(genus, config.quad_depth)
    tiles = config.tiles(G)
    a, b = tiles.a, tiles.b
    zn, w = grid.nodes, grid.weights
    parts = []
    for lo in range(0, a.size, 128):
        aa, bb = a[lo:lo + 128, None], b[lo:lo + 128, None]
        zeta = apply_arrays(aa, bb, zn[None, :])
        jac = np.abs(derivative_arrays(aa, bb, zn[None, :])) ** 2
        f = (1 - np.abs(zeta) ** 2) ** 2 * np.polyval(coeffs[::-1], zeta) * wp_kernel(z, zeta)
        parts.append(np.sum(w[None, :] * jac * f, axis=1))
    numeric = _fsum_complex(np.concatenate(parts))
    reference = math.pi / 3 * complex(np.polyval(coeffs[::-1], z))
    return numeric, reference


def invariance_check(mu: LaminatedField, nu: LaminatedField, g: Word, config: PairingConfig | None = None):
    """(alpha(g)^* mu, alpha(g)^* nu) in transported form against (mu, nu).

    Changing variables by g moves the outer domain to g(F); with the inner
    truncation held on the origin-centred ball B this is the pairing of
    (mu, nu) with inner tiles g^{-1} B.  The two sides agree exactly on the
    whole disk, so their difference measures only the truncation.
    """
    config = config or PairingConfig()
    G = mu.group
    B = config.tiles(G)
    rhs = wp_pair_renormalized(mu, nu, config, B)
    if not len(g):
        return rhs, rhs, 0.0
    lhs = wp_pair_renormalized(mu, nu, config, B.translated(G, g.inverse()))
    return lhs, rhs, abs(lhs - rhs)


def tile_sum_check(mu: LaminatedField, nu: LaminatedField, r: int, config: PairingConfig | None = None):
    """Outer integral of the Haar-averaged pairing over the tiles of word_ball(r).

    Each outer tile g(F) is paired against its own translated inner set g(B).
    Returns (partial, n_tiles * pair, ratio).
    """
    config = config or PairingConfig()
    mu, nu = common_level(mu, nu)
    G = mu.group
    B = config.tiles(G)
    ball = word_ball_tiles(G, r)
    outer = list(zip(ball.a, ball.b))
    weights = np.full(mu.degree, 1.0 / mu.degree)
    partial = _direct_pairing(mu, nu, outer, B, weights)
    one = wp_pair_renormalized(mu, nu, config, B)
    full = len(ball) * one
    ratio = partial / full if full != 0 else complex("nan")
    return partial, full, ratio


# ---------------------------------------------------------------- coset-function points

@dataclass(frozen=True, eq=False)
class CosetFunctionPoint:
    """Finite stand-in for a continuous map from cosets to G-automorphic differentials."""

    level: CosetTable
    values: np.ndarray  # (n, n_nodes): data on F, assembled by tile sum
    grid: QuadratureGrid

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.level.degree, self.grid.nodes.size):
            raise CodomainError("per-coset data has the wrong shape")
        if not np.all(np.isfinite(vals)):
            raise CodomainError("per-coset data is not bounded")
        object.__setattr__(self, "values", vals)

    @property
    def per_coset(self) -> dict[int, GridField]:
        return {c: GridField(self.grid, self.values[c]) for c in range(self.level.degree)}

    def assembled(self, c: int) -> LaminatedField:
        G = build_genus_group(self.level.genus)
        return tile_sum(G, GridField(self.grid, self.values[c]), trivial_table(self.level.genus))

    def check_codomain(self, samples: int = 16, tol: float = 1e-6) -> None:
        G = build_genus_group(self.level.genus)
        for c in range(self.level.degree):
            f = self.assembled(c)
            for i in range(G.n_generators):
                if automorphy_defect(f, Word((2 * i,)), samples) > tol:
                    raise CodomainError(f"coset {c} value is not G-automorphic")


def theorem_a_map(xi: CosetFunctionPoint, check: bool = True) -> LaminatedField:
    """f(xi): the laminated field whose restriction to F on coset c is xi's data."""
    if check:
        xi.check_codomain()
    return LaminatedField(xi.level, xi.values.copy(), xi.grid)


def theorem_a_inverse(mu: LaminatedField) -> CosetFunctionPoint:
    """Restrict each coset's extended field to F."""
    return CosetFunctionPoint(mu.level, mu.values.copy(), mu.grid)


def cfp_terms(xi: CosetFunctionPoint, zeta: CosetFunctionPoint, config: PairingConfig | None = None) -> list[complex]:
    """Per-coset WP_G(xi(c), zeta(c)), each computed from that coset's data alone."""
    config = config or PairingConfig()
    if xi.level != zeta.level:
        raise ValidationError("points live on different levels")
    G = build_genus_group(xi.level.genus)
    tiles = config.tiles(G)
    return [wp_pair_G(GridField(xi.grid, xi.values[c]), GridField(zeta.grid, zeta.values[c]), config, tiles,
                      xi.level.genus) for c in range(xi.level.degree)]


def _sorted_mean(terms: list[complex]) -> complex:
    terms = sorted(terms, key=lambda t: (t.real, t.imag))
    return _fsum_complex(terms) / len(terms)


def cfp_pair(xi: CosetFunctionPoint, zeta: CosetFunctionPoint, config: PairingConfig | None = None) -> complex:
    """Haar-averaged WP_G of the values."""
    return _sorted_mean(cfp_terms(xi, zeta, config))


def isometry_check(xi: CosetFunctionPoint, zeta: CosetFunctionPoint, config: PairingConfig | None = None):
    """(cfp_pair(xi, zeta), renormalized pairing of f(xi), f(zeta))."""
    config = config or PairingConfig()
    lhs = cfp_pair(xi, zeta, config)
    rhs = wp_pair_renormalized(theorem_a_map(xi), theorem_a_map(zeta), config)
    return lhs, rhs


def permutation_parity(sigma) -> int:
    """+1 for even, -1 for odd permutations given as a list of images."""
    sigma = list(sigma)
    seen = [False] * len(sigma)
    parity = 1
    for i in range(len(sigma)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = sigma[j]
            length += 1
        if length % 2 == 0:
            parity = -parity
    return parity


def alt_action_isometry(xi: CosetFunctionPoint, sigma, config: PairingConfig | None = None):
    """Pairing of (xi, xi) and of (xi o sigma, xi o sigma); sigma must be even."""
    sigma = [int(s) for s in sigma]
    n = xi.level.degree
    if sorted(sigma) != list(range(n)):
        raise ValidationError(f"sigma is not a permutation of {n} cosets")
    if permutation_parity(sigma) < 0:
        raise ParityError("odd permutation: only the alternating group acts isometrically here")
    moved = CosetFunctionPoint(xi.level, xi.values[sigma], xi.grid)
    return cfp_pair(xi, xi, config), cfp_pair(moved, moved, config)


def report(name: str, res: CheckResult, config: dict, started: float) -> dict:
    return {
        "identity": name,
        "lhs": [res.lhs.real, res.lhs.imag],
        "rhs": [res.rhs.real, res.rhs.imag],
        "abs_err": res.abs_err,
        "rel_err": res.rel_err,
        "tail_bound": res.tail_bound,
        "config": config,
        "wall_time": time.perf_counter() - started,
        **({"extra": res.extra} if res.extra else {}),
    }


def config_dict(config: PairingConfig) -> dict:
    return asdict(config)
