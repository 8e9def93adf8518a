import math

import numpy as np
import pytest

from lamiwp.config import make_rng
from lamiwp.differentials import GridField, LaminatedField, random_coset_data, random_field, tile_sum
from lamiwp.errors import CodomainError, NotAutomorphicError, ParityError, ValidationError
from lamiwp.subgroup_lattice import trivial_table
from lamiwp.surface_group import Word, parse_word
from lamiwp.wp_metric import (CosetFunctionPoint, PairingConfig, alt_action_isometry, bergman_check, cfp_terms,
                              invariance_check, permutation_parity, series_order, tail_bound, theorem_a_inverse,
                              theorem_a_map, tile_sum_check, wp_kernel, wp_pair_classical, wp_pair_G,
                              wp_pair_renormalized)

SMALL = PairingConfig(tile_radius=4.0, quad_depth=2)


def test_kernel_examples(rng):
    z = 0.5 * rng.uniform(size=5) * np.exp(2j * np.pi * rng.uniform(size=5))
    w = 0.5 * rng.uniform(size=5) * np.exp(2j * np.pi * rng.uniform(size=5))
    assert np.allclose(wp_kernel(0, w), 1)
    assert np.allclose(wp_kernel(z, z), (1 - np.abs(z) ** 2) ** -4)
    assert wp_kernel(0.5, 0.5) == pytest.approx(3.160494, abs=1e-6)
    assert np.allclose(wp_kernel(z, w), np.conj(wp_kernel(w, z)))


def test_series_order_bound():
    K = series_order(0.84)
    tail = sum(math.comb(k + 3, 3) * 0.84**k for k in range(K, K + 4000))
    assert tail < 1e-14


def test_config_validation():
    with pytest.raises(ValidationError):
        PairingConfig(tile_radius=-1)
    with pytest.raises(ValidationError):
        PairingConfig(quad_depth=0)


@pytest.mark.parametrize("psi,z", [([1], 0.0), ([0, 0, 1], 0.3), ([0, 1], 0.5j)])
def test_bergman_small(psi, z):
    num, ref = bergman_check(psi, z, PairingConfig(tile_radius=6.0, quad_depth=3))
    assert abs(num - ref) <= 1e-2 * abs(ref) + 1e-6


def test_bergman_rejects_bad_input():
    with pytest.raises(ValidationError):
        bergman_check([0] * 8, 0)
    with pytest.raises(ValidationError):
        bergman_check([1], 0.95)


@pytest.fixture(scope="module")
def pair2(T2):
    return random_field(T2, seed=1, depth=2), random_field(T2, seed=2, depth=2)


def test_zero_and_symmetry(pair2):
    mu, nu = pair2
    assert wp_pair_renormalized(mu, nu.scale(0), SMALL) == 0
    assert wp_pair_classical(mu, nu.scale(0), mu.level, SMALL) == 0
    a = wp_pair_renormalized(mu, nu, SMALL)
    b = wp_pair_renormalized(nu, mu, SMALL)
    assert abs(a - np.conj(b)) < 1e-3 * abs(a)


def test_sesquilinear(pair2):
    mu, nu = pair2
    lhs = wp_pair_renormalized(mu.scale(2 - 1j), nu.scale(0.5j), SMALL)
    rhs = (2 - 1j) * np.conj(0.5j) * wp_pair_renormalized(mu, nu, SMALL)
    assert abs(lhs - rhs) < 1e-10 * abs(rhs)
    s = wp_pair_renormalized(mu + nu, nu, SMALL)
    assert abs(s - wp_pair_renormalized(mu, nu, SMALL) - wp_pair_renormalized(nu, nu, SMALL)) < 1e-10 * abs(s)


def test_positivity(T2):
    mu = random_field(T2, seed=9, depth=2)
    assert wp_pair_renormalized(mu, mu, PairingConfig(6.0, 2)).real > 0


def test_level_G_equals_classical(G2, grid2, rng):
    h1 = GridField(grid2, random_coset_data(grid2, 1, rng)[0])
    h2 = GridField(grid2, random_coset_data(grid2, 1, rng)[0])
    T = trivial_table(2)
    mu, nu = tile_sum(G2, h1, T), tile_sum(G2, h2, T)
    a = wp_pair_renormalized(mu, nu, SMALL)
    b = wp_pair_classical(mu, nu, T, SMALL)
    assert abs(a - b) < 1e-10 * abs(a)
    assert abs(wp_pair_G(h1, h2, SMALL) - a) < 1e-12 * abs(a)


@pytest.mark.parametrize("which", ["T2", "T3", "T3n"])
def test_scaling_small(which, request):
    T = request.getfixturevalue(which)
    mu, nu = random_field(T, seed=11, depth=2), random_field(T, seed=12, depth=2)
    a = wp_pair_renormalized(mu, nu, SMALL)
    b = wp_pair_classical(mu, nu, T, SMALL) / T.degree
    assert abs(a - b) < 1e-6 * abs(a)


def test_classical_requires_automorphy(T2, T3):
    mu = random_field(T3, seed=0, depth=2)
    with pytest.raises(NotAutomorphicError):
        wp_pair_classical(mu, mu, T2, SMALL)


def test_invariance_identity_is_exact(pair2):
    lhs, rhs, d = invariance_check(*pair2, Word(), SMALL)
    assert d == 0 and lhs == rhs


def test_tile_sum_small(T3):
    mu, nu = random_field(T3, seed=1, depth=2), random_field(T3, seed=2, depth=2)
    part, full, ratio = tile_sum_check(mu, nu, 1, SMALL)
    assert abs(ratio - 1) < 1e-8


def test_tail_bound_shrinks(pair2, G2):
    mu, nu = pair2
    b = [tail_bound(mu, nu, PairingConfig(R, 2).tiles(G2)) for R in (4.0, 6.0, 8.0)]
    assert b[0] > b[1] > b[2] > 0


# ------------------------------------------------------------ coset-function points

@pytest.fixture(scope="module")
def cfp(T3n, grid2):
    rng = make_rng(3)
    return (CosetFunctionPoint(T3n, random_coset_data(grid2, 3, rng), grid2),
            CosetFunctionPoint(T3n, random_coset_data(grid2, 3, rng), grid2))


def test_cfp_validation(T3n, grid2):
    with pytest.raises(CodomainError):
        CosetFunctionPoint(T3n, np.zeros((2, grid2.nodes.size)), grid2)
    bad = np.zeros((3, grid2.nodes.size), dtype=complex)
    bad[0, 0] = np.inf
    with pytest.raises(CodomainError):
        CosetFunctionPoint(T3n, bad, grid2)


def test_round_trip(cfp):
    xi, _ = cfp
    back = theorem_a_inverse(theorem_a_map(xi))
    assert np.max(np.abs(back.values - xi.values)) <= 1e-10


def test_zero_and_constant_points(G2, grid2, T3n):
    zero = LaminatedField(T3n, np.zeros((3, grid2.nodes.size)), grid2)
    assert not np.any(theorem_a_inverse(zero).values)
    h = random_coset_data(grid2, 1, make_rng(0))[0]
    const = LaminatedField(T3n, np.tile(h, (3, 1)), grid2)
    pt = theorem_a_inverse(const)
    assert all(np.array_equal(pt.values[c], h) for c in range(3))


def test_modulus_bound(cfp, G2, rng):
    """sup over the disk of the assembled difference is bounded by the sup on F."""
    xi, _ = cfp
    from lamiwp.differentials import evaluate

    z = 0.95 * np.sqrt(rng.uniform(size=400)) * np.exp(2j * np.pi * rng.uniform(size=400))
    for _ in range(100):
        s, t = rng.integers(0, 3, 2)
        lhs = np.max(np.abs(evaluate(xi.assembled(s), 0, z) - evaluate(xi.assembled(t), 0, z)))
        assert lhs <= np.max(np.abs(xi.values[s] - xi.values[t])) + 1e-12


def test_alt_action(cfp, T3n):
    xi, _ = cfp
    a, b = alt_action_isometry(xi, [1, 2, 0], SMALL)
    assert a == b
    a, b = alt_action_isometry(xi, [0, 1, 2], SMALL)
    assert a == b
    with pytest.raises(ParityError):
        alt_action_isometry(xi, [1, 0, 2], SMALL)
    with pytest.raises(ValidationError):
        alt_action_isometry(xi, [0, 0, 1], SMALL)


def test_parity():
    assert permutation_parity([0, 1, 2]) == 1
    assert permutation_parity([1, 2, 0]) == 1
    assert permutation_parity([1, 0, 2]) == -1
    assert permutation_parity([1, 0, 3, 2]) == 1


def test_cfp_terms_are_per_coset_wp_G(cfp):
    xi, zeta = cfp
    terms = cfp_terms(xi, zeta, SMALL)
    for c, t in enumerate(terms):
        ref = wp_pair_G(GridField(xi.grid, xi.values[c]), GridField(xi.grid, zeta.values[c]), SMALL)
        assert t == ref
