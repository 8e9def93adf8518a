import math

import numpy as np
import pytest

from lamiwp.quadrature import build_grid


@pytest.mark.parametrize("depth", [2, 3, 4])
def test_weights_sum_to_area(G2, depth):
    grid = build_grid(2, depth)
    assert grid.nodes.size == 8 * 4**depth * 3
    assert np.all(grid.weights > 0)
    if depth == 4:
        assert abs(grid.euclidean_area() - G2.fundamental_domain.euclidean_area()) < 1e-6
    assert G2.fundamental_domain.contains(grid.nodes).all()


def test_area_converges(G2):
    exact = G2.fundamental_domain.euclidean_area()
    errs = [abs(build_grid(2, d).euclidean_area() - exact) for d in (1, 2, 3, 4)]
    assert all(errs[i + 1] < errs[i] / 3 for i in range(3))


def test_hyperbolic_area_by_quadrature(grid4):
    val = np.sum(grid4.weights * 4.0 / (1 - np.abs(grid4.nodes) ** 2) ** 2)
    assert val == pytest.approx(4 * math.pi, rel=1e-5)


def test_polynomial_moments(grid4):
    """Integrals of |z|^2 over F against the radial integral of the polygon boundary."""
    from scipy import integrate

    from lamiwp.surface_group import build_genus_group

    P = build_genus_group(2).fundamental_domain
    ref, _ = integrate.quad(lambda t: float(P.boundary_radius(t)) ** 4 / 4, 0, 2 * math.pi, limit=200,
                            points=list((P.start_angle + 2 * math.pi * np.arange(9) / 8) % (2 * math.pi)))
    num = np.sum(grid4.weights * np.abs(grid4.nodes) ** 2)
    assert num == pytest.approx(ref, rel=1e-6)


def test_interpolation_exact_at_nodes(grid2, rng):
    vals = rng.standard_normal(grid2.nodes.size) + 1j * rng.standard_normal(grid2.nodes.size)
    assert np.allclose(grid2.interpolate(vals, grid2.nodes), vals, atol=1e-9)


def test_interpolation_reproduces_constants_and_sup(grid2, rng):
    ones = np.ones(grid2.nodes.size)
    z = grid2.nodes[rng.integers(0, grid2.nodes.size, 200)] * rng.uniform(0.5, 1.0, 200)
    assert np.allclose(grid2.interpolate(ones, z), 1.0)
    vals = np.exp(2j * np.pi * rng.uniform(size=grid2.nodes.size))
    assert np.max(np.abs(grid2.interpolate(vals, z))) <= 1.0 + 1e-12


def test_reference_coords_invert_map(grid2, rng):
    k = rng.integers(0, 8, 100)
    u = rng.uniform(0, 1, 100)
    v = rng.uniform(0, 1, 100) * (1 - u)
    z = grid2.map(k, u, v)
    k2, u2, v2 = grid2.reference_coords(z)
    assert np.all(k2 == k)
    assert np.allclose(u2, u, atol=1e-9) and np.allclose(v2, v, atol=1e-9)
