import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lamiwp.errors import InvalidGenusError, ReductionFailureError, ResourceLimitError, WordParseError
from lamiwp.mobius import MobiusTransform, apply, hyperbolic_distance
from lamiwp.surface_group import (Word, build_genus_group, evaluate_word, parse_word, print_word, reduce_points,
                                  reduce_to_F, relator_word, vertex_cycle_ok, word_ball)
from lamiwp.tiles import displacement_ball, word_ball_tiles

letters = st.lists(st.integers(0, 7), max_size=10)


def test_invalid_genus():
    with pytest.raises(InvalidGenusError):
        build_genus_group(1)


def test_polygon_geometry(G2):
    P = G2.fundamental_domain
    # distance to side midpoints and to vertices of the regular octagon with angles pi/4
    assert math.cosh(P.inradius) == pytest.approx(1 / math.tan(math.pi / 8), abs=1e-12)
    assert P.inradius == pytest.approx(1.528571, abs=1e-6)
    assert math.cosh(P.circumradius) == pytest.approx(1 / math.tan(math.pi / 8) ** 2, abs=1e-12)
    assert np.allclose(np.abs(P.vertices), P.vertex_radius, atol=1e-12)
    assert P.hyperbolic_area() == pytest.approx(4 * math.pi, abs=1e-9)


@pytest.mark.parametrize("g", [2, 3])
def test_relator_and_side_pairing(g):
    G = build_genus_group(g)
    assert G.relation_residual() < 1e-9
    assert evaluate_word(G, relator_word(g)).equals(MobiusTransform.identity(), 1e-9)
    assert vertex_cycle_ok(G)
    assert G.fundamental_domain.hyperbolic_area() == pytest.approx(2 * math.pi * (2 * g - 2), abs=1e-8)


def test_parse_examples():
    assert len(parse_word("a1*A1")) == 0
    assert parse_word("[a1,b1]") == parse_word("a1*b1*A1*B1")
    assert len(parse_word("[a1,b1]")) == 4
    assert parse_word("a1^2*b2").letters == ((0, 1), (0, 1), (3, 1))
    assert parse_word("(a1*b1)^-1") == parse_word("B1*A1")
    assert parse_word("[a1,b1][a2,b2]") == relator_word(2)
    assert print_word(Word()) == "e"


@pytest.mark.parametrize("text,pos", [("a3", 0), ("a1*(b1", 6), ("a1^x", 3), ("[a1 b1]", 6)])
def test_parse_errors(text, pos):
    with pytest.raises(WordParseError) as exc:
        parse_word(text, genus=2)
    assert exc.value.position == pos


@settings(max_examples=200, deadline=None)
@given(letters)
def test_print_parse_round_trip(codes):
    w = Word(tuple(codes))
    assert parse_word(print_word(w)) == w
    assert all(a != b ^ 1 for a, b in zip(w.codes, w.codes[1:]))


@settings(max_examples=100, deadline=None)
@given(letters)
def test_word_times_inverse(codes):
    G = build_genus_group(2)
    w = Word(tuple(codes))
    assert evaluate_word(G, w * w.inverse()).equals(MobiusTransform.identity(), 1e-10)
    m = evaluate_word(G, w)
    prod = m @ evaluate_word(G, w.inverse())
    # floating-point product: roundoff grows like |a|^2
    assert prod.equals(MobiusTransform.identity(), 1e-13 * abs(m.a) ** 2 + 1e-12)


def test_word_ball_sizes(G2):
    assert [len(word_ball(G2, r)) for r in range(3)] == [1, 9, 65]


def test_word_ball_inverse_closed(G2):
    ball = word_ball(G2, 2)
    ms = [m for _, m in ball]
    for _, m in ball:
        assert any(m.inverse().equals(x) for x in ms)


def test_word_ball_limit(G2):
    with pytest.raises(ResourceLimitError):
        word_ball_tiles(G2, 13)


def test_reduce_examples(G2):
    w, z = reduce_to_F(G2, 0j)
    assert len(w) == 0 and z == 0
    a1 = evaluate_word(G2, parse_word("a1"))
    w, z = reduce_to_F(G2, apply(a1, 0))
    assert w == parse_word("A1") and abs(z) < 1e-12


def test_reduce_random_points(G2, rng):
    r = 0.95 * np.sqrt(rng.uniform(size=500))
    z = r * np.exp(2j * np.pi * rng.uniform(size=500))
    red = reduce_points(G2, z)
    assert G2.fundamental_domain.contains(red.reduced, tol=1e-9).all()
    for p in range(0, 500, 25):
        w = red.word(p)
        assert len(w) <= 30
        assert abs(apply(evaluate_word(G2, w), z[p]) - red.reduced[p]) < 1e-9


def test_reduce_well_defined_on_orbit(G2, rng):
    z0 = 0.3 * np.exp(2j * np.pi * rng.uniform(size=20)) * rng.uniform(size=20)
    for _, m in word_ball(G2, 3):
        red = reduce_points(G2, apply(m, z0))
        assert np.max(np.abs(red.reduced - z0)) < 1e-8


def test_reduce_descent_decreases_distance(G2):
    z = 0.93 * np.exp(0.4j)
    w, _ = reduce_to_F(G2, z)
    cur = z
    last = hyperbolic_distance(cur, 0)
    for code in reversed(w.codes):
        cur = apply(G2.letter_transforms[code], cur)
        d = hyperbolic_distance(cur, 0)
        assert d < last
        last = d


def test_reduce_near_boundary_fails(G2):
    with pytest.raises(ReductionFailureError):
        reduce_to_F(G2, 1 - 1e-12)


def test_tessellation_disjoint(G2, rng):
    """Interior points of distinct tiles reduce to distinct tile words."""
    z = 0.5 * np.exp(2j * np.pi * rng.uniform(size=30)) * rng.uniform(size=30)
    ball = word_ball(G2, 2)
    for p in z:
        words = set()
        for _, m in ball:
            w, _ = reduce_to_F(G2, apply(m, p))
            words.add(w)
        assert len(words) == len(ball)


def test_displacement_ball_sizes_and_area(G2):
    sizes = [len(displacement_ball(G2, R)) for R in (4.0, 6.0, 8.0)]
    assert sizes == sorted(sizes) and sizes[0] == 9
    from lamiwp.quadrature import build_grid
    from lamiwp.mobius import derivative_arrays

    grid = build_grid(2, 3)
    areas = []
    for R in (4.0, 6.0, 8.0):
        B = displacement_ball(G2, R)
        d = derivative_arrays(B.a[:, None], B.b[:, None], grid.nodes[None, :])
        areas.append(float(np.sum(grid.weights * np.abs(d) ** 2)))
    assert areas == sorted(areas) and areas[-1] < math.pi
