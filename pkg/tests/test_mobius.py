import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lamiwp.errors import NumericDegeneracyError, ValidationError
from lamiwp.mobius import (MobiusTransform, apply, compose, derivative, hyperbolic_distance,
                           projective_distance)

angles = st.floats(-math.pi, math.pi, allow_nan=False)
dists = st.floats(0.0, 4.0, allow_nan=False)
radii = st.floats(0.0, 0.95, allow_nan=False)


@st.composite
def transforms(draw):
    m = MobiusTransform.rotation(draw(angles))
    m = compose(MobiusTransform.translation(draw(dists)), m)
    return compose(MobiusTransform.rotation(draw(angles)), m)


@st.composite
def disk_points(draw):
    return draw(radii) * cmath.exp(1j * draw(angles))


def test_identity_and_examples():
    e = MobiusTransform.identity()
    assert apply(e, 0.3 + 0.1j) == 0.3 + 0.1j
    assert abs(apply(MobiusTransform(cmath.exp(1j * math.pi / 4), 0), 0.5) - 0.5j) < 1e-15
    m = MobiusTransform(math.cosh(0.5), math.sinh(0.5))
    assert apply(m, 0) == pytest.approx(0.462117, abs=1e-6)
    assert derivative(m, 0) == pytest.approx(0.786448, abs=1e-6)
    assert derivative(MobiusTransform.rotation(0.7), 0) == pytest.approx(cmath.exp(0.7j))


def test_rotation_subgroup():
    r = compose(MobiusTransform.rotation(math.pi / 2), MobiusTransform.rotation(math.pi / 2))
    assert r.equals(MobiusTransform.rotation(math.pi))


def test_bad_determinant_rejected():
    with pytest.raises(ValidationError):
        MobiusTransform(1.0, 0.5)


def test_degenerate_denominator():
    m = MobiusTransform.translation(1.0)
    object.__setattr__(m, "a", 0j)
    object.__setattr__(m, "b", 0j)
    with pytest.raises(NumericDegeneracyError):
        apply(m, 0.0)


def test_json_round_trip():
    m = compose(MobiusTransform.translation(1.3), MobiusTransform.rotation(0.4))
    assert MobiusTransform.from_json(m.to_json()).equals(m, 1e-15)


@settings(max_examples=300, deadline=None)
@given(transforms(), transforms(), disk_points())
def test_group_law(m1, m2, z):
    assert abs(apply(compose(m1, m2), z) - apply(m1, apply(m2, z))) < 1e-10


@settings(max_examples=300, deadline=None)
@given(transforms(), transforms(), disk_points())
def test_chain_rule(m1, m2, z):
    lhs = derivative(compose(m1, m2), z)
    rhs = derivative(m1, apply(m2, z)) * derivative(m2, z)
    assert abs(lhs - rhs) < 1e-10 * max(1.0, abs(rhs))


@settings(max_examples=200, deadline=None)
@given(transforms(), transforms())
def test_determinant_preserved(m1, m2):
    assert abs(compose(m1, m2).det() - 1) < 1e-12


@settings(max_examples=200, deadline=None)
@given(transforms(), disk_points())
def test_inverse_and_disk_preservation(m, z):
    assert compose(m, m.inverse()).equals(MobiusTransform.identity(), 1e-12)
    w = apply(m, z)
    assert abs(w) < 1
    assert hyperbolic_distance(w, apply(m, 0)) == pytest.approx(hyperbolic_distance(z, 0), abs=1e-8)


@settings(max_examples=100, deadline=None)
@given(transforms())
def test_projective_equality_ignores_sign(m):
    neg = MobiusTransform(-m.a, -m.b)
    assert projective_distance(m, neg) < 1e-15
    assert m.equals(neg)


def test_boundary_maps_to_boundary():
    m = compose(MobiusTransform.translation(2.0), MobiusTransform.rotation(1.0))
    z = np.exp(1j * np.linspace(0, 2 * np.pi, 50))
    assert np.allclose(np.abs(apply(m, z)), 1.0, atol=1e-12)
