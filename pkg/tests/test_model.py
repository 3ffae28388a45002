import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from core.coefficients import CoefficientSet
from core.errors import DegenerateDenominator, NonFiniteState
from core.model import Derivative, State, bd_response, rhs, vector_field
from tests.oracles import model_rhs
from tests.reference_sets import INVARIANCE_CONSTANTS

positive = st.floats(min_value=1e-6, max_value=1e3, allow_nan=False, allow_infinity=False)
INVARIANCE = CoefficientSet.from_constants(**INVARIANCE_CONSTANTS)


def test_all_ones_at_unit_state(all_ones_set):
    d = vector_field(all_ones_set, 0.0, State(1.0, 1.0, 1.0))
    assert d.dx1 == pytest.approx(-4 / 3)
    assert d.dx2 == pytest.approx(-4 / 3)
    assert d.dx3 == pytest.approx(-1 / 3)


def test_decoupled_equilibrium_is_stationary(logistic_set):
    d = vector_field(logistic_set, 5.0, State(1.0, 1.0, 7.0))
    assert d == Derivative(0.0, 0.0, 0.0)


def test_boundary_faces_are_invariant(invariance_set):
    d = vector_field(invariance_set, 0.0, State(0.0, 3.0, 0.0))
    assert d.dx1 == 0.0
    assert d.dx3 == 0.0
    assert d.dx2 == pytest.approx(3.0 * (10.0 - 3.0))


@given(x1=positive, x2=positive, x3=positive)
def test_vector_field_matches_reference(x1, x2, x3):
    d = vector_field(INVARIANCE, 0.0, State(x1, x2, x3))
    expected = model_rhs(INVARIANCE_CONSTANTS, (x1, x2, x3))
    np.testing.assert_allclose(d.as_array(), expected, rtol=1e-12, atol=1e-9)


def test_bd_response():
    assert bd_response(2.0, 3.0, 4.0, alpha=1.0, beta=1.0, gamma=1.0) == pytest.approx(2.0 * 3.0 * 4.0 / 8.0)


def test_zero_denominator_is_degenerate():
    coeffs = CoefficientSet.from_constants(1.0, alpha=0.0, beta=0.0, gamma=0.0)
    with pytest.raises(DegenerateDenominator):
        vector_field(coeffs, 0.0, State(1.0, 1.0, 1.0))
    with pytest.raises(DegenerateDenominator):
        bd_response(1.0, 1.0, 1.0, alpha=0.0, beta=0.0, gamma=0.0)


def test_nonfinite_state_rejected(all_ones_set):
    with pytest.raises(NonFiniteState):
        State(math.nan, 1.0, 1.0)
    with pytest.raises(NonFiniteState):
        rhs(all_ones_set, 0.0, np.array([1.0, math.inf, 1.0]))


def test_state_helpers():
    s = State.from_array(np.array([1.0, 2.0, 3.0]))
    assert s == State(1.0, 2.0, 3.0)
    np.testing.assert_array_equal(s.as_array(), [1.0, 2.0, 3.0])
    assert s.is_interior
    assert not State(1.0, 0.0, 3.0).is_interior


@given(x1=st.floats(1e-3, 1e2), x2=st.floats(1e-3, 1e2), x3=st.floats(1e-3, 1e2))
def test_vector_field_is_continuous(x1, x2, x3):
    s = np.array([x1, x2, x3])
    base = rhs(INVARIANCE, 0.0, s)
    for j in range(3):
        h = 1e-5 * (1.0 + s[j])
        quotients = []
        for step in (h, h / 10):
            shifted = s.copy()
            shifted[j] += step
            quotients.append((rhs(INVARIANCE, 0.0, shifted) - base) / step)
        np.testing.assert_allclose(quotients[1], quotients[0], rtol=1e-3, atol=1e-2)
