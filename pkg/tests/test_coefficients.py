import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from core.coefficients import (
    COEFFICIENT_NAMES,
    GRID_ESTIMATE,
    CoefficientSet,
    Constant,
    PiecewiseLinear,
    Sinusoid,
    supremum_over_horizon,
    time_function_from_dict,
)
from core.errors import InvalidCoefficient, NonFiniteExpression, ParseError, ValidationError

finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False)


def test_constant_evaluates_scalar_and_array():
    c = Constant(2.5)
    assert c.evaluate(3.0) == 2.5
    np.testing.assert_array_equal(c.evaluate(np.array([0.0, 1.0, 2.0])), [2.5, 2.5, 2.5])
    assert c.upper_bound() == c.lower_bound() == 2.5
    assert c.is_constant


@pytest.mark.parametrize("value", [0.0, -1.0])
def test_nonpositive_lower_bound_rejected(value):
    c = Constant(value)
    with pytest.raises(InvalidCoefficient):
        c.lower_bound()
    with pytest.raises(InvalidCoefficient):
        c.upper_bound()


def test_constant_rejects_nonfinite():
    with pytest.raises(InvalidCoefficient):
        Constant(math.inf)


def test_sinusoid_bounds():
    s = Sinusoid(mean=2.0, amplitude=-0.5, omega=3.0, phase=0.2)
    assert s.lower_bound() == 1.5
    assert s.upper_bound() == 2.5
    assert not s.is_constant


def test_sinusoid_amplitude_reaching_zero_is_invalid():
    with pytest.raises(InvalidCoefficient):
        Sinusoid(mean=1.0, amplitude=1.0, omega=1.0).lower_bound()


@given(t=finite, mean=st.floats(1.0, 10.0), amp=st.floats(-0.9, 0.9), omega=st.floats(0.0, 5.0))
def test_sinusoid_values_within_bounds(t, mean, amp, omega):
    s = Sinusoid(mean, amp, omega)
    value = s.evaluate(t)
    assert s.lower_bound() - 1e-12 <= value <= s.upper_bound() + 1e-12


def test_sinusoid_integral_over_full_period():
    s = Sinusoid(mean=3.0, amplitude=1.0, omega=2.0, phase=0.7)
    period = math.pi
    assert s.integral(1.0, 1.0 + period) == pytest.approx(3.0 * period, rel=1e-12)


def test_sinusoid_integral_with_zero_frequency():
    s = Sinusoid(mean=1.0, amplitude=0.5, omega=0.0, phase=math.pi / 2)
    assert s.integral(0.0, 4.0) == pytest.approx(6.0)


def test_piecewise_hold_extension():
    f = PiecewiseLinear(((0.0, 1.0), (2.0, 3.0)))
    assert f.evaluate(-5.0) == 1.0
    assert f.evaluate(1.0) == pytest.approx(2.0)
    assert f.evaluate(10.0) == 3.0
    assert (f.lower_bound(), f.upper_bound()) == (1.0, 3.0)


def test_piecewise_periodic_extension():
    f = PiecewiseLinear(((0.0, 1.0), (1.0, 2.0), (2.0, 1.0)), extension="periodic")
    np.testing.assert_allclose(f.evaluate(np.array([0.5, 2.5, 4.5, -1.5])), [1.5, 1.5, 1.5, 1.5])


def test_piecewise_integral_is_exact_for_linear_segments():
    f = PiecewiseLinear(((0.0, 0.0), (2.0, 2.0)))
    assert f.integral(0.0, 2.0) == pytest.approx(2.0, rel=1e-12)
    assert f.integral(1.0, 1.0) == 0.0


@pytest.mark.parametrize(
    "knots, extension",
    [
        ((), "hold"),
        (((1.0, 1.0), (0.0, 2.0)), "hold"),
        (((0.0, 1.0),), "periodic"),
        (((0.0, 1.0), (1.0, 2.0)), "mirror"),
    ],
)
def test_piecewise_rejects_malformed_knots(knots, extension):
    with pytest.raises(InvalidCoefficient):
        PiecewiseLinear(knots, extension)


def test_supremum_of_constant_is_exact():
    estimate = supremum_over_horizon(lambda t: 4.0, 0.0, 10.0, exact=True)
    assert estimate.value == 4.0
    assert estimate.exact
    assert estimate.caveats == ()


def test_supremum_of_sinusoid_is_grid_estimate():
    s = Sinusoid(1.0, 0.5, 1.0)
    estimate = supremum_over_horizon(s.evaluate, 0.0, 20.0)
    assert GRID_ESTIMATE in estimate.caveats
    assert not estimate.exact
    assert estimate.value <= 1.5
    assert estimate.value == pytest.approx(1.5, abs=1e-6)


def test_supremum_includes_horizon_end():
    estimate = supremum_over_horizon(lambda t: t, 0.0, 1.0, grid_step=0.3)
    assert estimate.value == pytest.approx(1.0)


def test_supremum_rejects_nonfinite_values():
    with pytest.raises(NonFiniteExpression):
        supremum_over_horizon(lambda t: np.where(t > 5.0, np.nan, 0.0), 0.0, 10.0, grid_step=1.0)


def test_coefficient_set_validate_names_the_member():
    coeffs = CoefficientSet.from_constants(1.0, d2=0.0)
    with pytest.raises(InvalidCoefficient) as excinfo:
        coeffs.validate()
    assert excinfo.value.name == "d2"


def test_coefficient_set_helpers():
    coeffs = CoefficientSet.from_constants(2.0, a3=Sinusoid(1.0, 0.1, 1.0))
    assert not coeffs.all_constant
    assert [name for name, _ in coeffs.items()] == list(COEFFICIENT_NAMES)

    replaced = coeffs.replace("a3", Constant(0.5))
    assert replaced.all_constant
    assert replaced.evaluate_all(0.0)[COEFFICIENT_NAMES.index("a3")] == 0.5
    assert coeffs.a3 == Sinusoid(1.0, 0.1, 1.0)

    with pytest.raises(ValueError):
        CoefficientSet.from_constants(1.0, a4=1.0)
    with pytest.raises(ValueError):
        coeffs.replace("zeta", Constant(1.0))


def test_time_functions_reload_from_their_json_form():
    for fn in (
        Constant(0.3),
        Sinusoid(1.0, 0.2, 0.5, 0.1),
        PiecewiseLinear(((0.0, 1.0), (5.0, 2.0), (10.0, 1.0)), "periodic"),
    ):
        assert time_function_from_dict(fn.to_dict()) == fn


@pytest.mark.parametrize(
    "data",
    [
        {"form": "cubic", "value": 1},
        {"form": "constant"},
        {"form": "constant", "value": 1, "unit": "day"},
        {"form": "constant", "value": "1"},
        {"form": "constant", "value": True},
        {"form": "piecewise", "knots": [[0, 1, 2]]},
        [1, 2],
    ],
)
def test_time_function_from_dict_rejects_structure(data):
    with pytest.raises(ParseError):
        time_function_from_dict(data, path="coefficients.a1")


def test_time_function_from_dict_rejects_invalid_values():
    with pytest.raises(ValidationError) as excinfo:
        time_function_from_dict({"form": "piecewise", "knots": [[1, 1], [0, 2]]}, path="coefficients.c1")
    assert excinfo.value.field == "coefficients.c1"


knot_values = st.lists(st.floats(0.1, 10.0), min_size=2, max_size=8)


@st.composite
def piecewise_functions(draw, extensions=("hold", "periodic")):
    values = draw(knot_values)
    gaps = draw(st.lists(st.floats(0.1, 5.0), min_size=len(values) - 1, max_size=len(values) - 1))
    times = np.concatenate([[0.0], np.cumsum(gaps)])
    return PiecewiseLinear(tuple(zip(times, values)), draw(st.sampled_from(extensions)))


@given(f=piecewise_functions(), t=finite)
def test_piecewise_values_within_bounds(f, t):
    value = f.evaluate(t)
    assert f.lower_bound() - 1e-12 <= value <= f.upper_bound() + 1e-12


@given(f=piecewise_functions(extensions=("hold",)))
def test_piecewise_bounds_attained_at_knots(f):
    values = f.evaluate(np.array([t for t, _ in f.knots]))
    assert values.min() == f.lower_bound()
    assert values.max() == f.upper_bound()


@given(
    mean=st.floats(1.0, 10.0),
    amp=st.floats(-0.9, 0.9),
    omega=st.floats(0.1, 5.0),
    phase=st.floats(-math.pi, math.pi),
)
def test_sinusoid_bounds_attained_on_fine_grid(mean, amp, omega, phase):
    s = Sinusoid(mean, amp, omega, phase)
    grid = np.linspace(0.0, 2.0 * math.pi / omega, 1_000_001)
    values = s.evaluate(grid)
    assert values.max() == pytest.approx(s.upper_bound(), abs=1e-9)
    assert values.min() == pytest.approx(s.lower_bound(), abs=1e-9)


@given(value=st.floats(1e-6, 1e6))
def test_constant_bounds_attained(value):
    c = Constant(value)
    grid = c.evaluate(np.linspace(-100.0, 100.0, 101))
    assert grid.min() == c.lower_bound() == value
    assert grid.max() == c.upper_bound() == value
