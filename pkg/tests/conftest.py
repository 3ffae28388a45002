import os

import pytest
from hypothesis import HealthCheck, settings

from core.coefficients import CoefficientSet
from tests.reference_sets import (
    EXTINCTION_CONSTANTS,
    INVARIANCE_CONSTANTS,
    STABILITY_CONSTANTS,
)

settings.register_profile("default", max_examples=100, deadline=None)
settings.register_profile(
    "fast", max_examples=20, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def invariance_set() -> CoefficientSet:
    """不变集假设成立: M^0 = (10, 10, 199), m^0 ≈ (8.9005, 8.9005, 79.1045)"""
    return CoefficientSet.from_constants(**INVARIANCE_CONSTANTS)


@pytest.fixture
def extinction_set() -> CoefficientSet:
    """灭绝假设成立: M3^0 = -0.8"""
    return CoefficientSet.from_constants(**EXTINCTION_CONSTANTS)


@pytest.fixture
def stability_set() -> CoefficientSet:
    """弱捕食: 不变集与稳定性条件都成立"""
    return CoefficientSet.from_constants(**STABILITY_CONSTANTS)


@pytest.fixture
def all_ones_set() -> CoefficientSet:
    return CoefficientSet.from_constants(1.0)


@pytest.fixture
def logistic_set() -> CoefficientSet:
    """解耦: x1' = x1(1 - x1)，x2' = x2(1 - x2)，x3 恒定"""
    return CoefficientSet.from_constants(0.0, a1=1.0, b11=1.0, a2=1.0, b22=1.0, alpha=1.0)
