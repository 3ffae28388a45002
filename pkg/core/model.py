"""
模型模块 - 两食饵一捕食者系统的右端项

    x1' = x1[a1 - b11 x1 - b12 x2] - c1 x1 x3 / (α + β x1 + γ x3)
    x2' = x2[a2 - b21 x1 - b22 x2] - c2 x2 x3 / (α + β x2 + γ x3)
    x3' = x3[-a3 + d1 x1 / (α + β x1 + γ x3) + d2 x2 / (α + β x2 + γ x3)]

向量场连续延拓到闭正锥：带零因子的项直接为零。
"""
import math
from dataclasses import dataclass

import numpy as np

from core.coefficients import CoefficientSet
from core.errors import DegenerateDenominator, NonFiniteState


@dataclass(frozen=True)
class State:
    """种群密度 (x1, x2, x3)"""

    x1: float
    x2: float
    x3: float

    def __post_init__(self):
        for name in ("x1", "x2", "x3"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise NonFiniteState(f"状态分量 {name} 非有限: {value}")
            object.__setattr__(self, name, value)

    @classmethod
    def from_array(cls, values) -> "State":
        x1, x2, x3 = (float(v) for v in values)
        return cls(x1, x2, x3)

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.x2, self.x3])

    @property
    def is_interior(self) -> bool:
        """是否在正锥内（所有分量严格为正）"""
        return self.x1 > 0 and self.x2 > 0 and self.x3 > 0


@dataclass(frozen=True)
class Derivative:
    dx1: float
    dx2: float
    dx3: float

    def as_array(self) -> np.ndarray:
        return np.array([self.dx1, self.dx2, self.dx3])


def _denominator(alpha: float, beta: float, gamma: float, x_prey: float, x3: float) -> float:
    denom = alpha + beta * x_prey + gamma * x3
    if not denom > 0:
        raise DegenerateDenominator(
            f"Beddington-DeAngelis 分母不为正: α={alpha}, β={beta}, γ={gamma}, x={x_prey}, x3={x3}"
        )
    return denom


def bd_response(numerator_coeff: float, x_prey: float, x3: float,
                alpha: float, beta: float, gamma: float) -> float:
    """
    Beddington-DeAngelis 功能反应 c·x·x3 / (α + βx + γx3)

    人均增长形式 d·x / (α + βx + γx3) 由调用方除去一个 x3 因子得到。

    Raises:
        DegenerateDenominator: 分母不为正
    """
    denom = _denominator(alpha, beta, gamma, x_prey, x3)
    return numerator_coeff * x_prey * x3 / denom


def rhs(coeffs: CoefficientSet, t: float, y) -> np.ndarray:
    """
    向量场的数组形式，供积分器内循环使用

    Args:
        coeffs: 系数集
        t: 时刻
        y: 长度为 3 的状态数组

    Returns:
        np.ndarray: (dx1, dx2, dx3)
    """
    x1, x2, x3 = float(y[0]), float(y[1]), float(y[2])
    if not (math.isfinite(x1) and math.isfinite(x2) and math.isfinite(x3)):
        raise NonFiniteState(f"t={t} 处状态非有限: {x1}, {x2}, {x3}")
    a1, a2, a3, b11, b12, b21, b22, c1, c2, d1, d2, alpha, beta, gamma = coeffs.evaluate_all(t)

    den1 = _denominator(alpha, beta, gamma, x1, x3)
    den2 = _denominator(alpha, beta, gamma, x2, x3)

    dx1 = x1 * (a1 - b11 * x1 - b12 * x2) - c1 * x1 * x3 / den1
    dx2 = x2 * (a2 - b21 * x1 - b22 * x2) - c2 * x2 * x3 / den2
    dx3 = x3 * (-a3 + d1 * x1 / den1 + d2 * x2 / den2)

    out = np.array([dx1, dx2, dx3])
    if not np.all(np.isfinite(out)):
        raise NonFiniteState(f"t={t} 处向量场非有限: state={y}, derivative={out}")
    return out


def vector_field(coeffs: CoefficientSet, t: float, s: State) -> Derivative:
    """
    t 时刻状态 s 处的右端项

    Raises:
        DegenerateDenominator: 分母不为正
        NonFiniteState: 状态或结果非有限
    """
    dx1, dx2, dx3 = rhs(coeffs, t, (s.x1, s.x2, s.x3))
    return Derivative(float(dx1), float(dx2), float(dx3))
