"""
积分器模块 - 保正的显式 Runge-Kutta 积分与 logistic 闭式解

方法:
    RK4   - 经典四阶定步长
    RKF45 - Fehlberg 4(5) 嵌入对，传播四阶解，五阶差作局部误差估计

正性保护:
    任一级状态或候选状态分量 ≤ positivity_floor 时，该步以一半步长重试；
    之后的步长保持在减半后的上限内，直到连续 GUARD_RELEASE_STEPS 步通过检查才解除。
    自上次解除以来累计减半超过 40 次即抛出 PositivityBreach。
"""
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
import pandas as pd

from config import (
    ABS_TOL,
    GUARD_RELEASE_STEPS,
    MAX_CONSECUTIVE_HALVINGS,
    MAX_STEPS,
    POSITIVITY_FLOOR,
    REL_TOL,
    SAMPLE_COUNT,
)
from core.coefficients import CoefficientSet, TimeFunction
from core.errors import (
    DegenerateDenominator,
    InvalidInitialState,
    PositivityBreach,
    StepLimitExceeded,
)
from core.logger import logger
from core.model import State, rhs


class Method(str, Enum):
    RK4 = "RK4"
    RKF45 = "RKF45"


@dataclass(frozen=True)
class IntegrationControls:
    """
    积分控制参数

    Attributes:
        method: RK4 需要 step；RKF45 使用 rel_tol / abs_tol
        step: RK4 定步长
        rel_tol, abs_tol: 每分量局部误差容限 rel_tol·|x| + abs_tol
        max_steps: 尝试步数上限（含被拒绝的步）
        sample_interval: 采样间隔，默认 (t_end - t0) / 1000
        positivity_floor: 正性下限
        initial_step: RKF45 初始步长，默认 min(sample_interval, (t_end - t0) / 100)
    """

    method: Method = Method.RKF45
    step: Optional[float] = None
    rel_tol: float = REL_TOL
    abs_tol: float = ABS_TOL
    max_steps: int = MAX_STEPS
    sample_interval: Optional[float] = None
    positivity_floor: float = POSITIVITY_FLOOR
    initial_step: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if self.method == Method.RK4 and not (self.step is not None and self.step > 0):
            raise ValueError(f"RK4 需要正的定步长 step，实际为 {self.step}")
        if self.step is not None and not self.step > 0:
            raise ValueError(f"step 必须为正: {self.step}")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError(f"容限必须为正: rel_tol={self.rel_tol}, abs_tol={self.abs_tol}")
        if not (isinstance(self.max_steps, int) and self.max_steps >= 1):
            raise ValueError(f"max_steps 必须是正整数: {self.max_steps}")
        if self.sample_interval is not None and not self.sample_interval > 0:
            raise ValueError(f"sample_interval 必须为正: {self.sample_interval}")
        if self.initial_step is not None and not self.initial_step > 0:
            raise ValueError(f"initial_step 必须为正: {self.initial_step}")
        if not self.positivity_floor >= 0:
            raise ValueError(f"positivity_floor 不能为负: {self.positivity_floor}")


@dataclass(frozen=True)
class StepStats:
    accepted: int
    rejected: int
    min_step: float
    max_step: float
    halvings: int = 0


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    采样轨迹

    Attributes:
        t0: 初始时刻
        times: 严格递增的采样时刻 (n,)
        states: 对应状态 (n, 3)，所有分量 > 0
        step_stats: 步数统计
        method: 积分方法
        truncated: 是否因捕食者触及正性下限而提前截断
    """

    t0: float
    times: np.ndarray
    states: np.ndarray
    step_stats: StepStats
    method: Method
    truncated: bool = False

    def __post_init__(self):
        times = np.array(self.times, dtype=float)
        states = np.array(self.states, dtype=float).reshape(-1, 3)
        if len(times) != len(states) or len(times) == 0:
            raise ValueError(f"采样时刻与状态数量不一致: {len(times)} / {len(states)}")
        if np.any(np.diff(times) <= 0):
            raise ValueError("采样时刻必须严格递增")
        if np.any(states <= 0):
            raise ValueError("轨迹状态必须严格为正")
        times.setflags(write=False)
        states.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)

    def __len__(self) -> int:
        return len(self.times)

    @property
    def samples(self) -> list[tuple[float, State]]:
        return [(float(t), State.from_array(s)) for t, s in zip(self.times, self.states)]

    @property
    def initial_state(self) -> State:
        return State.from_array(self.states[0])

    @property
    def final_state(self) -> State:
        return State.from_array(self.states[-1])

    def component(self, i: int) -> np.ndarray:
        return self.states[:, i]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "t": self.times,
            "x1": self.states[:, 0],
            "x2": self.states[:, 1],
            "x3": self.states[:, 2],
        })


# ==================== 单步格式 ====================

class _StageBreach(Exception):
    def __init__(self, component: int):
        self.component = component


def _guard(y: np.ndarray, floor: float) -> np.ndarray:
    if y.min() <= floor:
        raise _StageBreach(int(np.argmin(y)))
    return y


def _rk4_step(f, t, y, h, floor, rel_tol, abs_tol):
    k1 = f(t, y)
    k2 = f(t + h / 2, _guard(y + h / 2 * k1, floor))
    k3 = f(t + h / 2, _guard(y + h / 2 * k2, floor))
    k4 = f(t + h, _guard(y + h * k3, floor))
    y_new = _guard(y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4), floor)
    return y_new, 0.0


# Fehlberg 4(5)
_RKF_C = (0.0, 1 / 4, 3 / 8, 12 / 13, 1.0, 1 / 2)
_RKF_A = (
    np.array([1 / 4]),
    np.array([3 / 32, 9 / 32]),
    np.array([1932 / 2197, -7200 / 2197, 7296 / 2197]),
    np.array([439 / 216, -8.0, 3680 / 513, -845 / 4104]),
    np.array([-8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40]),
)
_RKF_B4 = np.array([25 / 216, 0.0, 1408 / 2565, 2197 / 4104, -1 / 5, 0.0])
_RKF_ERR = np.array([1 / 360, 0.0, -128 / 4275, -2197 / 75240, 1 / 50, 2 / 55])


def _rkf45_step(f, t, y, h, floor, rel_tol, abs_tol):
    k = np.empty((6, 3))
    k[0] = f(t, y)
    for i, a in enumerate(_RKF_A, start=1):
        k[i] = f(t + _RKF_C[i] * h, _guard(y + h * (a @ k[:i]), floor))
    y_new = _guard(y + h * (_RKF_B4 @ k), floor)
    scale = abs_tol + rel_tol * np.maximum(np.abs(y), np.abs(y_new))
    err = float(np.max(np.abs(h * (_RKF_ERR @ k)) / scale))
    return y_new, err


_STEPPERS = {Method.RK4: _rk4_step, Method.RKF45: _rkf45_step}


def _sample_grid(t0: float, t_end: float, interval: float) -> np.ndarray:
    n = int(math.floor((t_end - t0) / interval + 1e-9))
    grid = t0 + interval * np.arange(n + 1)
    if t_end - grid[-1] > 1e-9 * interval:
        grid = np.append(grid, t_end)
    else:
        grid[-1] = t_end
    return grid


# ==================== 积分 ====================

def integrate(
    coeffs: CoefficientSet,
    x0: State,
    t0: float,
    t_end: float,
    controls: Optional[IntegrationControls] = None,
) -> Trajectory:
    """
    在 [t0, t_end] 上积分模型，在 sample_interval 的整数倍及两端点处采样

    Args:
        coeffs: 系数集（允许零系数，用于解耦测试）
        x0: 严格为正的初值
        t0, t_end: 时间区间，t_end > t0
        controls: 积分控制参数

    Returns:
        Trajectory: 采样轨迹

    Raises:
        InvalidInitialState: 初值不在正锥内或区间非法
        PositivityBreach: 连续减半仍无法保持正性（partial 属性带截断轨迹）
        StepLimitExceeded: 尝试步数超过 max_steps
        NonFiniteState: 向量场非有限
    """
    controls = controls or IntegrationControls()
    if not x0.is_interior:
        raise InvalidInitialState(f"初值必须严格为正: {x0}")
    if not (math.isfinite(t0) and math.isfinite(t_end) and t_end > t0):
        raise InvalidInitialState(f"需要有限的 t_end > t0: t0={t0}, t_end={t_end}")

    span = t_end - t0
    sample_interval = controls.sample_interval or span / SAMPLE_COUNT
    sample_times = _sample_grid(t0, t_end, sample_interval)

    adaptive = controls.method == Method.RKF45
    step_fn = _STEPPERS[controls.method]
    floor = controls.positivity_floor

    def f(t, y):
        return rhs(coeffs, t, y)

    if adaptive:
        h_nominal = controls.initial_step or min(sample_interval, span / 100)
    else:
        h_nominal = controls.step

    t = float(t0)
    y = x0.as_array()
    times = [t]
    states = [y.copy()]
    next_idx = 1

    attempts = accepted = rejected = total_halvings = 0
    min_h, max_h = math.inf, 0.0
    guard_cap = math.inf
    halvings = 0
    clean_steps = 0

    def partial() -> Trajectory:
        ts, ys = list(times), list(states)
        if t > ts[-1]:
            ts.append(t)
            ys.append(y.copy())
        stats = StepStats(accepted, rejected, min_h if accepted else 0.0, max_h, total_halvings)
        return Trajectory(float(t0), np.array(ts), np.array(ys), stats, controls.method, truncated=True)

    while next_idx < len(sample_times):
        target = sample_times[next_idx]
        h = min(h_nominal, guard_cap)
        clipped = t + h >= target - 1e-12 * max(1.0, abs(target))
        if clipped:
            h = target - t

        attempts += 1
        if attempts > controls.max_steps:
            raise StepLimitExceeded(f"t={t} 处尝试步数超过 max_steps={controls.max_steps}")

        try:
            y_new, err = step_fn(f, t, y, h, floor, controls.rel_tol, controls.abs_tol)
        except _StageBreach as breach:
            rejected += 1
            halvings += 1
            total_halvings += 1
            clean_steps = 0
            if halvings > MAX_CONSECUTIVE_HALVINGS:
                raise PositivityBreach(
                    f"t={t} 处分量 x{breach.component + 1} 连续减半 {MAX_CONSECUTIVE_HALVINGS} 次后仍触及正性下限 {floor}",
                    time=t,
                    component=breach.component,
                    partial=partial(),
                ) from None
            guard_cap = h / 2
            continue

        if adaptive:
            if err > 1.0:
                rejected += 1
                h_nominal = h * max(0.2, 0.9 * err ** -0.2)
                continue
            factor = 5.0 if err == 0.0 else min(5.0, 0.9 * err ** -0.2)
            proposed = h * factor
            # 被采样点截短的步不应拖小后续步长
            h_nominal = max(proposed, h_nominal) if clipped and factor >= 1.0 else proposed

        accepted += 1
        min_h, max_h = min(min_h, h), max(max_h, h)
        t = float(target) if clipped else t + h
        y = y_new

        if guard_cap < math.inf:
            clean_steps += 1
            if clean_steps >= GUARD_RELEASE_STEPS:
                guard_cap = math.inf
                halvings = 0
                clean_steps = 0

        if clipped:
            times.append(t)
            states.append(y.copy())
            next_idx += 1

    stats = StepStats(accepted, rejected, min_h, max_h, total_halvings)
    logger.debug(
        f"积分完成: {controls.method.value}, [{t0}, {t_end}], 样本 {len(times)}, "
        f"接受 {accepted} 步, 拒绝 {rejected} 步, 步长 [{min_h:.3g}, {max_h:.3g}]"
    )
    return Trajectory(float(t0), np.array(times), np.array(states), stats, controls.method)


def integrate_to_extinction(
    coeffs: CoefficientSet,
    x0: State,
    t0: float,
    t_end: float,
    controls: Optional[IntegrationControls] = None,
) -> Trajectory:
    """
    与 integrate 相同，但捕食者 x3 触及正性下限时视为灭绝，返回截断轨迹

    食饵分量触及下限时照常抛出 PositivityBreach。
    """
    try:
        return integrate(coeffs, x0, t0, t_end, controls)
    except PositivityBreach as e:
        if e.component != 2 or e.partial is None:
            raise
        logger.warning(f"捕食者在 t={e.time:.6g} 触及正性下限，按灭绝处理并截断轨迹")
        return e.partial


# ==================== logistic 闭式解 ====================

def logistic_from_integral(B: float, X0: float, integral):
    """
    X' = A(t) X (B - X), X(t0) = X0 的解，以 I = ∫_{t0}^{t} A(s) B ds 表示:

        X = B X0 e^I / (X0 (e^I - 1) + B)

    I ≥ 0 时改写为 B X0 / (X0 (1 - e^-I) + B e^-I)，避免溢出。
    分母与 B 异号（含为零）时解已爆破，抛出 DegenerateDenominator；
    B > 0 时即分母 ≤ 0。

    Args:
        B: 容量，非零
        X0: 初值，> 0
        integral: I，标量或数组

    Returns:
        与 integral 同形状的解
    """
    I = np.asarray(integral, dtype=float)
    decay = np.exp(-np.abs(I))
    positive = I >= 0
    numerator = np.where(positive, B * X0, B * X0 * decay)
    denominator = np.where(positive, X0 * (1 - decay) + B * decay, X0 * (decay - 1) + B)
    if np.any(denominator * B <= 0):
        raise DegenerateDenominator(f"logistic 解分母退化: B={B}, X0={X0}")
    X = numerator / denominator
    if X.ndim == 0:
        return float(X)
    return X


def logistic_closed_form(A: TimeFunction, B: float, X0: float, t0: float, t: float) -> float:
    """
    logistic 方程 X' = A(t) X (B - X) 的闭式解

    ∫A 对 Constant / Sinusoid 精确计算，对 PiecewiseLinear 用复合 Simpson (10^4 面板)。

    Raises:
        DegenerateDenominator: 分母退化
    """
    if not X0 > 0:
        raise ValueError(f"X0 必须为正: {X0}")
    if B == 0:
        raise ValueError("B 不能为零")
    return logistic_from_integral(B, X0, B * A.integral(t0, t))
