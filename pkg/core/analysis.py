"""
分析模块 - 在数值轨迹上验证动力学结论

    verify_invariance      Γ_ε 正不变性 / 最终有界区域的进入时刻 T1
    permanence_band        尾部窗口的分量上下界（liminf / limsup 的有限时域替代）
    detect_extinction      捕食者 x3 是否跌破阈值并保持，及单调下降起点
    lyapunov_series        V = Σ|ln x_i - ln x_i*| 及经验衰减率 mu_hat
    convergence_check      尾部 Σ|x_i - x_i*| 的上确界
    comparison_bounds      不变集证明中的 logistic 比较解
"""
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid

from config import (
    BAND_TOL,
    COMPARISON_TOL,
    CONVERGENCE_TOL,
    EXTINCTION_HOLD,
    EXTINCTION_THRESHOLD,
    LYAPUNOV_NOISE_FACTOR,
    LYAPUNOV_STEP_TOL,
    MIN_SEPARATION,
    MIN_TAIL_SAMPLES,
    MONOTONE_TOL,
    TAIL_FRACTION,
)
from core.coefficients import CoefficientSet
from core.envelope import Envelope, Region
from core.errors import EmptyTail, MismatchedSampling
from core.integrator import Trajectory, logistic_from_integral

COMPONENTS = ("x1", "x2", "x3")


# ==================== 不变性 ====================

@dataclass(frozen=True)
class InvarianceVerdict:
    """
    Attributes:
        stayed_inside: 从起点（起点在区域外时从首次进入）起再未离开
        first_exit: (时刻, 分量名, 取值)，第一次违反严格包含的采样
        entry_time_T1: 起点在区域外时，此后一直留在区域内的最早采样时刻
    """

    stayed_inside: bool
    first_exit: Optional[tuple[float, str, float]]
    entry_time_T1: Optional[float]
    started_inside: bool

    def __post_init__(self):
        if self.stayed_inside and self.first_exit is not None:
            raise ValueError("stayed_inside 时不应有 first_exit")


def _violation(region: Region, t: float, state: np.ndarray) -> tuple[float, str, float]:
    for i, (lo, x, hi) in enumerate(zip(region.lower, state, region.upper)):
        if not lo < x < hi:
            return float(t), COMPONENTS[i], float(x)
    raise ValueError(f"状态 {state} 在区域内")


def _ultimate_entry_index(inside: np.ndarray) -> Optional[int]:
    """此后全部为 True 的最早下标；末尾样本不在区域内时为 None"""
    if len(inside) == 0 or not inside[-1]:
        return None
    outside = np.flatnonzero(~inside)
    return 0 if len(outside) == 0 else int(outside[-1]) + 1


def _window(traj: Trajectory, from_time: Optional[float]) -> tuple[np.ndarray, np.ndarray]:
    times = traj.times
    if from_time is None:
        return times, traj.states
    if not times[0] <= from_time <= times[-1]:
        raise ValueError(f"from_time={from_time} 不在轨迹时间范围 [{times[0]}, {times[-1]}] 内")
    mask = times >= from_time
    return times[mask], traj.states[mask]


def verify_invariance(traj: Trajectory, region: Region,
                      from_time: Optional[float] = None) -> InvarianceVerdict:
    """
    检查 from_time 之后每个采样是否严格位于开区域内

    起点在区域外时另记录进入时刻 T1，并从首次进入起判断是否再离开。
    """
    times, states = _window(traj, from_time)
    inside = region.contains_array(states)
    started_inside = bool(inside[0])

    if started_inside:
        entry_time = None
        start = 0
    else:
        entered = np.flatnonzero(inside)
        ultimate = _ultimate_entry_index(inside)
        entry_time = float(times[ultimate]) if ultimate is not None else None
        if len(entered) == 0:
            return InvarianceVerdict(False, _violation(region, times[0], states[0]), None, False)
        start = int(entered[0])

    after = inside[start:]
    if after.all():
        return InvarianceVerdict(True, None, entry_time, started_inside)
    j = start + int(np.argmin(after))
    return InvarianceVerdict(False, _violation(region, times[j], states[j]), entry_time, started_inside)


def entry_time(traj: Trajectory, region: Region) -> Optional[float]:
    """轨迹此后一直留在区域内的最早采样时刻"""
    idx = _ultimate_entry_index(region.contains_array(traj.states))
    return None if idx is None else float(traj.times[idx])


def pair_entry_time(traj: Trajectory, ref: Trajectory, region: Region) -> Optional[float]:
    """两条轨迹都进入并留在区域内的最早时刻，即稳定性证明中的 t0 + T1"""
    first, second = entry_time(traj, region), entry_time(ref, region)
    if first is None or second is None:
        return None
    return max(first, second)


# ==================== 持久性 ====================

@dataclass(frozen=True)
class PermanenceBand:
    tail_min: tuple[float, float, float]
    tail_max: tuple[float, float, float]
    window: tuple[float, float]

    def __post_init__(self):
        if not all(lo <= hi for lo, hi in zip(self.tail_min, self.tail_max)):
            raise ValueError(f"tail_min 必须不大于 tail_max: {self.tail_min} / {self.tail_max}")

    def within(self, lower, upper, tol: float = BAND_TOL) -> bool:
        """尾部带是否落在 [lower_i - tol, upper_i + tol] 内"""
        return all(
            lo - tol <= bmin and bmax <= hi + tol
            for lo, hi, bmin, bmax in zip(lower, upper, self.tail_min, self.tail_max)
        )


def permanence_band(traj: Trajectory, tail_fraction: float = TAIL_FRACTION) -> PermanenceBand:
    """
    最后 tail_fraction 比例样本上的逐分量最小 / 最大值

    Raises:
        EmptyTail: 窗口样本数少于 10
    """
    if not 0 < tail_fraction <= 1:
        raise ValueError(f"tail_fraction 必须在 (0, 1] 内: {tail_fraction}")
    n = len(traj)
    k = math.ceil(n * tail_fraction)
    if k < MIN_TAIL_SAMPLES:
        raise EmptyTail(f"尾部窗口只有 {k} 个样本，至少需要 {MIN_TAIL_SAMPLES} 个")
    tail = traj.states[n - k:]
    return PermanenceBand(
        tuple(float(v) for v in tail.min(axis=0)),
        tuple(float(v) for v in tail.max(axis=0)),
        (float(traj.times[n - k]), float(traj.times[-1])),
    )


# ==================== 灭绝 ====================

@dataclass(frozen=True)
class ExtinctionResult:
    extinct: bool
    crossing_time: Optional[float]
    monotone_after: Optional[float]


def _monotone_after(times: np.ndarray, x3: np.ndarray, tol: float) -> Optional[float]:
    if len(x3) < 2:
        return float(times[0])
    ok = np.diff(x3) <= tol
    if not ok[-1]:
        return None
    bad = np.flatnonzero(~ok)
    return float(times[0]) if len(bad) == 0 else float(times[bad[-1] + 1])


def detect_extinction(traj: Trajectory, threshold: float = EXTINCTION_THRESHOLD,
                      hold_time: float = EXTINCTION_HOLD) -> ExtinctionResult:
    """
    x3 连续 hold_time 时长低于 threshold 即判定灭绝

    截断轨迹（x3 触及正性下限）末尾的低于阈值段直接计为灭绝。
    monotone_after 是此后 x3 单调不增（逐步容差 1e-12）的最早采样时刻。
    """
    if not threshold > 0:
        raise ValueError(f"threshold 必须为正: {threshold}")
    times, x3 = traj.times, traj.component(2)
    monotone_after = _monotone_after(times, x3, MONOTONE_TOL)

    below = x3 < threshold
    n = len(below)
    i = 0
    while i < n:
        if not below[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and below[j + 1]:
            j += 1
        reaches_end = j == n - 1
        if times[j] - times[i] >= hold_time or (reaches_end and traj.truncated):
            return ExtinctionResult(True, float(times[i]), monotone_after)
        i = j + 1

    return ExtinctionResult(False, None, monotone_after)


# ==================== Lyapunov ====================

def _require_shared_sampling(traj: Trajectory, ref: Trajectory) -> None:
    if len(traj) != len(ref) or not np.array_equal(traj.times, ref.times):
        raise MismatchedSampling(
            f"两条轨迹采样时刻不一致: {len(traj)} 个样本 [{traj.times[0]}, {traj.times[-1]}] vs "
            f"{len(ref)} 个样本 [{ref.times[0]}, {ref.times[-1]}]"
        )


@dataclass(frozen=True, eq=False)
class LyapunovSeries:
    times: np.ndarray
    V: np.ndarray
    sum_abs_diff: np.ndarray
    mu_hat: float

    @property
    def entries(self) -> list[tuple[float, float, float]]:
        return [(float(t), float(v), float(s)) for t, v, s in zip(self.times, self.V, self.sum_abs_diff)]

    def dini_estimate(self) -> np.ndarray:
        """D⁺V 的前向差分估计"""
        return np.diff(self.V) / np.diff(self.times)

    def max_increase_after(self, t: float) -> float:
        """起点时刻 ≥ t 的相邻样本对中 V 的最大单步增量"""
        steps = np.diff(self.V)[self.times[:-1] >= t]
        return float(steps.max()) if len(steps) else -math.inf


def descent_tolerance(rel_tol: float) -> float:
    """
    V 单步增量的容许上限

    V 趋于零后只剩积分误差: 两条轨迹各三个分量的 ln x 都带有约 rel_tol 量级的噪声，
    固定容限之外再加上 LYAPUNOV_NOISE_FACTOR × rel_tol。
    """
    return LYAPUNOV_STEP_TOL + LYAPUNOV_NOISE_FACTOR * rel_tol


def lyapunov_series(traj: Trajectory, ref: Trajectory, tail_fraction: float = TAIL_FRACTION,
                    min_separation: float = MIN_SEPARATION) -> LyapunovSeries:
    """
    V = Σ|ln x_i - ln x_i*| 与 Σ|x_i - x_i*|

    mu_hat 取尾部样本上 (-ΔV/Δt) / Σ|x_i - x_i*| 的最大值并截断到 0 以上，
    分离度低于 min_separation 的样本只剩舍入噪声，不参与。

    Raises:
        MismatchedSampling: 采样时刻不一致
    """
    _require_shared_sampling(traj, ref)
    x, x_ref = traj.states, ref.states
    diff = x - x_ref
    # ln x - ln x* 写成 log1p((x - x*) / x*)，x ≠ x* 时结果必不为零
    V = np.abs(np.log1p(diff / x_ref)).sum(axis=1)
    sum_abs_diff = np.abs(diff).sum(axis=1)

    n = len(V)
    start = max(0, n - math.ceil(n * tail_fraction))
    rates = []
    for k in range(start, n - 1):
        if sum_abs_diff[k] >= min_separation:
            dt = traj.times[k + 1] - traj.times[k]
            rates.append(-(V[k + 1] - V[k]) / dt / sum_abs_diff[k])
    mu_hat = max(0.0, max(rates)) if rates else 0.0

    V.setflags(write=False)
    sum_abs_diff.setflags(write=False)
    return LyapunovSeries(traj.times, V, sum_abs_diff, float(mu_hat))


@dataclass(frozen=True)
class ConvergenceResult:
    converged: bool
    sup_tail: float


def convergence_check(traj: Trajectory, ref: Trajectory, tol: float = CONVERGENCE_TOL,
                      from_time: Optional[float] = None) -> ConvergenceResult:
    """
    from_time 之后 Σ|x_i - x_i*| 的最大值是否小于 tol

    from_time 默认取最后四分之一时段的起点。
    """
    _require_shared_sampling(traj, ref)
    times = traj.times
    if from_time is None:
        from_time = times[0] + (1 - TAIL_FRACTION) * (times[-1] - times[0])
    mask = times >= from_time
    if not mask.any():
        raise ValueError(f"from_time={from_time} 之后没有样本")
    sup_tail = float(np.abs(traj.states[mask] - ref.states[mask]).sum(axis=1).max())
    return ConvergenceResult(sup_tail < tol, sup_tail)


# ==================== 比较解 ====================

@dataclass(frozen=True, eq=False)
class ComparisonBounds:
    """upper / lower 为 (n, 3) 数组，不适用的分量为 nan"""

    times: np.ndarray
    upper: np.ndarray
    lower: np.ndarray


@dataclass(frozen=True)
class ComparisonVerdict:
    holds: bool
    worst: tuple[tuple[str, float], ...]


def comparison_bounds(traj: Trajectory, coeffs: CoefficientSet, env: Envelope) -> ComparisonBounds:
    """
    沿轨迹计算比较解

        食饵上界: 速率 b_ii^l、容量 M_i^0 的 logistic 解（对任意正初值成立）
        捕食者上界: 容量 M3^ε、时变速率 C1(t) = a3^l γ^l / (α^l + γ^l x3(t))
            （需要 x_i⁰ < M_i^ε；M3^ε < 0 时即捕食者的衰减界）
        食饵下界: 速率 b_ii^u、容量 m_i^ε（需要初值在 Γ_ε 内）
        捕食者下界: 容量 m3^ε、速率 C2(t) = 2a3^u γ^u / (2α^u + β^u(m1 + m2) + 2γ^u x3(t))
            （需要初值在 Γ_ε 内）

    C1、C2 沿采样轨迹用累积梯形公式积分。
    """
    times = traj.times
    elapsed = times - times[0]
    x0 = traj.states[0]
    x3 = traj.component(2)
    n = len(times)
    upper = np.full((n, 3), np.nan)
    lower = np.full((n, 3), np.nan)

    env0_upper = (
        coeffs.a1.upper_bound() / coeffs.b11.lower_bound(),
        coeffs.a2.upper_bound() / coeffs.b22.lower_bound(),
    )
    rates_low = (coeffs.b11.lower_bound(), coeffs.b22.lower_bound())
    rates_up = (coeffs.b11.upper_bound(), coeffs.b22.upper_bound())

    for i in range(2):
        capacity = env0_upper[i]
        upper[:, i] = logistic_from_integral(capacity, x0[i], rates_low[i] * capacity * elapsed)

    a3l, a3u = coeffs.a3.lower_bound(), coeffs.a3.upper_bound()
    alphal, alphau = coeffs.alpha.lower_bound(), coeffs.alpha.upper_bound()
    gammal, gammau = coeffs.gamma.lower_bound(), coeffs.gamma.upper_bound()
    betau = coeffs.beta.upper_bound()

    if env.M3 != 0 and x0[0] < env.M1 and x0[1] < env.M2:
        c1 = a3l * gammal / (alphal + gammal * x3)
        integral = cumulative_trapezoid(c1, times, initial=0.0)
        upper[:, 2] = logistic_from_integral(env.M3, x0[2], env.M3 * integral)

    starts_inside = env.is_admissible and env.region().contains_array(x0[np.newaxis, :])[0]
    if starts_inside:
        for i in range(2):
            capacity = env.lower[i]
            lower[:, i] = logistic_from_integral(capacity, x0[i], rates_up[i] * capacity * elapsed)
        c2 = 2 * a3u * gammau / (2 * alphau + betau * (env.m1 + env.m2) + 2 * gammau * x3)
        integral = cumulative_trapezoid(c2, times, initial=0.0)
        lower[:, 2] = logistic_from_integral(env.m3, x0[2], env.m3 * integral)

    return ComparisonBounds(times, upper, lower)


def check_comparison_bounds(traj: Trajectory, bounds: ComparisonBounds,
                            tol: float = COMPARISON_TOL) -> ComparisonVerdict:
    """
    逐分量最坏裕量：上界取 bound - x，下界取 x - bound，负值表示违反

    所有最坏裕量 ≥ -tol 时成立。
    """
    worst = []
    for side, values, sign in (("upper", bounds.upper, 1.0), ("lower", bounds.lower, -1.0)):
        for i, name in enumerate(COMPONENTS):
            column = values[:, i]
            defined = ~np.isnan(column)
            if not defined.any():
                continue
            margin = sign * (column[defined] - traj.states[defined, i])
            worst.append((f"{name} {side}", float(margin.min())))
    holds = all(margin >= -tol for _, margin in worst)
    return ComparisonVerdict(holds, tuple(worst))
