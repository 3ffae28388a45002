"""
包络模块 - 包络界 M_i^ε / m_i^ε、区域 Γ_ε 与三个定理的假设检查

包络界（ε ≥ 0）:
    M1 = a1^u / b11^l + ε,  M2 = a2^u / b22^l + ε
    M3 = (d1^u M1 + d2^u M2 - a3^l α^l) / (a3^l γ^l)
    m1 = [(a1^l - b12^u M2)(α^l + γ^l M3) - c1^u M3] / [b11^u (α^l + γ^l M3)]
    m2 = [(a2^l - b21^u M1)(α^l + γ^l M3) - c2^u M3] / [b22^u (α^l + γ^l M3)]
    m3 = [(d1^l - a3^u β^u) m1 + (d2^l - a3^u β^u) m2 - 2 a3^u α^u] / (2 a3^u γ^u)

公式值允许为负，可用性 (0 < m_i < M_i) 单独判断。
"""
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from config import EPSILON_MAX, EPSILON_SHRINK_FACTOR, EPSILON_SHRINK_STEPS, HORIZON
from core.coefficients import CoefficientSet, supremum_over_horizon
from core.errors import DivisionByZero, EpsilonSearchFailed, InadmissibleEnvelope
from core.logger import logger
from core.model import State

CONSERVATIVE_BOUND = "conservative-bound"
INADMISSIBLE_ENVELOPE = "inadmissible-envelope"
EPSILON_SEARCH_FAILED = "epsilon-search-failed"


class Theorem(str, Enum):
    INVARIANCE = "invariance"
    EXTINCTION = "extinction"
    STABILITY = "stability"


class Verdict(str, Enum):
    HOLDS = "holds"
    FAILS = "fails"
    UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class Margin:
    """
    带方向的条件裕量

    sense = "positive" 表示条件要求 value > 0，"negative" 表示要求 value < 0
    """

    name: str
    value: float
    sense: str

    @property
    def satisfied(self) -> bool:
        if self.sense == "positive":
            return self.value > 0
        return self.value < 0


@dataclass(frozen=True)
class HypothesisReport:
    theorem: Theorem
    verdict: Verdict
    margins: tuple[Margin, ...]
    epsilon_used: float
    caveats: tuple[str, ...] = ()

    def __post_init__(self):
        if self.verdict == Verdict.HOLDS and not all(m.satisfied for m in self.margins):
            raise ValueError(f"{self.theorem.value}: 判定为 holds 但存在未满足的裕量 {self.margins}")

    @property
    def holds(self) -> bool:
        return self.verdict == Verdict.HOLDS


@dataclass(frozen=True)
class Region:
    """开长方体 {m_i < x_i < M_i}"""

    lower: tuple[float, float, float]
    upper: tuple[float, float, float]

    def __post_init__(self):
        lower = tuple(float(v) for v in self.lower)
        upper = tuple(float(v) for v in self.upper)
        if len(lower) != 3 or len(upper) != 3:
            raise ValueError("区域上下界必须是三元组")
        if not all(lo < hi for lo, hi in zip(lower, upper)):
            raise InadmissibleEnvelope(f"区域下界必须逐分量小于上界: {lower} / {upper}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    def contains(self, s: State) -> bool:
        return all(lo < x < hi for lo, x, hi in zip(self.lower, (s.x1, s.x2, s.x3), self.upper))

    def contains_array(self, states: np.ndarray) -> np.ndarray:
        """逐行判断 (n, 3) 状态数组是否严格在区域内"""
        states = np.asarray(states, dtype=float)
        return np.all((states > np.array(self.lower)) & (states < np.array(self.upper)), axis=1)

    def center(self) -> State:
        return State.from_array((np.array(self.lower) + np.array(self.upper)) / 2)

    def sample(self, rng: np.random.Generator, n: int) -> list[State]:
        """区域内均匀采样 n 个状态（开区间，端点概率为零，落在边界上的点重新抽取）"""
        lower, upper = np.array(self.lower), np.array(self.upper)
        states = []
        while len(states) < n:
            point = rng.uniform(lower, upper)
            if np.all(point > lower) and np.all(point < upper):
                states.append(State.from_array(point))
        return states


def contains(region: Region, s: State) -> bool:
    """s 是否严格位于开区域内"""
    return region.contains(s)


@dataclass(frozen=True)
class Envelope:
    epsilon: float
    M1: float
    M2: float
    M3: float
    m1: float
    m2: float
    m3: float

    @property
    def upper(self) -> tuple[float, float, float]:
        return self.M1, self.M2, self.M3

    @property
    def lower(self) -> tuple[float, float, float]:
        return self.m1, self.m2, self.m3

    @property
    def is_admissible(self) -> bool:
        return all(0 < lo < hi for lo, hi in zip(self.lower, self.upper))

    def region(self) -> Region:
        if not self.is_admissible:
            raise InadmissibleEnvelope(f"包络不可用 (需要 0 < m_i < M_i): {self}")
        return Region(self.lower, self.upper)


def _divide(numerator: float, denominator: float, what: str) -> float:
    if denominator == 0:
        raise DivisionByZero(f"包络公式分母为零: {what}")
    return numerator / denominator


def compute_envelope(coeffs: CoefficientSet, epsilon: float) -> Envelope:
    """
    逐字计算六个包络界

    Args:
        coeffs: 系数集（下界必须为正）
        epsilon: ε ≥ 0

    Returns:
        Envelope: 可能含负值，可用性另行判断

    Raises:
        InvalidCoefficient: 系数下界不为正
        DivisionByZero: 公式分母为零
    """
    if not (math.isfinite(epsilon) and epsilon >= 0):
        raise ValueError(f"epsilon 必须是非负有限数: {epsilon}")

    a1u, a1l = coeffs.a1.upper_bound(), coeffs.a1.lower_bound()
    a2u, a2l = coeffs.a2.upper_bound(), coeffs.a2.lower_bound()
    a3u, a3l = coeffs.a3.upper_bound(), coeffs.a3.lower_bound()
    b11u, b11l = coeffs.b11.upper_bound(), coeffs.b11.lower_bound()
    b22u, b22l = coeffs.b22.upper_bound(), coeffs.b22.lower_bound()
    b12u = coeffs.b12.upper_bound()
    b21u = coeffs.b21.upper_bound()
    c1u = coeffs.c1.upper_bound()
    c2u = coeffs.c2.upper_bound()
    d1u, d1l = coeffs.d1.upper_bound(), coeffs.d1.lower_bound()
    d2u, d2l = coeffs.d2.upper_bound(), coeffs.d2.lower_bound()
    alphau, alphal = coeffs.alpha.upper_bound(), coeffs.alpha.lower_bound()
    betau = coeffs.beta.upper_bound()
    gammau, gammal = coeffs.gamma.upper_bound(), coeffs.gamma.lower_bound()

    M1 = _divide(a1u, b11l, "b11^l") + epsilon
    M2 = _divide(a2u, b22l, "b22^l") + epsilon
    M3 = _divide(d1u * M1 + d2u * M2 - a3l * alphal, a3l * gammal, "a3^l γ^l")

    q = alphal + gammal * M3
    m1 = _divide((a1l - b12u * M2) * q - c1u * M3, b11u * q, "b11^u (α^l + γ^l M3)")
    m2 = _divide((a2l - b21u * M1) * q - c2u * M3, b22u * q, "b22^u (α^l + γ^l M3)")
    m3 = _divide(
        (d1l - a3u * betau) * m1 + (d2l - a3u * betau) * m2 - 2 * a3u * alphau,
        2 * a3u * gammau,
        "2 a3^u γ^u",
    )

    return Envelope(float(epsilon), M1, M2, M3, m1, m2, m3)


# ==================== 定理假设 ====================

def _invariance_margins(env0: Envelope) -> tuple[Margin, ...]:
    return (
        Margin("M3^0", env0.M3, "positive"),
        Margin("m1^0", env0.m1, "positive"),
        Margin("m2^0", env0.m2, "positive"),
        Margin("m3^0", env0.m3, "positive"),
    )


def check_invariance_hypothesis(
    coeffs: CoefficientSet, epsilon_max: float = EPSILON_MAX
) -> tuple[HypothesisReport, Envelope]:
    """
    不变集定理的假设: M3^0 > 0 且 m_i^0 > 0

    成立时从 epsilon_max 起按 1/2 几何收缩（最多 60 次）选取 ε，
    直到 ε-包络满足 M3^ε > 0、0 < m_i^ε < M_i^ε。

    Returns:
        (HypothesisReport, Envelope): 成立时返回所选 ε 的包络，否则返回 ε=0 的包络

    Raises:
        EpsilonSearchFailed: ε=0 条件成立但收缩用尽
    """
    if not epsilon_max > 0:
        raise ValueError(f"epsilon_max 必须为正: {epsilon_max}")
    coeffs.validate()

    env0 = compute_envelope(coeffs, 0.0)
    margins = _invariance_margins(env0)
    if not all(m.satisfied for m in margins):
        logger.debug(f"不变集假设不成立: {[(m.name, m.value) for m in margins]}")
        return HypothesisReport(Theorem.INVARIANCE, Verdict.FAILS, margins, 0.0), env0

    epsilon = epsilon_max
    smallest = epsilon
    for _ in range(EPSILON_SHRINK_STEPS):
        env = compute_envelope(coeffs, epsilon)
        if env.M3 > 0 and env.is_admissible:
            logger.debug(f"不变集假设成立，选取 ε={epsilon:.6g}")
            return HypothesisReport(Theorem.INVARIANCE, Verdict.HOLDS, margins, epsilon), env
        smallest = epsilon
        epsilon *= EPSILON_SHRINK_FACTOR

    raise EpsilonSearchFailed(
        f"ε=0 条件成立，但从 {epsilon_max} 收缩 {EPSILON_SHRINK_STEPS} 次仍无可用包络，最小尝试 ε={smallest}",
        smallest_epsilon=smallest,
    )


def check_extinction_hypothesis(coeffs: CoefficientSet) -> HypothesisReport:
    """捕食者灭绝定理的假设: M3^0 < 0（严格）"""
    coeffs.validate()
    env0 = compute_envelope(coeffs, 0.0)
    margin = Margin("M3^0", env0.M3, "negative")
    verdict = Verdict.HOLDS if margin.satisfied else Verdict.FAILS
    return HypothesisReport(Theorem.EXTINCTION, verdict, (margin,), 0.0)


def stability_expressions(coeffs: CoefficientSet, env: Envelope):
    """
    稳定性条件三行表达式（向量化，参数为时间数组）

    u_i(a, b) = (α + β x_i* + γ x3*)(α + β a + γ b) 中 x* 未知，用其在 Γ_ε 上的
    极值代替：需要 u_i 下界处取 (α^l + β^l m_i + γ^l m3)(α^l + β^l a + γ^l b)，
    需要上界处取 (α^u + β^u M_i + γ^u M3)(α^u + β^u a + γ^u b)。
    这样的替换只会加强条件。

    Returns:
        tuple: 三个函数 line(t) -> ndarray
    """
    M1, M2, M3 = env.upper
    m1, m2, m3 = env.lower
    al, bl, gl = coeffs.alpha.lower_bound(), coeffs.beta.lower_bound(), coeffs.gamma.lower_bound()
    au, bu, gu = coeffs.alpha.upper_bound(), coeffs.beta.upper_bound(), coeffs.gamma.upper_bound()

    def u_low(m_i, a, b):
        return (al + bl * m_i + gl * m3) * (al + bl * a + gl * b)

    def u_up(M_i, a, b):
        return (au + bu * M_i + gu * M3) * (au + bu * a + gu * b)

    u1_low_mM, u2_low_mM = u_low(m1, m1, M3), u_low(m2, m2, M3)
    u1_low_Mm, u2_low_Mm = u_low(m1, M1, m3), u_low(m2, M2, m3)
    u1_up_mM, u2_up_mM = u_up(M1, m1, M3), u_up(M2, m2, M3)

    f = {name: fn.evaluate for name, fn in coeffs.items()}

    def line1(t):
        alpha, beta, gamma = f["alpha"](t), f["beta"](t), f["gamma"](t)
        d1, c1 = f["d1"](t), f["c1"](t)
        return f["b21"](t) + (alpha * d1 + (gamma * d1 + beta * c1) * M3) / u1_low_mM - f["b11"](t)

    def line2(t):
        alpha, beta, gamma = f["alpha"](t), f["beta"](t), f["gamma"](t)
        d2, c2 = f["d2"](t), f["c2"](t)
        return f["b12"](t) + (alpha * d2 + (gamma * d2 + beta * c2) * M3) / u2_low_mM - f["b22"](t)

    def line3(t):
        alpha, beta, gamma = f["alpha"](t), f["beta"](t), f["gamma"](t)
        c1, c2, d1, d2 = f["c1"](t), f["c2"](t), f["d1"](t), f["d2"](t)
        return (
            c1 * (alpha + beta * M1) / u1_low_Mm
            + c2 * (alpha + beta * M2) / u2_low_Mm
            - gamma * d1 * m1 / u1_up_mM
            - gamma * d2 * m2 / u2_up_mM
        )

    return line1, line2, line3


def check_stability_condition(
    coeffs: CoefficientSet,
    env: Envelope,
    t0: float = 0.0,
    horizon: float = HORIZON,
    grid_step: Optional[float] = None,
) -> HypothesisReport:
    """
    全局渐近稳定定理的条件：三个上确界均 < 0

    Raises:
        InadmissibleEnvelope: 存在 m_i^ε ≤ 0
    """
    if not all(m > 0 for m in env.lower):
        raise InadmissibleEnvelope(f"稳定性检查需要 m_i^ε > 0: {env.lower}")
    coeffs.validate()

    exact = coeffs.all_constant
    caveats = [CONSERVATIVE_BOUND]
    margins = []
    for idx, line in enumerate(stability_expressions(coeffs, env), start=1):
        estimate = supremum_over_horizon(line, t0, horizon, grid_step, exact=exact)
        margins.append(Margin(f"sup line{idx}", estimate.value, "negative"))
        for caveat in estimate.caveats:
            if caveat not in caveats:
                caveats.append(caveat)

    verdict = Verdict.HOLDS if all(m.satisfied for m in margins) else Verdict.FAILS
    return HypothesisReport(Theorem.STABILITY, verdict, tuple(margins), env.epsilon, tuple(caveats))


@dataclass(frozen=True)
class HypothesisSummary:
    invariance: HypothesisReport
    extinction: HypothesisReport
    stability: HypothesisReport
    envelope0: Envelope
    envelope: Optional[Envelope]

    @property
    def reports(self) -> tuple[HypothesisReport, ...]:
        return self.invariance, self.extinction, self.stability

    @property
    def any_holds(self) -> bool:
        return any(r.holds for r in self.reports)


def check_all_hypotheses(
    coeffs: CoefficientSet,
    epsilon_max: float = EPSILON_MAX,
    t0: float = 0.0,
    horizon: float = HORIZON,
    grid_step: Optional[float] = None,
) -> HypothesisSummary:
    """
    依次检查三个定理的假设

    不变集假设不成立时没有可用的 Γ_ε，稳定性判定为 fails 并附 inadmissible-envelope。
    """
    env0 = compute_envelope(coeffs, 0.0)
    try:
        invariance, env = check_invariance_hypothesis(coeffs, epsilon_max)
    except EpsilonSearchFailed as e:
        logger.warning(f"ε 搜索失败: {e}")
        invariance = HypothesisReport(
            Theorem.INVARIANCE, Verdict.UNDETERMINED, _invariance_margins(env0),
            e.smallest_epsilon, (EPSILON_SEARCH_FAILED,),
        )
        env = env0
    extinction = check_extinction_hypothesis(coeffs)

    if invariance.holds:
        stability = check_stability_condition(coeffs, env, t0, horizon, grid_step)
        selected = env
    else:
        stability = HypothesisReport(
            Theorem.STABILITY,
            Verdict.FAILS,
            (
                Margin("m1^0", env0.m1, "positive"),
                Margin("m2^0", env0.m2, "positive"),
                Margin("m3^0", env0.m3, "positive"),
            ),
            0.0,
            (INADMISSIBLE_ENVELOPE,),
        )
        selected = None

    return HypothesisSummary(invariance, extinction, stability, env0, selected)
