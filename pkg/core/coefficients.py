"""
时变系数模块

系数是有界、连续、严格为正的时间函数。只支持三种可精确求上下界的形式：
    Constant(value)
    Sinusoid(mean, amplitude, omega, phase)
    PiecewiseLinear(knots, extension)
上界 g^u / 下界 g^l 是精确值，定理假设的判断依赖于此。
"""
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, fields
from typing import Callable, Iterator, Optional, Union

import numpy as np
from scipy.integrate import simpson

from config import SUPREMUM_GRID_POINTS, SIMPSON_PANELS
from core.errors import InvalidCoefficient, NonFiniteExpression, ParseError, ValidationError

GRID_ESTIMATE = "grid-estimate"

EXTENSIONS = ("hold", "periodic")


class TimeFunction(ABC):
    """时间函数基类"""

    form: str = ""

    @abstractmethod
    def evaluate(self, t):
        """求 f(t)，t 可以是标量或 numpy 数组"""

    @abstractmethod
    def _extremes(self) -> tuple[float, float]:
        """返回 (下界, 上界)，不做正性检查"""

    @abstractmethod
    def integral(self, t0: float, t: float) -> float:
        """∫_{t0}^{t} f(s) ds"""

    @abstractmethod
    def to_dict(self) -> dict:
        """场景文件中的 JSON 形式"""

    @property
    def is_constant(self) -> bool:
        return False

    def upper_bound(self) -> float:
        lower, upper = self._extremes()
        self._require_positive(lower)
        return upper

    def lower_bound(self) -> float:
        lower, _ = self._extremes()
        self._require_positive(lower)
        return lower

    def _require_positive(self, lower: float) -> None:
        if not lower > 0:
            raise InvalidCoefficient(f"系数下界必须为正，{self!r} 的下界为 {lower}")


@dataclass(frozen=True)
class Constant(TimeFunction):
    value: float

    form = "constant"

    def __post_init__(self):
        value = float(self.value)
        if not math.isfinite(value):
            raise InvalidCoefficient(f"常数系数必须有限: {self.value}")
        object.__setattr__(self, "value", value)

    @property
    def is_constant(self) -> bool:
        return True

    def evaluate(self, t):
        if np.ndim(t) == 0:
            return self.value
        return np.full(np.shape(t), self.value)

    def _extremes(self) -> tuple[float, float]:
        return self.value, self.value

    def integral(self, t0: float, t: float) -> float:
        return self.value * (t - t0)

    def to_dict(self) -> dict:
        return {"form": self.form, "value": self.value}


@dataclass(frozen=True)
class Sinusoid(TimeFunction):
    """mean + amplitude * sin(omega * t + phase)"""

    mean: float
    amplitude: float
    omega: float
    phase: float = 0.0

    form = "sinusoid"

    def __post_init__(self):
        for name in ("mean", "amplitude", "omega", "phase"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise InvalidCoefficient(f"正弦系数参数 {name} 必须有限: {value}")
            object.__setattr__(self, name, value)

    def evaluate(self, t):
        if np.ndim(t) == 0:
            return self.mean + self.amplitude * math.sin(self.omega * t + self.phase)
        return self.mean + self.amplitude * np.sin(self.omega * np.asarray(t, dtype=float) + self.phase)

    def _extremes(self) -> tuple[float, float]:
        amp = abs(self.amplitude)
        return self.mean - amp, self.mean + amp

    def integral(self, t0: float, t: float) -> float:
        if self.omega == 0.0:
            return (self.mean + self.amplitude * math.sin(self.phase)) * (t - t0)
        return self.mean * (t - t0) - self.amplitude / self.omega * (
            math.cos(self.omega * t + self.phase) - math.cos(self.omega * t0 + self.phase)
        )

    def to_dict(self) -> dict:
        return {
            "form": self.form,
            "mean": self.mean,
            "amplitude": self.amplitude,
            "omega": self.omega,
            "phase": self.phase,
        }


@dataclass(frozen=True)
class PiecewiseLinear(TimeFunction):
    """
    节点间线性插值

    extension:
        hold     - 两端之外保持端点值
        periodic - 以 (最后节点时间 - 首节点时间) 为周期延拓
    """

    knots: tuple[tuple[float, float], ...]
    extension: str = "hold"

    _times: np.ndarray = field(init=False, repr=False, compare=False)
    _values: np.ndarray = field(init=False, repr=False, compare=False)

    form = "piecewise"

    def __post_init__(self):
        knots = tuple((float(t), float(v)) for t, v in self.knots)
        if len(knots) == 0:
            raise InvalidCoefficient("分段线性系数至少需要一个节点")
        if self.extension not in EXTENSIONS:
            raise InvalidCoefficient(f"未知延拓方式: {self.extension}，可选 {EXTENSIONS}")
        if self.extension == "periodic" and len(knots) < 2:
            raise InvalidCoefficient("周期延拓至少需要两个节点")

        times = np.array([t for t, _ in knots])
        values = np.array([v for _, v in knots])
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(values))):
            raise InvalidCoefficient("节点时间和取值必须有限")
        if np.any(np.diff(times) <= 0):
            raise InvalidCoefficient("节点时间必须严格递增")

        times.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "_times", times)
        object.__setattr__(self, "_values", values)

    def _wrap(self, t):
        if self.extension == "periodic":
            start = self._times[0]
            period = self._times[-1] - start
            return start + np.mod(np.asarray(t, dtype=float) - start, period)
        return t

    def evaluate(self, t):
        value = np.interp(self._wrap(t), self._times, self._values)
        if np.ndim(t) == 0:
            return float(value)
        return value

    def _extremes(self) -> tuple[float, float]:
        # 线性段的极值只在节点处取到，周期延拓不改变取值范围
        return float(self._values.min()), float(self._values.max())

    def integral(self, t0: float, t: float) -> float:
        if t == t0:
            return 0.0
        grid = np.linspace(t0, t, SIMPSON_PANELS + 1)
        return float(simpson(self.evaluate(grid), x=grid))

    def to_dict(self) -> dict:
        return {
            "form": self.form,
            "knots": [[t, v] for t, v in self.knots],
            "extension": self.extension,
        }


# ==================== 上确界 ====================

@dataclass(frozen=True)
class SupremumEstimate:
    """网格上确界；带 grid-estimate 标记时只是真实上确界的下估计"""

    value: float
    caveats: tuple[str, ...] = ()

    @property
    def exact(self) -> bool:
        return GRID_ESTIMATE not in self.caveats


def supremum_over_horizon(
    expr: Callable[[np.ndarray], Union[np.ndarray, float]],
    t0: float,
    horizon: float,
    grid_step: Optional[float] = None,
    exact: bool = False,
) -> SupremumEstimate:
    """
    在均匀网格 {t0, t0+grid_step, ..., t0+horizon} 上求 expr 的最大值

    Args:
        expr: 接受 numpy 时间数组的向量化表达式，返回标量时自动广播
        t0: 起点
        horizon: 时间跨度
        grid_step: 网格步长，默认 horizon / 10^5
        exact: 表达式与时间无关（所有系数为常数）时置 True，只在 t0 处求值

    Returns:
        SupremumEstimate: 非精确时带 grid-estimate 标记

    Raises:
        NonFiniteExpression: 某个网格点的值非有限
    """
    if not horizon > 0:
        raise ValueError(f"horizon 必须为正: {horizon}")
    if grid_step is None:
        grid_step = horizon / SUPREMUM_GRID_POINTS
    if not grid_step > 0:
        raise ValueError(f"grid_step 必须为正: {grid_step}")

    if exact:
        grid = np.array([float(t0)])
    else:
        n = int(math.floor(horizon / grid_step + 1e-9))
        grid = t0 + grid_step * np.arange(n + 1)
        end = t0 + horizon
        if end - grid[-1] > 1e-12 * max(1.0, abs(end)):
            grid = np.append(grid, end)

    values = np.broadcast_to(np.asarray(expr(grid), dtype=float), grid.shape)
    finite = np.isfinite(values)
    if not finite.all():
        bad = int(np.argmin(finite))
        raise NonFiniteExpression(f"表达式在 t={grid[bad]} 处非有限: {values[bad]}")

    caveats = () if exact else (GRID_ESTIMATE,)
    return SupremumEstimate(float(values.max()), caveats)


# ==================== 系数集 ====================

@dataclass(frozen=True)
class CoefficientSet:
    """模型的 14 个系数，字段顺序即 COEFFICIENT_NAMES"""

    a1: TimeFunction
    a2: TimeFunction
    a3: TimeFunction
    b11: TimeFunction
    b12: TimeFunction
    b21: TimeFunction
    b22: TimeFunction
    c1: TimeFunction
    c2: TimeFunction
    d1: TimeFunction
    d2: TimeFunction
    alpha: TimeFunction
    beta: TimeFunction
    gamma: TimeFunction

    @classmethod
    def from_constants(cls, default: float = 1.0, **overrides) -> "CoefficientSet":
        """
        构造系数集：未指定的系数取 Constant(default)

        Examples:
            >>> CoefficientSet.from_constants(1.0, a3=0.1, d1=Sinusoid(1, 0.5, 1.0))
        """
        unknown = set(overrides) - set(COEFFICIENT_NAMES)
        if unknown:
            raise ValueError(f"未知系数: {sorted(unknown)}")
        members = {}
        for name in COEFFICIENT_NAMES:
            value = overrides.get(name, default)
            members[name] = value if isinstance(value, TimeFunction) else Constant(value)
        return cls(**members)

    def items(self) -> Iterator[tuple[str, TimeFunction]]:
        for name in COEFFICIENT_NAMES:
            yield name, getattr(self, name)

    def replace(self, name: str, fn: TimeFunction) -> "CoefficientSet":
        if name not in COEFFICIENT_NAMES:
            raise ValueError(f"未知系数: {name}")
        members = dict(self.items())
        members[name] = fn
        return CoefficientSet(**members)

    def validate(self) -> None:
        """检查所有系数下界为正，出错时异常带上系数名"""
        for name, fn in self.items():
            try:
                fn.lower_bound()
            except InvalidCoefficient as e:
                raise InvalidCoefficient(f"系数 {name}: {e}", name=name) from e

    @property
    def all_constant(self) -> bool:
        return all(fn.is_constant for _, fn in self.items())

    def evaluate_all(self, t: float) -> tuple[float, ...]:
        """按 COEFFICIENT_NAMES 顺序返回 t 时刻的 14 个系数值"""
        return tuple(getattr(self, name).evaluate(t) for name in COEFFICIENT_NAMES)

    def to_dict(self) -> dict:
        return {name: fn.to_dict() for name, fn in self.items()}


COEFFICIENT_NAMES = tuple(f.name for f in fields(CoefficientSet))


# ==================== JSON 解析 ====================

_FORM_KEYS = {
    "constant": ({"form", "value"}, set()),
    "sinusoid": ({"form", "mean", "amplitude", "omega"}, {"phase"}),
    "piecewise": ({"form", "knots"}, {"extension"}),
}


def _number(data: dict, key: str, path: str) -> float:
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"{path}.{key}: 应为数值，实际为 {type(value).__name__}")
    return float(value)


def time_function_from_dict(data: dict, path: str = "coefficient") -> TimeFunction:
    """
    从场景文件的 JSON 对象构造 TimeFunction

    Args:
        data: {"form": "constant" | "sinusoid" | "piecewise", ...}
        path: 出错时报告的字段路径

    Raises:
        ParseError: 结构错误（未知字段、缺字段、类型错误）
        ValidationError: 取值违反不变量（如节点未排序）
    """
    if not isinstance(data, dict):
        raise ParseError(f"{path}: 应为对象")
    form = data.get("form")
    if form not in _FORM_KEYS:
        raise ParseError(f"{path}.form: 未知形式 {form!r}，可选 {sorted(_FORM_KEYS)}")

    required, optional = _FORM_KEYS[form]
    missing = required - set(data)
    if missing:
        raise ParseError(f"{path}: 缺少字段 {sorted(missing)}")
    unknown = set(data) - required - optional
    if unknown:
        raise ParseError(f"{path}: 未知字段 {sorted(unknown)}")

    try:
        if form == "constant":
            return Constant(_number(data, "value", path))
        if form == "sinusoid":
            phase = _number(data, "phase", path) if "phase" in data else 0.0
            return Sinusoid(
                _number(data, "mean", path),
                _number(data, "amplitude", path),
                _number(data, "omega", path),
                phase,
            )
        knots = data["knots"]
        if not isinstance(knots, list) or not all(
            isinstance(k, list) and len(k) == 2 and all(
                isinstance(x, (int, float)) and not isinstance(x, bool) for x in k
            )
            for k in knots
        ):
            raise ParseError(f"{path}.knots: 应为 [[t, v], ...] 数值对列表")
        extension = data.get("extension", "hold")
        if not isinstance(extension, str):
            raise ParseError(f"{path}.extension: 应为字符串")
        return PiecewiseLinear(tuple((k[0], k[1]) for k in knots), extension)
    except InvalidCoefficient as e:
        raise ValidationError(str(e), field=path) from e
