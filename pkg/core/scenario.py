"""
场景模块 - 场景文件解析、验证与写出

文件格式 (严格 JSON):
    {
      "version": 1,
      "name": "invariance",
      "coefficients": {"a1": {"form": "constant", "value": 10}, ...},   # 14 个系数全部必填
      "initial_states": [[x1, x2, x3], ...],
      "t0": 0,
      "t_end": 200,
      "integrator": {"method": "RKF45", "rel_tol": 1e-9, ...},
      "analysis": {"epsilon_max": 0.01, "horizon": 200, ...}
    }

除 version / coefficients / initial_states 外均可省略，省略时取 config.py 默认值。
t_end 省略时为 t0 + analysis.horizon；两者同时给出时必须一致。
"""
import json
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional, Union

from config import (
    CONVERGENCE_TOL,
    EPSILON_MAX,
    EXTINCTION_HOLD,
    EXTINCTION_THRESHOLD,
    HORIZON,
    SCENARIO_VERSION,
    TAIL_FRACTION,
)
from core.coefficients import COEFFICIENT_NAMES, CoefficientSet, time_function_from_dict
from core.errors import InvalidCoefficient, NonFiniteState, ParseError, ValidationError
from core.integrator import IntegrationControls, Method
from core.logger import logger
from core.model import State

TOP_LEVEL_REQUIRED = {"version", "coefficients", "initial_states"}
TOP_LEVEL_OPTIONAL = {"name", "t0", "t_end", "integrator", "analysis"}


@dataclass(frozen=True)
class AnalysisControls:
    """
    分析参数

    Attributes:
        epsilon_max: ε 搜索起点
        horizon: 积分时长（t_end - t0）
        tail_fraction: 持久性 / Lyapunov 尾部窗口比例
        extinction_threshold, extinction_hold: 灭绝判定阈值与持续时长
        stability_horizon: 稳定性条件上确界的时间范围
        stability_grid_step: 上确界网格步长，None 表示 horizon / 10^5
        convergence_tol: 收敛判定容限
    """

    epsilon_max: float = EPSILON_MAX
    horizon: float = HORIZON
    tail_fraction: float = TAIL_FRACTION
    extinction_threshold: float = EXTINCTION_THRESHOLD
    extinction_hold: float = EXTINCTION_HOLD
    stability_horizon: float = HORIZON
    stability_grid_step: Optional[float] = None
    convergence_tol: float = CONVERGENCE_TOL

    def __post_init__(self):
        for name in ("epsilon_max", "horizon", "extinction_threshold", "stability_horizon", "convergence_tol"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValidationError(f"必须为有限正数，实际为 {value}", field=f"analysis.{name}")
        if not 0 < self.tail_fraction <= 1:
            raise ValidationError(f"必须在 (0, 1] 内，实际为 {self.tail_fraction}", field="analysis.tail_fraction")
        if not self.extinction_hold >= 0:
            raise ValidationError(f"不能为负: {self.extinction_hold}", field="analysis.extinction_hold")
        if self.stability_grid_step is not None and not self.stability_grid_step > 0:
            raise ValidationError(f"必须为正: {self.stability_grid_step}", field="analysis.stability_grid_step")


@dataclass(frozen=True)
class Scenario:
    coefficients: CoefficientSet
    initial_states: tuple[State, ...]
    t0: float = 0.0
    t_end: float = HORIZON
    integrator: IntegrationControls = field(default_factory=IntegrationControls)
    analysis: AnalysisControls = field(default_factory=AnalysisControls)
    name: str = "scenario"

    def __post_init__(self):
        if not self.initial_states:
            raise ValidationError("至少需要一个初值", field="initial_states")
        for i, s in enumerate(self.initial_states):
            if not s.is_interior:
                raise ValidationError(f"初值必须严格为正: {s}", field=f"initial_states[{i}]")
        if not (math.isfinite(self.t0) and math.isfinite(self.t_end) and self.t_end > self.t0):
            raise ValidationError(f"需要有限的 t_end > t0: t0={self.t0}, t_end={self.t_end}", field="t_end")

    def with_horizon(self, horizon: float) -> "Scenario":
        """
        --horizon T: t_end = t0 + T

        stability_horizon 与原 horizon 相同时随之移动，单独指定过的保持不变，
        与场景文件中省略 stability_horizon 的规则一致。
        """
        horizon = float(horizon)
        analysis = self.analysis
        stability = horizon if analysis.stability_horizon == analysis.horizon else analysis.stability_horizon
        analysis = replace(analysis, horizon=horizon, stability_horizon=stability)
        return replace(self, t_end=self.t0 + horizon, analysis=analysis)

    def with_epsilon_max(self, epsilon_max: float) -> "Scenario":
        return replace(self, analysis=replace(self.analysis, epsilon_max=float(epsilon_max)))

    def with_coefficients(self, coefficients: CoefficientSet) -> "Scenario":
        return replace(self, coefficients=coefficients)


# ==================== 解析 ====================

def _reject_constant(token: str):
    raise ParseError(f"不允许非标准 JSON 常量 {token}")


def _unique_keys(pairs):
    result = {}
    for key, value in pairs:
        if key in result:
            raise ParseError(f"重复字段 {key!r}")
        result[key] = value
    return result


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _number(data: dict, key: str, path: str, default=None, allow_null: bool = False):
    if key not in data:
        return default
    value = data[key]
    if value is None and allow_null:
        return None
    if not _is_number(value):
        raise ParseError(f"{path}.{key}: 应为数值，实际为 {type(value).__name__}")
    return float(value)


def _check_keys(data, path: str, required: set, optional: set) -> None:
    if not isinstance(data, dict):
        raise ParseError(f"{path}: 应为对象")
    missing = required - set(data)
    if missing:
        raise ParseError(f"{path}: 缺少字段 {sorted(missing)}")
    unknown = set(data) - required - optional
    if unknown:
        raise ParseError(f"{path}: 未知字段 {sorted(unknown)}")


def _parse_coefficients(data) -> CoefficientSet:
    _check_keys(data, "coefficients", set(COEFFICIENT_NAMES), set())
    members = {
        name: time_function_from_dict(data[name], path=f"coefficients.{name}")
        for name in COEFFICIENT_NAMES
    }
    coeffs = CoefficientSet(**members)
    try:
        coeffs.validate()
    except InvalidCoefficient as e:
        raise ValidationError(str(e), field=f"coefficients.{e.name}") from e
    return coeffs


def _parse_initial_states(data) -> tuple[State, ...]:
    if not isinstance(data, list):
        raise ParseError("initial_states: 应为 [[x1, x2, x3], ...] 列表")
    states = []
    for i, item in enumerate(data):
        path = f"initial_states[{i}]"
        if not (isinstance(item, list) and len(item) == 3 and all(_is_number(v) for v in item)):
            raise ParseError(f"{path}: 应为三个数值")
        try:
            state = State.from_array(item)
        except NonFiniteState as e:
            raise ValidationError(str(e), field=path) from e
        if not state.is_interior:
            raise ValidationError(f"初值必须严格为正: {item}", field=path)
        states.append(state)
    return tuple(states)


_INTEGRATOR_KEYS = {f.name for f in fields(IntegrationControls)}


def _parse_integrator(data) -> IntegrationControls:
    if data is None:
        return IntegrationControls()
    _check_keys(data, "integrator", set(), _INTEGRATOR_KEYS)
    kwargs = {}
    if "method" in data:
        if data["method"] not in {m.value for m in Method}:
            raise ValidationError(f"未知方法 {data['method']!r}，可选 {[m.value for m in Method]}", field="integrator.method")
        kwargs["method"] = Method(data["method"])
    for key in ("step", "sample_interval", "initial_step"):
        if key in data:
            kwargs[key] = _number(data, key, "integrator", allow_null=True)
    for key in ("rel_tol", "abs_tol", "positivity_floor"):
        if key in data:
            kwargs[key] = _number(data, key, "integrator")
    if "max_steps" in data:
        value = data["max_steps"]
        if isinstance(value, bool) or not isinstance(value, int):
            raise ParseError(f"integrator.max_steps: 应为整数，实际为 {value!r}")
        kwargs["max_steps"] = value
    try:
        return IntegrationControls(**kwargs)
    except ValueError as e:
        raise ValidationError(str(e), field="integrator") from e


_ANALYSIS_KEYS = {f.name for f in fields(AnalysisControls)}


def _parse_analysis(data) -> tuple[AnalysisControls, set]:
    if data is None:
        return AnalysisControls(), set()
    _check_keys(data, "analysis", set(), _ANALYSIS_KEYS)
    kwargs = {
        key: _number(data, key, "analysis", allow_null=(key == "stability_grid_step"))
        for key in _ANALYSIS_KEYS if key in data
    }
    if "horizon" in kwargs and "stability_horizon" not in kwargs:
        kwargs["stability_horizon"] = kwargs["horizon"]
    return AnalysisControls(**kwargs), set(kwargs)


def parse_scenario(data, name: str = "scenario") -> Scenario:
    """
    从已解码的 JSON 对象构造场景

    Raises:
        ParseError: 结构错误
        ValidationError: 取值违反不变量
    """
    _check_keys(data, "scenario", TOP_LEVEL_REQUIRED, TOP_LEVEL_OPTIONAL)

    version = data["version"]
    if version != SCENARIO_VERSION or isinstance(version, bool):
        raise ValidationError(f"不支持的版本 {version!r}，当前版本为 {SCENARIO_VERSION}", field="version")

    if "name" in data:
        if not isinstance(data["name"], str) or not data["name"]:
            raise ParseError("name: 应为非空字符串")
        name = data["name"]

    coefficients = _parse_coefficients(data["coefficients"])
    initial_states = _parse_initial_states(data["initial_states"])
    integrator = _parse_integrator(data.get("integrator"))
    analysis, given = _parse_analysis(data.get("analysis"))

    t0 = _number(data, "t0", "scenario", default=0.0)
    t_end = _number(data, "t_end", "scenario")
    if t_end is None:
        t_end = t0 + analysis.horizon
    elif "horizon" in given:
        if not math.isclose(t_end - t0, analysis.horizon, rel_tol=1e-12, abs_tol=1e-12):
            raise ValidationError(
                f"t_end - t0 = {t_end - t0} 与 analysis.horizon = {analysis.horizon} 不一致", field="t_end"
            )
    elif t_end > t0:
        horizon = t_end - t0
        stability = analysis.stability_horizon if "stability_horizon" in given else horizon
        analysis = replace(analysis, horizon=horizon, stability_horizon=stability)

    return Scenario(coefficients, initial_states, t0, t_end, integrator, analysis, name)


def load_scenario(path: Union[str, Path]) -> Scenario:
    """
    读取并验证场景文件

    Raises:
        ParseError: JSON 语法错误（带行列号）、未知字段、缺字段、类型错误
        ValidationError: 违反不变量（带字段路径）
        OSError: 文件不可读
    """
    path = Path(path)
    logger.info(f"读取场景文件: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text, object_pairs_hook=_unique_keys, parse_constant=_reject_constant)
    except json.JSONDecodeError as e:
        raise ParseError(f"JSON 语法错误: {e.msg} (行 {e.lineno}, 列 {e.colno})", line=e.lineno, column=e.colno) from e

    scenario = parse_scenario(data, name=path.stem)
    logger.info(
        f"场景 {scenario.name}: {len(scenario.initial_states)} 个初值, "
        f"t ∈ [{scenario.t0}, {scenario.t_end}], 方法 {scenario.integrator.method.value}"
    )
    return scenario


# ==================== 写出 ====================

def scenario_to_dict(scenario: Scenario) -> dict:
    """所有默认值都写出的 JSON 形式"""
    controls = scenario.integrator
    return {
        "version": SCENARIO_VERSION,
        "name": scenario.name,
        "coefficients": scenario.coefficients.to_dict(),
        "initial_states": [[s.x1, s.x2, s.x3] for s in scenario.initial_states],
        "t0": scenario.t0,
        "t_end": scenario.t_end,
        "integrator": {
            "method": controls.method.value,
            "step": controls.step,
            "rel_tol": controls.rel_tol,
            "abs_tol": controls.abs_tol,
            "max_steps": controls.max_steps,
            "sample_interval": controls.sample_interval,
            "positivity_floor": controls.positivity_floor,
            "initial_step": controls.initial_step,
        },
        "analysis": {f.name: getattr(scenario.analysis, f.name) for f in fields(AnalysisControls)},
    }


def dump_scenario(scenario: Scenario, path: Union[str, Path]) -> Path:
    """写出 load_scenario 可读回的场景文件"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(scenario_to_dict(scenario), indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    logger.info(f"场景已写出: {path}")
    return path
