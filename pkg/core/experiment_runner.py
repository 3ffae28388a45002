"""
实验执行模块 - check / simulate / verify / sweep 四个命令的执行流程

批量轨迹与扫描网格点相互独立，交给线程池按序 map，输出顺序始终按轨迹序号 / 网格序号排列。
RK 内循环是纯 Python，受 GIL 限制 --workers 基本不带来加速；
线程池只负责单条轨迹 / 单个网格点的失败隔离和有序汇总。
"""
import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
import pandas as pd

from config import BAND_TOL, COMPARISON_TOL, MAX_SWEEP_AXES
from core.analysis import (
    check_comparison_bounds,
    comparison_bounds,
    convergence_check,
    descent_tolerance,
    detect_extinction,
    lyapunov_series,
    pair_entry_time,
    permanence_band,
    verify_invariance,
)
from core.coefficients import COEFFICIENT_NAMES, CoefficientSet, Constant
from core.envelope import Envelope, HypothesisSummary, check_all_hypotheses
from core.errors import (
    DegenerateDenominator,
    EmptyTail,
    IntegrationError,
    MismatchedSampling,
    ModelError,
    NonFiniteState,
    SweepAxisNotConstant,
    ValidationError,
)
from core.integrator import Trajectory, integrate_to_extinction
from core.logger import create_service_logger
from core.model import State
from core.scenario import Scenario
from core.trajectory_recorder import TrajectoryRecorder
from utils.helpers import format_number, format_state
from utils.plotting import write_trajectory_svg
from utils.status_manager import RunStatusManager

logger = create_service_logger('cli', 'cli.log')

EXIT_OK = 0
EXIT_ERROR = 2
EXIT_NOT_HOLDS = 3

CHECK_COLUMNS = ["theorem", "verdict", "epsilon", "margins", "caveats"]
SIMULATE_COLUMNS = ["trajectory", "x0", "status", "samples", "accepted", "rejected", "final", "file"]
VERIFY_COLUMNS = ["claim", "subject", "result", "detail"]
SWEEP_COLUMNS = ["axis1", "axis2", "invariance", "extinction", "stability", "M3_0", "m1_0", "m2_0", "m3_0"]

PASS, FAIL = "pass", "fail"


@dataclass(frozen=True)
class SweepAxis:
    name: str
    low: float
    high: float
    count: int

    def values(self) -> np.ndarray:
        return np.linspace(self.low, self.high, self.count)


@dataclass
class CommandResult:
    """命令结果：退出码、打印到标准输出的表格、写出的文件"""

    exit_code: int
    table: pd.DataFrame
    message: str
    files: list[Path] = field(default_factory=list)


@dataclass(frozen=True)
class TrajectoryRun:
    index: int
    x0: State
    trajectory: Optional[Trajectory]
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.trajectory is not None


class ExperimentRunner:
    """命令执行器"""

    def __init__(self, scenario: Scenario, output_dir: Path, plot: bool = False,
                 workers: Optional[int] = None):
        self.scenario = scenario
        self.output_dir = Path(output_dir)
        self.plot = plot
        self.workers = workers
        self.recorder = TrajectoryRecorder(self.output_dir)
        self.status_manager = RunStatusManager(self.output_dir)

    # ==================== 公共流程 ====================

    def _run(self, command: str, body: Callable[[], CommandResult]) -> CommandResult:
        logger.info("=" * 80)
        logger.info(f"开始执行 {command}: 场景 {self.scenario.name}")
        logger.info("=" * 80)
        self.status_manager.mark_running(command, self.scenario.name)

        try:
            result = body()
        except Exception as e:
            error_msg = f"执行 {command} 时发生错误: {e}"
            self.status_manager.mark_completed(False, error_msg)
            logger.error("=" * 80)
            logger.error(error_msg, exc_info=True)
            logger.error("=" * 80)
            raise

        success = result.exit_code == EXIT_OK
        self.status_manager.mark_completed(success, result.message)
        log = logger.info if success else logger.warning
        log("=" * 80)
        log(f"{command} 结束 (退出码 {result.exit_code}): {result.message}")
        log("=" * 80)
        return result

    def _check_hypotheses(self, coeffs: Optional[CoefficientSet] = None) -> HypothesisSummary:
        analysis = self.scenario.analysis
        return check_all_hypotheses(
            coeffs or self.scenario.coefficients,
            epsilon_max=analysis.epsilon_max,
            t0=self.scenario.t0,
            horizon=analysis.stability_horizon,
            grid_step=analysis.stability_grid_step,
        )

    @staticmethod
    def _log_envelope(label: str, env: Envelope) -> None:
        logger.info(
            f"{label} (ε={format_number(env.epsilon)}): "
            f"M = {format_state(env.upper)}, m = {format_state(env.lower)}"
        )

    @staticmethod
    def _summary_table(summary: HypothesisSummary) -> pd.DataFrame:
        rows = []
        for report in summary.reports:
            rows.append({
                "theorem": report.theorem.value,
                "verdict": report.verdict.value,
                "epsilon": format_number(report.epsilon_used),
                "margins": "; ".join(f"{m.name}={format_number(m.value)}" for m in report.margins),
                "caveats": ", ".join(report.caveats) or "-",
            })
        return pd.DataFrame(rows, columns=CHECK_COLUMNS)

    def _integrate_one(self, item: tuple[int, State]) -> TrajectoryRun:
        index, x0 = item
        scenario = self.scenario
        try:
            traj = integrate_to_extinction(
                scenario.coefficients, x0, scenario.t0, scenario.t_end, scenario.integrator
            )
        except (IntegrationError, NonFiniteState, DegenerateDenominator) as e:
            logger.error(f"轨迹 #{index} 积分失败 (x0={format_state((x0.x1, x0.x2, x0.x3))}): {e}", exc_info=True)
            return TrajectoryRun(index, x0, None, str(e))
        return TrajectoryRun(index, x0, traj)

    def _integrate_all(self) -> list[TrajectoryRun]:
        states = list(enumerate(self.scenario.initial_states))
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            runs = list(pool.map(self._integrate_one, states))
        failed = sum(not run.ok for run in runs)
        logger.info(f"积分完成: {len(runs) - failed} 条成功, {failed} 条失败")
        return runs

    def _record(self, runs: list[TrajectoryRun]) -> list[Path]:
        files = [self.recorder.record_trajectory(run.trajectory, run.index) for run in runs if run.ok]
        logger.info(f"已写出 {len(files)} 个轨迹文件到 {self.output_dir}")
        if self.plot:
            svg = self.output_dir / "trajectories.svg"
            pairs = [(run.index, run.trajectory) for run in runs if run.ok]
            if pairs and write_trajectory_svg(pairs, svg, title=self.scenario.name):
                files.append(svg)
        return files

    # ==================== check ====================

    def execute_check(self) -> CommandResult:
        """
        检查三个定理的假设

        Returns:
            CommandResult: 任一假设成立时退出码 0，否则 3
        """
        def body() -> CommandResult:
            logger.info("步骤 1: 计算包络并检查定理假设...")
            summary = self._check_hypotheses()
            self._log_envelope("ε=0 包络", summary.envelope0)
            if summary.envelope is not None:
                self._log_envelope("所选包络", summary.envelope)

            for report in summary.reports:
                logger.info(f"  {report.theorem.value}: {report.verdict.value}")

            holding = [r.theorem.value for r in summary.reports if r.holds]
            if holding:
                return CommandResult(EXIT_OK, self._summary_table(summary), f"成立的假设: {', '.join(holding)}")
            return CommandResult(EXIT_NOT_HOLDS, self._summary_table(summary), "没有成立的定理假设")

        return self._run("check", body)

    # ==================== simulate ====================

    def execute_simulate(self) -> CommandResult:
        """
        积分所有初值并写出 CSV（可选 SVG）

        单条轨迹失败只记录，不中断批处理；存在失败时退出码 2。
        """
        def body() -> CommandResult:
            logger.info(f"步骤 1: 积分 {len(self.scenario.initial_states)} 个初值...")
            runs = self._integrate_all()

            logger.info("步骤 2: 写出轨迹文件...")
            files = self._record(runs)

            rows = []
            for run in runs:
                x0 = format_state((run.x0.x1, run.x0.x2, run.x0.x3))
                if not run.ok:
                    rows.append({"trajectory": run.index, "x0": x0, "status": "failed", "samples": 0,
                                 "accepted": 0, "rejected": 0, "final": run.error, "file": "-"})
                    continue
                traj = run.trajectory
                rows.append({
                    "trajectory": run.index,
                    "x0": x0,
                    "status": "truncated" if traj.truncated else "ok",
                    "samples": len(traj),
                    "accepted": traj.step_stats.accepted,
                    "rejected": traj.step_stats.rejected,
                    "final": format_state(traj.states[-1]),
                    "file": self.recorder.trajectory_path(run.index).name,
                })

            failed = sum(not run.ok for run in runs)
            exit_code = EXIT_ERROR if failed else EXIT_OK
            message = f"{len(runs) - failed}/{len(runs)} 条轨迹积分成功"
            return CommandResult(exit_code, pd.DataFrame(rows, columns=SIMULATE_COLUMNS), message, files)

        return self._run("simulate", body)

    # ==================== verify ====================

    def _invariance_claims(self, runs: list[TrajectoryRun], env: Envelope) -> list[dict]:
        region = env.region()
        coeffs = self.scenario.coefficients
        tail_fraction = self.scenario.analysis.tail_fraction
        rows = []
        for run in runs:
            traj, subject = run.trajectory, f"#{run.index}"
            verdict = verify_invariance(traj, region)

            if verdict.started_inside:
                detail = "-" if verdict.first_exit is None else (
                    f"t={format_number(verdict.first_exit[0])} 处 {verdict.first_exit[1]}="
                    f"{format_number(verdict.first_exit[2])} 离开 Γ_ε"
                )
                rows.append(_claim("invariance", subject, verdict.stayed_inside, detail))

                comparison = check_comparison_bounds(traj, comparison_bounds(traj, coeffs, env), COMPARISON_TOL)
                worst = min(comparison.worst, key=lambda item: item[1])
                rows.append(_claim("comparison-bounds", subject, comparison.holds,
                                   f"最小裕量 {worst[0]}: {format_number(worst[1])}"))
            else:
                entered = verdict.entry_time_T1 is not None
                detail = f"T1={format_number(verdict.entry_time_T1)}" if entered else "轨迹未停留在 Γ_ε 内"
                rows.append(_claim("ultimate-boundedness", subject, entered, detail))

            try:
                band = permanence_band(traj, tail_fraction)
            except EmptyTail as e:
                rows.append(_claim("permanence", subject, False, str(e)))
                continue
            rows.append(_claim(
                "permanence", subject, band.within(env.lower, env.upper, BAND_TOL),
                f"尾部 min={format_state(band.tail_min)}, max={format_state(band.tail_max)}",
            ))
        return rows

    def _extinction_claims(self, runs: list[TrajectoryRun], env0: Envelope) -> list[dict]:
        analysis = self.scenario.analysis
        rows = []
        for run in runs:
            traj, subject = run.trajectory, f"#{run.index}"
            result = detect_extinction(traj, analysis.extinction_threshold, analysis.extinction_hold)
            detail = f"t={format_number(result.crossing_time)} 跌破阈值" if result.extinct else "未灭绝"
            if traj.truncated:
                detail += "，已触及正性下限"
            rows.append(_claim("extinct", subject, result.extinct, detail))

            # 食饵初值低于 M_i^0 时捕食者从 t0 起单调下降，否则只要求最终单调
            below = run.x0.x1 < env0.M1 and run.x0.x2 < env0.M2
            if below:
                decays = result.monotone_after == float(traj.times[0])
            else:
                decays = result.monotone_after is not None
            rows.append(_claim("predator-decay", subject, decays,
                               f"monotone_after={format_number(result.monotone_after)}"))
        return rows

    def _stability_claims(self, runs: list[TrajectoryRun], env: Envelope) -> list[dict]:
        region = env.region()
        analysis = self.scenario.analysis
        step_tol = descent_tolerance(self.scenario.integrator.rel_tol)
        rows = []
        for first, second in itertools.combinations(runs, 2):
            subject = f"#{first.index}-#{second.index}"
            traj, ref = first.trajectory, second.trajectory
            try:
                series = lyapunov_series(traj, ref, analysis.tail_fraction)
                convergence = convergence_check(traj, ref, analysis.convergence_tol)
            except MismatchedSampling as e:
                rows.append(_claim("lyapunov-descent", subject, False, str(e)))
                rows.append(_claim("convergence", subject, False, str(e)))
                continue

            entry = pair_entry_time(traj, ref, region)
            if entry is None:
                rows.append(_claim("lyapunov-descent", subject, False, "轨迹对未同时进入 Γ_ε"))
            else:
                increase = series.max_increase_after(entry)
                rows.append(_claim(
                    "lyapunov-descent", subject, increase <= step_tol,
                    f"T1={format_number(entry)}, max ΔV={format_number(increase)}, mu_hat={format_number(series.mu_hat)}",
                ))
            rows.append(_claim("convergence", subject, convergence.converged,
                               f"sup_tail={format_number(convergence.sup_tail)}"))
        return rows

    def execute_verify(self) -> CommandResult:
        """
        对每个成立的假设在轨迹上验证对应结论，结果写入 verify.csv

        Returns:
            CommandResult: 全部结论通过时退出码 0；没有成立的假设或结论失败时 3；积分失败时 2
        """
        def body() -> CommandResult:
            logger.info("步骤 1: 检查定理假设...")
            summary = self._check_hypotheses()
            for report in summary.reports:
                logger.info(f"  {report.theorem.value}: {report.verdict.value}")

            claims: list[dict] = []
            files: list[Path] = []
            runs: list[TrajectoryRun] = []
            if summary.any_holds:
                logger.info(f"步骤 2: 积分 {len(self.scenario.initial_states)} 个初值...")
                runs = self._integrate_all()
                files = self._record(runs)

                ok = [run for run in runs if run.ok]
                for run in runs:
                    if not run.ok:
                        claims.append(_claim("integration", f"#{run.index}", False, run.error))

                logger.info("步骤 3: 验证结论...")
                if summary.invariance.holds:
                    self._log_envelope("Γ_ε", summary.envelope)
                    claims += self._invariance_claims(ok, summary.envelope)
                if summary.extinction.holds:
                    claims += self._extinction_claims(ok, summary.envelope0)
                if summary.stability.holds:
                    claims += self._stability_claims(ok, summary.envelope)
            else:
                logger.warning("没有成立的定理假设，跳过验证")

            table = pd.DataFrame(claims, columns=VERIFY_COLUMNS)
            files.append(self.recorder.write_table(table, "verify.csv"))

            passed = sum(row["result"] == PASS for row in claims)
            if any(not run.ok for run in runs):
                exit_code = EXIT_ERROR
            elif summary.any_holds and passed == len(claims):
                exit_code = EXIT_OK
            else:
                exit_code = EXIT_NOT_HOLDS
            message = f"{passed}/{len(claims)} 项结论通过" if summary.any_holds else "没有成立的定理假设"
            return CommandResult(exit_code, table, message, files)

        return self._run("verify", body)

    # ==================== sweep ====================

    def _validate_axes(self, axes: Sequence[SweepAxis]) -> None:
        if not 1 <= len(axes) <= MAX_SWEEP_AXES:
            raise ValidationError(f"扫描轴数量必须在 1 到 {MAX_SWEEP_AXES} 之间，实际为 {len(axes)}", field="axis")
        names = [axis.name for axis in axes]
        if len(set(names)) != len(names):
            raise ValidationError(f"扫描轴重复: {names}", field="axis")
        for axis in axes:
            if axis.name not in COEFFICIENT_NAMES:
                raise ValidationError(f"未知系数 {axis.name}", field="axis")
            if not isinstance(getattr(self.scenario.coefficients, axis.name), Constant):
                raise SweepAxisNotConstant(f"系数 {axis.name} 在基础场景中不是常数，不能扫描")

    def _classify_point(self, point: tuple[float, ...], axes: Sequence[SweepAxis]) -> dict:
        coeffs = self.scenario.coefficients
        for axis, value in zip(axes, point):
            coeffs = coeffs.replace(axis.name, Constant(value))

        row = {"axis1": point[0], "axis2": point[1] if len(point) > 1 else np.nan}
        try:
            summary = self._check_hypotheses(coeffs)
        except ModelError as e:
            logger.warning(f"网格点 {point} 无法判定: {e}")
            row.update({"invariance": "error", "extinction": "error", "stability": "error",
                        "M3_0": np.nan, "m1_0": np.nan, "m2_0": np.nan, "m3_0": np.nan})
            return row

        env0 = summary.envelope0
        row.update({
            "invariance": summary.invariance.verdict.value,
            "extinction": summary.extinction.verdict.value,
            "stability": summary.stability.verdict.value,
            "M3_0": env0.M3,
            "m1_0": env0.m1,
            "m2_0": env0.m2,
            "m3_0": env0.m3,
        })
        return row

    def execute_sweep(self, axes: Sequence[SweepAxis]) -> CommandResult:
        """
        在常数系数的 1~2 维网格上分类三个假设，写出 sweep.csv

        行按网格序号排列（第一轴在外层），与执行顺序无关。

        Raises:
            SweepAxisNotConstant: 扫描的系数不是常数
            ValidationError: 轴数量或系数名不合法
        """
        def body() -> CommandResult:
            logger.info("步骤 1: 校验扫描轴...")
            self._validate_axes(axes)
            for axis in axes:
                logger.info(f"  {axis.name}: [{axis.low}, {axis.high}] × {axis.count}")

            points = list(itertools.product(*(axis.values() for axis in axes)))
            logger.info(f"步骤 2: 分类 {len(points)} 个网格点...")
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                rows = list(pool.map(lambda p: self._classify_point(p, axes), points))

            table = pd.DataFrame(rows, columns=SWEEP_COLUMNS)
            path = self.recorder.write_table(table, "sweep.csv")
            logger.info(f"步骤 3: 扫描结果已写出: {path}")

            counts = ", ".join(
                f"{name} holds {int((table[name] == 'holds').sum())}"
                for name in ("invariance", "extinction", "stability")
            )
            return CommandResult(EXIT_OK, table, f"{len(table)} 个网格点: {counts}", [path])

        return self._run("sweep", body)


def _claim(claim: str, subject: str, passed: bool, detail: str) -> dict:
    return {"claim": claim, "subject": subject, "result": PASS if passed else FAIL, "detail": detail}
