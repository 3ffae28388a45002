"""
BD Predator-Prey 命令行入口

    uv run python cli.py check    --scenario scenarios/invariance.json
    uv run python cli.py simulate --scenario scenarios/extinction.json --out data/output/ext --plot
    uv run python cli.py verify   --scenario scenarios/stability.json --horizon 500
    uv run python cli.py sweep    --scenario scenarios/all_ones.json --axis a3:0.1:3:20 --axis d1:0.1:3:20

退出码: 0 成功 / 结论通过，2 运行错误，3 没有成立的假设或结论失败
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

# 添加项目根目录到路径
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from config import DEFAULT_OUTPUT_DIR
from core.errors import ModelError, ScenarioError
from core.experiment_runner import EXIT_ERROR, CommandResult, ExperimentRunner, SweepAxis
from core.logger import create_service_logger, logger as app_logger
from core.scenario import load_scenario
from utils.helpers import format_table, parse_axis_spec

logger = create_service_logger('cli', 'cli.log')

VERBS = ("check", "simulate", "verify", "sweep")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cli.py",
        description="两食饵一捕食者 Beddington-DeAngelis 系统: 定理假设检查、轨迹积分与结论验证",
    )
    parser.add_argument("verb", choices=VERBS, help="要执行的命令")
    parser.add_argument("--scenario", required=True, type=Path, help="场景 JSON 文件")
    parser.add_argument("--out", type=Path, default=None,
                        help=f"输出目录，默认 {DEFAULT_OUTPUT_DIR}/<场景名>")
    parser.add_argument("--plot", action="store_true", help="额外写出 SVG 轨迹图")
    parser.add_argument("--epsilon-max", type=float, default=None, help="覆盖场景中的 ε 搜索起点")
    parser.add_argument("--horizon", type=float, default=None, help="积分时长 T，t_end = t0 + T")
    parser.add_argument("--workers", type=int, default=None, help="线程池大小（只影响调度，纯 Python 积分受 GIL 限制不会因此加速）")
    parser.add_argument("--axis", action="append", default=[], metavar="NAME:LOW:HIGH:COUNT",
                        help="扫描轴（sweep 专用，最多两个）")
    parser.add_argument("--quiet", action="store_true", help="控制台只输出警告和错误（日志文件不受影响）")
    return parser


def run(args: argparse.Namespace) -> CommandResult:
    scenario = load_scenario(args.scenario)
    if args.epsilon_max is not None:
        scenario = scenario.with_epsilon_max(args.epsilon_max)
    if args.horizon is not None:
        scenario = scenario.with_horizon(args.horizon)

    output_dir = args.out or DEFAULT_OUTPUT_DIR / scenario.name
    runner = ExperimentRunner(scenario, output_dir, plot=args.plot, workers=args.workers)

    if args.verb == "check":
        return runner.execute_check()
    if args.verb == "simulate":
        return runner.execute_simulate()
    if args.verb == "verify":
        return runner.execute_verify()
    return runner.execute_sweep([SweepAxis(*parse_axis_spec(spec)) for spec in args.axis])


def main(argv: Optional[Sequence[str]] = None) -> int:
    """命令行入口，返回退出码"""
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.verb == "sweep" and not args.axis:
        parser.error("sweep 需要至少一个 --axis NAME:LOW:HIGH:COUNT")
    if args.verb != "sweep" and args.axis:
        parser.error("--axis 只用于 sweep")
    if args.workers is not None and args.workers < 1:
        parser.error("--workers 至少为 1")

    if args.quiet:
        for log in (app_logger, logger):
            log.set_console_level(logging.WARNING)

    try:
        result = run(args)
    except ScenarioError as e:
        logger.error(f"场景文件错误: {e}")
        return EXIT_ERROR
    except (ModelError, OSError, ValueError) as e:
        logger.error(f"执行失败: {e}", exc_info=True)
        return EXIT_ERROR

    print(format_table(result.table))
    print()
    print(result.message)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
