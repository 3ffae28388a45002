"""
轨迹记录模块
把轨迹和结果表写成 CSV: 表头 t,x1,x2,x3，17 位有效数字，LF 换行
"""
from pathlib import Path

import pandas as pd

from config import CSV_FLOAT_FORMAT
from core.integrator import Trajectory
from core.logger import logger

TRAJECTORY_COLUMNS = ["t", "x1", "x2", "x3"]


class TrajectoryRecorder:
    """输出目录下的 CSV 记录器"""

    def __init__(self, output_dir: Path):
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)

    def trajectory_path(self, index: int) -> Path:
        return self.output_dir / f"trajectory_{index:03d}.csv"

    def record_trajectory(self, traj: Trajectory, index: int) -> Path:
        """
        写出第 index 条轨迹

        Returns:
            Path: CSV 文件路径
        """
        path = self.trajectory_path(index)
        self.write_table(traj.to_frame(), path.name)
        logger.debug(f"轨迹 #{index} 已写出: {path} ({len(traj)} 行)")
        return path

    def write_table(self, df: pd.DataFrame, file_name: str) -> Path:
        """以统一的浮点格式和换行符写出任意结果表"""
        path = self.output_dir / file_name
        df.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
        return path

    def load_trajectory(self, index: int) -> pd.DataFrame:
        """
        读回第 index 条轨迹

        Returns:
            pd.DataFrame: 列 t, x1, x2, x3；文件不存在时返回空表
        """
        path = self.trajectory_path(index)
        if not path.exists():
            logger.warning(f"轨迹文件不存在: {path}")
            return pd.DataFrame(columns=TRAJECTORY_COLUMNS)
        return pd.read_csv(path, float_precision="round_trip")
