"""
绘图模块 - 轨迹叠加图 (plotly，导出 SVG 需要 kaleido)
"""
from pathlib import Path
from typing import Sequence

import plotly.graph_objects as go

from core.integrator import Trajectory
from core.logger import logger

COMPONENT_COLORS = {"x1": "#1f77b4", "x2": "#ff7f0e", "x3": "#2ca02c"}


def build_trajectory_figure(trajectories: Sequence[tuple[int, Trajectory]], title: str = "") -> go.Figure:
    """
    每条轨迹每个分量一条曲线，同一分量同色

    Args:
        trajectories: (序号, 轨迹) 列表
        title: 图标题
    """
    fig = go.Figure()
    for index, traj in trajectories:
        for i, (name, color) in enumerate(COMPONENT_COLORS.items()):
            fig.add_trace(go.Scatter(
                x=traj.times,
                y=traj.component(i),
                mode="lines",
                name=f"#{index} {name}",
                legendgroup=name,
                line=dict(color=color, width=1.5),
            ))

    fig.update_layout(
        title=title,
        xaxis_title="t",
        yaxis_title="种群密度",
        legend=dict(orientation="h", yanchor="bottom", y=1.02, xanchor="right", x=1),
        height=500,
        width=900,
        margin=dict(l=50, r=50, t=80, b=50),
    )
    return fig


def write_trajectory_svg(trajectories: Sequence[tuple[int, Trajectory]], path: Path, title: str = "") -> bool:
    """
    导出 SVG；图只作展示，导出失败记日志后返回 False

    Returns:
        bool: 是否写出成功
    """
    fig = build_trajectory_figure(trajectories, title)
    try:
        fig.write_image(str(path), format="svg")
    except Exception as e:
        logger.warning(f"SVG 导出失败 ({path}): {e}")
        return False
    logger.info(f"轨迹图已写出: {path}")
    return True
