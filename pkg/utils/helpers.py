"""
辅助函数模块
"""
import math

import pandas as pd


def format_number(value, digits: int = 6) -> str:
    """
    以 digits 位有效数字格式化数值，None / nan 显示为 "-"

    Examples:
        >>> format_number(198.99999999)
        '199'
        >>> format_number(None)
        '-'
    """
    if value is None:
        return "-"
    value = float(value)
    if math.isnan(value):
        return "-"
    return f"{value:.{digits}g}"


def format_state(values, digits: int = 6) -> str:
    """(x1, x2, x3) -> "(8.9, 8.9, 170)" """
    return "(" + ", ".join(format_number(v, digits) for v in values) + ")"


def format_table(df: pd.DataFrame) -> str:
    """
    把表格渲染为左对齐的纯文本，供标准输出打印

    Args:
        df: 任意列的 DataFrame，单元格按 str() 显示

    Returns:
        str: 带表头和分隔线的文本
    """
    if df.empty:
        return "(空)"
    columns = [str(c) for c in df.columns]
    rows = [[str(v) for v in row] for row in df.itertuples(index=False)]
    widths = [max(len(columns[i]), *(len(r[i]) for r in rows)) for i in range(len(columns))]

    def render(cells):
        return "  ".join(cell.ljust(width) for cell, width in zip(cells, widths)).rstrip()

    lines = [render(columns), render(["-" * w for w in widths])]
    lines.extend(render(r) for r in rows)
    return "\n".join(lines)


def parse_axis_spec(spec: str) -> tuple[str, float, float, int]:
    """
    解析扫描轴 NAME:LOW:HIGH:COUNT

    Examples:
        >>> parse_axis_spec("a3:0.1:3:20")
        ('a3', 0.1, 3.0, 20)

    Raises:
        ValueError: 格式错误、区间非正或 COUNT < 1
    """
    parts = spec.split(":")
    if len(parts) != 4:
        raise ValueError(f"扫描轴格式应为 NAME:LOW:HIGH:COUNT，实际为 {spec!r}")
    name = parts[0].strip()
    try:
        low, high = float(parts[1]), float(parts[2])
        count = int(parts[3])
    except ValueError:
        raise ValueError(f"扫描轴数值无法解析: {spec!r}") from None
    if not name:
        raise ValueError(f"扫描轴缺少系数名: {spec!r}")
    if not (math.isfinite(low) and math.isfinite(high) and 0 < low <= high):
        raise ValueError(f"扫描区间需要 0 < LOW ≤ HIGH: {spec!r}")
    if count < 1:
        raise ValueError(f"COUNT 至少为 1: {spec!r}")
    return name, low, high, count
