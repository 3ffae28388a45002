"""
异常定义

所有领域异常继承自 ModelError，同时继承最接近的内置异常，
调用方既可以按领域捕获，也可以按 ValueError / RuntimeError 捕获。
"""
from typing import Optional


class ModelError(Exception):
    """领域异常基类"""


# ==================== 系数 ====================

class InvalidCoefficient(ModelError, ValueError):
    """系数下界不为正，或系数形式本身不合法"""

    def __init__(self, message: str, name: Optional[str] = None):
        super().__init__(message)
        self.name = name


class NonFiniteExpression(ModelError, ValueError):
    """上确界表达式在某个网格点返回非有限值"""


# ==================== 模型 ====================

class DegenerateDenominator(ModelError, ArithmeticError):
    """分母 α + βx + γx3（或 logistic 解的分母）不为正"""


class NonFiniteState(ModelError, ValueError):
    """状态或导数出现 nan / inf"""


# ==================== 包络 ====================

class DivisionByZero(ModelError, ZeroDivisionError):
    """包络公式分母为零，说明系数集不合法"""


class EpsilonSearchFailed(ModelError, RuntimeError):
    """ε=0 条件成立，但几何收缩后仍找不到可用的 ε"""

    def __init__(self, message: str, smallest_epsilon: float):
        super().__init__(message)
        self.smallest_epsilon = smallest_epsilon


class InadmissibleEnvelope(ModelError, ValueError):
    """包络不满足 0 < m_i < M_i"""


# ==================== 积分器 ====================

class IntegrationError(ModelError, RuntimeError):
    """积分失败基类"""


class InvalidInitialState(IntegrationError, ValueError):
    """初值不在正锥内，或时间区间非法"""


class PositivityBreach(IntegrationError):
    """
    连续减半后状态仍被压在正性下限

    Attributes:
        time: 出错时刻
        component: 触发的分量下标 (0, 1, 2)
        partial: 截至最后一个被接受状态的轨迹（可能为 None）
    """

    def __init__(self, message: str, time: float, component: int, partial=None):
        super().__init__(message)
        self.time = time
        self.component = component
        self.partial = partial


class StepLimitExceeded(IntegrationError):
    """步数超过 max_steps"""


# ==================== 分析 ====================

class EmptyTail(ModelError, ValueError):
    """尾部窗口样本数不足"""


class MismatchedSampling(ModelError, ValueError):
    """两条轨迹采样时刻不一致"""


# ==================== 场景 / 命令行 ====================

class ScenarioError(ModelError):
    """场景文件错误基类"""


class ParseError(ScenarioError, ValueError):
    """JSON 文本格式错误或出现未知字段"""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        super().__init__(message)
        self.line = line
        self.column = column


class ValidationError(ScenarioError, ValueError):
    """结构合法但违反不变量"""

    def __init__(self, message: str, field: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class SweepAxisNotConstant(ModelError, ValueError):
    """扫描的系数在基础场景中不是常数"""
