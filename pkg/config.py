"""
BD Predator-Prey 项目配置文件
"""
from pathlib import Path

# 项目根目录
PROJECT_ROOT = Path(__file__).parent

# ==================== 路径配置 ====================
LOG_DIR = PROJECT_ROOT / "data" / "logs"
DEFAULT_OUTPUT_DIR = PROJECT_ROOT / "data" / "output"

# 确保目录存在
LOG_DIR.mkdir(parents=True, exist_ok=True)

# ==================== 系数配置 ====================
SUPREMUM_GRID_POINTS = 100_000   # 上确界网格点数: grid_step = horizon / 10^5
SIMPSON_PANELS = 10_000          # 分段线性系数积分的 Simpson 面板数

# ==================== 包络配置 ====================
EPSILON_MAX = 1e-2               # ε 搜索起点
EPSILON_SHRINK_FACTOR = 0.5      # 几何收缩因子
EPSILON_SHRINK_STEPS = 60        # 最多尝试次数

# ==================== 积分器配置 ====================
POSITIVITY_FLOOR = 1e-30         # 正性下限
MAX_CONSECUTIVE_HALVINGS = 40    # 连续减半次数上限
GUARD_RELEASE_STEPS = 8          # 连续通过正性检查多少步后解除步长上限
REL_TOL = 1e-9
ABS_TOL = 1e-12
MAX_STEPS = 1_000_000
SAMPLE_COUNT = 1000              # 默认 sample_interval = (t_end - t0) / 1000

# ==================== 分析配置 ====================
HORIZON = 200.0
TAIL_FRACTION = 0.25
EXTINCTION_THRESHOLD = 1e-6
EXTINCTION_HOLD = 10.0
MONOTONE_TOL = 1e-12
LYAPUNOV_STEP_TOL = 1e-9
LYAPUNOV_NOISE_FACTOR = 100      # V 单步噪声上限 = 该倍数 × 积分相对容差
CONVERGENCE_TOL = 1e-4
MIN_SEPARATION = 1e-10
BAND_TOL = 1e-9
COMPARISON_TOL = 1e-6
MIN_TAIL_SAMPLES = 10

# ==================== 命令行配置 ====================
SCENARIO_VERSION = 1
CSV_FLOAT_FORMAT = "%.17g"       # 17 位有效数字，二进制浮点无损往返
MAX_SWEEP_AXES = 2
