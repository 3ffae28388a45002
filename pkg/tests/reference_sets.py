"""测试用的参照系数集（常数），包络值均可手算"""

INVARIANCE_CONSTANTS = dict(
    a1=10.0, a2=10.0, a3=0.1, b11=1.0, b12=0.1, b21=0.1, b22=1.0,
    c1=0.1, c2=0.1, d1=1.0, d2=1.0, alpha=1.0, beta=1.0, gamma=1.0,
)

EXTINCTION_CONSTANTS = dict(
    a1=1.0, a2=1.0, a3=1.0, b11=1.0, b12=1.0, b21=1.0, b22=1.0,
    c1=1.0, c2=1.0, d1=0.1, d2=0.1, alpha=1.0, beta=1.0, gamma=1.0,
)

STABILITY_CONSTANTS = dict(
    a1=1.0, a2=1.0, a3=0.1, b11=1.0, b12=0.01, b21=0.01, b22=1.0,
    c1=1e-4, c2=1e-4, d1=0.5, d2=0.5, alpha=1.0, beta=1.0, gamma=1.0,
)

ALL_ONES_CONSTANTS = {name: 1.0 for name in INVARIANCE_CONSTANTS}
