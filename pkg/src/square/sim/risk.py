"""Idealized risk of the weighted predictor for two incomplete blocks.

The setting has no common block, candidates fit by least squares on
blocks 1 and 2 (sizes ``p1``, ``p2``), and a complete-case full model. A
third block of signal ``s3`` is never modelled. Designs are orthonormal
within every group (``X_k^T X_l / n = delta_kl I``), which reduces the bias
to a closed form in the block signals. With an overlap ``Delta*`` shared by
both blocks, ``p1`` and ``p2`` count the exclusive covariates only, and the
bias at the complete cases is

    n0 * [ (1-w0-w1)^2 s1 + (1-w0-w2)^2 s2 + (1-w0-w1-w2)^2 s* + s3 ]

while the variance is

    w0^2 (p1+p2+p*) sigma2 + (n0/n1) [ w1^2 (p1+p*) + w2^2 (p2+p*) ] sigma2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..box_qp import QpProblem, solve_box, solve_simplex
from ..exceptions import ConfigError

__all__ = ["RiskScenario", "optimize_risk", "risk_idealized", "risk_quadratic"]


@dataclass(frozen=True)
class RiskScenario:
    p1: int
    p2: int
    n0: float
    n1: float
    sigma2: float
    s1: float
    s2: float
    s3: float
    s_star: float = 0.0
    p_star: int = 0

    def __post_init__(self):
        if min(self.s1, self.s2, self.s3, self.s_star) < 0:
            raise ConfigError("block signals must be non-negative")
        if min(self.p1, self.p2, self.p_star) < 0 or self.p1 + self.p2 + self.p_star == 0:
            raise ConfigError("block sizes must be non-negative and not all zero")
        if self.n0 <= 0 or self.n1 <= 0 or self.sigma2 < 0:
            raise ConfigError("sample sizes must be positive and sigma2 non-negative")
        if (self.p_star == 0) != (self.s_star == 0):
            raise ConfigError("an overlap signal needs overlap covariates and vice versa")


# loading of each signal component on (w0, w1, w2)
_LOADINGS = {"s1": (1.0, 1.0, 0.0), "s2": (1.0, 0.0, 1.0), "s_star": (1.0, 1.0, 1.0)}


def risk_quadratic(scenario: RiskScenario):
    """``(A, b, c)`` with ``R(w) = w^T A w - 2 b^T w + c``."""
    sc = scenario
    A = np.zeros((3, 3))
    b = np.zeros(3)
    for key, load in _LOADINGS.items():
        a = np.asarray(load)
        s = getattr(sc, key)
        A += sc.n0 * s * np.outer(a, a)
        b += sc.n0 * s * a
    ratio = sc.n0 / sc.n1
    A += np.diag([
        (sc.p1 + sc.p2 + sc.p_star) * sc.sigma2,
        ratio * (sc.p1 + sc.p_star) * sc.sigma2,
        ratio * (sc.p2 + sc.p_star) * sc.sigma2,
    ])
    c = sc.n0 * (sc.s1 + sc.s2 + sc.s_star + sc.s3)
    return A, b, c


def risk_idealized(scenario: RiskScenario, w) -> float:
    """Closed-form risk at weights ``w = (w0, w1, w2)``."""
    sc = scenario
    w0, w1, w2 = (float(v) for v in w)
    bias = sc.n0 * ((1 - w0 - w1) ** 2 * sc.s1 + (1 - w0 - w2) ** 2 * sc.s2
                    + (1 - w0 - w1 - w2) ** 2 * sc.s_star + sc.s3)
    var = (w0 ** 2 * (sc.p1 + sc.p2 + sc.p_star)
           + sc.n0 / sc.n1 * (w1 ** 2 * (sc.p1 + sc.p_star) + w2 ** 2 * (sc.p2 + sc.p_star))) * sc.sigma2
    return bias + var


def optimize_risk(scenario: RiskScenario, constraint: str = "box"):
    """Minimize the risk over the unit box or the simplex.

    Returns
    -------
    w : ndarray of shape (3,)
    risk : float
    """
    A, b, _ = risk_quadratic(scenario)
    problem = QpProblem(A, b)
    if constraint == "box":
        sol = solve_box(problem)
    elif constraint == "simplex":
        sol = solve_simplex(problem)
    else:
        raise ConfigError(f"constraint must be 'box' or 'simplex', got {constraint!r}")
    return sol.w, risk_idealized(scenario, sol.w)
