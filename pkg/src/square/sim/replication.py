"""Canned replication experiments with pass/fail verdicts against reference values."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .illustrative import run_illustrative
from .risk import RiskScenario, optimize_risk

__all__ = ["Check", "EXPERIMENTS", "illustrative_checks", "prop1_checks", "risk_weight_checks"]

RATIO = 1e4  # n1 / n0


@dataclass(frozen=True)
class Check:
    name: str
    observed: object
    expected: str
    passed: bool

    def line(self) -> str:
        obs = np.array2string(np.asarray(self.observed), precision=6) if np.ndim(self.observed) else \
            f"{float(self.observed):.6g}"
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: observed {obs}, expected {self.expected}"


def disjoint_scenario(n0=1e3):
    return RiskScenario(p1=2, p2=2, n0=n0, n1=RATIO * n0, sigma2=1.0, s1=1.0, s2=1.0, s3=0.1)


def overlap_scenario(n0=1e5):
    # the approach to (1, 0, 0) is O(p sigma2 / (n0 s)), so n0 must be large for a 1e-3 match
    return RiskScenario(p1=2, p2=2, n0=n0, n1=RATIO * n0, sigma2=1.0, s1=1.0, s2=1.0, s3=0.1,
                        s_star=1.0, p_star=2)


def risk_weight_checks(seed=None) -> list:
    w_dis, _ = optimize_risk(disjoint_scenario(), "box")
    w_ovl, _ = optimize_risk(overlap_scenario(), "box")
    return [
        Check("disjoint blocks, box optimum", w_dis, "(0, 1, 1) +- 1e-3",
              bool(np.max(np.abs(w_dis - [0, 1, 1])) <= 1e-3)),
        Check("shared covariates, box optimum", w_ovl, "(1, 0, 0) +- 1e-3",
              bool(np.max(np.abs(w_ovl - [1, 0, 0])) <= 1e-3)),
    ]


def prop1_checks(seed=None) -> list:
    sc2 = disjoint_scenario()
    _, r1 = optimize_risk(sc2, "box")
    _, r2 = optimize_risk(sc2, "simplex")
    ratio = (r2 - r1) / ((sc2.p1 + sc2.p2) * sc2.sigma2)
    sc1 = RiskScenario(p1=2, p2=2, n0=1e3, n1=RATIO * 1e3, sigma2=1.0, s1=1.0, s2=0.0, s3=0.1)
    _, q1 = optimize_risk(sc1, "box")
    _, q2 = optimize_risk(sc1, "simplex")
    return [
        Check("both blocks informative: (R2* - R1*) / ((p1 + p2) sigma2)", ratio, "in [0.9, 1.1]",
              bool(0.9 <= ratio <= 1.1)),
        Check("one block informative: (R2* - R1*) / R1*", (q2 - q1) / q1, "< 0.05", bool(q2 - q1 < 0.05 * q1)),
    ]


def illustrative_checks(seed=0, reps=1000) -> list:
    res = run_illustrative(20, 200, reps, seed)
    sq, alt, altb = res.square.mean(), res.alternative.mean(), res.alternative_box.mean()
    return [
        Check("distinct-block candidates (box weights), mean risk", sq, "in [0.058, 0.118] (reference 0.088)",
              bool(0.058 <= sq <= 0.118)),
        Check("common-block-repeated candidates (simplex weights), mean risk", alt,
              "in [0.21, 0.33] (reference 0.268)", bool(0.21 <= alt <= 0.33)),
        Check("distinct-block risk below repeated-common risk", sq - alt, "< 0", bool(sq < alt)),
        Check("diagnostic: repeated-common candidates with box weights, mean risk", altb, "reported only", True),
    ]


EXPERIMENTS = {
    "illustrative": illustrative_checks,
    "prop1": prop1_checks,
    "risk-weights": risk_weight_checks,
}
