"""Competing estimators: complete-case OLS, CC-JMA and IMP-MMA.

CC-JMA
    OLS candidates on the common block plus one further block, each trained
    on the complete cases together with that block's cases, averaged with
    simplex weights chosen by leave-one-out error on the complete cases.
IMP-MMA
    Missing covariates replaced by zero; OLS candidates on the same
    covariate sets over all cases, simplex weights minimizing Mallows' C_p.

Both optionally add the full model on all covariates (trained on the
complete cases for CC-JMA, on the zero-filled data for IMP-MMA). It is
dropped automatically when it coincides with a block model (M = 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._base import BlockEstimator
from ._validation import check_block_array
from .block_data import BlockPartition, SqdDataset
from .box_qp import QpProblem, solve_simplex
from .core import Candidate, loocv_transform, weighted_predict
from .exceptions import InsufficientCasesError, LeverageSingularityError, NumericalError
from .smoothers import LinearSmoother

__all__ = [
    "BaselineModel",
    "CCJMARegressor",
    "CompleteCaseRegressor",
    "IMPMMARegressor",
    "fit_cc",
    "fit_cc_jma",
    "fit_imp_mma",
    "mallows_weights",
    "predict_baseline",
]

METHODS = ("CC", "CC-JMA", "IMP-MMA")


@dataclass(frozen=True, eq=False)
class BaselineModel:
    method: str
    candidates: tuple
    weights: np.ndarray
    partition: BlockPartition
    sigma2: float | None = None
    covariate_names: tuple = ()

    def predict(self, X) -> np.ndarray:
        X = check_block_array(X, self.partition.p)
        if self.method == "IMP-MMA":
            X = np.nan_to_num(X, nan=0.0)
        return weighted_predict(self.candidates, self.weights, X, self.covariate_names)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "partition": self.partition.to_dict(),
            "covariate_names": list(self.covariate_names),
            "candidates": [c.to_dict() for c in self.candidates],
            "weights": self.weights.tolist(),
            "sigma2": self.sigma2,
        }

    @classmethod
    def from_dict(cls, d) -> "BaselineModel":
        return cls(d["method"], tuple(Candidate.from_dict(c) for c in d["candidates"]),
                   np.asarray(d["weights"], dtype=float), BlockPartition.from_dict(d["partition"]),
                   d.get("sigma2"), tuple(d.get("covariate_names", ())))


def predict_baseline(model: BaselineModel, X_new) -> np.ndarray:
    return model.predict(X_new)


def _candidate_sets(partition, include_full):
    sets = [partition.observed(m) for m in range(1, partition.M + 1)]
    full = tuple(range(partition.p))
    if include_full and full not in sets:
        sets.append(full)
    return sets


def _ols(X, y, fit_intercept):
    return LinearSmoother(fit_intercept=fit_intercept).fit(X, y)


def fit_cc(dataset: SqdDataset, fit_intercept=False) -> BaselineModel:
    """OLS on the complete cases with every covariate."""
    S0 = dataset.groups[0]
    q = dataset.partition.p + int(fit_intercept)
    if len(S0) <= q:
        raise InsufficientCasesError(f"{len(S0)} complete cases for {q} parameters; need more cases than parameters")
    cols = tuple(range(dataset.partition.p))
    sm = _ols(dataset.X[S0], dataset.y[S0], fit_intercept)
    return BaselineModel("CC", (Candidate(0, cols, sm),), np.ones(1), dataset.partition,
                         covariate_names=dataset.covariate_names)


def _loo_on_leading_rows(sm, X_train, y_train, n_lead):
    """Leave-one-out predictions for the first ``n_lead`` training rows of an OLS fit."""
    H = sm.hat_matrix(X_train[:n_lead])
    h = H[np.arange(n_lead), np.arange(n_lead)]
    bad = np.flatnonzero(h >= 1.0 - 1e-8)
    if bad.size:
        raise LeverageSingularityError(f"complete case {bad[0]} has leverage {h[bad[0]]:.12g}", case=int(bad[0]))
    fitted = H @ y_train
    return (fitted - h * y_train[:n_lead]) / (1.0 - h)


def fit_cc_jma(dataset: SqdDataset, include_full=True, fit_intercept=False) -> BaselineModel:
    """Jackknife model averaging with the criterion evaluated on the complete cases."""
    part = dataset.partition
    S0 = dataset.groups[0]
    n0 = len(S0)
    if n0 == 0:
        raise InsufficientCasesError("no complete cases")
    cands, loo_cols = [], []
    for k, cols in enumerate(_candidate_sets(part, include_full)):
        m = k + 1 if k < part.M else 0
        rows = S0 if m == 0 else np.concatenate([S0, dataset.groups[m]])
        Xtr = dataset.X[np.ix_(rows, cols)]
        ytr = dataset.y[rows]
        try:
            sm = _ols(Xtr, ytr, fit_intercept)
            if m == 0:
                loo = loocv_transform(sm.hat_matrix(Xtr)) @ ytr
            else:
                loo = _loo_on_leading_rows(sm, Xtr, ytr, n0)
        except NumericalError as e:
            raise e.with_block(m)
        cands.append(Candidate(m, tuple(cols), sm))
        loo_cols.append(loo)
    U = np.column_stack(loo_cols)
    sol = solve_simplex(QpProblem.from_least_squares(U, dataset.y[S0]))
    return BaselineModel("CC-JMA", tuple(cands), sol.w, part, covariate_names=dataset.covariate_names)


def mallows_weights(F, y, sigma2, n_params):
    """Simplex weights minimizing ``||y - F w||^2 + 2 sigma2 * n_params @ w``."""
    F = np.asarray(F, dtype=float)
    b = F.T @ np.asarray(y, dtype=float) - sigma2 * np.asarray(n_params, dtype=float)
    return solve_simplex(QpProblem(F.T @ F, b)).w


def mallows_objective(F, y, sigma2, n_params, w) -> float:
    r = np.asarray(y) - np.asarray(F) @ w
    return float(r @ r + 2.0 * sigma2 * np.asarray(n_params, dtype=float) @ w)


def fit_imp_mma(dataset: SqdDataset, include_full=True, fit_intercept=False, sigma2=None) -> BaselineModel:
    """Mallows model averaging on zero-imputed covariates.

    ``sigma2`` defaults to the residual variance ``RSS / (n - q)`` of the
    candidate with the most parameters.
    """
    part = dataset.partition
    X0 = np.nan_to_num(dataset.X, nan=0.0)
    y = dataset.y
    cands, fitted, q = [], [], []
    for k, cols in enumerate(_candidate_sets(part, include_full)):
        m = k + 1 if k < part.M else 0
        try:
            sm = _ols(X0[:, cols], y, fit_intercept)
        except NumericalError as e:
            raise e.with_block(m)
        cands.append(Candidate(m, tuple(cols), sm))
        fitted.append(sm.predict(X0[:, cols]))
        q.append(sm.n_parameters)
    F = np.column_stack(fitted)
    if sigma2 is None:
        big = int(np.argmax(q))
        if dataset.n <= q[big]:
            raise InsufficientCasesError(f"{dataset.n} cases for {q[big]} parameters")
        r = y - F[:, big]
        sigma2 = float(r @ r / (dataset.n - q[big]))
    w = mallows_weights(F, y, sigma2, q)
    return BaselineModel("IMP-MMA", tuple(cands), w, part, sigma2, dataset.covariate_names)


class _BaselineRegressor(BlockEstimator):
    def _predict(self, X):
        return self.model_.predict(X)

    @property
    def weights_(self):
        return self.model_.weights


class CompleteCaseRegressor(_BaselineRegressor):
    """OLS on the complete cases only."""

    def __init__(self, block_sizes=None, blocks=None, fit_intercept=False):
        self.block_sizes = block_sizes
        self.blocks = blocks
        self.fit_intercept = fit_intercept

    def fit_dataset(self, dataset):
        self.model_ = fit_cc(dataset, self.fit_intercept)
        self.partition_ = dataset.partition
        return self


class CCJMARegressor(_BaselineRegressor):
    """Complete-case jackknife model averaging with simplex weights."""

    def __init__(self, block_sizes=None, blocks=None, include_full=True, fit_intercept=False):
        self.block_sizes = block_sizes
        self.blocks = blocks
        self.include_full = include_full
        self.fit_intercept = fit_intercept

    def fit_dataset(self, dataset):
        self.model_ = fit_cc_jma(dataset, self.include_full, self.fit_intercept)
        self.partition_ = dataset.partition
        return self


class IMPMMARegressor(_BaselineRegressor):
    """Zero-imputation Mallows model averaging with simplex weights."""

    def __init__(self, block_sizes=None, blocks=None, include_full=True, fit_intercept=False):
        self.block_sizes = block_sizes
        self.blocks = blocks
        self.include_full = include_full
        self.fit_intercept = fit_intercept

    def fit_dataset(self, dataset):
        self.model_ = fit_imp_mma(dataset, self.include_full, self.fit_intercept)
        self.partition_ = dataset.partition
        self.sigma2_ = self.model_.sigma2
        return self
