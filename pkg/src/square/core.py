"""Split-questionnaire averaged regression (SQUARE).

One candidate smoother is fit per data block: OLS on the complete cases
(D_0, all covariates), a smoother on the common covariates over every
incomplete case (D_1), and one smoother per further block on its own cases
(D_{m+1}). The weights live in the unit box and minimize the squared
prediction error on the complete cases, where the complete-case candidate
enters through its leave-one-out predictions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import clone
from sklearn.utils.validation import check_is_fitted

from ._base import BlockEstimator
from ._validation import check_block_array
from .block_data import BlockPartition, SqdDataset, split_blocks
from .box_qp import QpProblem, solve_box
from .exceptions import (
    DataError,
    InsufficientCasesError,
    LeverageSingularityError,
    NumericalError,
    PredictionInputError,
)
from .smoothers import LinearSmoother

__all__ = [
    "AveragedModel",
    "Candidate",
    "CandidateSet",
    "CriterionSystem",
    "SquareRegressor",
    "WeightSolution",
    "assemble_system",
    "build_candidates",
    "fit_square",
    "loocv_transform",
    "solve_weights",
]

LEVERAGE_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class Candidate:
    """A fitted smoother and the covariate columns it reads at prediction time."""

    block_id: int
    covariates: tuple
    smoother: LinearSmoother

    def predict(self, X) -> np.ndarray:
        return self.smoother.predict(np.asarray(X)[:, list(self.covariates)])

    def to_dict(self) -> dict:
        return {"block_id": self.block_id, "covariates": list(self.covariates), "smoother": self.smoother.to_dict()}

    @classmethod
    def from_dict(cls, d) -> "Candidate":
        return cls(d["block_id"], tuple(d["covariates"]), LinearSmoother.from_dict(d["smoother"]))


def weighted_predict(candidates, weights, X, covariate_names=None) -> np.ndarray:
    """``sum_m weights[m] * candidates[m].predict(X)``; zero-weight candidates are not evaluated.

    Raises :class:`PredictionInputError` when a weighted candidate needs a
    covariate that is missing (NaN) in ``X``.
    """
    X = np.asarray(X, dtype=float)
    out = np.zeros(X.shape[0])
    for k, (cand, w) in enumerate(zip(candidates, weights)):
        if w == 0.0:
            continue
        cols = list(cand.covariates)
        missing = np.isnan(X[:, cols]).any(axis=0)
        if missing.any():
            j = cols[int(np.argmax(missing))]
            name = covariate_names[j] if covariate_names else f"column {j}"
            raise PredictionInputError(f"candidate {k} (block D{cand.block_id}) needs covariate {name!r}, "
                                       "which is missing in the new data")
        out += w * cand.predict(X)
    return out


@dataclass(frozen=True, eq=False)
class CandidateSet:
    """Fitted candidates in block order; D_1 is absent when the common block is empty."""

    candidates: tuple
    partition: BlockPartition

    def __len__(self):
        return len(self.candidates)

    def __getitem__(self, k):
        return self.candidates[k]

    def __iter__(self):
        return iter(self.candidates)

    @property
    def block_ids(self) -> tuple:
        return tuple(c.block_id for c in self.candidates)


def _smoother_for(smoothers, block_id):
    if smoothers is None:
        return LinearSmoother()
    if isinstance(smoothers, dict):
        return smoothers.get(block_id, LinearSmoother())
    return smoothers[block_id]


def build_candidates(dataset: SqdDataset, smoothers=None) -> CandidateSet:
    """Fit one candidate per data block.

    Parameters
    ----------
    dataset : SqdDataset
    smoothers : sequence or dict of LinearSmoother, optional
        Unfitted smoother per block id 0..M+1 (cloned before fitting).
        Defaults to OLS without intercept everywhere. Block 0 must be OLS,
        the only family for which the leave-one-out shortcut is exact.
    """
    spec0 = _smoother_for(smoothers, 0)
    if spec0.kind != "ols":
        raise DataError(f"the complete-case candidate must be OLS, got kind={spec0.kind!r}")
    if dataset.group_sizes[0] == 0:
        raise InsufficientCasesError("no complete cases")
    cands = []
    for block in split_blocks(dataset):
        if block.skip:
            continue
        if block.X.shape[0] == 0:
            raise InsufficientCasesError(f"D{block.block_id}: block has no cases")
        try:
            sm = clone(_smoother_for(smoothers, block.block_id)).fit(block.X, block.y)
        except NumericalError as e:
            raise e.with_block(block.block_id)
        cands.append(Candidate(block.block_id, block.covariates, sm))
    return CandidateSet(tuple(cands), dataset.partition)


def loocv_transform(H0, threshold: float = LEVERAGE_TOL) -> np.ndarray:
    """``G (H0 - I) + I`` with ``G = diag(1 / (1 - h_kk))``.

    Row i applied to the responses gives the prediction for case i from the
    fit without case i.
    """
    H0 = np.asarray(H0, dtype=float)
    h = np.diag(H0)
    bad = np.flatnonzero(h >= 1.0 - threshold)
    if bad.size:
        raise LeverageSingularityError(
            f"complete case {bad[0]} has leverage {h[bad[0]]:.12g} (>= 1 - {threshold:g}); "
            "the leave-one-out fit is undefined", case=int(bad[0]))
    n = H0.shape[0]
    return (H0 - np.eye(n)) / (1.0 - h)[:, None] + np.eye(n)


@dataclass(frozen=True, eq=False)
class CriterionSystem:
    """Stacked complete-case predictions ``U`` (one column per candidate) and targets ``y0``."""

    U: np.ndarray
    y0: np.ndarray
    max_leverage: float = float("nan")

    @property
    def A(self) -> np.ndarray:
        return self.U.T @ self.U

    @property
    def b(self) -> np.ndarray:
        return self.U.T @ self.y0

    def problem(self) -> QpProblem:
        return QpProblem(self.A, self.b)

    def criterion(self, w) -> float:
        r = self.y0 - self.U @ np.asarray(w, dtype=float)
        return float(r @ r)


def assemble_system(candidates: CandidateSet, dataset: SqdDataset) -> CriterionSystem:
    """Column 0: leave-one-out predictions of the complete-case fit; column k: candidate k
    evaluated on the complete cases' own covariate subset."""
    S0 = dataset.groups[0]
    X0 = dataset.X[S0]
    y0 = dataset.y[S0]
    cols = []
    lev = float("nan")
    for cand in candidates:
        if cand.block_id == 0:
            H0 = cand.smoother.hat_matrix(X0)
            lev = float(np.diag(H0).max())
            cols.append(loocv_transform(H0) @ y0)
        else:
            cols.append(cand.predict(X0))
    return CriterionSystem(np.column_stack(cols), y0.copy(), lev)


@dataclass(frozen=True, eq=False)
class WeightSolution:
    w: np.ndarray
    criterion: float
    kkt_residual: float
    iterations: int


def solve_weights(system: CriterionSystem) -> WeightSolution:
    """Minimize ``||y0 - U w||^2`` over ``[0, 1]^d``."""
    sol = solve_box(system.problem())
    return WeightSolution(sol.w, system.criterion(sol.w), sol.kkt_residual, sol.iterations)


@dataclass(frozen=True, eq=False)
class AveragedModel:
    """Fitted SQUARE predictor: candidates, box weights and fit diagnostics."""

    candidates: CandidateSet
    weights: np.ndarray
    criterion: float
    diagnostics: dict = field(default_factory=dict)
    covariate_names: tuple = ()

    method = "SQUARE"

    @property
    def partition(self) -> BlockPartition:
        return self.candidates.partition

    def predict(self, X) -> np.ndarray:
        X = check_block_array(X, self.partition.p)
        return weighted_predict(self.candidates, self.weights, X, self.covariate_names)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "partition": self.partition.to_dict(),
            "covariate_names": list(self.covariate_names),
            "candidates": [c.to_dict() for c in self.candidates],
            "weights": self.weights.tolist(),
            "criterion": self.criterion,
            "diagnostics": self.diagnostics,
        }

    @classmethod
    def from_dict(cls, d) -> "AveragedModel":
        part = BlockPartition.from_dict(d["partition"])
        cands = CandidateSet(tuple(Candidate.from_dict(c) for c in d["candidates"]), part)
        return cls(cands, np.asarray(d["weights"], dtype=float), float(d["criterion"]),
                   dict(d.get("diagnostics", {})), tuple(d.get("covariate_names", ())))


def fit_square(dataset: SqdDataset, smoothers=None) -> AveragedModel:
    cands = build_candidates(dataset, smoothers)
    system = assemble_system(cands, dataset)
    sol = solve_weights(system)
    solo = [system.criterion(np.eye(len(cands))[k]) for k in range(len(cands))]
    diagnostics = {
        "block_ids": list(cands.block_ids),
        "group_sizes": list(dataset.group_sizes),
        "max_leverage": system.max_leverage,
        "kkt_residual": sol.kkt_residual,
        "iterations": sol.iterations,
        "solo_criterion": solo,
    }
    return AveragedModel(cands, sol.w, sol.criterion, diagnostics, dataset.covariate_names)


class SquareRegressor(BlockEstimator):
    """Model averaging over block-wise candidates with weights in ``[0, 1]``.

    Parameters
    ----------
    block_sizes : sequence of int, optional
        Sizes of the common block and blocks 1..M, laid out contiguously.
    blocks : sequence of sequences of int, optional
        Explicit column index sets instead of ``block_sizes``.
    smoothers : sequence or dict of LinearSmoother, optional
        Per-block candidate smoothers (block ids 0..M+1). Default: OLS.

    Attributes
    ----------
    model_ : AveragedModel
    weights_ : ndarray
        One weight per fitted candidate, in block-id order.
    criterion_ : float
    """

    def __init__(self, block_sizes=None, blocks=None, smoothers=None):
        self.block_sizes = block_sizes
        self.blocks = blocks
        self.smoothers = smoothers

    def fit_dataset(self, dataset: SqdDataset):
        self.model_ = fit_square(dataset, self.smoothers)
        self.partition_ = dataset.partition
        self.weights_ = self.model_.weights
        self.criterion_ = self.model_.criterion
        self.n_features_in_ = dataset.partition.p
        return self

    def _predict(self, X):
        return self.model_.predict(X)

    @property
    def candidates_(self) -> CandidateSet:
        check_is_fitted(self, "model_")
        return self.model_.candidates
