"""Model averaging for split-questionnaire (block-wise missing) regression data."""

from .baselines import (
    BaselineModel,
    CCJMARegressor,
    CompleteCaseRegressor,
    IMPMMARegressor,
    fit_cc,
    fit_cc_jma,
    fit_imp_mma,
    predict_baseline,
)
from .block_data import (
    BlockPartition,
    DataBlock,
    SqdDataset,
    detect_pattern,
    ingest_csv,
    make_partition,
    split_blocks,
)
from .box_qp import QpProblem, QpSolution, grid_oracle, project_simplex, solve_box, solve_simplex
from .core import AveragedModel, SquareRegressor, fit_square, loocv_transform
from .exceptions import DataError, NumericalError, SquareError
from .smoothers import LinearSmoother

__version__ = "0.1.0"

__all__ = [
    "AveragedModel",
    "BaselineModel",
    "BlockPartition",
    "CCJMARegressor",
    "CompleteCaseRegressor",
    "DataBlock",
    "DataError",
    "IMPMMARegressor",
    "LinearSmoother",
    "NumericalError",
    "QpProblem",
    "QpSolution",
    "SqdDataset",
    "SquareError",
    "SquareRegressor",
    "detect_pattern",
    "fit_cc",
    "fit_cc_jma",
    "fit_imp_mma",
    "fit_square",
    "grid_oracle",
    "ingest_csv",
    "loocv_transform",
    "make_partition",
    "predict_baseline",
    "project_simplex",
    "solve_box",
    "solve_simplex",
    "split_blocks",
]
