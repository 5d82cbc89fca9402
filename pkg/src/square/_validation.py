"""Input validation helpers shared by the estimators."""

import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import DataError


def check_design(X, allow_empty=False):
    """Finite 2-D float design; zero columns allowed only with ``allow_empty``."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        raise DataError("expected a 2-D covariate array, got 1-D; reshape with X.reshape(-1, 1)")
    if X.ndim == 2 and X.shape[1] == 0:
        if not allow_empty:
            raise DataError("design has zero columns")
        return X
    try:
        return check_array(X, dtype=np.float64, ensure_min_features=1)
    except ValueError as e:
        raise DataError(str(e)) from None


def check_block_array(X, p=None):
    """2-D float array in which NaN marks an unobserved covariate."""
    try:
        X = check_array(X, dtype=np.float64, ensure_all_finite="allow-nan")
    except ValueError as e:
        raise DataError(str(e)) from None
    if np.isinf(X).any():
        raise DataError("covariates contain infinite values")
    if p is not None and X.shape[1] != p:
        raise DataError(f"expected {p} covariate columns, got {X.shape[1]}")
    return X


def check_response(y, n):
    y = np.asarray(y, dtype=float).ravel()
    if y.shape[0] != n:
        raise DataError(f"y has {y.shape[0]} entries, X has {n} rows")
    if not np.isfinite(y).all():
        raise DataError("response contains missing or non-finite values")
    return y
