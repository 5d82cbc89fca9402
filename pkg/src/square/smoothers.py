"""Linear smoothers: estimators whose predictions are linear in the training responses.

Every smoother here fits least squares on a (possibly basis-expanded,
possibly penalized) design, so a prediction at ``x`` is ``psi(x) @ y_train``
for a weight vector ``psi(x)`` that depends on the design only.

Ridge penalties act on the raw covariate scale; no standardization is done,
so ``alpha`` is scale dependent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import BSpline
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_design, check_response
from .exceptions import (
    DataError,
    DegenerateCovariateError,
    InsufficientCasesError,
    SingularDesignError,
)

__all__ = ["BasisExpansion", "LinearSmoother", "make_basis"]

KINDS = ("ols", "ridge", "spline")
RANK_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class BasisExpansion:
    """Additive B-spline basis with one shared intercept column.

    Each covariate gets the B-splines of ``degree`` on its full knot vector
    with the first basis function dropped: the per-covariate basis sums to
    one, so keeping all of them would be collinear with the intercept.
    """

    knots: tuple
    degree: int

    @property
    def n_columns(self) -> int:
        return 1 + sum(len(t) - self.degree - 2 for t in self.knots)

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != len(self.knots):
            raise DataError(f"basis expects {len(self.knots)} covariates, got shape {X.shape}")
        cols = [np.ones((X.shape[0], 1))]
        for j, t in enumerate(self.knots):
            B = BSpline.design_matrix(X[:, j], t, self.degree, extrapolate=True).toarray()
            cols.append(B[:, 1:])
        return np.hstack(cols)

    def to_dict(self) -> dict:
        return {"degree": self.degree, "knots": [t.tolist() for t in self.knots]}

    @classmethod
    def from_dict(cls, d) -> "BasisExpansion":
        return cls(tuple(np.asarray(t, dtype=float) for t in d["knots"]), int(d["degree"]))


def make_basis(X, degree: int = 3, n_knots: int = 0) -> BasisExpansion:
    """Place ``n_knots`` interior knots at the empirical quantiles j/(K+1) of each covariate.

    Boundary knots sit at the training minimum and maximum with multiplicity
    ``degree + 1``. Interior quantiles that coincide with each other or with a
    boundary (e.g. binary covariates) are dropped so knots stay strictly
    increasing.
    """
    X = check_design(X)
    if degree not in (1, 2, 3):
        raise DataError(f"spline degree must be 1, 2 or 3, got {degree}")
    if n_knots < 0:
        raise DataError(f"n_knots must be >= 0, got {n_knots}")
    knots = []
    for j in range(X.shape[1]):
        x = X[:, j]
        lo, hi = x.min(), x.max()
        if not hi > lo:
            raise DegenerateCovariateError(f"covariate {j} is constant; cannot place a spline basis")
        qs = np.quantile(x, np.arange(1, n_knots + 1) / (n_knots + 1))
        inner = np.unique(qs[(qs > lo) & (qs < hi)])
        knots.append(np.concatenate([np.full(degree + 1, lo), inner, np.full(degree + 1, hi)]))
    return BasisExpansion(tuple(knots), degree)


class LinearSmoother(BaseEstimator, RegressorMixin):
    """Least-squares type smoother exposing its prediction weights.

    Parameters
    ----------
    kind : {'ols', 'ridge', 'spline'}, default='ols'
        ``'spline'`` fits least squares on an additive B-spline basis,
        which always carries its own intercept column.
    alpha : float, default=0.0
        Ridge penalty; used only when ``kind='ridge'``. The intercept is
        never penalized.
    degree : int, default=3
        Spline degree (1, 2 or 3).
    n_knots : int, default=0
        Interior knots per covariate for splines.
    fit_intercept : bool, default=False
        Add a column of ones for ``'ols'`` and ``'ridge'``. Off by default
        because block designs usually carry the intercept as a covariate.

    Attributes
    ----------
    coef_ : ndarray of shape (q,)
        Coefficients on the expanded design.
    basis_ : BasisExpansion or None
    n_train_ : int
    """

    def __init__(self, kind="ols", alpha=0.0, degree=3, n_knots=0, fit_intercept=False):
        self.kind = kind
        self.alpha = alpha
        self.degree = degree
        self.n_knots = n_knots
        self.fit_intercept = fit_intercept

    def _check_params(self):
        if self.kind not in KINDS:
            raise DataError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.alpha < 0:
            raise DataError(f"alpha must be >= 0, got {self.alpha}")
        if self.kind == "spline":
            if self.degree not in (1, 2, 3):
                raise DataError(f"spline degree must be 1, 2 or 3, got {self.degree}")
            if self.n_knots < 0:
                raise DataError(f"n_knots must be >= 0, got {self.n_knots}")

    @property
    def _has_intercept(self):
        return self.kind == "spline" or bool(self.fit_intercept)

    def _design(self, X):
        if self.basis_ is not None:
            return self.basis_.transform(X)
        if self.fit_intercept:
            return np.hstack([np.ones((X.shape[0], 1)), X])
        return X

    def _check_query(self, X):
        check_is_fitted(self, "coef_")
        X = check_design(X, allow_empty=self.n_features_in_ == 0)
        if X.shape[1] != self.n_features_in_:
            raise DataError(f"smoother was fit on {self.n_features_in_} covariates, got {X.shape[1]}")
        return X

    def fit(self, X, y):
        self._check_params()
        X = check_design(X, allow_empty=self.fit_intercept or self.kind == "spline")
        y = check_response(y, X.shape[0])
        self.n_features_in_ = X.shape[1]
        self.basis_ = make_basis(X, self.degree, self.n_knots) if self.kind == "spline" else None
        D = self._design(X)
        n, q = D.shape
        if q == 0:
            raise InsufficientCasesError("design has no columns")
        if self.kind != "ridge" or self.alpha == 0:
            if n < q:
                raise InsufficientCasesError(f"{n} training cases for {q} parameters")
            A = D
        else:
            pen = np.sqrt(self.alpha) * np.eye(q)
            if self._has_intercept:
                pen = pen[1:]
            A = np.vstack([D, pen])
        U, s, Vt = np.linalg.svd(A, full_matrices=False)
        if s.size < q or s[-1] < RANK_TOL * s[0]:
            cond = np.inf if s.size < q or s[-1] == 0 else s[0] / s[-1]
            raise SingularDesignError(f"rank-deficient design (condition number estimate {cond:.3g})", cond)
        # q x n map from training responses to coefficients
        self.coef_map_ = (Vt.T / s) @ U[:n].T
        self.coef_ = self.coef_map_ @ y
        self.y_train_ = y
        self.n_train_ = n
        return self

    def predict(self, X):
        X = self._check_query(X)
        return self._design(X) @ self.coef_

    def hat_matrix(self, X_query):
        """Rows of prediction weights: ``hat_matrix(Xq) @ y_train == predict(Xq)``."""
        X_query = self._check_query(X_query)
        if not hasattr(self, "coef_map_"):
            raise DataError("prediction weights are unavailable for a smoother restored from coefficients")
        return self._design(X_query) @ self.coef_map_

    def prediction_weights(self, x):
        """Weight vector psi(x) over the training responses for one covariate vector."""
        x = np.asarray(x, dtype=float).reshape(1, -1)
        return self.hat_matrix(x)[0]

    @property
    def n_parameters(self) -> int:
        check_is_fitted(self, "coef_")
        return self.coef_.shape[0]

    def to_dict(self) -> dict:
        check_is_fitted(self, "coef_")
        return {
            "params": self.get_params(),
            "n_features": self.n_features_in_,
            "coef": self.coef_.tolist(),
            "basis": None if self.basis_ is None else self.basis_.to_dict(),
        }

    @classmethod
    def from_dict(cls, d) -> "LinearSmoother":
        """Restore a prediction-only smoother (no training responses or weights)."""
        sm = cls(**d["params"])
        sm.n_features_in_ = int(d["n_features"])
        sm.coef_ = np.asarray(d["coef"], dtype=float)
        sm.basis_ = None if d["basis"] is None else BasisExpansion.from_dict(d["basis"])
        return sm
