"""Synthetic split-questionnaire data with a modular covariate structure.

The response is linear in 1000 covariates. The first ``p`` of them are seen
by the estimators: an intercept, then correlated normals (mean one) with a
block covariance, some thresholded to binary. The remaining "tail"
covariates are independent standard normals with coefficients ``1/j`` and
are never shown to an estimator.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..block_data import SqdDataset, make_partition
from ..exceptions import ConfigError

__all__ = [
    "CoefficientVector",
    "SimConfig",
    "TestSet",
    "calibrate_signal",
    "coefficient_pattern",
    "gen_coefficients",
    "gen_covariance",
    "gen_dataset",
    "gen_design",
    "gen_test_set",
    "structure_sizes",
]

STRUCTURES = {"I": (3, 5, 5, 5, 5, 5), "II": (3, 15, 5, 5)}
TARGET_VAR_MU = 10.0
CALIBRATION_SEED = 20_200_917


def structure_sizes(structure) -> tuple:
    """Block sizes for a named structure, or the given sizes for a custom one."""
    if isinstance(structure, str):
        try:
            return STRUCTURES[structure]
        except KeyError:
            raise ConfigError(f"unknown structure {structure!r}; use 'I', 'II' or explicit block sizes") from None
    return tuple(int(s) for s in structure)


@dataclass(frozen=True)
class SimConfig:
    """One simulation setting.

    ``binarize`` holds 1-based covariate positions. With
    ``binarize_one_based_with_intercept`` (default) position 1 is the
    intercept, so position k is 0-based column k-1; otherwise position k is
    column k.
    """

    structure: object = "I"
    case: int = 1
    lambdas: tuple = (0.1, 0.3, 0.1)
    r2: float = 0.5
    n0: int = 50
    n1: int = 150
    n_test: int = 10_000
    n_grid: int = 2_000
    n_covariates: int = 1000
    binarize: tuple = (3, 8, 12, 16, 20, 24)
    threshold: float = 0.885
    binarize_one_based_with_intercept: bool = True
    B: int = 1000
    seed: int = 0
    pilot_size: int = 1_000_000

    def __post_init__(self):
        if isinstance(self.structure, (list, tuple)):
            object.__setattr__(self, "structure", tuple(int(s) for s in self.structure))
        object.__setattr__(self, "lambdas", tuple(float(v) for v in self.lambdas))
        object.__setattr__(self, "binarize", tuple(int(v) for v in self.binarize))
        sizes = structure_sizes(self.structure)
        if len(sizes) < 2 or any(s <= 0 for s in sizes):
            raise ConfigError(f"block sizes must be positive with M >= 1, got {sizes}")
        if self.case not in (1, 2, 3):
            raise ConfigError(f"coefficient case must be 1, 2 or 3, got {self.case}")
        if not 0.0 < self.r2 < 1.0:
            raise ConfigError(f"R^2 must lie in (0, 1), got {self.r2}")
        if len(self.lambdas) != 3:
            raise ConfigError("lambdas must be a triple")
        for name in ("n0", "n1", "n_test", "n_grid", "B", "pilot_size"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.n_covariates < sum(sizes):
            raise ConfigError(f"n_covariates={self.n_covariates} is smaller than p={sum(sizes)}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        for col in self.binary_columns:
            if not 1 <= col < sum(sizes):
                raise ConfigError(f"binarized position maps to column {col}, outside 1..{sum(sizes) - 1}")

    @property
    def sizes(self) -> tuple:
        return structure_sizes(self.structure)

    @property
    def p(self) -> int:
        return sum(self.sizes)

    @property
    def M(self) -> int:
        return len(self.sizes) - 1

    @property
    def binary_columns(self) -> tuple:
        shift = 1 if self.binarize_one_based_with_intercept else 0
        return tuple(k - shift for k in self.binarize)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["structure"] = self.structure if isinstance(self.structure, str) else list(self.structure)
        for k in ("lambdas", "binarize"):
            d[k] = list(d[k])
        return d


def gen_covariance(structure, lambdas=(0.1, 0.3, 0.1)) -> np.ndarray:
    """Correlation matrix of the ``p - 1`` non-intercept head covariates.

    Common-block covariates correlate ``lambdas[0]`` with everything; two
    covariates in the same further block ``lambdas[1]``; in different
    further blocks ``lambdas[2]``.
    """
    sizes = structure_sizes(structure)
    lam1, lam2, lam3 = lambdas
    label = np.repeat(np.arange(len(sizes)), sizes)[1:]
    same = label[:, None] == label[None, :]
    common = (label[:, None] == 0) | (label[None, :] == 0)
    omega = np.where(common, lam1, np.where(same, lam2, lam3))
    np.fill_diagonal(omega, 1.0)
    eig = np.linalg.eigvalsh(omega)[0]
    if eig <= 0:
        raise ConfigError(f"covariance is not positive definite (smallest eigenvalue {eig:.4g})")
    return omega


def coefficient_pattern(case: int, structure) -> np.ndarray:
    """Head coefficients before scaling: intercept 1, other common covariates 1/3,
    then per block all 1/3 (case 1), ``1/(2k-1)`` (case 2) or ``1/(m k)`` (case 3)."""
    sizes = structure_sizes(structure)
    parts = [np.array([1.0]), np.full(sizes[0] - 1, 1.0 / 3.0)]
    for m, d in enumerate(sizes[1:], start=1):
        k = np.arange(1, d + 1)
        if case == 1:
            parts.append(np.full(d, 1.0 / 3.0))
        elif case == 2:
            parts.append(1.0 / (2 * (k - 1) + 1))
        elif case == 3:
            parts.append(1.0 / k / m)
        else:
            raise ConfigError(f"coefficient case must be 1, 2 or 3, got {case}")
    return np.concatenate(parts)


@dataclass(frozen=True, eq=False)
class CoefficientVector:
    """Head coefficients ``c * pattern`` plus tail coefficients ``1/j`` for j = p+1..n_covariates."""

    pattern: np.ndarray
    c: float
    case: int
    n_covariates: int = 1000

    @property
    def head(self) -> np.ndarray:
        return self.c * self.pattern

    @property
    def tail(self) -> np.ndarray:
        return 1.0 / np.arange(self.pattern.shape[0] + 1, self.n_covariates + 1)

    @property
    def tail_variance(self) -> float:
        return float(np.sum(self.tail ** 2))


@dataclass(frozen=True, eq=False)
class TestSet:
    """Fully observed covariates with the noiseless regression function."""

    __test__ = False  # not a pytest class despite the name

    X: np.ndarray
    mu: np.ndarray


def gen_design(config: SimConfig, n: int, rng: np.random.Generator, chol=None) -> np.ndarray:
    """Draw ``n`` rows of the ``p`` observed covariates."""
    if chol is None:
        chol = np.linalg.cholesky(gen_covariance(config.structure, config.lambdas))
    Z = rng.standard_normal((n, config.p - 1)) @ chol.T + 1.0
    X = np.hstack([np.ones((n, 1)), Z])
    for col in config.binary_columns:
        X[:, col] = (X[:, col] >= config.threshold).astype(float)
    return X


def _tail_draw(coefs, n, rng):
    # the tail sum of independent N(0,1) covariates is exactly N(0, sum beta_j^2)
    return np.sqrt(coefs.tail_variance) * rng.standard_normal(n)


def calibrate_signal(config: SimConfig, pilot_size: int | None = None, seed: int = CALIBRATION_SEED):
    """Choose the head scale ``c`` so that var(mu) = 10, and the noise variance for the target R^2.

    Returns
    -------
    c : float
    sigma2 : float
        ``10 * (1 - R^2) / R^2``.
    """
    pilot_size = config.pilot_size if pilot_size is None else pilot_size
    pattern = coefficient_pattern(config.case, config.structure)
    tail_var = CoefficientVector(pattern, 1.0, config.case, config.n_covariates).tail_variance
    if tail_var >= TARGET_VAR_MU:
        raise ConfigError(f"tail variance {tail_var:.4g} leaves no room for var(mu) = {TARGET_VAR_MU}")
    rng = np.random.default_rng(seed)
    chol = np.linalg.cholesky(gen_covariance(config.structure, config.lambdas))
    chunk = 100_000
    total = s1 = s2 = 0.0
    # two-pass-free variance via shifted sums; shift by the first chunk's mean
    shift = None
    for start in range(0, pilot_size, chunk):
        n = min(chunk, pilot_size - start)
        h = gen_design(config, n, rng, chol) @ pattern
        if shift is None:
            shift = h.mean()
        d = h - shift
        total += n
        s1 += d.sum()
        s2 += d @ d
    v_head = (s2 - s1 * s1 / total) / (total - 1)
    c = float(np.sqrt((TARGET_VAR_MU - tail_var) / v_head))
    sigma2 = TARGET_VAR_MU * (1.0 - config.r2) / config.r2
    return c, sigma2


def gen_coefficients(config: SimConfig, pilot_size: int | None = None) -> CoefficientVector:
    c, _ = calibrate_signal(config, pilot_size)
    return CoefficientVector(coefficient_pattern(config.case, config.structure), c, config.case, config.n_covariates)


def gen_test_set(config: SimConfig, coefs: CoefficientVector, n: int, rng: np.random.Generator, chol=None) -> TestSet:
    X = gen_design(config, n, rng, chol)
    mu = X @ coefs.head + _tail_draw(coefs, n, rng)
    return TestSet(X, mu)


def gen_dataset(config: SimConfig, coefs: CoefficientVector, sigma2: float, rng, chol=None):
    """One replicate: a block-wise observed training set and a complete test set.

    ``rng`` is a Generator or a seed. Training rows are ordered S_0, S_1, ..., S_M.

    Returns
    -------
    train : SqdDataset
    test : TestSet
    """
    rng = np.random.default_rng(rng)
    if chol is None:
        chol = np.linalg.cholesky(gen_covariance(config.structure, config.lambdas))
    part = make_partition(config.p, config.sizes)
    n = config.n0 + config.M * config.n1
    X = gen_design(config, n, rng, chol)
    mu = X @ coefs.head + _tail_draw(coefs, n, rng)
    y = mu + np.sqrt(sigma2) * rng.standard_normal(n)
    for m in range(1, config.M + 1):
        rows = slice(config.n0 + (m - 1) * config.n1, config.n0 + m * config.n1)
        hidden = np.setdiff1d(np.arange(config.p), part.observed(m))
        X[rows, hidden] = np.nan
    train = SqdDataset.from_arrays(y, X, part)
    test = gen_test_set(config, coefs, config.n_test, rng, chol)
    return train, test
