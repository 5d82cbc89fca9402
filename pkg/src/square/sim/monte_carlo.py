"""Seeded Monte Carlo comparison of SQUARE and the baselines.

Replicate ``b`` draws from ``np.random.default_rng(SeedSequence(master,
spawn_key=(0, b)))`` (PCG64). The bias/variance grid is drawn once from
``spawn_key=(1,)``, and the signal calibration uses its own fixed seed, so
neither depends on the number of replicates.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..baselines import fit_cc, fit_cc_jma, fit_imp_mma
from ..core import fit_square
from ..exceptions import ConfigError, NumericalError
from .design import (CoefficientVector, SimConfig, TestSet, calibrate_signal, coefficient_pattern,
                     gen_covariance, gen_dataset, gen_test_set)

__all__ = [
    "EvalReport",
    "METHODS",
    "decompose",
    "evaluate",
    "replicate_seed",
    "run_monte_carlo",
]

METHODS = {
    "SQUARE": fit_square,
    "CC-JMA": fit_cc_jma,
    "IMP-MMA": fit_imp_mma,
    "CC": fit_cc,
}


def replicate_seed(master: int, b: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master, spawn_key=(0, b))


def _seed_label(seq: np.random.SeedSequence) -> int:
    # a 64-bit integer summarizing the replicate stream, for the results table
    return int(seq.generate_state(1, np.uint64)[0])


def evaluate(model, test: TestSet) -> float:
    """Mean squared deviation of the predictions from the true regression function."""
    pred = model.predict(test.X) if hasattr(model, "predict") else np.asarray(model, dtype=float)
    return float(np.mean((pred - test.mu) ** 2))


def decompose(predictions, mu):
    """Split the mean grid MSE into squared bias and variance.

    Parameters
    ----------
    predictions : array of shape (B, n_grid)
        One row of predictions per replicate, all on the same grid.
    mu : array of shape (n_grid,)

    Returns
    -------
    bias2, variance : float
        ``mean over b of mean((pred_b - mu)^2) == bias2 + variance``.
    """
    P = np.asarray(predictions, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if P.ndim != 2 or P.shape[1] != mu.shape[0]:
        raise ConfigError(f"predictions of shape {P.shape} do not match a grid of {mu.shape[0]} points")
    center = P.mean(axis=0)
    bias2 = float(np.mean((center - mu) ** 2))
    variance = float(np.mean((P - center) ** 2))
    return bias2, variance


@dataclass
class EvalReport:
    """Per-method test MSE across replicates plus the grid decomposition.

    ``mse[method][b]`` is NaN when the method failed on replicate ``b``;
    the reason is kept in ``failures[method]``.
    """

    config: dict
    methods: list
    seeds: list
    mse: dict
    grid_mse: dict
    bias2: dict
    variance: dict
    failures: dict = field(default_factory=dict)
    calibration: dict = field(default_factory=dict)

    def summary(self) -> dict:
        out = {}
        for m in self.methods:
            v = np.asarray(self.mse[m])
            ok = v[~np.isnan(v)]
            out[m] = {
                "median": float(np.median(ok)) if ok.size else None,
                "mean": float(ok.mean()) if ok.size else None,
                "sd": float(ok.std(ddof=1)) if ok.size > 1 else None,
                "n_ok": int(ok.size),
                "n_failed": int(v.size - ok.size),
                "bias2": self.bias2[m],
                "variance": self.variance[m],
                "grid_mse_mean": float(np.mean(self.grid_mse[m])) if len(self.grid_mse[m]) else None,
            }
        return out

    def median(self, method) -> float:
        return self.summary()[method]["median"]

    def to_dict(self) -> dict:
        def clean(v):
            return [None if np.isnan(x) else float(x) for x in v]

        return {
            "config": self.config,
            "methods": list(self.methods),
            "calibration": self.calibration,
            "summary": self.summary(),
            "seeds": [int(s) for s in self.seeds],
            "mse": {m: clean(self.mse[m]) for m in self.methods},
            "grid_mse": {m: clean(self.grid_mse[m]) for m in self.methods},
            "failures": {m: [[int(b), msg] for b, msg in self.failures.get(m, [])] for m in self.methods},
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    def to_csv(self, path=None) -> str:
        """Tidy table: method, replicate, seed, mse (17 significant digits; NA on failure)."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["method", "replicate", "seed", "mse"])
        for m in self.methods:
            for b, (seed, v) in enumerate(zip(self.seeds, self.mse[m])):
                writer.writerow([m, b, seed, "NA" if np.isnan(v) else "%.17g" % v])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    def table(self) -> str:
        rows = [f"{'method':<8} {'median':>10} {'mean':>10} {'bias2':>10} {'variance':>10} {'failed':>6}"]
        for m, s in self.summary().items():
            fmt = lambda x: f"{x:10.4f}" if x is not None else f"{'NA':>10}"
            rows.append(f"{m:<8} {fmt(s['median'])} {fmt(s['mean'])} {fmt(s['bias2'])} "
                        f"{fmt(s['variance'])} {s['n_failed']:>6}")
        return "\n".join(rows)


def _run_replicate(args):
    config, coefs, sigma2, chol, grid_X, methods, b = args
    seq = replicate_seed(config.seed, b)
    train, test = gen_dataset(config, coefs, sigma2, np.random.default_rng(seq), chol)
    out = {}
    for name in methods:
        try:
            model = METHODS[name](train)
            mse = evaluate(model, test)
            grid = model.predict(grid_X) if grid_X is not None else None
            out[name] = (mse, grid, None)
        except NumericalError as e:
            out[name] = (np.nan, None, f"{type(e).__name__}: {e}")
    return b, _seed_label(seq), out


def run_monte_carlo(config: SimConfig, methods=None, jobs: int = 1, grid: bool = True) -> EvalReport:
    """Run ``config.B`` replicates; every method sees the same replicate data.

    Parameters
    ----------
    config : SimConfig
    methods : sequence of str, optional
        Subset of ``METHODS``; default all four.
    jobs : int
        Worker processes; results do not depend on it.
    grid : bool
        Also predict on the shared grid for the bias/variance split.
    """
    methods = list(METHODS) if methods is None else list(methods)
    unknown = [m for m in methods if m not in METHODS]
    if unknown or not methods:
        raise ConfigError(f"unknown methods {unknown}; choose from {list(METHODS)}")
    c, sigma2 = calibrate_signal(config)
    coefs = CoefficientVector(coefficient_pattern(config.case, config.structure), c, config.case,
                              config.n_covariates)
    chol = np.linalg.cholesky(gen_covariance(config.structure, config.lambdas))
    grid_set = None
    if grid:
        grid_rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(1,)))
        grid_set = gen_test_set(config, coefs, config.n_grid, grid_rng, chol)
    tasks = [(config, coefs, sigma2, chol, None if grid_set is None else grid_set.X, methods, b)
             for b in range(config.B)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_replicate, tasks, chunksize=max(1, config.B // (4 * jobs))))
    else:
        results = [_run_replicate(t) for t in tasks]
    results.sort(key=lambda r: r[0])

    seeds = [r[1] for r in results]
    mse = {m: np.array([r[2][m][0] for r in results]) for m in methods}
    failures = {m: [(r[0], r[2][m][2]) for r in results if r[2][m][2] is not None] for m in methods}
    grid_mse, bias2, variance = {}, {}, {}
    for m in methods:
        preds = [r[2][m][1] for r in results if r[2][m][1] is not None]
        if grid_set is not None and preds:
            P = np.vstack(preds)
            grid_mse[m] = np.mean((P - grid_set.mu) ** 2, axis=1)
            bias2[m], variance[m] = decompose(P, grid_set.mu)
        else:
            grid_mse[m] = np.array([])
            bias2[m] = variance[m] = None
    return EvalReport(config.to_dict(), methods, seeds, mse, grid_mse, bias2, variance, failures,
                      {"c": c, "sigma2": sigma2, "tail_variance": coefs.tail_variance})
