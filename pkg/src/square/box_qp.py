"""Small least-squares problems over the unit box and the probability simplex.

A problem is stored in Gram form: minimize ``f(w) = w @ A @ w - 2 b @ w``,
which equals ``||y - U w||**2 - ||y||**2`` for ``A = U.T U`` and ``b = U.T y``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConvergenceError, DataError, MalformedProblemError

__all__ = [
    "QpProblem",
    "QpSolution",
    "grid_oracle",
    "kkt_residual",
    "project_simplex",
    "solve_box",
    "solve_simplex",
]

SYM_TOL = 1e-12
PSD_TOL = 1e-10
# active-face polishing is skipped when the free block is this ill conditioned
POLISH_COND = 1e12


@dataclass(frozen=True, eq=False)
class QpProblem:
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=float, ndmin=2)
        b = np.array(self.b, dtype=float).ravel()
        d = b.shape[0]
        if A.shape != (d, d):
            raise MalformedProblemError(f"A has shape {A.shape}, b has length {d}")
        if not (np.isfinite(A).all() and np.isfinite(b).all()):
            raise MalformedProblemError("non-finite entries in A or b")
        scale = max(1.0, np.abs(A).max(initial=0.0))
        if np.abs(A - A.T).max(initial=0.0) > SYM_TOL * scale:
            raise MalformedProblemError("A is not symmetric")
        A = (A + A.T) / 2
        if d:
            eig = np.linalg.eigvalsh(A)
            if eig[0] < -PSD_TOL * max(1.0, eig[-1]):
                raise MalformedProblemError(f"A is not positive semidefinite (smallest eigenvalue {eig[0]:.3g})")
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @classmethod
    def from_least_squares(cls, U, y) -> "QpProblem":
        U = np.asarray(U, dtype=float)
        return cls(U.T @ U, U.T @ np.asarray(y, dtype=float))

    @property
    def dim(self) -> int:
        return self.b.shape[0]

    def objective(self, w) -> float:
        w = np.asarray(w, dtype=float)
        return float(w @ self.A @ w - 2.0 * self.b @ w)

    def gradient(self, w) -> np.ndarray:
        return 2.0 * (self.A @ w - self.b)


@dataclass(frozen=True, eq=False)
class QpSolution:
    w: np.ndarray
    objective: float
    kkt_residual: float
    iterations: int
    converged: bool


def kkt_residual(problem: QpProblem, w, constraint: str = "box") -> float:
    """Largest violation of the first-order optimality conditions at ``w``."""
    w = np.asarray(w, dtype=float)
    g = problem.gradient(w)
    if constraint == "box":
        r = np.where(w <= 0.0, np.maximum(-g, 0.0), np.where(w >= 1.0, np.maximum(g, 0.0), np.abs(g)))
        return float(r.max(initial=0.0))
    if constraint == "simplex":
        support = w > 0
        nu = g[support].mean()
        on = np.abs(g[support] - nu).max(initial=0.0)
        off = np.maximum(nu - g[~support], 0.0).max(initial=0.0)
        return float(max(on, off))
    raise DataError(f"unknown constraint {constraint!r}")


def _check_descent(f_new, f_old):
    if f_new > f_old + 1e-12 * (1.0 + abs(f_old)):
        raise AssertionError(f"monotone descent violated: {f_old!r} -> {f_new!r}")


def _tol_scale(problem):
    return max(1.0, np.abs(problem.A).max(initial=0.0), np.abs(problem.b).max(initial=0.0))


def _polish_box(problem, w):
    """Solve exactly on the face of the box that ``w`` lies on; None if that fails KKT."""
    A, b = problem.A, problem.b
    free = (w > 0.0) & (w < 1.0)
    upper = w >= 1.0
    cand = np.where(upper, 1.0, 0.0)
    if free.any():
        Aff = A[np.ix_(free, free)]
        if np.linalg.cond(Aff) > POLISH_COND:
            return None
        cand[free] = np.linalg.solve(Aff, b[free] - A[np.ix_(free, upper)] @ cand[upper])
        if cand[free].min() <= 0.0 or cand[free].max() >= 1.0:
            return None
    if kkt_residual(problem, cand, "box") > 1e-9 * _tol_scale(problem):
        return None
    return cand


def solve_box(problem: QpProblem, tol: float = 1e-10, max_iter: int = 100_000) -> QpSolution:
    """Cyclic coordinate descent over ``[0, 1]^d`` from ``w = 0``.

    Each coordinate is minimized exactly and clipped; sweeps run in index
    order until no coordinate moves by ``tol`` or more. Every few sweeps the
    current face (free coordinates vs. coordinates at a bound) is solved
    exactly and accepted if it satisfies the KKT conditions, which ends
    slow zig-zagging on ill-conditioned problems. For singular problems the
    returned minimizer is whichever one this procedure reaches from zero.
    """
    A, b = problem.A, problem.b
    d = problem.dim
    w = np.zeros(d)
    f = 0.0
    diag = np.diag(A).copy()
    for sweep in range(1, max_iter + 1):
        delta = 0.0
        for i in range(d):
            r = b[i] - A[i] @ w + diag[i] * w[i]
            new = min(max(r / diag[i], 0.0), 1.0) if diag[i] > 0 else (1.0 if r > 0 else 0.0)
            delta = max(delta, abs(new - w[i]))
            w[i] = new
        f_new = problem.objective(w)
        _check_descent(f_new, f)
        f = f_new
        done = delta < tol
        if done or sweep % 5 == 0:
            polished = _polish_box(problem, w)
            if polished is not None:
                f_pol = problem.objective(polished)
                _check_descent(f_pol, f)
                w, f, done = polished, f_pol, True
        if done:
            return QpSolution(w, f, kkt_residual(problem, w, "box"), sweep, True)
    best = QpSolution(w, f, kkt_residual(problem, w, "box"), max_iter, False)
    raise ConvergenceError(f"coordinate descent did not converge in {max_iter} sweeps", best)


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto ``{w >= 0, sum(w) = 1}`` (Michelot's active-set iteration)."""
    v = np.asarray(v, dtype=float)
    active = np.ones(v.shape[0], dtype=bool)
    while True:
        theta = (v[active].sum() - 1.0) / active.sum()
        keep = active & (v > theta)
        if keep.sum() == active.sum():
            break
        active = keep
    w = np.maximum(v - theta, 0.0)
    w[~active] = 0.0
    return w / w.sum()


def _power_iteration(A, steps=100):
    d = A.shape[0]
    v = np.linspace(1.0, 2.0, d)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(steps):
        Av = A @ v
        norm = np.linalg.norm(Av)
        if norm == 0.0:
            return 0.0
        lam = float(v @ Av)
        v = Av / norm
    return max(lam, float(v @ A @ v))


def _polish_simplex(problem, w):
    A, b = problem.A, problem.b
    S = w > 0
    k = int(S.sum())
    K = np.zeros((k + 1, k + 1))
    K[:k, :k] = A[np.ix_(S, S)]
    K[:k, k] = -1.0
    K[k, :k] = 1.0
    if np.linalg.cond(K) > POLISH_COND:
        return None
    sol = np.linalg.solve(K, np.concatenate([b[S], [1.0]]))
    if sol[:k].min() <= 0.0:
        return None
    cand = np.zeros_like(w)
    cand[S] = sol[:k]
    cand /= cand.sum()
    if kkt_residual(problem, cand, "simplex") > 1e-9 * _tol_scale(problem):
        return None
    return cand


def solve_simplex(problem: QpProblem, tol: float = 1e-10, max_iter: int = 100_000) -> QpSolution:
    """Projected gradient over the probability simplex.

    Step ``1/L`` with ``L`` twice the largest eigenvalue of ``A`` from 100
    power-iteration steps; ``L`` doubles if a step ever fails to descend.
    Starts at the barycentre and polishes on the current support like
    :func:`solve_box`.
    """
    A, b = problem.A, problem.b
    d = problem.dim
    if d == 0:
        raise MalformedProblemError("empty problem")
    L = 2.0 * _power_iteration(A)
    if L <= 0.0:
        # linear objective: best vertex, lowest index on ties
        w = np.zeros(d)
        w[int(np.argmax(b))] = 1.0
        return QpSolution(w, problem.objective(w), kkt_residual(problem, w, "simplex"), 0, True)
    w = np.full(d, 1.0 / d)
    f = problem.objective(w)
    for it in range(1, max_iter + 1):
        while True:
            w_new = project_simplex(w - problem.gradient(w) / L)
            f_new = problem.objective(w_new)
            if f_new <= f + 1e-12 * (1.0 + abs(f)):
                break
            L *= 2.0
        delta = np.abs(w_new - w).max()
        w, f = w_new, f_new
        done = delta < tol
        if done or it % 10 == 0:
            polished = _polish_simplex(problem, w)
            if polished is not None:
                f_pol = problem.objective(polished)
                _check_descent(f_pol, f)
                w, f, done = polished, f_pol, True
        if done:
            return QpSolution(w, f, kkt_residual(problem, w, "simplex"), it, True)
    best = QpSolution(w, f, kkt_residual(problem, w, "simplex"), max_iter, False)
    raise ConvergenceError(f"projected gradient did not converge in {max_iter} iterations", best)


# --------------------------------------------------------------------------
# brute-force oracle
# --------------------------------------------------------------------------

def _compositions(n, d):
    """All non-negative integer vectors of length d summing to n."""
    rows = np.zeros((1, 0), dtype=np.int64)
    rem = np.array([n], dtype=np.int64)
    for _ in range(d - 1):
        counts = rem + 1
        parent = np.repeat(np.arange(rows.shape[0]), counts)
        starts = np.repeat(np.cumsum(counts) - counts, counts)
        k = np.arange(counts.sum()) - starts
        rows = np.column_stack([rows[parent], k])
        rem = rem[parent] - k
    return np.column_stack([rows, rem])


def _lattice_box(n, d):
    axes = np.meshgrid(*([np.arange(n + 1)] * d), indexing="ij")
    return np.stack([a.ravel() for a in axes], axis=1)


def grid_oracle(problem: QpProblem, constraint: str = "box", step: float = 0.01,
                max_points: int = 1_000_000) -> QpSolution:
    """Exhaustive search over the lattice of the constraint set with spacing ``step``.

    For the box, when ``(1/step + 1)**d`` exceeds ``max_points`` the lattice
    covers the first ``d - 1`` coordinates and the last one is minimized in
    closed form (clipped to [0, 1]) at every lattice point. ``iterations`` in
    the result counts evaluated points.
    """
    d = problem.dim
    if d > 5:
        raise DataError(f"grid oracle limited to d <= 5, got {d}")
    n = int(round(1.0 / step))
    if abs(n * step - 1.0) > 1e-9:
        raise DataError(f"1/step must be an integer, got step={step}")
    A, b = problem.A, problem.b
    refine = False
    if constraint == "box":
        if (n + 1) ** d <= max_points or d == 1:
            pts = _lattice_box(n, d)
        else:
            pts = _lattice_box(n, d - 1)
            refine = True
    elif constraint == "simplex":
        pts = _compositions(n, d)
    else:
        raise DataError(f"unknown constraint {constraint!r}")

    best_f, best_w = np.inf, None
    chunk = 200_000
    for start in range(0, pts.shape[0], chunk):
        W = pts[start:start + chunk] / n
        if refine:
            r = b[-1] - W @ A[-1, :-1]
            if A[-1, -1] > 0:
                last = np.clip(r / A[-1, -1], 0.0, 1.0)
            else:
                last = (r > 0).astype(float)
            W = np.column_stack([W, last])
        f = ((W @ A) * W).sum(axis=1) - 2.0 * (W @ b)
        k = int(np.argmin(f))
        if f[k] < best_f:
            best_f, best_w = float(f[k]), W[k].copy()
    return QpSolution(best_w, problem.objective(best_w), kkt_residual(problem, best_w, constraint),
                      int(pts.shape[0]), True)
