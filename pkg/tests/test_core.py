import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone

from square.block_data import BlockPartition, SqdDataset, make_partition
from square.box_qp import QpProblem, grid_oracle, solve_simplex
from square.core import (
    AveragedModel,
    Candidate,
    CandidateSet,
    CriterionSystem,
    SquareRegressor,
    assemble_system,
    build_candidates,
    fit_square,
    loocv_transform,
    solve_weights,
    weighted_predict,
)
from square.exceptions import DataError, LeverageSingularityError, PredictionInputError
from square.smoothers import LinearSmoother

from .oracles import loo_refit_predictions, sqd_arrays


def illustrative(rng, n0=20, n1=200):
    y, X = sqd_arrays(rng, (1, 1, 1), n0, n1)
    return SqdDataset.from_arrays(y, X, make_partition(3, (1, 1, 1)))


# -- candidates --------------------------------------------------------------

def test_four_candidates_in_three_covariate_example(rng):
    cands = build_candidates(illustrative(rng))
    assert cands.block_ids == (0, 1, 2, 3)
    assert [c.covariates for c in cands] == [(0, 1, 2), (0,), (1,), (2,)]


def test_empty_common_block_skips_d1(rng):
    y, X = sqd_arrays(rng, (0, 2, 2), 10, 20)
    cands = build_candidates(SqdDataset.from_arrays(y, X, make_partition(4, (0, 2, 2))))
    assert len(cands) == 3
    assert cands.block_ids == (0, 2, 3)


def test_structure_one_has_seven_candidates(rng):
    y, X = sqd_arrays(rng, (3, 5, 5, 5, 5, 5), 50, 30)
    ds = SqdDataset.from_arrays(y, X, make_partition(28, (3, 5, 5, 5, 5, 5)))
    assert len(build_candidates(ds)) == 7


def test_candidate_zero_must_be_ols(rng):
    with pytest.raises(DataError):
        build_candidates(illustrative(rng), {0: LinearSmoother(kind="ridge", alpha=1.0)})


def test_smoother_errors_carry_block_id(rng):
    y, X = sqd_arrays(rng, (1, 1, 1), 10, 20)
    X[10:50, 0] = 1.0   # common covariate constant on the incomplete cases
    ds = SqdDataset.from_arrays(y, X, make_partition(3, (1, 1, 1)))
    with pytest.raises(Exception, match="D1"):
        build_candidates(ds, {1: LinearSmoother(kind="spline")})


def test_candidates_use_their_own_blocks(rng):
    ds = illustrative(rng)
    cands = build_candidates(ds)
    S1 = ds.groups[1]
    ref = LinearSmoother().fit(ds.X[S1][:, [1]], ds.y[S1])
    assert np.allclose(cands[2].smoother.coef_, ref.coef_)


# -- leave-one-out -----------------------------------------------------------

def test_loo_two_point_mean():
    sm = LinearSmoother().fit(np.ones((2, 1)), [3.0, 7.0])
    Ht = loocv_transform(sm.hat_matrix(np.ones((2, 1))))
    assert np.allclose(Ht @ np.array([3.0, 7.0]), [7.0, 3.0])


def test_loo_matches_refits(rng):
    X = rng.standard_normal((10, 3))
    y = rng.standard_normal(10)
    H = LinearSmoother().fit(X, y).hat_matrix(X)
    assert np.max(np.abs(loocv_transform(H) @ y - loo_refit_predictions(X, y))) < 1e-10


def test_loo_singular_names_case():
    with pytest.raises(LeverageSingularityError) as exc:
        loocv_transform(np.eye(3))
    assert exc.value.case == 0


def test_n0_equal_p_fails_at_fit(rng):
    y, X = sqd_arrays(rng, (1, 1, 1), 3, 20)
    with pytest.raises(LeverageSingularityError):
        fit_square(SqdDataset.from_arrays(y, X, make_partition(3, (1, 1, 1))))


# -- criterion system --------------------------------------------------------

def test_system_shape_m1(rng):
    # with M = 1 group 1 observes every covariate, so groups are passed explicitly
    X = rng.standard_normal((13, 2))
    y = rng.standard_normal(13)
    ds = SqdDataset(y, X, make_partition(2, (1, 1)), (np.arange(3), np.arange(3, 13)))
    sys_ = assemble_system(build_candidates(ds), ds)
    assert sys_.U.shape == (3, 3)


def test_orthogonal_target_gives_zero_b():
    U = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
    assert np.array_equal(CriterionSystem(U, np.array([0.0, 0.0, 2.0])).b, [0.0, 0.0])


def test_gram_matches_dense(rng):
    ds = illustrative(rng, n0=5, n1=30)
    cands = build_candidates(ds)
    s = assemble_system(cands, ds)
    S0 = ds.groups[0]
    X0, y0 = ds.X[S0], ds.y[S0]
    H0 = cands[0].smoother.hat_matrix(X0)
    h = np.diag(H0)
    col0 = np.array([(H0[i] @ y0 - h[i] * y0[i]) / (1 - h[i]) for i in range(5)])
    U = np.column_stack([col0] + [c.smoother.predict(X0[:, list(c.covariates)]) for c in cands[1:]])
    assert np.max(np.abs(s.U - U)) < 1e-12
    assert np.max(np.abs(s.A - np.einsum("ki,kj->ij", U, U))) < 1e-12
    assert np.max(np.abs(s.b - np.einsum("ki,k->i", U, y0))) < 1e-12


def test_column_zero_is_loo(rng):
    ds = illustrative(rng)
    s = assemble_system(build_candidates(ds), ds)
    S0 = ds.groups[0]
    assert np.allclose(s.U[:, 0], loo_refit_predictions(ds.X[S0], ds.y[S0]), atol=1e-10)


# -- weights -----------------------------------------------------------------

def test_exact_fit_column_gets_unit_weight():
    y0 = np.array([1.0, -1.0, 0.0, 0.0])
    U = np.column_stack([[0.0, 0.0, 1.0, 0.0], y0, [0.0, 0.0, 0.0, 1.0]])
    assert np.allclose(solve_weights(CriterionSystem(U, y0)).w, [0.0, 1.0, 0.0])


def test_zero_system_tie_break():
    sol = solve_weights(CriterionSystem(np.zeros((4, 3)), np.ones(4)))
    assert np.array_equal(sol.w, np.zeros(3))


def test_three_candidate_system_vs_grid(rng):
    U = rng.standard_normal((12, 3))
    y0 = U @ np.array([0.3, 0.8, 0.1]) + 0.5 * rng.standard_normal(12)
    s = CriterionSystem(U, y0)
    sol = solve_weights(s)
    ref = grid_oracle(s.problem(), "box", 0.01)
    assert abs(sol.criterion - (ref.objective + y0 @ y0)) <= 1e-4 * (1 + abs(sol.criterion))
    assert sol.criterion <= ref.objective + y0 @ y0 + 1e-9


@settings(max_examples=25)
@given(st.integers(0, 2**32 - 1))
def test_weights_beat_random_box_points(seed):
    r = np.random.default_rng(seed)
    ds = illustrative(r, n0=15, n1=40)
    model = fit_square(ds)
    s = assemble_system(model.candidates, ds)
    W = r.uniform(0, 1, (1000, len(model.weights)))
    crit = np.sum((s.y0[None, :] - W @ s.U.T) ** 2, axis=1)
    assert np.all(model.criterion <= crit + 1e-9)
    assert model.criterion <= s.criterion(np.zeros(len(model.weights))) + 1e-12
    for k in range(len(model.weights)):
        assert model.criterion <= s.criterion(np.eye(len(model.weights))[k]) + 1e-9


@settings(max_examples=25)
@given(st.integers(0, 2**32 - 1))
def test_kkt_certificate(seed):
    r = np.random.default_rng(seed)
    ds = illustrative(r, n0=12, n1=30)
    model = fit_square(ds)
    s = assemble_system(model.candidates, ds)
    w = model.weights
    g = 2 * (s.A @ w - s.b)
    tol = 1e-8 * max(1.0, np.abs(s.A).max())
    assert np.all((w >= 0) & (w <= 1))
    assert np.all(np.abs(g[(w > 0) & (w < 1)]) < tol)
    assert np.all(g[w == 0] >= -tol)
    assert np.all(g[w == 1] <= tol)


@settings(max_examples=25)
@given(st.integers(0, 2**32 - 1))
def test_box_dominates_simplex_on_same_system(seed):
    r = np.random.default_rng(seed)
    ds = illustrative(r, n0=12, n1=30)
    s = assemble_system(build_candidates(ds), ds)
    fb = solve_weights(s).criterion
    fs = s.criterion(solve_simplex(s.problem()).w)
    assert fb <= fs + 1e-9 * max(1.0, fs)


def test_permuting_blocks_permutes_weights(rng):
    y, X = sqd_arrays(rng, (1, 2, 1, 2), 15, 40, beta=[1, 0.5, -1, 2, 0.3, 1])
    part = make_partition(6, (1, 2, 1, 2))
    swapped = BlockPartition.from_index_sets([part.blocks[0], part.blocks[3], part.blocks[1], part.blocks[2]])
    m1 = fit_square(SqdDataset.from_arrays(y, X, part))
    m2 = fit_square(SqdDataset.from_arrays(y, X, swapped))
    assert np.allclose(m2.weights, m1.weights[[0, 1, 4, 2, 3]], atol=1e-8)
    Q = rng.standard_normal((10, 6))
    assert np.allclose(m1.predict(Q), m2.predict(Q), atol=1e-9)


# -- end to end --------------------------------------------------------------

def test_noiseless_separable_truth(rng):
    y, X = sqd_arrays(rng, (0, 2, 2), 10, 30, beta=[1.0, -2.0, 0.5, 3.0], noise=0.0)
    model = fit_square(SqdDataset.from_arrays(y, X, make_partition(4, (0, 2, 2))))
    Q = rng.standard_normal((200, 4))
    assert np.mean((model.predict(Q) - Q @ [1.0, -2.0, 0.5, 3.0]) ** 2) < 1e-10


def test_large_complete_block_dominates(rng):
    # M = 1 and block 1 holds every covariate: group 1 is just more complete data
    p, n0, n1 = 3, 10, 2000
    beta = np.array([1.0, -1.0, 2.0])
    X = rng.standard_normal((n0 + n1, p))
    y = X @ beta + rng.standard_normal(n0 + n1)
    part = make_partition(p, (0, 3))
    ds = SqdDataset(y, X, part, (np.arange(n0), np.arange(n0, n0 + n1)))
    model = fit_square(ds)
    assert model.candidates.block_ids == (0, 2)
    assert model.weights[1] > 0.9
    b0, b2 = (c.smoother.coef_ for c in model.candidates)
    assert np.sum((b2 - beta) ** 2) < np.sum((b0 - beta) ** 2)


def test_zero_weights_predict_zero(rng):
    ds = illustrative(rng)
    cands = build_candidates(ds)
    assert np.array_equal(weighted_predict(cands, np.zeros(4), rng.standard_normal((5, 3))), np.zeros(5))


def test_unit_weight_is_candidate(rng):
    ds = illustrative(rng)
    cands = build_candidates(ds)
    Q = rng.standard_normal((5, 3))
    assert np.array_equal(weighted_predict(cands, np.eye(4)[2], Q), cands[2].predict(Q))


def test_hand_weighted_sum():
    def const_candidate(block_id, cols, value):
        sm = LinearSmoother(fit_intercept=True).fit(np.empty((2, 0)), [value, value])
        return Candidate(block_id, cols, _Proj(sm))

    class _Proj:
        # ignores covariates; prediction is the stored constant
        def __init__(self, sm):
            self.sm = sm

        def predict(self, X):
            return self.sm.predict(np.empty((X.shape[0], 0)))

    cands = [const_candidate(0, (0, 1), 1.0), const_candidate(1, (0,), 10.0), const_candidate(2, (1,), 100.0)]
    out = weighted_predict(cands, np.array([0.2, 0.5, 0.3]), np.zeros((2, 2)))
    assert np.max(np.abs(out - (0.2 * 1 + 0.5 * 10 + 0.3 * 100))) < 1e-12


def test_missing_covariate_for_weighted_candidate(rng):
    model = fit_square(illustrative(rng))
    Q = np.array([[0.1, np.nan, 0.3]])
    w = model.weights
    if w[0] == 0 and w[2] == 0:
        pytest.skip("no weighted candidate reads column 1")
    with pytest.raises(PredictionInputError, match="x2"):
        model.predict(Q)


def test_zero_weight_candidate_imposes_no_requirement(rng):
    ds = illustrative(rng)
    cands = build_candidates(ds)
    Q = np.array([[0.1, 0.2, np.nan]])
    out = weighted_predict(cands, np.array([0.0, 1.0, 1.0, 0.0]), Q)
    assert out.shape == (1,)


def test_model_dict_round_trip(rng):
    model = fit_square(illustrative(rng))
    again = AveragedModel.from_dict(model.to_dict())
    Q = rng.standard_normal((20, 3))
    assert np.max(np.abs(again.predict(Q) - model.predict(Q))) <= 1e-12


def test_diagnostics(rng):
    model = fit_square(illustrative(rng))
    d = model.diagnostics
    assert d["group_sizes"] == [20, 200, 200]
    assert 0 < d["max_leverage"] < 1
    assert len(d["solo_criterion"]) == 4


# -- estimator API -----------------------------------------------------------

def test_regressor_api(rng):
    y, X = sqd_arrays(rng, (1, 1, 1), 20, 100)
    est = SquareRegressor(block_sizes=(1, 1, 1))
    assert est.get_params()["block_sizes"] == (1, 1, 1)
    est.fit(X, y)
    assert est.weights_.shape == (4,)
    Q = rng.standard_normal((6, 3))
    assert est.predict(Q).shape == (6,)
    twin = clone(est)
    assert not hasattr(twin, "model_")
    assert np.allclose(twin.fit(X, y).predict(Q), est.predict(Q))


def test_regressor_needs_partition(rng):
    y, X = sqd_arrays(rng, (1, 1, 1), 20, 100)
    with pytest.raises(DataError):
        SquareRegressor().fit(X, y)


def test_regressor_unfitted():
    from sklearn.exceptions import NotFittedError
    with pytest.raises(NotFittedError):
        SquareRegressor(block_sizes=(1, 1)).predict(np.zeros((1, 2)))


def test_regressor_with_spline_blocks(rng):
    n0, n1 = 40, 300
    X = rng.uniform(-2, 2, (n0 + 2 * n1, 3))
    y = X[:, 0] + np.sin(X[:, 1]) + X[:, 2] ** 2 + 0.2 * rng.standard_normal(n0 + 2 * n1)
    X[n0:n0 + n1, 2] = np.nan
    X[n0 + n1:, 1] = np.nan
    spline = LinearSmoother(kind="spline", n_knots=4)
    est = SquareRegressor(block_sizes=(1, 1, 1), smoothers={2: spline, 3: spline}).fit(X, y)
    assert isinstance(est.candidates_, CandidateSet)
    assert est.candidates_[2].smoother.kind == "spline"
