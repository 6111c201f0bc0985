"""Estimator API: sklearn conventions, fitting behavior, validation."""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from hpkm.estimators import HpkmRegressor, PinnSolver
from hpkm.experiments import default_config


def _tiny_regressor(**kw):
    defaults = dict(
        mlp_hidden=(8, 8), kan_hidden=(3,), grid_size=4, spline_order=3,
        xi=0.6, learning_rate=0.02, n_iter=400, seed=0,
    )
    defaults.update(kw)
    return HpkmRegressor(**defaults)


class TestHpkmRegressor:
    def test_fit_reduces_loss_and_predicts(self):
        rng = np.random.default_rng(0)
        X = np.linspace(-1, 1, 80)[:, None]
        y = np.sin(2.5 * X[:, 0]) + 0.5
        est = _tiny_regressor().fit(X, y)
        assert est.history_.loss[-1] < est.history_.loss[0]
        pred = est.predict(X)
        assert pred.shape == (80,)
        assert np.mean((pred - y) ** 2) < np.mean(y**2)

    def test_sklearn_contract(self):
        est = _tiny_regressor(xi=0.25)
        params = est.get_params()
        assert params["xi"] == 0.25 and params["n_iter"] == 400
        cloned = clone(est)
        assert cloned.get_params() == params
        est.set_params(xi=0.75)
        assert est.xi == 0.75

    def test_not_fitted_error(self):
        with pytest.raises(NotFittedError):
            _tiny_regressor().predict(np.zeros((3, 1)))

    def test_feature_count_checked(self):
        X = np.linspace(0, 1, 32)[:, None]
        est = _tiny_regressor(n_iter=10).fit(X, np.sin(X[:, 0]))
        with pytest.raises(ValueError):
            est.predict(np.zeros((4, 2)))

    def test_two_feature_input(self):
        rng = np.random.default_rng(1)
        X = rng.uniform(-1, 1, size=(60, 2))
        y = X[:, 0] * X[:, 1]
        est = _tiny_regressor(n_iter=200).fit(X, y)
        assert est.n_features_in_ == 2
        assert est.predict(X).shape == (60,)

    def test_rejects_too_many_features(self):
        with pytest.raises(ValueError):
            _tiny_regressor(n_iter=5).fit(np.zeros((10, 3)), np.zeros(10))

    def test_score_is_r2(self):
        X = np.linspace(-1, 1, 50)[:, None]
        y = 2.0 * X[:, 0]
        est = _tiny_regressor(n_iter=600, xi=0.0, mlp_hidden=(8,)).fit(X, y)
        assert est.score(X, y) > 0.5


TINY_SOLVER = dict(
    mlp_widths=(1, 6, 1), kan_widths=(1, 3, 1), n_iter=60, n_residual=40, n_boundary=16
)


class TestPinnSolver:
    def test_defaults_resolve_to_benchmark_config(self):
        solver = PinnSolver(problem="advection")
        cfg = solver._config()
        assert cfg == default_config("advection")

    def test_overrides_apply(self):
        solver = PinnSolver(problem="poisson", xi=0.5, n_iter=100, lr_period=None)
        cfg = solver._config()
        assert cfg.xi == 0.5 and cfg.iterations == 100 and cfg.lr_period is None

    def test_fit_predict_score(self):
        solver = PinnSolver(problem="poisson", xi=0.4, seed=1, **TINY_SOLVER)
        solver.fit()
        err = solver.relative_l2()
        assert np.isfinite(err) and err > 0
        assert solver.score() == -err
        pts = np.linspace(-1, 1, 7)[:, None]
        assert solver.predict(pts).shape == (7,)

    def test_input_dim_validated(self):
        solver = PinnSolver(problem="poisson", xi=0.4, **TINY_SOLVER).fit()
        with pytest.raises(ValueError):
            solver.predict(np.zeros((3, 2)))

    def test_clone_before_fit(self):
        solver = PinnSolver(problem="helmholtz", xi=0.9)
        assert clone(solver).get_params() == solver.get_params()

    def test_unknown_problem_fails_on_fit(self):
        with pytest.raises(ValueError):
            PinnSolver(problem="heat").fit()
