"""Estimator-style front end so the models compose with the ML ecosystem.

:class:`HpkmRegressor` is a plain supervised regressor (fit on samples,
predict anywhere) built on the fused KAN + MLP model.  :class:`PinnSolver`
is fit against a named differential-equation benchmark instead of labels:
``fit`` samples collocation points and minimizes the physics loss, after
which ``predict`` evaluates the learned solution field.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .experiments import default_config, evaluation_grid, run_experiment
from .hybrid import HpkmModel
from .kan import KanSpec
from .metrics import relative_l2
from .mlp import MlpSpec
from .problems import problem_by_name
from .training import StepSchedule, TrainConfig, train_supervised

__all__ = ["HpkmRegressor", "PinnSolver"]


def _prepare_inputs(X, max_dim=2):
    X = check_array(X, dtype=np.float64, ensure_2d=True)
    if not 1 <= X.shape[1] <= max_dim:
        raise ValueError(f"expected 1..{max_dim} input features, got {X.shape[1]}")
    return X


class HpkmRegressor(RegressorMixin, BaseEstimator):
    """Supervised function fitting with a fused spline-edge + perceptron model.

    Parameters mirror the benchmark setup: hidden widths per branch, the
    spline layout, the mixing weight ``xi`` (0 = pure MLP, 1 = pure KAN),
    and the Adam schedule.
    """

    def __init__(
        self,
        mlp_hidden=(100, 100, 100, 100),
        kan_hidden=(5, 5, 5),
        grid_size=5,
        spline_order=3,
        xi=0.9,
        learning_rate=0.01,
        n_iter=10000,
        lr_period=None,
        lr_gamma=0.75,
        seed=0,
    ):
        self.mlp_hidden = mlp_hidden
        self.kan_hidden = kan_hidden
        self.grid_size = grid_size
        self.spline_order = spline_order
        self.xi = xi
        self.learning_rate = learning_rate
        self.n_iter = n_iter
        self.lr_period = lr_period
        self.lr_gamma = lr_gamma
        self.seed = seed

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        X = _prepare_inputs(X)
        self.n_features_in_ = X.shape[1]
        dim = X.shape[1]
        lo, hi = X.min(axis=0), X.max(axis=0)
        width = np.where(hi > lo, hi - lo, 1.0)
        bounds = np.column_stack([lo, lo + width])
        model = HpkmModel(
            KanSpec((dim, *self.kan_hidden, 1), grid_size=self.grid_size, spline_order=self.spline_order),
            MlpSpec((dim, *self.mlp_hidden, 1)),
            xi=self.xi,
            input_bounds=bounds,
            seed=self.seed,
        )
        schedule = None if self.lr_period is None else StepSchedule(self.lr_period, self.lr_gamma)
        config = TrainConfig(
            learning_rate=self.learning_rate,
            iterations=self.n_iter,
            schedule=schedule,
            seed=self.seed,
        )
        self.history_ = train_supervised(model, X, y, config)
        self.model_ = model
        self.loss_ = float(self.history_.loss[-1]) if self.history_.loss.size else float("nan")
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        X = _prepare_inputs(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError("feature count changed between fit and predict")
        return self.model_.predict(X)


class PinnSolver(BaseEstimator):
    """Physics-informed solver for one of the built-in benchmarks.

    ``fit`` ignores ``X``/``y``: training data are collocation points
    sampled from the problem's domain and boundary.  ``None`` parameters
    resolve to the benchmark defaults for the chosen problem.
    """

    def __init__(
        self,
        problem="poisson",
        xi=None,
        mlp_widths=None,
        kan_widths=None,
        grid_size=None,
        spline_order=None,
        learning_rate=None,
        n_iter=None,
        lr_period="default",
        lr_gamma=None,
        n_residual=None,
        n_initial=None,
        n_boundary=None,
        weights=None,
        seed=0,
    ):
        self.problem = problem
        self.xi = xi
        self.mlp_widths = mlp_widths
        self.kan_widths = kan_widths
        self.grid_size = grid_size
        self.spline_order = spline_order
        self.learning_rate = learning_rate
        self.n_iter = n_iter
        self.lr_period = lr_period
        self.lr_gamma = lr_gamma
        self.n_residual = n_residual
        self.n_initial = n_initial
        self.n_boundary = n_boundary
        self.weights = weights
        self.seed = seed

    def _config(self):
        config = default_config(
            self.problem,
            xi=self.xi,
            mlp_widths=self.mlp_widths,
            kan_widths=self.kan_widths,
            grid_size=self.grid_size,
            spline_order=self.spline_order,
            learning_rate=self.learning_rate,
            iterations=self.n_iter,
            lr_gamma=self.lr_gamma,
            n_residual=self.n_residual,
            n_initial=self.n_initial,
            n_boundary=self.n_boundary,
            weights=self.weights,
            seed=self.seed,
        )
        # None means "constant rate" here, so it cannot ride the usual
        # None-is-unset override path
        if self.lr_period != "default":
            config = replace(config, lr_period=self.lr_period)
        return config

    def fit(self, X=None, y=None):
        config = self._config()
        self.result_, self.history_, self.model_ = run_experiment(config)
        self.problem_ = problem_by_name(self.problem)
        self.config_ = config
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        X = _prepare_inputs(X)
        if X.shape[1] != self.problem_.input_dim:
            raise ValueError(f"{self.problem} expects {self.problem_.input_dim} input coordinates")
        return self.model_.predict(X)

    def relative_l2(self, points=None):
        """Error against the problem reference on the standard test grid."""
        check_is_fitted(self, "model_")
        pts = evaluation_grid(self.problem_).points if points is None else _prepare_inputs(points)
        return relative_l2(self.model_.predict(pts), self.problem_.reference(pts))

    def score(self, X=None, y=None):
        """Negated relative L2 (larger is better, sklearn convention)."""
        return -self.relative_l2()
