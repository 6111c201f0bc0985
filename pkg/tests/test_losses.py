"""Physics and supervised loss terms over exact and degenerate models."""

import numpy as np
import pytest

from hpkm.autodiff import Jet, backward, reshape
from hpkm.hybrid import HpkmModel
from hpkm.kan import KanSpec
from hpkm.losses import (
    CollocationSet,
    LossWeights,
    build_collocation,
    loss_bc,
    loss_ic,
    loss_residual,
    supervised_mse,
    total_loss,
)
from hpkm.mlp import MlpSpec
from hpkm.problems import poisson_forcing, problem_by_name


class _ExactModel:
    """Model stub that evaluates a problem's reference solution."""

    def __init__(self, problem):
        self.problem = problem

    def forward(self, params, x):
        if isinstance(x, Jet):
            u = self.problem.reference_jet(x)
            return reshape(u, (np.shape(u.val)[0], 1))
        return np.asarray(self.problem.reference(x))[:, None]


class _ConstantModel:
    def __init__(self, value):
        self.value = float(value)

    def forward(self, params, x):
        if isinstance(x, Jet):
            n = len(x.d1) if x.d1 is not None else 0
            zeros = (0.0,) * n if n else None
            return Jet(np.full((len(x.val), 1), self.value), d1=zeros, d2=zeros)
        return np.full((len(x), 1), self.value)


def _small_model(problem, xi=0.5, seed=0):
    dim = problem.input_dim
    return HpkmModel(
        KanSpec((dim, 3, 1), grid_size=4, spline_order=3),
        MlpSpec((dim, 6, 1)),
        xi=xi,
        input_bounds=problem.bounds,
        seed=seed,
    )


class TestWeights:
    def test_validation(self):
        with pytest.raises(ValueError):
            LossWeights(-1.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            LossWeights(0.0, 0.0, 0.0)
        with pytest.raises(ValueError):
            LossWeights(np.inf, 1.0, 1.0)


class TestCollocation:
    def test_counts_and_supports(self):
        problem = problem_by_name("advection")
        colloc = build_collocation(problem, 200, 50, 80)
        assert colloc.counts == (200, 50, 80)
        res = colloc.residual_points
        assert res[:, 0].min() > 0.0 and res[:, 0].max() < 1.0
        assert res[:, 1].min() > 0.0 and res[:, 1].max() < 0.5
        np.testing.assert_array_equal(colloc.initial_points[:, 1], 0.0)
        assert set(np.unique(colloc.boundary_points[:, 0])) == {0.0, 1.0}

    def test_boundary_values_follow_segments(self):
        problem = problem_by_name("advection")
        colloc = build_collocation(problem, 10, 10, 40)
        for tag in (0, 1):
            mask = colloc.boundary_tags == tag
            pts = colloc.boundary_points[mask]
            np.testing.assert_allclose(
                colloc.boundary_values[mask],
                problem.segments[tag].prescribed(pts),
            )

    def test_stationary_problem_has_no_initial_set(self):
        colloc = build_collocation(problem_by_name("poisson"), 50, 0, 20)
        assert colloc.initial_points is None


class TestConditionLosses:
    def setup_method(self):
        self.problem = problem_by_name("advection")
        self.colloc = build_collocation(self.problem, 50, 200, 100)

    def test_exact_model_zero_ic(self):
        val = loss_ic(_ExactModel(self.problem), {}, self.colloc)
        assert float(val.val) < 1e-28

    def test_zero_model_ic_mean(self):
        # g = 2 sin(pi x): the mean of 4 sin^2 over the interval is about 2
        ic_x = self.colloc.initial_points[:, 0]
        expected = np.mean(4.0 * np.sin(np.pi * ic_x) ** 2)
        val = float(loss_ic(_ConstantModel(0.0), {}, self.colloc).val)
        assert val == pytest.approx(expected, rel=1e-12)
        assert val == pytest.approx(2.0, rel=0.05)

    def test_single_point_squared_error(self):
        colloc = CollocationSet(
            residual_points=np.zeros((1, 2)),
            boundary_points=np.zeros((1, 2)),
            boundary_values=np.zeros(1),
            boundary_tags=np.zeros(1, dtype=int),
            initial_points=np.array([[0.25, 0.0]]),
            initial_values=np.array([0.5]),
        )
        val = loss_ic(_ConstantModel(0.0), {}, colloc)
        assert float(val.val) == pytest.approx(0.25)

    def test_exact_model_zero_bc(self):
        val = loss_bc(_ExactModel(self.problem), {}, self.colloc)
        assert float(val.val) < 1e-28

    def test_constant_offset_bc_on_homogeneous_problem(self):
        problem = problem_by_name("poisson")
        colloc = build_collocation(problem, 10, 0, 64)
        val = loss_bc(_ConstantModel(0.7), {}, colloc)
        assert float(val.val) == pytest.approx(0.49, rel=1e-12)

    def test_empty_sets_rejected(self):
        with pytest.raises(ValueError):
            loss_ic(_ConstantModel(0.0), {}, build_collocation(problem_by_name("poisson"), 5, 0, 5))


class TestResidualLoss:
    @pytest.mark.parametrize("name", ["poisson", "advection", "helmholtz"])
    def test_exact_solution_residual_is_tiny(self, name):
        problem = problem_by_name(name)
        colloc = build_collocation(problem, 500, 10 if problem.time_dependent else 0, 10)
        val = loss_residual(_ExactModel(problem), {}, problem, colloc=colloc)
        assert float(val.val) < 1e-10

    def test_zero_model_gives_mean_squared_forcing(self):
        problem = problem_by_name("poisson")
        colloc = build_collocation(problem, 300, 0, 10)
        val = loss_residual(_ConstantModel(0.0), {}, problem, colloc=colloc)
        expected = np.mean(poisson_forcing(colloc.residual_points[:, 0]) ** 2)
        assert float(val.val) == pytest.approx(expected, rel=1e-12)

    def test_gradient_matches_fd(self):
        from _oracles import assert_matches_fd, fd_grad

        problem = problem_by_name("poisson")
        model = _small_model(problem, xi=0.4, seed=6)
        colloc = build_collocation(problem, 40, 0, 12)
        jets = model.store.as_jets()
        loss = loss_residual(model, jets, problem, colloc=colloc)
        backward(loss)
        grad = model.store.collect_grad(jets)
        theta0 = model.get_flat()

        def f(theta):
            model.set_flat(theta)
            js = model.store.views()
            return float(np.asarray(loss_residual(model, js, problem, colloc=colloc).val))

        idx = np.random.default_rng(3).choice(theta0.size, size=10, replace=False)
        oracle = fd_grad(f, theta0, indices=idx)
        model.set_flat(theta0)
        for i, g in oracle.items():
            assert_matches_fd(grad[i], g, rtol=1e-4, atol=1e-7)


class TestTotalLoss:
    def test_exact_solution_total_is_canary_zero(self):
        for name in ("poisson", "advection", "helmholtz"):
            problem = problem_by_name(name)
            colloc = build_collocation(problem, 200, 50 if problem.time_dependent else 0, 50)
            val = total_loss(_ExactModel(problem), {}, problem, colloc, LossWeights())
            assert float(val.val) < 1e-10

    def test_weighted_sum_arithmetic(self):
        problem = problem_by_name("advection")
        colloc = build_collocation(problem, 30, 30, 30)
        model = _ConstantModel(0.3)
        w = LossWeights(0.5, 2.0, 3.0)
        total = float(total_loss(model, {}, problem, colloc, w).val)
        parts = (
            0.5 * float(loss_ic(model, {}, colloc).val)
            + 2.0 * float(loss_bc(model, {}, colloc).val)
            + 3.0 * float(loss_residual(model, {}, problem, colloc=colloc).val)
        )
        assert total == pytest.approx(parts, rel=1e-14)

    def test_zero_residual_weight_matches_condition_only_gradient(self):
        problem = problem_by_name("poisson")
        model = _small_model(problem, seed=11)
        colloc = build_collocation(problem, 25, 0, 16)

        jets = model.store.as_jets()
        loss = total_loss(model, jets, problem, colloc, LossWeights(1.0, 1.0, 0.0))
        backward(loss)
        g_total = model.store.collect_grad(jets)

        jets2 = model.store.as_jets()
        backward(loss_bc(model, jets2, colloc))
        g_bc = model.store.collect_grad(jets2)
        np.testing.assert_allclose(g_total, g_bc, rtol=1e-12, atol=1e-15)


class TestSupervised:
    def test_exact_fit_is_zero(self):
        x = np.linspace(-1, 1, 20)[:, None]
        y = 0.3 * np.ones(20)
        assert float(supervised_mse(_ConstantModel(0.3), {}, x, y).val) == 0.0

    def test_constant_offset(self):
        x = np.zeros((5, 1))
        y = np.full(5, 1.5)
        val = supervised_mse(_ConstantModel(0.5), {}, x, y)
        assert float(val.val) == pytest.approx(1.0)

    def test_two_point_average(self):
        x = np.zeros((2, 1))
        y = np.array([1.0, 3.0])
        val = supervised_mse(_ConstantModel(0.0), {}, x, y)
        assert float(val.val) == pytest.approx(5.0)

    def test_empty_set_rejected(self):
        with pytest.raises(ValueError):
            supervised_mse(_ConstantModel(0.0), {}, np.zeros((0, 1)), np.zeros(0))
