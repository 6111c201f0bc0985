"""Fused two-branch model: endpoints, convexity, parameter partition."""

import numpy as np
import pytest
from _oracles import assert_matches_fd, fd_grad

from hpkm.autodiff import backward, column, jet_mean, lift_points, square
from hpkm.hybrid import HpkmModel
from hpkm.kan import KanNetwork, KanSpec
from hpkm.mlp import MlpNetwork, MlpSpec
from hpkm.params import ParamStore


def _model(xi, seed=0, kan_widths=(1, 4, 1), mlp_widths=(1, 5, 1), bounds=((-2, 2),)):
    return HpkmModel(
        KanSpec(kan_widths, grid_size=4, spline_order=3),
        MlpSpec(mlp_widths),
        xi=xi,
        input_bounds=bounds,
        seed=seed,
    )


class TestConstruction:
    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            HpkmModel(KanSpec((2, 3, 1)), MlpSpec((1, 3, 1)), xi=0.5)

    def test_xi_range_checked(self):
        with pytest.raises(ValueError):
            _model(xi=1.5)

    def test_total_count_is_sum_of_branches(self):
        m = _model(xi=0.4)
        assert m.param_count == m.expected_param_count()

    def test_poisson_partition_sizes(self):
        m = HpkmModel(
            KanSpec((1, 30, 30, 1), grid_size=5, spline_order=3),
            MlpSpec((1, 20, 20, 1)),
            xi=0.3,
            input_bounds=((-1, 1),),
        )
        masks = m.param_partition()
        assert masks["kan"].sum() == 9600
        assert masks["mlp"].sum() == 481
        assert m.param_count == 10081
        assert not np.any(masks["kan"] & masks["mlp"])

    def test_rng_consumption_identical_across_xi(self):
        a = _model(xi=0.0, seed=123)
        b = _model(xi=1.0, seed=123)
        np.testing.assert_array_equal(a.get_flat(), b.get_flat())


class TestFusion:
    def test_endpoint_zero_is_mlp_bitwise(self):
        m = _model(xi=0.0, seed=7)
        store = ParamStore()
        mlp = MlpNetwork(MlpSpec((1, 5, 1)), store)
        store.freeze()
        # copy the hybrid's MLP segment so both evaluate identical weights
        for name in store.names:
            store.view(name)[:] = m.store.view(name)
        pts = np.linspace(-2, 2, 9)[:, None]
        np.testing.assert_array_equal(m.predict(pts), np.asarray(mlp.forward(store.views(), pts))[:, 0])

    def test_endpoint_one_is_kan_bitwise(self):
        m = _model(xi=1.0, seed=7)
        store = ParamStore()
        kan = KanNetwork(KanSpec((1, 4, 1), grid_size=4, spline_order=3), store, input_bounds=((-2, 2),))
        store.freeze()
        for name in store.names:
            store.view(name)[:] = m.store.view(name)
        pts = np.linspace(-2, 2, 9)[:, None]
        np.testing.assert_array_equal(m.predict(pts), np.asarray(kan.forward(store.views(), pts))[:, 0])

    def test_fusion_arithmetic(self):
        # constant branches: u_kan = 2, u_mlp = 1 -> 0.3*2 + 0.7*1 = 1.3
        m = _model(xi=0.3, kan_widths=(1, 1), mlp_widths=(1, 1))
        m.store.view("kan.l0.base")[:] = 0.0
        m.store.view("kan.l0.scale")[:] = 2.0
        m.store.view("kan.l0.coef")[:] = 1.0  # partition of unity -> spline sum 1
        m.store.view("mlp.w0")[:] = 0.0
        m.store.view("mlp.b0")[:] = 1.0
        np.testing.assert_allclose(m.predict(np.array([[0.0], [1.3]])), 1.3, atol=1e-12)

    def test_convex_combination_of_branches_and_derivatives(self):
        xi = 0.37
        m = _model(xi=xi, seed=3)
        pts = np.random.default_rng(5).uniform(-2, 2, size=(20, 1))
        params = m.store.views()
        fused = m.forward(params, lift_points(pts))
        uk = m.kan.forward(params, lift_points(pts))
        um = m.mlp.forward(params, lift_points(pts))
        np.testing.assert_allclose(
            np.asarray(fused.val), xi * np.asarray(uk.val) + (1 - xi) * np.asarray(um.val), rtol=1e-15, atol=1e-15
        )
        for order in ("partial", "partial2"):
            f = getattr(fused, order)(0)
            k = getattr(uk, order)(0)
            l = getattr(um, order)(0)
            np.testing.assert_allclose(f, xi * k + (1 - xi) * l, rtol=1e-13, atol=1e-14)


class TestGradients:
    def _loss_and_grad(self, model, pts):
        jets = model.store.as_jets()
        u = column(model.forward(jets, lift_points(pts)), 0)
        loss = jet_mean(square(u))
        backward(loss)
        return float(loss.val), model.store.collect_grad(jets)

    def test_dead_branch_gradient_is_exactly_zero(self):
        m = _model(xi=0.0, seed=2)
        pts = np.linspace(-1.5, 1.5, 8)[:, None]
        _, grad = self._loss_and_grad(m, pts)
        masks = m.param_partition()
        np.testing.assert_array_equal(grad[masks["kan"]], 0.0)
        assert np.any(grad[masks["mlp"]] != 0.0)

    def test_fused_gradient_matches_fd(self):
        m = _model(xi=0.55, seed=8)
        pts = np.random.default_rng(10).uniform(-1.8, 1.8, size=(6, 1))
        _, grad = self._loss_and_grad(m, pts)

        def f(theta):
            m.set_flat(theta)
            return float(np.mean(m.predict(pts) ** 2))

        theta0 = m.get_flat()
        rng = np.random.default_rng(0)
        idx = rng.choice(theta0.size, size=12, replace=False)
        oracle = fd_grad(f, theta0, indices=idx)
        m.set_flat(theta0)
        for i, g in oracle.items():
            assert_matches_fd(grad[i], g, rtol=1e-5, atol=1e-8)

    def test_branch_gradient_scaling(self):
        # d(loss)/d(mlp segment) carries the (1 - xi) factor of the fusion
        pts = np.linspace(-0.4, 1.9, 10)[:, None]
        base = _model(xi=0.0, seed=4)
        mixed = _model(xi=0.25, seed=4)
        gb = self._loss_and_grad(base, pts)[1]
        gm = self._loss_and_grad(mixed, pts)[1]
        ub = base.predict(pts)
        um_ = mixed.predict(pts)
        # gradients differ through both the fusion weight and the fused output;
        # check the analytic value on the final-layer bias, d(loss)/db = 2*mean(u)*(1-xi)
        b_idx = base.store.segment_slice("mlp.b1").start
        np.testing.assert_allclose(gb[b_idx], 2 * np.mean(ub), atol=1e-12)
        np.testing.assert_allclose(gm[b_idx], 2 * np.mean(um_) * 0.75, atol=1e-12)
