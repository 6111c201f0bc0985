"""Perceptron construction, parameter counts, and derivative correctness."""

import numpy as np
import pytest
from _oracles import assert_matches_fd, fd1, fd2

from hpkm.autodiff import column, lift_points
from hpkm.mlp import MlpNetwork, MlpSpec, mlp_param_count
from hpkm.params import ParamStore


def _build(widths, seed=0):
    store = ParamStore()
    net = MlpNetwork(MlpSpec(widths, seed=seed), store)
    store.freeze()
    return net, store


class TestCounts:
    @pytest.mark.parametrize(
        "widths,expected",
        [
            ((1, 20, 20, 1), 481),
            ((2, 20, 20, 20, 1), 921),
            ((1, 100, 100, 100, 100, 1), 30601),
        ],
    )
    def test_known_counts(self, widths, expected):
        assert mlp_param_count(MlpSpec(widths)) == expected

    def test_count_matches_store_size(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            depth = rng.integers(2, 6)
            widths = tuple(int(rng.integers(1, 12)) for _ in range(depth))
            spec = MlpSpec(widths)
            _, store = _build(widths)
            assert mlp_param_count(spec) == store.size


class TestInit:
    def test_bitwise_reproducible(self):
        _, s1 = _build((1, 20, 20, 1), seed=42)
        _, s2 = _build((1, 20, 20, 1), seed=42)
        np.testing.assert_array_equal(s1.flat, s2.flat)
        assert s1.size == 481

    def test_seeds_differ(self):
        _, s1 = _build((1, 20, 20, 1), seed=1)
        _, s2 = _build((1, 20, 20, 1), seed=2)
        assert s1.flat.shape == s2.flat.shape
        assert not np.array_equal(s1.flat, s2.flat)

    def test_biases_start_zero(self):
        _, store = _build((2, 4, 1))
        np.testing.assert_array_equal(store.view("mlp.b0"), 0.0)
        np.testing.assert_array_equal(store.view("mlp.b1"), 0.0)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            MlpSpec((3,))
        with pytest.raises(ValueError):
            MlpSpec((1, 0, 1))
        with pytest.raises(ValueError):
            MlpSpec((1, 4, 1), activation="relu")


class TestForward:
    def test_zero_parameters_give_zero_output(self):
        net, store = _build((2, 5, 1))
        store.flat[:] = 0.0
        out = net.forward(store.views(), np.array([[0.3, -0.8], [1.0, 2.0]]))
        np.testing.assert_array_equal(out, 0.0)

    def test_single_affine_layer_is_identity(self):
        net, store = _build((1, 1))
        store.view("mlp.w0")[:] = 1.0
        store.view("mlp.b0")[:] = 0.0
        x = np.array([[0.25], [-3.0], [7.5]])
        out = net.forward(store.views(), x)
        np.testing.assert_array_equal(out, x)  # no activation on the last layer

    def test_raw_and_jet_paths_agree(self):
        net, store = _build((2, 6, 3), seed=5)
        pts = np.random.default_rng(1).uniform(-1, 1, size=(7, 2))
        raw = net.forward(store.views(), pts)
        jet = net.forward(store.views(), lift_points(pts))
        np.testing.assert_array_equal(raw, np.asarray(jet.val))

    def test_input_derivatives_match_fd(self):
        rng = np.random.default_rng(7)
        net, store = _build((1, 12, 12, 1), seed=3)
        pts = rng.uniform(-2.0, 2.0, size=(5, 1))
        u = column(net.forward(store.views(), lift_points(pts)), 0)

        def f(i):
            def eval_at(v):
                p = pts.copy()
                p[i, 0] = v
                return np.asarray(net.forward(store.views(), p))[i, 0]

            return eval_at

        for i in range(len(pts)):
            assert_matches_fd(u.partial(0)[i], fd1(f(i), pts[i, 0]))
            assert_matches_fd(u.partial2(0)[i], fd2(f(i), pts[i, 0]), atol=1e-7)

    def test_output_twice_differentiable_everywhere(self):
        # payloads exist and are finite across the whole input range
        net, store = _build((2, 8, 8, 1), seed=11)
        pts = np.random.default_rng(2).uniform(-5, 5, size=(50, 2))
        u = column(net.forward(store.views(), lift_points(pts)), 0)
        for c in range(2):
            assert np.all(np.isfinite(u.partial(c)))
            assert np.all(np.isfinite(u.partial2(c)))
