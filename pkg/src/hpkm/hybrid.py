"""Parallel KAN + MLP model fused by a fixed mixing weight.

Both branches see the same inputs; the prediction is

    u(x) = xi * u_kan(x) + (1 - xi) * u_mlp(x)

with ``xi`` a hyperparameter in [0, 1], not a trained quantity.  At the
endpoints the dead branch is still constructed (so parameter layout and
RNG consumption are identical across a sweep) and its gradients are
identically zero, which freezes it under any sensible optimizer.
"""

from __future__ import annotations

import numpy as np

from .autodiff import Jet, lift_points
from .kan import KanNetwork, kan_param_count
from .mlp import MlpNetwork, mlp_param_count
from .params import ParamStore

__all__ = ["HpkmModel"]


class HpkmModel:
    def __init__(self, kan_spec, mlp_spec, xi, input_bounds=None, seed=0):
        if kan_spec.in_width != mlp_spec.in_width:
            raise ValueError("branch input widths differ")
        if kan_spec.out_width != mlp_spec.out_width:
            raise ValueError("branch output widths differ")
        if not 0.0 <= xi <= 1.0:
            raise ValueError("mixing weight must lie in [0, 1]")
        self.xi = float(xi)
        self.kan_spec = kan_spec
        self.mlp_spec = mlp_spec
        self.seed = int(seed)
        self.store = ParamStore()
        rng = np.random.default_rng(seed)
        # branch construction order is fixed: KAN first, then MLP
        self.kan = KanNetwork(kan_spec, self.store, rng=rng, input_bounds=input_bounds)
        self.mlp = MlpNetwork(mlp_spec, self.store, rng=rng)
        self.store.freeze()

    @property
    def in_width(self):
        return self.mlp_spec.in_width

    @property
    def out_width(self):
        return self.mlp_spec.out_width

    @property
    def param_count(self):
        return self.store.size

    def expected_param_count(self):
        return kan_param_count(self.kan_spec) + mlp_param_count(self.mlp_spec)

    def param_partition(self):
        """Flat-index masks of the two branch segments."""
        masks = {"kan": np.zeros(self.store.size, dtype=bool), "mlp": np.zeros(self.store.size, dtype=bool)}
        for name in self.store.names:
            side = "kan" if name.startswith("kan.") else "mlp"
            masks[side][self.store.segment_slice(name)] = True
        return masks

    def forward(self, params, x):
        """Fused (N, out_width) jet; endpoint weights skip the dead branch."""
        if self.xi == 0.0:
            return self.mlp.forward(params, x)
        if self.xi == 1.0:
            return self.kan.forward(params, x)
        return self.kan.forward(params, x) * self.xi + self.mlp.forward(params, x) * (1.0 - self.xi)

    def predict(self, points):
        """Plain values at raw points; (N,) for scalar-output models."""
        points = np.asarray(points, dtype=np.float64)
        out = self.forward(self.store.views(), points)
        out = np.asarray(out)
        return out[:, 0] if self.out_width == 1 else out

    def output_jet(self, points):
        """Seeded forward pass: the output jet carries input derivatives.

        Parameters enter as raw views, so this is for evaluation and
        residual checks, not for training gradients.
        """
        return self.forward(self.store.views(), lift_points(points))

    def get_flat(self):
        return self.store.get_flat()

    def set_flat(self, values):
        self.store.set_flat(values)
