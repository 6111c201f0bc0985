"""Fully connected perceptron evaluated over jets.

Hidden layers apply a smooth activation after each affine map; the output
layer stays affine so predictions are unbounded.  Parameters live in a
shared :class:`~hpkm.params.ParamStore` so an optimizer can update several
networks jointly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import matmul

__all__ = ["MlpSpec", "MlpNetwork", "mlp_param_count"]

_ACTIVATIONS = {"tanh": ad.tanh, "logistic": ad.logistic}


@dataclass(frozen=True)
class MlpSpec:
    """Layer widths (first entry: input dim, last: output dim) and activation."""

    widths: tuple
    activation: str = "tanh"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if len(self.widths) < 2:
            raise ValueError("need at least input and output widths")
        if any(w < 1 for w in self.widths):
            raise ValueError("all widths must be positive")
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def in_width(self):
        return self.widths[0]

    @property
    def out_width(self):
        return self.widths[-1]


def mlp_param_count(spec):
    """Exact parameter count: sum of weight-matrix and bias sizes per layer."""
    w = spec.widths
    return sum(w[i] * w[i + 1] + w[i + 1] for i in range(len(w) - 1))


class MlpNetwork:
    """Perceptron whose parameters are named segments of a ParamStore."""

    def __init__(self, spec, store, rng=None, prefix="mlp"):
        self.spec = spec
        self.prefix = prefix
        self._act = _ACTIVATIONS[spec.activation]
        if rng is None:
            rng = np.random.default_rng(spec.seed)
        self._names = []
        w = spec.widths
        for i in range(len(w) - 1):
            fan_in, fan_out = w[i], w[i + 1]
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            wname = store.add(f"{prefix}.w{i}", rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            bname = store.add(f"{prefix}.b{i}", np.zeros(fan_out))
            self._names.append((wname, bname))

    def forward(self, params, x):
        """Map an (N, in_width) jet or array to an (N, out_width) one."""
        h = x
        last = len(self._names) - 1
        for i, (wname, bname) in enumerate(self._names):
            h = matmul(h, params[wname]) + params[bname]
            if i != last:
                h = self._act(h)
        return h
