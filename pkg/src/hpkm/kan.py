"""Kolmogorov-Arnold layers with learnable spline edge activations.

Every edge (input node i -> output node j of a layer) carries its own
univariate function

    phi(z) = c_r * silu(z) + c_B * sum_i c_i B_i(z)

with the B-spline family shared across edges and the scalars ``c_r``,
``c_B`` and coefficients ``c_i`` trainable.  A layer output is the plain
sum of its incoming edge activations; layers compose like any feedforward
network.

First-layer inputs are affinely mapped from the problem domain onto the
spline range so activations start on-grid; hidden activations pass through
unchanged and rely on the polynomial extension of the basis when they
drift outside the range.  The knot layout is frozen at construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import matmul, reshape
from .splines import SplineGrid, bspline_basis

__all__ = ["KanSpec", "KanNetwork", "kan_param_count", "edge_activation"]


@dataclass(frozen=True)
class KanSpec:
    """Node widths per layer plus the shared spline-grid layout."""

    widths: tuple
    grid_size: int = 5
    spline_order: int = 3
    spline_range: tuple = (-1.0, 1.0)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        object.__setattr__(self, "spline_range", (float(self.spline_range[0]), float(self.spline_range[1])))
        if len(self.widths) < 2:
            raise ValueError("need at least input and output widths")
        if any(w < 1 for w in self.widths):
            raise ValueError("all widths must be positive")
        # grid/order bounds are validated by SplineGrid
        self.grid()

    def grid(self):
        lo, hi = self.spline_range
        return SplineGrid(lo, hi, self.grid_size, self.spline_order)

    @property
    def in_width(self):
        return self.widths[0]

    @property
    def out_width(self):
        return self.widths[-1]

    @property
    def n_edges(self):
        w = self.widths
        return sum(w[i] * w[i + 1] for i in range(len(w) - 1))


def kan_param_count(spec):
    """Exact count: every edge owns G + k spline coefficients plus c_r, c_B."""
    per_edge = spec.grid_size + spec.spline_order + 2
    return spec.n_edges * per_edge


def edge_activation(grid, base_scale, spline_scale, coefficients, x):
    """Single-edge activation c_r*silu(x) + c_B * sum_i c_i B_i(x)."""
    coefficients = np.asarray(coefficients, dtype=np.float64)
    if coefficients.shape != (grid.n_basis,):
        raise ValueError(f"expected {grid.n_basis} spline coefficients")
    basis = bspline_basis(grid, x)
    spline = matmul(reshape(basis, (-1, grid.n_basis)), coefficients[:, None])
    spline = reshape(spline, np.shape(x.val if isinstance(x, ad.Jet) else x))
    return base_scale * ad.silu(x) + spline_scale * spline


class KanNetwork:
    """Stacked spline-edge layers over a shared ParamStore.

    ``input_bounds`` (one (lo, hi) pair per input coordinate) defines the
    affine map applied before the first layer; ``None`` feeds raw inputs.
    """

    def __init__(self, spec, store, rng=None, prefix="kan", input_bounds=None):
        self.spec = spec
        self.prefix = prefix
        self.grid = spec.grid()
        if rng is None:
            rng = np.random.default_rng(spec.seed)
        if input_bounds is not None:
            input_bounds = np.asarray(input_bounds, dtype=np.float64).reshape(-1, 2)
            if input_bounds.shape[0] != spec.in_width:
                raise ValueError("one bounds pair per input coordinate required")
            lo, hi = input_bounds[:, 0], input_bounds[:, 1]
            slo, shi = spec.spline_range
            scale = (shi - slo) / (hi - lo)
            self._in_scale = scale[None, :]
            self._in_offset = (slo - lo * scale)[None, :]
        else:
            self._in_scale = None
            self._in_offset = None

        nb = self.grid.n_basis
        self._names = []
        w = spec.widths
        for i in range(len(w) - 1):
            m_in, m_out = w[i], w[i + 1]
            bound = np.sqrt(6.0 / (m_in + m_out))
            base = store.add(f"{prefix}.l{i}.base", rng.uniform(-bound, bound, size=(m_in, m_out)))
            scale = store.add(f"{prefix}.l{i}.scale", np.ones((m_in, m_out)))
            coef = store.add(f"{prefix}.l{i}.coef", rng.normal(0.0, 0.1, size=(m_in, nb, m_out)))
            self._names.append((base, scale, coef, m_in, m_out))

    def forward(self, params, x, trace=None):
        """Map an (N, in_width) jet or array to an (N, out_width) one.

        ``trace``, when given a list, collects each layer's input values
        (after normalization) for grid-coverage diagnostics.
        """
        z = x
        if self._in_scale is not None:
            z = z * self._in_scale + self._in_offset
        nb = self.grid.n_basis
        for base, scale, coef, m_in, m_out in self._names:
            if trace is not None:
                trace.append(np.asarray(z.val if isinstance(z, ad.Jet) else z))
            n = np.shape(z.val if isinstance(z, ad.Jet) else z)[0]
            basis = bspline_basis(self.grid, z)
            weights = reshape(reshape(params[scale], (m_in, 1, m_out)) * params[coef], (m_in * nb, m_out))
            spline_out = matmul(reshape(basis, (n, m_in * nb)), weights)
            base_out = matmul(ad.silu(z), params[base])
            z = spline_out + base_out
        return z
