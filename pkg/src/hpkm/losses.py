"""Loss assembly: residual, initial, boundary, and supervised terms.

Every term is a mean of squared mismatches over its point set and returns
a scalar jet so one reverse sweep yields the full parameter gradient.
Only the residual term needs input derivatives, so it is the only one that
evaluates the model on seeded inputs; condition and data terms run the
cheaper value-only forward.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .autodiff import as_jet, column, jet_mean, lift_points, second_order_coords, square
from .sampling import boundary_points, sobol

__all__ = [
    "LossWeights",
    "CollocationSet",
    "build_collocation",
    "loss_ic",
    "loss_bc",
    "loss_residual",
    "total_loss",
    "supervised_mse",
]


@dataclass(frozen=True)
class LossWeights:
    """Weights for the initial, boundary, and residual terms."""

    ic: float = 1.0
    bc: float = 1.0
    residual: float = 1.0

    def __post_init__(self):
        vals = (self.ic, self.bc, self.residual)
        if any(not np.isfinite(v) or v < 0 for v in vals):
            raise ValueError("loss weights must be finite and non-negative")
        if all(v == 0 for v in vals):
            raise ValueError("at least one loss weight must be positive")


@dataclass(frozen=True)
class CollocationSet:
    residual_points: np.ndarray
    boundary_points: np.ndarray
    boundary_values: np.ndarray
    boundary_tags: np.ndarray
    initial_points: Optional[np.ndarray] = None
    initial_values: Optional[np.ndarray] = None

    @property
    def counts(self):
        n_ic = 0 if self.initial_points is None else len(self.initial_points)
        return len(self.residual_points), n_ic, len(self.boundary_points)


def build_collocation(problem, n_residual, n_initial, n_boundary):
    """Sample and freeze the training point sets for one problem.

    Residual points are Sobol over the full domain (strictly interior on
    the low side); initial points are Sobol along space at t = 0; boundary
    points are split across segments with their prescribed values attached.
    """
    dim = problem.input_dim
    res = sobol(dim, n_residual, problem.bounds, skip=1)
    bps = boundary_points(problem, n_boundary)
    bvals = np.concatenate(
        [
            problem.segments[si].prescribed(bps.points[bps.tags == si])
            for si in np.unique(bps.tags)
        ]
    )
    ic_pts = ic_vals = None
    if problem.time_dependent:
        if n_initial < 1:
            raise ValueError(f"{problem.name} needs initial points")
        xs = sobol(1, n_initial, (problem.bounds[0],), skip=1).points[:, 0]
        ic_pts = np.column_stack([xs, np.zeros(n_initial)])
        ic_vals = problem.ic(xs)
    return CollocationSet(
        residual_points=res.points,
        boundary_points=bps.points,
        boundary_values=bvals,
        boundary_tags=bps.tags,
        initial_points=ic_pts,
        initial_values=ic_vals,
    )


def _scalar_output(model, params, points):
    out = model.forward(params, np.asarray(points, dtype=np.float64))
    return column(out, 0)


def loss_ic(model, params, colloc):
    """Mean squared initial-condition mismatch (1/N) sum |u(x,0) - g(x)|^2."""
    if colloc.initial_points is None or len(colloc.initial_points) == 0:
        raise ValueError("no initial points available")
    u = _scalar_output(model, params, colloc.initial_points)
    return as_jet(jet_mean(square(u - colloc.initial_values)))


def loss_bc(model, params, colloc):
    """Mean squared Dirichlet mismatch over all boundary points at once."""
    if len(colloc.boundary_points) == 0:
        raise ValueError("no boundary points available")
    u = _scalar_output(model, params, colloc.boundary_points)
    return as_jet(jet_mean(square(u - colloc.boundary_values)))


def loss_residual(model, params, problem, points=None, colloc=None):
    """Mean squared PDE residual over the interior collocation points."""
    pts = points if points is not None else colloc.residual_points
    if pts is None or len(pts) == 0:
        raise ValueError("no residual points available")
    pts = np.asarray(pts, dtype=np.float64)
    with second_order_coords(problem.second_order_coords):
        u = column(model.forward(params, lift_points(pts)), 0)
        residual = problem.residual(u, pts)
    return as_jet(jet_mean(square(residual)))


def total_loss(model, params, problem, colloc, weights):
    """Weighted sum of the physics terms; the initial term is skipped for
    stationary problems."""
    total = loss_residual(model, params, problem, colloc=colloc) * weights.residual
    total = total + loss_bc(model, params, colloc) * weights.bc
    if problem.time_dependent:
        total = total + loss_ic(model, params, colloc) * weights.ic
    return total


def supervised_mse(model, params, x, targets):
    """Plain mean squared error against sampled targets (no physics terms)."""
    x = np.asarray(x, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if len(x) == 0:
        raise ValueError("empty training set")
    u = _scalar_output(model, params, x)
    return as_jet(jet_mean(square(u - targets)))
