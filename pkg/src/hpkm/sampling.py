"""Deterministic point-set generation: Sobol sequences, grids, noise.

The Sobol generator is the standard Gray-code construction with Joe-Kuo
direction numbers for the first two dimensions (no benchmark needs more).
Values are dyadic rationals over 2^32, so scaled sequences are bitwise
reproducible across platforms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = [
    "PointSet",
    "sobol",
    "uniform_points",
    "boundary_points",
    "add_gaussian_noise",
]

_BITS = 32
_SCALE = 0.5**_BITS


@dataclass(frozen=True)
class PointSet:
    dim: int
    points: np.ndarray  # (n, dim)
    provenance: str
    bounds: tuple
    tags: Optional[np.ndarray] = None  # boundary-segment index per point

    def __post_init__(self):
        if self.points.ndim != 2 or self.points.shape[1] != self.dim:
            raise ValueError("points must have shape (n, dim)")

    def __len__(self):
        return len(self.points)


def _direction_numbers(dim_index):
    """Direction integers V_j (already shifted to 32-bit fixed point)."""
    if dim_index == 0:
        m = [1] * _BITS
    elif dim_index == 1:
        # primitive polynomial x + 1 (degree 1, a = 0), initial m_1 = 1
        m = [1]
        while len(m) < _BITS:
            prev = m[-1]
            m.append((prev << 1) ^ prev)
    else:
        raise ValueError("only dimensions 1 and 2 are supported")
    return [m[j] << (_BITS - 1 - j) for j in range(_BITS)]


def _sobol_unit(dim, count):
    """First ``count`` points (including the initial zero) in [0, 1)^dim."""
    directions = [_direction_numbers(d) for d in range(dim)]
    out = np.empty((count, dim))
    state = [0] * dim
    out[0] = 0.0
    for i in range(1, count):
        bit = (i & -i).bit_length() - 1
        for d in range(dim):
            state[d] ^= directions[d][bit]
            out[i, d] = state[d] * _SCALE
    return out


def _as_bounds(bounds, dim):
    b = np.asarray(bounds, dtype=np.float64).reshape(-1, 2)
    if b.shape[0] != dim:
        raise ValueError(f"expected {dim} bounds pairs")
    if np.any(b[:, 0] >= b[:, 1]):
        raise ValueError("bounds must satisfy lo < hi")
    return b


def sobol(dim, n, bounds, skip=1):
    """First ``n`` Sobol points after ``skip`` dropped ones, scaled to bounds.

    The default skip of 1 discards the all-zeros point so samples are
    strictly interior on the low side.
    """
    if dim not in (1, 2):
        raise ValueError("only dimensions 1 and 2 are supported")
    if n < 1:
        raise ValueError("need at least one point")
    if skip < 0:
        raise ValueError("skip must be non-negative")
    b = _as_bounds(bounds, dim)
    unit = _sobol_unit(dim, skip + n)[skip:]
    pts = b[:, 0] + unit * (b[:, 1] - b[:, 0])
    return PointSet(dim, pts, "sobol", tuple(map(tuple, b)))


def uniform_points(dim, n, bounds):
    """Evenly spaced evaluation nodes: a closed grid in 1D, an n x n tensor
    grid in 2D (first coordinate varies slowest)."""
    if n < 2:
        raise ValueError("need at least two points per axis")
    b = _as_bounds(bounds, dim)
    if dim == 1:
        pts = np.linspace(b[0, 0], b[0, 1], n)[:, None]
    elif dim == 2:
        xs = np.linspace(b[0, 0], b[0, 1], n)
        ys = np.linspace(b[1, 0], b[1, 1], n)
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        pts = np.column_stack([gx.ravel(), gy.ravel()])
    else:
        raise ValueError("only dimensions 1 and 2 are supported")
    return PointSet(dim, pts, "uniform", tuple(map(tuple, b)))


def boundary_points(problem, n, seed=0):
    """``n`` points spread across a problem's boundary segments.

    The split is as even as possible with the remainder going to earlier
    segments.  Along each 2-D segment the free coordinate is Sobol-sampled;
    1-D segments are isolated endpoints, repeated.  ``seed`` is accepted
    for interface symmetry; the construction is already deterministic.
    """
    segments = problem.segments
    if not segments:
        raise ValueError("problem has no boundary segments")
    counts = [n // len(segments)] * len(segments)
    for i in range(n % len(segments)):
        counts[i] += 1
    dim = problem.input_dim
    chunks, tags = [], []
    for si, (segment, cnt) in enumerate(zip(segments, counts)):
        if cnt == 0:
            continue
        pts = np.empty((cnt, dim))
        pts[:, segment.coord] = segment.value
        if dim == 2:
            free = 1 - segment.coord
            line = sobol(1, cnt, (problem.bounds[free],), skip=1)
            pts[:, free] = line.points[:, 0]
        chunks.append(pts)
        tags.append(np.full(cnt, si))
    return PointSet(
        dim,
        np.concatenate(chunks),
        "boundary",
        tuple(tuple(b) for b in problem.bounds),
        tags=np.concatenate(tags),
    )


def add_gaussian_noise(point_set, sigma, seed):
    """Perturb each coordinate by N(0, (sigma * coordinate width)^2).

    Deterministic per seed; sigma = 0 returns an identical point set (with
    provenance marked).  Noisy points may leave the declared bounds.
    """
    if sigma < 0:
        raise ValueError("noise level must be non-negative")
    widths = np.array([hi - lo for lo, hi in point_set.bounds])
    if sigma == 0:
        noise = np.zeros_like(point_set.points)
    else:
        rng = np.random.default_rng(seed)
        noise = rng.standard_normal(point_set.points.shape) * (sigma * widths)
    return PointSet(
        point_set.dim,
        point_set.points + noise,
        "noisy",
        point_set.bounds,
        tags=point_set.tags,
    )
