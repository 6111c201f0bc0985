"""Benchmark problem definitions: domains, residuals, conditions, references.

Each problem bundles its domain bounds, the residual operator applied to a
model-output jet, initial/boundary specifications, and a reference
solution.  Four PDEs are provided (Poisson, advection, convection-
diffusion, Helmholtz) plus the mixed-frequency target used for the
supervised fitting study.

The convection-diffusion problem has no closed form here; its reference is
a Crank-Nicolson finite-difference field, solved once on a fine grid and
interpolated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import RectBivariateSpline
from scipy.linalg import solve_banded

from . import autodiff as ad
from .autodiff import column, first_derivative, second_derivative, square

__all__ = [
    "BoundarySegment",
    "PdeProblem",
    "poisson_problem",
    "advection_problem",
    "convection_diffusion_problem",
    "helmholtz_problem",
    "problem_by_name",
    "PROBLEM_NAMES",
    "mixed_frequency_target",
    "FIT_INTERVAL",
    "poisson_forcing",
    "helmholtz_forcing",
    "convection_diffusion_initial",
    "cd_reference_solver",
    "CD_SPEED",
    "CD_DIFFUSIVITY",
]

POISSON_HALF_WIDTH = 2.0 * np.sqrt(np.pi)

CD_SPEED = 4.0
CD_DIFFUSIVITY = 0.05
CD_HALF_WIDTH = 4.0
CD_HORIZON = 1.0

HELMHOLTZ_WAVE_NUMBER = 1.0
HELMHOLTZ_A1 = 1.0
HELMHOLTZ_A2 = 4.0

FIT_INTERVAL = (-3.0, 3.0)


@dataclass(frozen=True)
class BoundarySegment:
    """One boundary face: coordinate ``coord`` pinned at ``value``."""

    coord: int
    value: float
    prescribed: Callable[[np.ndarray], np.ndarray]


@dataclass
class PdeProblem:
    name: str
    bounds: tuple
    residual: Callable
    reference: Callable[[np.ndarray], np.ndarray]
    segments: tuple
    ic: Optional[Callable[[np.ndarray], np.ndarray]] = None
    reference_jet: Optional[Callable] = None
    second_order_coords: tuple = ()  # coordinates the residual differentiates twice

    @property
    def input_dim(self):
        return len(self.bounds)

    @property
    def time_dependent(self):
        return self.ic is not None

    def widths(self):
        b = np.asarray(self.bounds)
        return b[:, 1] - b[:, 0]


# -- Poisson -------------------------------------------------------------------


def poisson_forcing(x):
    """Forcing consistent with the exact solution sin(x^2) of -u'' = f."""
    x = np.asarray(x, dtype=np.float64)
    return 4.0 * x * x * np.sin(x * x) - 2.0 * np.cos(x * x)


def poisson_problem():
    length = POISSON_HALF_WIDTH

    def residual(u, pts):
        return -second_derivative(u, 0) - poisson_forcing(pts[:, 0])

    def reference(pts):
        x = np.asarray(pts)[:, 0]
        return np.sin(x * x)

    def reference_jet(xj):
        return ad.sin(square(column(xj, 0)))

    zero = lambda pts: np.zeros(len(pts))
    return PdeProblem(
        name="poisson",
        bounds=((-length, length),),
        residual=residual,
        reference=reference,
        reference_jet=reference_jet,
        segments=(
            BoundarySegment(0, -length, zero),
            BoundarySegment(0, length, zero),
        ),
        second_order_coords=(0,),
    )


# -- Advection -----------------------------------------------------------------


def advection_problem():
    def residual(u, pts):
        return first_derivative(u, 1) + first_derivative(u, 0)

    def reference(pts):
        pts = np.asarray(pts)
        return 2.0 * np.sin(np.pi * (pts[:, 0] - pts[:, 1]))

    def reference_jet(xj):
        return ad.sin((column(xj, 0) - column(xj, 1)) * np.pi) * 2.0

    return PdeProblem(
        name="advection",
        bounds=((0.0, 1.0), (0.0, 0.5)),
        residual=residual,
        reference=reference,
        reference_jet=reference_jet,
        ic=lambda x: 2.0 * np.sin(np.pi * np.asarray(x)),
        segments=(
            BoundarySegment(0, 0.0, lambda pts: -2.0 * np.sin(np.pi * pts[:, 1])),
            BoundarySegment(0, 1.0, lambda pts: 2.0 * np.sin(np.pi * pts[:, 1])),
        ),
    )


# -- Convection-diffusion ------------------------------------------------------


def convection_diffusion_initial(x):
    """Gaussian pulse centered at x = -2 (constants used verbatim)."""
    x = np.asarray(x, dtype=np.float64)
    amplitude = 0.1 / np.sqrt(0.1 * CD_DIFFUSIVITY)
    return amplitude * np.exp(-((x + 2.0) ** 2) / (4.0 * 0.14 * CD_DIFFUSIVITY))


def cd_reference_solver(nx=3201, nt=2501):
    """Crank-Nicolson field for the convection-diffusion benchmark.

    Returns ``(xs, ts, field)`` with ``field`` of shape (nt, nx); row 0 is
    the initial condition sampled at the grid nodes.  The defaults are well
    above the stated resolution floor so the field is accurate to about
    1e-3 in max norm (the solver is second order in both variables and the
    scheme is unconditionally stable).
    """
    if nx < 401 or nt < 1001:
        raise ValueError("resolution floor is nx >= 401, nt >= 1001")
    xs = np.linspace(-CD_HALF_WIDTH, CD_HALF_WIDTH, nx)
    ts = np.linspace(0.0, CD_HORIZON, nt)
    h = xs[1] - xs[0]
    dt = ts[1] - ts[0]

    # interior operator L u = -c u_x + mu u_xx with central differences
    lower = CD_SPEED / (2.0 * h) + CD_DIFFUSIVITY / h**2
    diag = -2.0 * CD_DIFFUSIVITY / h**2
    upper = -CD_SPEED / (2.0 * h) + CD_DIFFUSIVITY / h**2

    m = nx - 2
    ab = np.zeros((3, m))
    ab[0, 1:] = -0.5 * dt * upper
    ab[1, :] = 1.0 - 0.5 * dt * diag
    ab[2, :-1] = -0.5 * dt * lower

    field = np.empty((nt, nx))
    field[0] = convection_diffusion_initial(xs)
    u = field[0].copy()
    u[0] = u[-1] = 0.0
    for n in range(1, nt):
        interior = u[1:-1]
        lu = lower * u[:-2] + diag * interior + upper * u[2:]
        rhs = interior + 0.5 * dt * lu
        interior = solve_banded((1, 1), ab, rhs)
        if not np.all(np.isfinite(interior)):
            raise FloatingPointError(f"reference solver produced non-finite values at step {n}")
        u = np.concatenate(([0.0], interior, [0.0]))
        field[n] = u
    return xs, ts, field


class _CdReference:
    """Lazy bicubic interpolation over the Crank-Nicolson field.

    Cubic interpolation keeps the off-node error well below the field's own
    discretization error; out-of-range queries (noisy test inputs)
    extrapolate the local polynomial.
    """

    def __init__(self):
        self._interp = None

    def __call__(self, pts):
        if self._interp is None:
            xs, ts, field = cd_reference_solver()
            self._interp = RectBivariateSpline(ts, xs, field, kx=3, ky=3)
        pts = np.asarray(pts)
        return self._interp.ev(pts[:, 1], pts[:, 0])


def convection_diffusion_problem():
    def residual(u, pts):
        return (
            first_derivative(u, 1)
            + first_derivative(u, 0) * CD_SPEED
            - second_derivative(u, 0) * CD_DIFFUSIVITY
        )

    zero = lambda pts: np.zeros(len(pts))
    return PdeProblem(
        name="convection-diffusion",
        bounds=((-CD_HALF_WIDTH, CD_HALF_WIDTH), (0.0, CD_HORIZON)),
        residual=residual,
        reference=_CdReference(),
        ic=convection_diffusion_initial,
        segments=(
            BoundarySegment(0, -CD_HALF_WIDTH, zero),
            BoundarySegment(0, CD_HALF_WIDTH, zero),
        ),
        second_order_coords=(0,),
    )


# -- Helmholtz -----------------------------------------------------------------


def helmholtz_forcing(x, y):
    """Inhomogeneity with spatial frequencies a1, a2 (third term uses k, not
    k^2, exactly as stated; the two coincide at the wave number used here)."""
    x, y = np.asarray(x), np.asarray(y)
    s = np.sin(HELMHOLTZ_A1 * np.pi * x) * np.sin(HELMHOLTZ_A2 * np.pi * y)
    return (
        -((HELMHOLTZ_A1 * np.pi) ** 2) * s
        - ((HELMHOLTZ_A2 * np.pi) ** 2) * s
        + HELMHOLTZ_WAVE_NUMBER * s
    )


def helmholtz_problem():
    k2 = HELMHOLTZ_WAVE_NUMBER**2

    def residual(u, pts):
        q = helmholtz_forcing(pts[:, 0], pts[:, 1])
        return second_derivative(u, 0) + second_derivative(u, 1) + u * k2 - q

    def reference(pts):
        pts = np.asarray(pts)
        return np.sin(HELMHOLTZ_A1 * np.pi * pts[:, 0]) * np.sin(HELMHOLTZ_A2 * np.pi * pts[:, 1])

    def reference_jet(xj):
        return ad.sin(column(xj, 0) * (HELMHOLTZ_A1 * np.pi)) * ad.sin(
            column(xj, 1) * (HELMHOLTZ_A2 * np.pi)
        )

    zero = lambda pts: np.zeros(len(pts))
    return PdeProblem(
        name="helmholtz",
        bounds=((-1.0, 1.0), (-1.0, 1.0)),
        residual=residual,
        reference=reference,
        reference_jet=reference_jet,
        segments=(
            BoundarySegment(0, -1.0, zero),
            BoundarySegment(0, 1.0, zero),
            BoundarySegment(1, -1.0, zero),
            BoundarySegment(1, 1.0, zero),
        ),
        second_order_coords=(0, 1),
    )


# -- supervised fitting target -------------------------------------------------


def mixed_frequency_target(x):
    """Discontinuous mixed-frequency target on [-3, 3].

    Left branch: 5 + sum of four low-frequency sines; right branch mixes a
    slow tone with a 12.5 cycles/unit component.
    """
    x = np.asarray(x, dtype=np.float64)
    left = 5.0 + sum(np.sin((k + 1) * np.pi * x) for k in range(4))
    right = np.sin(2.0 * np.pi * x) + 0.5 * np.sin(25.0 * np.pi * x)
    return np.where(x < 0.0, left, right)


_FACTORIES = {
    "poisson": poisson_problem,
    "advection": advection_problem,
    "convection-diffusion": convection_diffusion_problem,
    "helmholtz": helmholtz_problem,
}

PROBLEM_NAMES = tuple(_FACTORIES)


def problem_by_name(name):
    try:
        return _FACTORIES[name]()
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; expected one of {PROBLEM_NAMES}") from None
