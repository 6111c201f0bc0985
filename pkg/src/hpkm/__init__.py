"""Hybrid parallel KAN-MLP networks for function fitting and PDE solving.

A fixed mixing weight fuses a B-spline Kolmogorov-Arnold branch with a
perceptron branch; physics-informed training minimizes residual plus
condition losses over collocation points using an in-package autodiff
engine that carries exact first and second input derivatives.
"""

from .estimators import HpkmRegressor, PinnSolver
from .hybrid import HpkmModel
from .kan import KanNetwork, KanSpec, kan_param_count
from .metrics import fourier_spectrum, relative_l2
from .mlp import MlpNetwork, MlpSpec, mlp_param_count
from .problems import PROBLEM_NAMES, mixed_frequency_target, problem_by_name
from .splines import SplineGrid, bspline_basis

__version__ = "0.1.0"

__all__ = [
    "HpkmModel",
    "HpkmRegressor",
    "PinnSolver",
    "KanNetwork",
    "KanSpec",
    "MlpNetwork",
    "MlpSpec",
    "SplineGrid",
    "bspline_basis",
    "kan_param_count",
    "mlp_param_count",
    "relative_l2",
    "fourier_spectrum",
    "problem_by_name",
    "mixed_frequency_target",
    "PROBLEM_NAMES",
    "__version__",
]
