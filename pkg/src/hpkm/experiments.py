"""Experiment harness: per-benchmark defaults, runners, sweeps, CSV output.

A flat :class:`ExperimentConfig` pins everything one training run needs.
Defaults reproduce the benchmark settings per problem (architectures,
learning rates, iteration counts, point budgets, schedules); any field can
be overridden.  Sweep cells are independent and run across processes.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np

from .hybrid import HpkmModel
from .kan import KanSpec
from .losses import LossWeights, build_collocation
from .metrics import relative_l2
from .mlp import MlpSpec
from .problems import FIT_INTERVAL, mixed_frequency_target, problem_by_name
from .sampling import add_gaussian_noise, uniform_points
from .training import StepSchedule, TrainConfig, TrainingDiverged, train, train_supervised

__all__ = [
    "ExperimentConfig",
    "ExperimentResult",
    "default_config",
    "config_digest",
    "build_model",
    "evaluation_grid",
    "run_experiment",
    "sweep_cells",
    "xi_sweep",
    "noise_sweep",
    "DEFAULT_SIGMAS",
    "write_results_csv",
    "write_history_csv",
    "write_field_csv",
    "write_spectrum_csv",
    "write_summary_csv",
    "write_noise_csv",
    "read_csv_rows",
]

FIT_TASK = "fit-function"
DEFAULT_SIGMAS = (0.0, 0.01, 0.02, 0.05, 0.1)


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str
    mlp_widths: tuple
    kan_widths: tuple
    grid_size: int
    spline_order: int
    xi: float
    learning_rate: float
    iterations: int
    lr_period: object  # int epochs or None for a constant rate
    lr_gamma: float
    weights: tuple  # (ic, bc, residual)
    n_residual: int
    n_initial: int
    n_boundary: int
    n_points: int  # supervised-fit sample count
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "mlp_widths", tuple(int(w) for w in self.mlp_widths))
        object.__setattr__(self, "kan_widths", tuple(int(w) for w in self.kan_widths))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))

    def train_config(self):
        schedule = None if self.lr_period is None else StepSchedule(int(self.lr_period), self.lr_gamma)
        return TrainConfig(
            learning_rate=self.learning_rate,
            iterations=self.iterations,
            schedule=schedule,
            weights=LossWeights(*self.weights),
            n_residual=self.n_residual,
            n_initial=self.n_initial,
            n_boundary=self.n_boundary,
            seed=self.seed,
        )


_COMMON = dict(grid_size=5, spline_order=3, lr_gamma=0.75, weights=(1.0, 1.0, 1.0), seed=0)

_DEFAULTS = {
    FIT_TASK: dict(
        mlp_widths=(1, 100, 100, 100, 100, 1),
        kan_widths=(1, 5, 5, 5, 1),
        xi=0.9,
        learning_rate=0.01,
        iterations=10000,
        lr_period=None,
        n_residual=0,
        n_initial=0,
        n_boundary=0,
        n_points=500,
        **_COMMON,
    ),
    "poisson": dict(
        mlp_widths=(1, 20, 20, 1),
        kan_widths=(1, 30, 30, 1),
        xi=0.3,
        learning_rate=0.001,
        iterations=15000,
        lr_period=None,
        n_residual=2000,
        n_initial=0,
        n_boundary=500,
        n_points=0,
        **_COMMON,
    ),
    "advection": dict(
        mlp_widths=(2, 20, 20, 20, 1),
        kan_widths=(2, 5, 5, 1),
        xi=0.7,
        learning_rate=0.001,
        iterations=15000,
        lr_period=1000,
        n_residual=2000,
        n_initial=500,
        n_boundary=500,
        n_points=0,
        **_COMMON,
    ),
    "convection-diffusion": dict(
        mlp_widths=(2, 20, 20, 20, 1),
        kan_widths=(2, 5, 5, 1),
        xi=0.2,
        learning_rate=0.001,
        iterations=15000,
        lr_period=1000,
        n_residual=2000,
        n_initial=500,
        n_boundary=500,
        n_points=0,
        **_COMMON,
    ),
    "helmholtz": dict(
        mlp_widths=(2, 20, 20, 20, 1),
        kan_widths=(2, 5, 5, 1),
        xi=0.9,
        learning_rate=0.001,
        iterations=15000,
        lr_period=1000,
        n_residual=2000,
        n_initial=0,
        n_boundary=500,
        n_points=0,
        **_COMMON,
    ),
}

TASK_NAMES = tuple(_DEFAULTS)


def default_config(problem, **overrides):
    """The benchmark configuration for a task, with explicit overrides."""
    if problem not in _DEFAULTS:
        raise ValueError(f"unknown task {problem!r}; expected one of {TASK_NAMES}")
    fields = dict(_DEFAULTS[problem])
    unknown = set(overrides) - set(fields)
    if unknown:
        raise ValueError(f"unknown config overrides: {sorted(unknown)}")
    fields.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(problem=problem, **fields)


def config_digest(config):
    payload = json.dumps(asdict(config), sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:12]


@dataclass(frozen=True)
class ExperimentResult:
    problem: str
    xi: float
    seed: int
    rel_l2: float
    final_loss: float
    params: int
    seconds: float
    digest: str
    diverged: bool = False

    def row(self):
        return {
            "problem": self.problem,
            "xi": self.xi,
            "seed": self.seed,
            "rel_l2": self.rel_l2,
            "final_loss": self.final_loss,
            "params": self.params,
            "seconds": self.seconds,
        }


def build_model(config):
    """Instantiate the fused model for a config (KAN normalized to the
    task's domain)."""
    if config.problem == FIT_TASK:
        bounds = (FIT_INTERVAL,)
    else:
        bounds = problem_by_name(config.problem).bounds
    return HpkmModel(
        KanSpec(config.kan_widths, grid_size=config.grid_size, spline_order=config.spline_order),
        MlpSpec(config.mlp_widths),
        xi=config.xi,
        input_bounds=bounds,
        seed=config.seed,
    )


def evaluation_grid(problem):
    """Uniform test grid: 1000 nodes in 1D, 101 x 101 in 2D."""
    if problem.input_dim == 1:
        return uniform_points(1, 1000, problem.bounds)
    return uniform_points(2, 101, problem.bounds)


def fit_evaluation_grid():
    return uniform_points(1, 1000, (FIT_INTERVAL,))


def fit_training_set(config):
    x = uniform_points(1, config.n_points, (FIT_INTERVAL,)).points
    return x, mixed_frequency_target(x[:, 0])


def run_experiment(config):
    """Train one model per the config; returns (result, history, model).

    A diverged run still produces a result row (rel_l2 of whatever
    parameters were reached, diverged flag set).
    """
    model = build_model(config)
    diverged = False
    if config.problem == FIT_TASK:
        x, y = fit_training_set(config)
        try:
            history = train_supervised(model, x, y, config.train_config())
        except TrainingDiverged as err:
            history, diverged = err.history, True
        grid = fit_evaluation_grid().points
        ref = mixed_frequency_target(grid[:, 0])
    else:
        problem = problem_by_name(config.problem)
        colloc = build_collocation(problem, config.n_residual, config.n_initial, config.n_boundary)
        try:
            history = train(model, problem, colloc, config.train_config())
        except TrainingDiverged as err:
            history, diverged = err.history, True
        grid = evaluation_grid(problem).points
        ref = problem.reference(grid)
    result = ExperimentResult(
        problem=config.problem,
        xi=config.xi,
        seed=config.seed,
        rel_l2=relative_l2(model.predict(grid), ref),
        final_loss=float(history.loss[-1]) if history.loss.size else float("nan"),
        params=model.param_count,
        seconds=history.seconds,
        digest=config_digest(config),
        diverged=diverged,
    )
    return result, history, model


def _run_cell(payload):
    """Worker entry point for pooled sweeps (must stay picklable)."""
    config = ExperimentConfig(**payload)
    result, history, model = run_experiment(config)
    return result, model.get_flat()


def _pool_map(payloads, n_jobs):
    if n_jobs is None:
        n_jobs = min(len(payloads), os.cpu_count() or 1)
    if n_jobs <= 1 or len(payloads) <= 1:
        return [_run_cell(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(_run_cell, payloads))


def sweep_cells(config, cells, n_jobs=None):
    """Train one model per (xi, seed) cell, in the given cell order.

    Returns ``[(ExperimentResult, final_flat_params)]``; failed (diverged)
    cells still yield rows so a sweep completes.
    """
    payloads = [asdict(replace(config, xi=xi, seed=seed)) for xi, seed in cells]
    return _pool_map(payloads, n_jobs)


def xi_sweep(config, xis, seeds, n_jobs=None):
    """Train one model per (xi, seed) cell; cells ordered by (xi, seed).

    Returns ``(results, medians)`` with medians keyed by xi.  The xi = 0
    and xi = 1 rows are the standalone-MLP and standalone-KAN baselines by
    construction.
    """
    for xi in xis:
        if not 0.0 <= xi <= 1.0:
            raise ValueError("every sweep weight must lie in [0, 1]")
    cells = [(xi, seed) for xi in xis for seed in seeds]
    outcomes = sweep_cells(config, cells, n_jobs)
    results = [res for res, _ in outcomes]
    medians = {
        xi: float(np.median([r.rel_l2 for r in results if r.xi == xi and not r.diverged]))
        for xi in xis
    }
    return results, medians


def evaluate_noisy(model, config, sigma, noise_seed):
    """Relative L2 of a trained model queried at noise-perturbed inputs.

    Inputs are perturbed; targets stay the clean reference values, so the
    metric reflects sensitivity to corrupted queries.
    """
    if config.problem == FIT_TASK:
        grid = fit_evaluation_grid()
        ref = mixed_frequency_target(grid.points[:, 0])
    else:
        problem = problem_by_name(config.problem)
        grid = evaluation_grid(problem)
        ref = problem.reference(grid.points)
    noisy = add_gaussian_noise(grid, sigma, seed=noise_seed)
    return relative_l2(model.predict(noisy.points), ref)


def noise_sweep(config, xis, sigmas, seeds, n_jobs=None):
    """Clean-train per (xi, seed), then test on noisy inputs per sigma.

    Returns rows ``(xi, sigma, seed, rel_l2)`` plus medians per (xi, sigma).
    The noise draw is deterministic per (seed, sigma index) and shared
    across xi values so comparisons are paired.
    """
    for sigma in sigmas:
        if sigma < 0:
            raise ValueError("noise levels must be non-negative")
    cells = [(xi, seed) for xi in xis for seed in seeds]
    outcomes = sweep_cells(config, cells, n_jobs)
    rows = []
    for (xi, seed), (result, flat) in zip(cells, outcomes):
        cfg = replace(config, xi=xi, seed=seed)
        model = build_model(cfg)
        model.set_flat(flat)
        for si, sigma in enumerate(sigmas):
            err = evaluate_noisy(model, cfg, sigma, noise_seed=1000 * seed + si)
            rows.append({"problem": config.problem, "xi": xi, "sigma": sigma, "seed": seed, "rel_l2": err})
    medians = {
        (xi, sigma): float(np.median([r["rel_l2"] for r in rows if r["xi"] == xi and r["sigma"] == sigma]))
        for xi in xis
        for sigma in sigmas
    }
    return rows, medians


# -- CSV emission ---------------------------------------------------------------


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_results_csv(path, results):
    _write(
        path,
        ["problem", "xi", "seed", "rel_l2", "final_loss", "params", "seconds"],
        [[r["problem"], r["xi"], r["seed"], r["rel_l2"], r["final_loss"], r["params"], r["seconds"]]
         for r in (res.row() if isinstance(res, ExperimentResult) else res for res in results)],
    )


def write_history_csv(path, history):
    rows = [[e, history.loss[e], history.lr[e]] for e in range(history.loss.size)]
    _write(path, ["epoch", "loss", "lr"], rows)


def write_field_csv(path, points, u_ref, u_pred, second_coord=None):
    """Field rows: coordinates, reference, prediction, absolute error.

    ``second_coord`` labels the second column ("t" or "y") for 2-D fields.
    """
    points = np.asarray(points)
    abs_err = np.abs(np.asarray(u_pred) - np.asarray(u_ref))
    if points.shape[1] == 1:
        header = ["x", "u_ref", "u_pred", "abs_err"]
        rows = [[points[i, 0], u_ref[i], u_pred[i], abs_err[i]] for i in range(len(points))]
    else:
        header = ["x", second_coord or "y", "u_ref", "u_pred", "abs_err"]
        rows = [
            [points[i, 0], points[i, 1], u_ref[i], u_pred[i], abs_err[i]] for i in range(len(points))
        ]
    _write(path, header, rows)


def write_spectrum_csv(path, spectrum):
    rows = list(zip(spectrum.frequencies, spectrum.magnitudes))
    _write(path, ["freq", "magnitude"], rows)


def write_summary_csv(path, problem, medians):
    rows = [[problem, xi, medians[xi]] for xi in sorted(medians)]
    _write(path, ["problem", "xi", "median_rel_l2"], rows)


def write_noise_csv(path, rows, summary_path=None, medians=None):
    _write(
        path,
        ["problem", "xi", "sigma", "seed", "rel_l2"],
        [[r["problem"], r["xi"], r["sigma"], r["seed"], r["rel_l2"]] for r in rows],
    )
    if summary_path is not None and medians is not None:
        srows = [[rows[0]["problem"], xi, sigma, medians[(xi, sigma)]] for (xi, sigma) in sorted(medians)]
        _write(summary_path, ["problem", "xi", "sigma", "median_rel_l2"], srows)


def read_csv_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
