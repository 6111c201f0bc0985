"""Command-line experiment runner.

Commands map to the studies: ``fit-function`` (supervised mixed-frequency
fit), ``solve`` (one PDE run), ``sweep-xi`` (mixing-weight sweep),
``noise`` (robustness to noisy test inputs), ``print-config`` (show the
fully resolved configuration).  Declarative JSON configs carry three rigid
sections (``model``, ``train``, plus ``problem``/``out_dir``); unknown
keys are hard errors so benchmark runs stay comparable.

Exit codes: 0 success, 2 configuration error, 3 training divergence,
4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from .experiments import (
    DEFAULT_SIGMAS,
    FIT_TASK,
    TASK_NAMES,
    default_config,
    evaluation_grid,
    fit_evaluation_grid,
    noise_sweep,
    run_experiment,
    write_field_csv,
    write_history_csv,
    write_noise_csv,
    write_results_csv,
    write_spectrum_csv,
    write_summary_csv,
    xi_sweep,
)
from .metrics import fourier_spectrum
from .problems import FIT_INTERVAL, mixed_frequency_target, problem_by_name

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_IO = 4

_MODEL_KEYS = {"mlp_widths", "kan_widths", "grid_size", "spline_order", "xi"}
_TRAIN_KEYS = {
    "learning_rate",
    "iterations",
    "scheduler",
    "seeds",
    "weights",
    "n_residual",
    "n_initial",
    "n_boundary",
    "n_points",
}


class ConfigError(ValueError):
    pass


def _check_keys(section, allowed, where):
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def load_config(payload, problem=None):
    """Resolve a raw config dict to (ExperimentConfig, seeds, out_dir).

    Omitted fields fall back to the chosen problem's documented defaults.
    """
    if not isinstance(payload, dict):
        raise ConfigError("config must be a JSON object")
    _check_keys(payload, {"problem", "model", "train", "out_dir"}, "config")
    name = problem or payload.get("problem")
    if name is None:
        raise ConfigError("no problem selected (config key 'problem' or --problem)")
    if name not in TASK_NAMES:
        raise ConfigError(f"unknown problem {name!r}; expected one of {TASK_NAMES}")
    model = dict(payload.get("model") or {})
    trainsec = dict(payload.get("train") or {})
    _check_keys(model, _MODEL_KEYS, "model section")
    _check_keys(trainsec, _TRAIN_KEYS, "train section")

    seeds = trainsec.pop("seeds", [0])
    if not isinstance(seeds, (list, tuple)) or not seeds:
        raise ConfigError("train.seeds must be a non-empty list")
    scheduler = trainsec.pop("scheduler", "default")
    overrides = {}
    overrides.update(model)
    overrides["iterations"] = trainsec.pop("iterations", None)
    overrides.update(trainsec)
    if "weights" in overrides and overrides["weights"] is not None:
        w = overrides["weights"]
        if not isinstance(w, (list, tuple)) or len(w) != 3:
            raise ConfigError("train.weights must be a 3-element list")
        overrides["weights"] = tuple(w)
    for key in ("mlp_widths", "kan_widths"):
        if key in overrides and overrides[key] is not None:
            overrides[key] = tuple(overrides[key])
    try:
        config = default_config(name, **overrides)
        if scheduler != "default":
            if scheduler is None:
                config = replace(config, lr_period=None)
            else:
                _check_keys(scheduler, {"period", "gamma"}, "train.scheduler")
                config = replace(
                    config,
                    lr_period=int(scheduler["period"]),
                    lr_gamma=float(scheduler.get("gamma", config.lr_gamma)),
                )
        config.train_config()  # validate ranges eagerly
    except (ValueError, TypeError, KeyError) as err:
        raise ConfigError(str(err)) from err
    return config, [int(s) for s in seeds], payload.get("out_dir", "results")


def serialize_config(config, seeds, out_dir):
    """Fully resolved config in the file schema (a parse fixed point)."""
    scheduler = None if config.lr_period is None else {"period": config.lr_period, "gamma": config.lr_gamma}
    return {
        "problem": config.problem,
        "model": {
            "mlp_widths": list(config.mlp_widths),
            "kan_widths": list(config.kan_widths),
            "grid_size": config.grid_size,
            "spline_order": config.spline_order,
            "xi": config.xi,
        },
        "train": {
            "learning_rate": config.learning_rate,
            "iterations": config.iterations,
            "scheduler": scheduler,
            "seeds": list(seeds),
            "weights": list(config.weights),
            "n_residual": config.n_residual,
            "n_initial": config.n_initial,
            "n_boundary": config.n_boundary,
            "n_points": config.n_points,
        },
        "out_dir": out_dir,
    }


def _read_config_file(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as err:
        raise ConfigError(f"cannot read config: {err}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"config is not valid JSON: {err}") from err


def _resolve(args):
    payload = _read_config_file(args.config) if args.config else {}
    config, seeds, out_dir = load_config(payload, problem=args.problem)
    if args.xi is not None:
        config = replace(config, xi=args.xi)
    if args.iterations is not None:
        config = replace(config, iterations=args.iterations)
    if args.seed is not None:
        seeds = [args.seed]
    if args.out is not None:
        out_dir = args.out
    if not 0.0 <= config.xi <= 1.0:
        raise ConfigError("xi must lie in [0, 1]")
    return config, seeds, out_dir


def _outdir(path):
    try:
        os.makedirs(path, exist_ok=True)
        return path
    except OSError as err:
        raise IOError(f"cannot create output directory: {err}") from err


def cmd_fit_function(args):
    config, seeds, out_dir = _resolve(args)
    config = replace(config, problem=FIT_TASK, seed=seeds[0])
    out = _outdir(out_dir)
    result, history, model = run_experiment(config)
    grid = fit_evaluation_grid().points
    ref = mixed_frequency_target(grid[:, 0])
    pred = model.predict(grid)
    spacing = grid[1, 0] - grid[0, 0]
    write_history_csv(os.path.join(out, "history.csv"), history)
    write_field_csv(os.path.join(out, "prediction.csv"), grid, ref, pred)
    write_spectrum_csv(os.path.join(out, "spectrum_ref.csv"), fourier_spectrum(ref, spacing))
    write_spectrum_csv(os.path.join(out, "spectrum_pred.csv"), fourier_spectrum(pred, spacing))
    write_results_csv(os.path.join(out, "results.csv"), [result])
    print(f"fit-function xi={config.xi} seed={config.seed} rel_l2={result.rel_l2:.6g}")
    return EXIT_DIVERGED if result.diverged else EXIT_OK


def cmd_solve(args):
    config, seeds, out_dir = _resolve(args)
    if config.problem == FIT_TASK:
        raise ConfigError("solve expects a differential-equation problem; use fit-function")
    config = replace(config, seed=seeds[0])
    out = _outdir(out_dir)
    result, history, model = run_experiment(config)
    problem = problem_by_name(config.problem)
    grid = evaluation_grid(problem).points
    ref = problem.reference(grid)
    pred = model.predict(grid)
    second = None if problem.input_dim == 1 else ("t" if problem.time_dependent else "y")
    write_history_csv(os.path.join(out, "history.csv"), history)
    write_field_csv(os.path.join(out, "field.csv"), grid, ref, pred, second_coord=second)
    write_results_csv(os.path.join(out, "results.csv"), [result])
    print(f"solve {config.problem} xi={config.xi} seed={config.seed} rel_l2={result.rel_l2:.6g}")
    return EXIT_DIVERGED if result.diverged else EXIT_OK


def _parse_grid(text, what):
    try:
        values = [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as err:
        raise ConfigError(f"bad {what} grid: {err}") from err
    if not values:
        raise ConfigError(f"empty {what} grid")
    return values


def cmd_sweep_xi(args):
    config, seeds, out_dir = _resolve(args)
    xis = _parse_grid(args.xi_grid, "xi")
    if any(not 0 <= x <= 1 for x in xis):
        raise ConfigError("sweep weights must lie in [0, 1]")
    out = _outdir(out_dir)
    results, medians = xi_sweep(config, xis, seeds, n_jobs=args.jobs)
    write_results_csv(os.path.join(out, "results.csv"), results)
    write_summary_csv(os.path.join(out, "xi_summary.csv"), config.problem, medians)
    for xi in xis:
        print(f"sweep {config.problem} xi={xi} median_rel_l2={medians[xi]:.6g}")
    return EXIT_DIVERGED if any(r.diverged for r in results) else EXIT_OK


def cmd_noise(args):
    config, seeds, out_dir = _resolve(args)
    xis = _parse_grid(args.xi_grid, "xi") if args.xi_grid else [config.xi]
    sigmas = _parse_grid(args.sigma_grid, "sigma")
    if any(s < 0 for s in sigmas):
        raise ConfigError("noise levels must be non-negative")
    out = _outdir(out_dir)
    rows, medians = noise_sweep(config, xis, sigmas, seeds, n_jobs=args.jobs)
    write_noise_csv(
        os.path.join(out, "noise.csv"),
        rows,
        summary_path=os.path.join(out, "noise_summary.csv"),
        medians=medians,
    )
    for xi in xis:
        worst = medians[(xi, max(sigmas))]
        print(f"noise {config.problem} xi={xi} median_rel_l2@sigma={max(sigmas)} = {worst:.6g}")
    return EXIT_OK


def cmd_print_config(args):
    config, seeds, out_dir = _resolve(args)
    print(json.dumps(serialize_config(config, seeds, out_dir), indent=2))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="hpkm", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "fit-function": cmd_fit_function,
        "solve": cmd_solve,
        "sweep-xi": cmd_sweep_xi,
        "noise": cmd_noise,
        "print-config": cmd_print_config,
    }
    for name, fn in commands.items():
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config path")
        p.add_argument("--problem", choices=TASK_NAMES, help="task selector")
        p.add_argument("--xi", type=float, help="mixing weight override")
        p.add_argument("--seed", type=int, help="single-seed override")
        p.add_argument("--out", help="output directory override")
        p.add_argument("--iterations", type=int, help="iteration-count override")
        if name in ("sweep-xi", "noise"):
            p.add_argument("--jobs", type=int, default=None, help="parallel sweep cells")
            default_grid = ",".join(f"{x:.1f}" for x in np.arange(0, 1.01, 0.1))
            p.add_argument("--xi-grid", dest="xi_grid",
                           default=default_grid if name == "sweep-xi" else None)
        if name == "noise":
            p.add_argument("--sigma-grid", dest="sigma_grid",
                           default=",".join(str(s) for s in DEFAULT_SIGMAS))
        p.set_defaults(handler=fn)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except IOError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
