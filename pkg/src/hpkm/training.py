"""Full-batch Adam training loop with step learning-rate decay.

Every epoch evaluates the complete loss over the frozen collocation (or
data) sets, backpropagates, and applies one Adam update.  Histories record
loss and learning rate per epoch; runs are bitwise reproducible on a
platform for a fixed seed because sampling, initialization, and the
reverse sweep are all deterministic.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .autodiff import backward
from .losses import LossWeights, supervised_mse, total_loss

__all__ = [
    "StepSchedule",
    "TrainConfig",
    "TrainHistory",
    "TrainingDiverged",
    "AdamState",
    "adam_step",
    "step_lr",
    "train",
    "train_supervised",
]


@dataclass(frozen=True)
class StepSchedule:
    """Multiply the learning rate by ``gamma`` every ``period`` epochs."""

    period: int
    gamma: float

    def __post_init__(self):
        if self.period < 1:
            raise ValueError("schedule period must be >= 1")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    iterations: int = 15000
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    schedule: Optional[StepSchedule] = None
    weights: LossWeights = field(default_factory=LossWeights)
    n_residual: int = 2000
    n_initial: int = 500
    n_boundary: int = 500
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("Adam betas must lie in (0, 1)")


@dataclass
class TrainHistory:
    loss: np.ndarray
    lr: np.ndarray
    final_params: np.ndarray
    seconds: float


class TrainingDiverged(RuntimeError):
    """Loss or gradient became non-finite; carries the partial history."""

    def __init__(self, message, history):
        super().__init__(message)
        self.history = history


class AdamState:
    def __init__(self, size):
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.step = 0


def adam_step(theta, grad, state, lr, beta1=0.9, beta2=0.999, epsilon=1e-8):
    """One in-place bias-corrected Adam update on the flat vector."""
    if not np.all(np.isfinite(grad)):
        raise FloatingPointError("non-finite gradient in optimizer step")
    state.step += 1
    state.m = beta1 * state.m + (1.0 - beta1) * grad
    state.v = beta2 * state.v + (1.0 - beta2) * (grad * grad)
    mhat = state.m / (1.0 - beta1**state.step)
    vhat = state.v / (1.0 - beta2**state.step)
    theta -= lr * mhat / (np.sqrt(vhat) + epsilon)


def step_lr(epoch, base_lr, period, gamma):
    """Closed-form stepped rate: base * gamma^floor(epoch / period)."""
    if epoch < 0:
        raise ValueError("epoch must be non-negative")
    return base_lr * gamma ** (epoch // period)


def _run(model, loss_fn, config):
    state = AdamState(model.store.size)
    losses = np.empty(config.iterations)
    lrs = np.empty(config.iterations)
    start = time.perf_counter()
    for epoch in range(config.iterations):
        if config.schedule is not None:
            lr = step_lr(epoch, config.learning_rate, config.schedule.period, config.schedule.gamma)
        else:
            lr = config.learning_rate
        jets = model.store.as_jets()
        loss = loss_fn(jets)
        value = float(loss.val)
        if not np.isfinite(value):
            partial = TrainHistory(
                losses[:epoch].copy(), lrs[:epoch].copy(), model.get_flat(), time.perf_counter() - start
            )
            raise TrainingDiverged(f"non-finite loss at epoch {epoch}", partial)
        losses[epoch] = value
        lrs[epoch] = lr
        backward(loss)
        grad = model.store.collect_grad(jets)
        try:
            adam_step(model.store.flat, grad, state, lr, config.beta1, config.beta2, config.epsilon)
        except FloatingPointError:
            partial = TrainHistory(
                losses[: epoch + 1].copy(), lrs[: epoch + 1].copy(), model.get_flat(), time.perf_counter() - start
            )
            raise TrainingDiverged(f"non-finite gradient at epoch {epoch}", partial) from None
    return TrainHistory(losses, lrs, model.get_flat(), time.perf_counter() - start)


def train(model, problem, colloc, config):
    """Minimize the weighted physics loss; returns the full history."""
    return _run(
        model,
        lambda jets: total_loss(model, jets, problem, colloc, config.weights),
        config,
    )


def train_supervised(model, x, targets, config):
    """Minimize plain MSE against sampled targets."""
    return _run(model, lambda jets: supervised_mse(model, jets, x, targets), config)
