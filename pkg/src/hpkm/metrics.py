"""Evaluation metrics: relative L2 error, error fields, Fourier spectra."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["relative_l2", "error_field", "fourier_spectrum", "SpectrumResult"]


def relative_l2(pred, ref):
    """sqrt(sum |ref - pred|^2) / sqrt(sum |ref|^2)."""
    pred = np.asarray(pred, dtype=np.float64).ravel()
    ref = np.asarray(ref, dtype=np.float64).ravel()
    if pred.shape != ref.shape or len(ref) < 1:
        raise ValueError("prediction and reference must have equal nonzero length")
    denom = np.linalg.norm(ref)
    if denom == 0.0:
        raise ValueError("relative L2 is undefined for an all-zero reference")
    return float(np.linalg.norm(ref - pred) / denom)


def error_field(model, problem, points):
    """Pointwise |u_model - u_ref| with coordinates for heatmap export."""
    pts = np.asarray(points, dtype=np.float64)
    ref = np.asarray(problem.reference(pts))
    pred = model.predict(pts)
    return {
        "points": pts,
        "u_ref": ref,
        "u_pred": pred,
        "abs_err": np.abs(pred - ref),
    }


@dataclass(frozen=True)
class SpectrumResult:
    """One-sided spectrum: frequencies in cycles per input unit."""

    frequencies: np.ndarray
    magnitudes: np.ndarray


def fourier_spectrum(samples, spacing):
    """Modulus of the discrete transform of mean-removed uniform samples.

    ``spacing`` may be the scalar sample step or the coordinate array the
    samples were taken at, in which case uniformity is checked.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 1 or samples.size < 16:
        raise ValueError("need at least 16 one-dimensional samples")
    spacing = np.asarray(spacing, dtype=np.float64)
    if spacing.ndim > 0:
        steps = np.diff(spacing)
        if steps.size + 1 != samples.size:
            raise ValueError("coordinate array does not match the samples")
        if np.max(np.abs(steps - steps[0])) > 1e-9 * max(abs(steps[0]), 1.0):
            raise ValueError("samples are not uniformly spaced")
        spacing = steps[0]
    step = float(spacing)
    if step <= 0:
        raise ValueError("spacing must be positive")
    centered = samples - samples.mean()
    return SpectrumResult(
        frequencies=np.fft.rfftfreq(samples.size, d=step),
        magnitudes=np.abs(np.fft.rfft(centered)),
    )
