"""Integral estimators built from weighted samples and jump paths.

Sums use :func:`math.fsum` so long heavy-tailed weight sequences keep full
precision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import PathExhaustedError
from .renewal import JumpPath, count_at
from .samplers import SojournLaw, WeightedStream, as_arrays, marginals


@dataclass(frozen=True)
class EstimateResult:
    value: float
    n_or_t: float
    numerator: float
    denominator: float
    ess: float = float("nan")


def _h(h: Callable, states) -> np.ndarray:
    return np.asarray(h(np.asarray(states)), dtype=float) * np.ones(len(states))


def effective_sample_size(weights) -> float:
    """``(sum xi)^2 / sum xi^2``."""
    w = np.asarray(weights, dtype=float)
    return math.fsum(w) ** 2 / math.fsum(w * w)


def is_mean_unnormalized(points, h: Callable) -> EstimateResult:
    """``sum xi_i h(x_i) / n``."""
    states, w = as_arrays(points)
    if len(w) == 0:
        raise ValueError("empty sample")
    num = math.fsum(w * _h(h, states))
    return EstimateResult(num / len(w), len(w), num, float(len(w)), effective_sample_size(w))


def weighted_mean(points, h: Callable) -> EstimateResult:
    """Self-normalized ``sum xi_i h(x_i) / sum xi_i``."""
    states, w = as_arrays(points)
    if len(w) == 0:
        raise ValueError("empty sample")
    num = math.fsum(w * _h(h, states))
    den = math.fsum(w)
    return EstimateResult(num / den, len(w), num, den, effective_sample_size(w))


def weighted_mean_rows(states: np.ndarray, weights: np.ndarray, h: Callable) -> np.ndarray:
    """Row-wise self-normalized means for replicate batches of shape (m, n)."""
    hv = np.asarray(h(states), dtype=float)
    return np.sum(weights * hv, axis=1) / np.sum(weights, axis=1)


def time_average(path: JumpPath, h: Callable, t: float) -> EstimateResult:
    """``t^-1 * integral_0^t h(Y_s) ds`` including the partial last sojourn.

    In discrete mode this is the average of ``h(Y_s)`` over ``s = 0..t-1``.
    """
    if not t > 0:
        raise ValueError("horizon must be positive")
    hv = _h(h, path.states)
    if path.time_mode == "discrete":
        if t > path.horizon:
            raise PathExhaustedError(f"t={t} not covered by path with horizon {path.horizon}")
        n = count_at(path, t - 1)
        full = path.weights[:n] * hv[:n]
        num = math.fsum(full) + (t - path.epochs[n]) * hv[n]
        return EstimateResult(num / t, t, num, float(t))
    if t == path.horizon:
        num = math.fsum(path.weights * hv)
        return EstimateResult(num / t, t, num, float(t))
    n = count_at(path, t)
    num = math.fsum(path.weights[:n] * hv[:n]) + (t - path.epochs[n]) * hv[n]
    return EstimateResult(num / t, t, num, float(t))


def time_average_rows(stream: WeightedStream, h: Callable, t: float, size: int, rng,
                      first=None) -> tuple[np.ndarray, np.ndarray]:
    """Time averages over ``[0, t]`` for ``size`` independent paths.

    Returns ``(values, ess)`` where ``ess`` uses the clipped sojourn lengths
    as weights.  ``first`` optionally supplies the initial points.
    """
    if not t > 0:
        raise ValueError("horizon must be positive")
    num, den, den2 = np.zeros(size), np.zeros(size), np.zeros(size)

    def on_point(idx, x, w, start):
        seg = np.clip(t - start, 0.0, w)
        num[idx] += seg * np.asarray(h(x), dtype=float)
        den[idx] += seg
        den2[idx] += seg**2

    marginals(stream, [t], size, rng, first=first, on_point=on_point)
    return num / den, den**2 / den2


def variance_inflation(points, h: Callable, law: SojournLaw, kappa: float, target_mean=None) -> float:
    """Monte Carlo estimate of ``kappa^-2 E_g[Var(xi|X) (h(X) - E_pi h)^2]``.

    ``points`` are draws from ``g``; their weights are used only to estimate
    ``E_pi h`` when ``target_mean`` is not given.
    """
    states, _ = as_arrays(points)
    var = law.variance(states)  # UnsupportedLawError for custom laws without one
    if target_mean is None:
        target_mean = weighted_mean(points, h).value
    centered = _h(h, states) - target_mean
    return math.fsum(var * centered**2) / len(states) / kappa**2
