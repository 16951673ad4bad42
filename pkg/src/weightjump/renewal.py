"""Jump process associated with a weighted sequence.

A path holds state ``X_n`` for a sojourn of length ``xi_n``.  The epochs are
``S_0 = 0`` and ``S_n = xi_0 + ... + xi_{n-1}``; at time ``t`` the process
sits in sojourn ``N_t = max{n : S_n <= t}`` (so a jump time belongs to the
sojourn it starts).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Any, Iterable, Literal, Sequence

import numpy as np

from .errors import InvalidWeightError, PathExhaustedError, TimeModeError

TimeMode = Literal["continuous", "discrete"]


@dataclass(frozen=True)
class WeightedPoint:
    state: Any
    weight: float

    def __post_init__(self):
        if not (np.isfinite(self.weight) and self.weight > 0):
            raise InvalidWeightError(f"weight must be strictly positive, got {self.weight!r}")


class JumpPath:
    """Immutable finite realization of a jump process."""

    __slots__ = ("states", "weights", "epochs", "time_mode")

    def __init__(self, states, weights, time_mode: TimeMode = "continuous"):
        states = np.array(states)
        weights = np.array(weights, dtype=float)
        if states.shape[:1] != weights.shape or weights.ndim != 1:
            raise ValueError("states and weights must have the same length")
        if len(weights) == 0:
            raise ValueError("a path needs at least one point")
        if not np.all(np.isfinite(weights) & (weights > 0)):
            raise InvalidWeightError("all weights must be strictly positive and finite")
        if time_mode == "discrete":
            if not np.all(weights == np.round(weights)):
                raise TimeModeError("discrete mode requires integer weights")
        elif time_mode != "continuous":
            raise TimeModeError(f"unknown time mode {time_mode!r}")
        epochs = np.concatenate(([0.0], np.cumsum(weights)))
        for arr in (states, weights, epochs):
            arr.setflags(write=False)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "epochs", epochs)
        object.__setattr__(self, "time_mode", time_mode)

    def __setattr__(self, name, value):
        raise AttributeError("JumpPath is immutable")

    def __len__(self):
        return len(self.weights)

    @property
    def horizon(self) -> float:
        return float(self.epochs[-1])

    @property
    def points(self) -> list[WeightedPoint]:
        return [WeightedPoint(s, float(w)) for s, w in zip(self.states.tolist(), self.weights)]

    def extend(self, states, weights) -> "JumpPath":
        return JumpPath(np.concatenate((self.states, np.asarray(states))),
                        np.concatenate((self.weights, np.asarray(weights, dtype=float))),
                        self.time_mode)

    def __repr__(self):
        return f"JumpPath(n={len(self)}, horizon={self.horizon:g}, mode={self.time_mode})"


def build_path(points: Sequence[WeightedPoint] | Iterable[tuple], time_mode: TimeMode = "continuous") -> JumpPath:
    states, weights = [], []
    for p in points:
        s, w = (p.state, p.weight) if isinstance(p, WeightedPoint) else p
        states.append(s)
        weights.append(w)
    return JumpPath(states, weights, time_mode)


def _check_time(path: JumpPath, t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("time must be nonnegative")
    if path.time_mode == "discrete" and np.any(t != np.round(t)):
        raise TimeModeError("discrete-time paths are evaluated at integer times only")
    if np.any(t >= path.epochs[-1]):
        raise PathExhaustedError(f"t={np.max(t)} not covered by path with horizon {path.horizon}")
    return t


def count_at(path: JumpPath, t):
    """``N_t``; vectorized over ``t``."""
    t = _check_time(path, t)
    n = np.searchsorted(path.epochs, t, side="right") - 1
    return int(n) if n.ndim == 0 else n


def state_at(path: JumpPath, t):
    return path.states[count_at(path, t)]


def excess_life_at(path: JumpPath, t):
    """``V_t = S_{N_t + 1} - t``."""
    n = count_at(path, t)
    v = path.epochs[np.asarray(n) + 1] - np.asarray(t, dtype=float)
    return float(v) if np.ndim(v) == 0 else v


def write_path_csv(path: JumpPath, fh) -> None:
    """Columns: index, state, weight, epoch_start."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["index", "state", "weight", "epoch_start"])
    for i, (s, xi, e) in enumerate(zip(path.states.tolist(), path.weights, path.epochs[:-1])):
        w.writerow([i, repr(s) if isinstance(s, float) else s, repr(float(xi)), repr(float(e))])
