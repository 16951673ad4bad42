"""Stationary and exact starts for jump processes of weighted samples.

The pair (current state, excess life) of the jump process has stationary law
``pi(y) p_e(v|y)`` with ``p_e(v|y) = P(xi >= v | y) / E(xi | y)``.  Starting
there makes ``Y_t ~ pi`` for every ``t``.  With iid states and a hazard
bounded below by ``eps``, an accept-reject pass over the ordinary sequence
finds a random time ``tau`` after which ``Y_t ~ pi`` exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    BoundedHazardError,
    ConfigurationError,
    InvalidFloorError,
    UnsupportedLawError,
)
from .measure import Density
from .renewal import JumpPath, WeightedPoint
from .rng import as_rng
from .samplers import SojournLaw, WeightedStream, simulate_path


@dataclass(frozen=True)
class EquilibriumStart:
    initial_state: object
    initial_weight: float
    tau: float
    trials_used: int
    # points consumed before acceptance (empty for a stationary start)
    prefix_states: np.ndarray = field(default_factory=lambda: np.empty(0))
    prefix_weights: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        if not self.initial_weight > 0:
            raise ValueError("initial weight must be positive")


@dataclass(frozen=True)
class HazardFloor:
    epsilon_star: float
    probe_states: np.ndarray
    probe_weights: np.ndarray
    closed_form: bool

    def __post_init__(self):
        if not self.epsilon_star > 0:
            raise BoundedHazardError(f"hazard floor must be positive, got {self.epsilon_star}")


# ---------------------------------------------------------------- excess life


def excess_sojourn_sample(law: SojournLaw, y, rng) -> np.ndarray:
    """Draw ``V ~ p_e(.|y)``: size-biased ``T``, then ``V`` uniform on (0, T] or {1..T}."""
    rng = as_rng(rng)
    y = np.asarray(y)
    t = law.size_biased(rng, y)
    if law.discrete:
        return np.floor(rng.random(t.shape) * t) + 1.0
    return t * (1.0 - rng.random(t.shape))


def excess_pmf_geometric(success: float, vmax: int) -> np.ndarray:
    """``p_e(v) = P(xi >= v) / E xi`` for ``v = 1..vmax`` under a geometric law."""
    v = np.arange(1, vmax + 1)
    return success * (1.0 - success) ** (v - 1)


# ---------------------------------------------------------------- stationary start


def stationary_first(target: Density, law: SojournLaw, rng, size: int) -> tuple[np.ndarray, np.ndarray]:
    """Batch of first points ``X_0 ~ pi``, ``xi_0 ~ p_e(.|X_0)``."""
    if target.exact_sampler is None:
        raise ConfigurationError("stationary start needs an exact sampler for the target")
    rng = as_rng(rng)
    x = target.sample(rng, size)
    return x, excess_sojourn_sample(law, x, rng)


def stationary_start(target: Density, law: SojournLaw, continuation: WeightedStream, rng,
                     horizon: float) -> tuple[EquilibriumStart, JumpPath]:
    """Stationary first point followed by ``continuation``, covering ``horizon``."""
    rng = as_rng(rng)
    x, v = stationary_first(target, law, rng, 1)
    start = EquilibriumStart(x[0].item(), float(v[0]), 0.0, 1)
    path = simulate_path(continuation, rng, horizon, first=WeightedPoint(start.initial_state, start.initial_weight))
    return start, path


# ---------------------------------------------------------------- hazard floor


def hazard_floor(law: SojournLaw, state_probe: Sequence, weight_probe: Sequence = (),
                 sup_mean: Optional[float] = None) -> HazardFloor:
    """``eps = inf_{v,y} p(v|y) / P(xi >= v|y)``.

    Geometric and exponential laws have constant-in-``v`` hazards, so the
    floor is closed form over the probed states; ``sup_mean`` overrides the
    probed supremum of an exponential mean.  Custom laws are evaluated on
    the probe grid, which only bounds the true infimum from above.
    """
    states = np.asarray(state_probe)
    weights = np.asarray(weight_probe, dtype=float)
    if states.size == 0:
        raise ValueError("state probe must be nonempty")
    if law.kind == "deterministic":
        raise UnsupportedLawError("deterministic sojourns have no bounded hazard")
    if law.kind == "geometric":
        eps = float(np.min(law.param_fn(states)))
        return HazardFloor(eps, states, weights, True)
    if law.kind == "exponential":
        m = sup_mean if sup_mean is not None else float(np.max(law.mean(states)))
        return HazardFloor(1.0 / m, states, weights, True)
    if weights.size == 0:
        raise ValueError("custom laws need a weight probe")
    vv, yy = np.meshgrid(weights, states)
    eps = float(np.min(law.hazard(vv.ravel(), yy.ravel())))
    return HazardFloor(eps, states, weights, False)


# ---------------------------------------------------------------- exact start


def _accept_ratio(law: SojournLaw, floor: HazardFloor, x, w) -> np.ndarray:
    r = floor.epsilon_star * law.survival(w, x) / law.density(w, x)
    if np.any(r > 1.0 + 1e-12):
        raise InvalidFloorError(f"accept ratio {float(np.max(r))} exceeds 1; floor too high")
    return r


def _check_exact(stream: WeightedStream, law: SojournLaw):
    if not stream.iid:
        raise ConfigurationError("exact start requires iid base states")
    if law.kind == "deterministic":
        raise UnsupportedLawError("exact start is undefined for deterministic sojourns")


def exact_start(stream: WeightedStream, law: SojournLaw, floor: HazardFloor, rng,
                max_trials: int = 10_000_000) -> EquilibriumStart:
    """Accept the first ``(x, xi)`` with ``U <= eps P(xi >= xi|x) / p(xi|x)``.

    ``tau`` is the total weight of the rejected prefix, so the accepted pair
    is ``(Y_tau, V_tau)``.
    """
    _check_exact(stream, law)
    rng = as_rng(rng)
    cursor = stream.init(rng, 1)
    xs, ws = [], []
    for _ in range(max_trials):
        cursor, x, w = stream.step(rng, cursor)
        if rng.random() <= _accept_ratio(law, floor, x, w)[0]:
            return EquilibriumStart(x[0].item(), float(w[0]), math.fsum(ws), len(ws) + 1,
                                    np.array(xs), np.array(ws))
        xs.append(x[0].item())
        ws.append(float(w[0]))
    raise RuntimeError("exact start did not accept within max_trials")


@dataclass(frozen=True)
class ExactStartBatch:
    states: np.ndarray
    weights: np.ndarray
    tau: np.ndarray
    trials_used: np.ndarray
    times: np.ndarray
    y: np.ndarray  # Y_t per time (rows) and replicate (columns)


def exact_start_batch(stream: WeightedStream, law: SojournLaw, floor: HazardFloor, rng, size: int,
                      times: Sequence[float] = ()) -> ExactStartBatch:
    """Vectorized :func:`exact_start` over ``size`` independent runs.

    Each run continues past acceptance until it also covers ``max(times)``,
    recording ``Y_t`` on the grid.
    """
    _check_exact(stream, law)
    rng = as_rng(rng)
    times = np.asarray(times, dtype=float)
    t_max = times.max() if times.size else -np.inf
    cursor = stream.init(rng, size)
    tau = np.full(size, np.nan)
    trials = np.zeros(size, dtype=np.int64)
    acc_x = None
    acc_w = np.zeros(size)
    y = None
    start = np.zeros(size)
    active = np.arange(size)
    while active.size:
        sub, x, w = stream.step(rng, cursor[active])
        cursor[active] = sub
        if acc_x is None:
            acc_x = np.zeros(size, dtype=x.dtype)
            y = np.zeros((len(times), size), dtype=x.dtype)
        s0 = start[active]
        end = s0 + w
        for k, t in enumerate(times):
            hit = (s0 <= t) & (t < end)
            y[k, active[hit]] = x[hit]
        open_ = np.isnan(tau[active])
        if open_.any():
            ratio = _accept_ratio(law, floor, x[open_], w[open_])
            acc = rng.random(ratio.size) <= ratio
            idx = active[open_]
            trials[idx] += 1
            hit = idx[acc]
            tau[hit] = s0[open_][acc]
            acc_x[hit] = x[open_][acc]
            acc_w[hit] = w[open_][acc]
        start[active] = end
        keep = np.isnan(tau[active]) | (start[active] <= t_max)
        active = active[keep]
    return ExactStartBatch(acc_x, acc_w, tau, trials, times, y)


# ---------------------------------------------------------------- moment bounds


@dataclass(frozen=True)
class MomentReport:
    rows: list  # dicts: state, m, moment, se, bound, ok
    max_w: float
    w_bound: float
    w_ok: bool

    @property
    def ok(self) -> bool:
        return self.w_ok and all(r["ok"] for r in self.rows)


def moment_bound_check(law: SojournLaw, floor: HazardFloor, m_max: int, states, kappa: float, rng,
                       n: int = 100_000, w_values=None, n_se: float = 4.0) -> MomentReport:
    """Empirical ``E(xi^m | y) <= m! / eps^m`` and ``w(y) <= 1/(kappa eps)`` on probe states.

    Violations are reported, never raised.  ``w_values`` defaults to
    ``E(xi|y) / kappa``.
    """
    if m_max > 6:
        raise ValueError("m_max is limited to 6")
    rng = as_rng(rng)
    eps = floor.epsilon_star
    rows = []
    for y in np.asarray(states):
        draws = law.sample(rng, np.full(n, y))
        for m in range(1, m_max + 1):
            p = draws**m
            mom = float(p.mean())
            se = float(p.std(ddof=1) / math.sqrt(n))
            bound = math.factorial(m) / eps**m
            rows.append(dict(state=y.item(), m=m, moment=mom, se=se, bound=bound, ok=mom <= bound + n_se * se))
    w = np.asarray(w_values if w_values is not None else law.mean(np.asarray(states)) / kappa, dtype=float)
    max_w = float(np.max(w))
    w_bound = 1.0 / (kappa * eps)
    return MomentReport(rows, max_w, w_bound, max_w <= w_bound + 1e-12)
