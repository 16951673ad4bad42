"""Total-variation diagnostics, analytic bounds and exact discrete oracles."""
from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import optimize

from .errors import ConfigurationError, DimensionError, UnsupportedLawError
from .measure import Density
from .rng import BLOCK_SIZE, Role, as_rng, blocks, make_rng
from .samplers import WeightedStream, marginals

# ---------------------------------------------------------------- discrete benchmark


@dataclass(frozen=True)
class DiscreteBenchmark:
    """Finite-state substrate for exact checks.

    ``kernel[x, z]`` is the embedded chain (rows equal to ``trial_pmf`` for
    iid states).  ``sojourn`` is ``"geometric"`` with per-state success
    probabilities or ``"deterministic"`` with per-state integer lengths.
    """

    target_pmf: np.ndarray
    trial_pmf: np.ndarray
    sojourn: str = "geometric"
    sojourn_params: np.ndarray = field(default_factory=lambda: np.empty(0))
    kernel: Optional[np.ndarray] = None
    initial_pmf: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ("target_pmf", "trial_pmf"):
            p = np.asarray(getattr(self, name), dtype=float)
            if np.any(p <= 0) or abs(p.sum() - 1.0) > 1e-12:
                raise ConfigurationError(f"{name} must be positive and sum to 1")
            object.__setattr__(self, name, p)
        object.__setattr__(self, "sojourn_params", np.asarray(self.sojourn_params, dtype=float))
        if self.kernel is None:
            object.__setattr__(self, "kernel", np.tile(self.trial_pmf, (self.n_states, 1)))
        if self.initial_pmf is None:
            object.__setattr__(self, "initial_pmf", self.trial_pmf)

    @property
    def n_states(self) -> int:
        return len(self.target_pmf)

    def mean_sojourn(self) -> np.ndarray:
        if self.sojourn == "geometric":
            return 1.0 / self.sojourn_params
        return self.sojourn_params.copy()


BENCHMARK_TARGET = np.array([0.2, 0.3, 0.5])
BENCHMARK_TRIAL = np.full(3, 1.0 / 3.0)
BENCHMARK_SUCCESS = np.array([0.2, 0.5, 0.8])


def exact_limit_discrete(g_pmf, mean_sojourn) -> np.ndarray:
    """Limit law of ``Y_t``: ``E(xi|x) g(x)`` normalized."""
    g = np.asarray(g_pmf, dtype=float)
    m = np.asarray(mean_sojourn, dtype=float)
    if g.shape != m.shape:
        raise DimensionError("g_pmf and mean_sojourn differ in shape")
    if np.any(g <= 0) or np.any(m <= 0):
        raise ValueError("entries must be positive")
    p = g * m
    return p / p.sum()


def _residual_pmf(bench: DiscreteBenchmark, tail: float) -> np.ndarray:
    """Sojourn pmf per state on ``1..R`` (rows), renormalized after truncation."""
    k = bench.n_states
    if bench.sojourn == "deterministic":
        lengths = bench.sojourn_params.astype(int)
        if np.any(lengths != bench.sojourn_params) or np.any(lengths < 1):
            raise UnsupportedLawError("deterministic sojourns must be positive integers")
        out = np.zeros((k, lengths.max()))
        out[np.arange(k), lengths - 1] = 1.0
        return out
    if bench.sojourn != "geometric":
        raise UnsupportedLawError(f"sojourn law {bench.sojourn!r} is not integer-valued")
    a = bench.sojourn_params
    R = int(np.max(np.ceil(np.log(tail) / np.log1p(-np.minimum(a, 1 - 1e-16)))))
    R = max(R, 1)
    v = np.arange(1, R + 1)
    out = a[:, None] * (1.0 - a[:, None]) ** (v[None, :] - 1)
    return out / out.sum(axis=1, keepdims=True)


def brute_force_marginal_discrete(bench: DiscreteBenchmark, t: int, tail: float = 1e-14,
                                  return_lost: bool = False):
    """Exact law of ``Y_t`` by forward recursion over (state, remaining sojourn).

    Mass beyond the truncation point (sojourn tail below ``tail``) is dropped
    and each sojourn pmf renormalized; ``return_lost`` also returns the
    dropped per-state tail mass.
    """
    if int(t) != t or t < 0:
        raise ValueError("t must be a nonnegative integer")
    soj = _residual_pmf(bench, tail)
    lost = np.zeros(bench.n_states)
    if bench.sojourn == "geometric":
        R = soj.shape[1]
        lost = (1.0 - bench.sojourn_params) ** R
    joint = bench.initial_pmf[:, None] * soj
    for _ in range(int(t)):
        jump = joint[:, 0] @ bench.kernel
        nxt = np.zeros_like(joint)
        nxt[:, :-1] = joint[:, 1:]
        nxt += jump[:, None] * soj
        joint = nxt
    marg = joint.sum(axis=1)
    return (marg, lost) if return_lost else marg


# ---------------------------------------------------------------- total variation


@dataclass(frozen=True)
class Bins:
    """Interior edges; two open cells catch mass below the first and above the last edge."""

    edges: np.ndarray

    @classmethod
    def uniform(cls, lo: float, hi: float, n: int) -> "Bins":
        return cls(np.linspace(lo, hi, n + 1))

    @property
    def cells(self) -> tuple[np.ndarray, np.ndarray]:
        e = np.asarray(self.edges, dtype=float)
        return np.concatenate(([-np.inf], e)), np.concatenate((e, [np.inf]))


def mass_range(density: Density, mass: float = 1 - 1e-4) -> tuple[float, float]:
    """Central interval holding at least ``mass`` of a continuous density."""
    if density.cdf is None:
        raise ConfigurationError("mass_range needs a cdf")
    alpha = (1.0 - mass) / 2
    f = lambda q: lambda x: float(density.cdf(x)) - q  # noqa: E731
    lo = optimize.brentq(f(alpha), -1e8, 1e8, xtol=1e-10)
    hi = optimize.brentq(f(1 - alpha), -1e8, 1e8, xtol=1e-10)
    return lo, hi


def default_bins(density: Density, n: int = 60) -> Bins:
    lo, hi = mass_range(density)
    return Bins.uniform(lo, hi, n)


def binned_tv(counts, probs) -> float:
    """``1/2 sum_b |counts_b / n - probs_b|``."""
    counts = np.asarray(counts, dtype=float)
    probs = np.asarray(probs, dtype=float)
    if counts.shape != probs.shape:
        raise DimensionError("counts and probabilities differ in shape")
    return 0.5 * float(np.abs(counts / counts.sum() - probs).sum())


def _cells(samples, reference, bins: Optional[Bins]):
    """Counts and reference probabilities per cell, plus cell bounds."""
    samples = np.asarray(samples)
    if isinstance(reference, Density) and not reference.discrete:
        if reference.normalizer is None and reference.cdf is None:
            raise ConfigurationError("continuous reference must be normalized")
        bins = bins or default_bins(reference)
        left, right = bins.cells
        idx = np.searchsorted(np.asarray(bins.edges, dtype=float), samples, side="right")
        counts = np.bincount(idx, minlength=len(left)).astype(float)
        return counts, np.asarray(reference.interval_prob(left, right), dtype=float), left, right
    probs = reference.pmf() if isinstance(reference, Density) else np.asarray(reference, dtype=float)
    counts = np.bincount(samples.astype(int), minlength=len(probs)).astype(float)
    if len(counts) != len(probs):
        raise DimensionError("samples fall outside the reference support")
    states = np.arange(len(probs), dtype=float)
    return counts, probs / probs.sum(), states, states + 1


def estimate_tv(samples, reference: Union[Density, Sequence[float]], bins: Optional[Bins] = None,
                rng=None, n_boot: int = 200) -> tuple[float, float]:
    """Binned TV distance and its bootstrap standard error.

    Binning can only merge mass, so the population value of the binned
    statistic never exceeds the true TV distance.  The standard error is the
    spread over ``n_boot`` replicate resamples, floored at ``0.5 / n``.
    """
    counts, probs, _, _ = _cells(samples, reference, bins)
    n = counts.sum()
    if n < 1000:
        raise ValueError("estimate_tv needs at least 1000 samples")
    tv = binned_tv(counts, probs)
    rng = as_rng(rng if rng is not None else 0)
    boot = rng.multinomial(int(n), counts / n, size=n_boot)
    tvs = 0.5 * np.abs(boot / n - probs).sum(axis=1)
    return tv, max(float(tvs.std(ddof=1)), 0.5 / n)


def histogram_rows(samples, reference, bins: Optional[Bins] = None) -> list[tuple]:
    """``(bin_left, bin_right, count, reference_prob)`` rows."""
    counts, probs, left, right = _cells(samples, reference, bins)
    return list(zip(left.tolist(), right.tolist(), counts.astype(int).tolist(), probs.tolist()))


def write_histogram_csv(rows, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["bin_left", "bin_right", "count", "reference_prob"])
    for lo, hi, c, p in rows:
        w.writerow([repr(lo), repr(hi), c, repr(p)])


# ---------------------------------------------------------------- bounds


def bound_curve(kind: str, params: dict, times) -> np.ndarray:
    """Analytic TV bounds.

    ``prop31``: ``exp(-beta t / (kappa w*))`` (beta defaults to 1 for iid states);
    ``mh_independence``: ``(1 - 1/w~*)^t``; ``sz``: ``(1 + kappa w~*)^-t``;
    ``gasemyr``: ``(1 - 1/(kappa w~*))^t`` for ``kappa > 1/w~*``.
    """
    t = np.asarray(times, dtype=float)
    if np.any(t < 0):
        raise ValueError("times must be nonnegative")
    if kind == "prop31":
        beta = float(params.get("beta", 1.0))
        kappa = float(params.get("kappa", 1.0))
        w = float(params["w_star"])
        if not (0 < beta <= 1) or kappa <= 0 or w <= 0:
            raise ValueError("prop31 needs beta in (0,1], kappa > 0, w* > 0")
        return np.exp(-beta * t / (kappa * w))
    if kind == "mh_independence":
        w = float(params["w_star"])
        if w < 1:
            raise ValueError("w~* >= 1 for normalized densities")
        return (1.0 - 1.0 / w) ** t
    if kind == "sz":
        kw = float(params.get("kappa", 1.0)) * float(params["w_star"])
        if kw <= 0:
            raise ValueError("kappa w~* must be positive")
        return (1.0 + kw) ** (-t)
    if kind == "gasemyr":
        kw = float(params.get("kappa", 1.0)) * float(params["w_star"])
        if kw <= 1:
            raise ValueError("kappa <= 1/w~*: rejection-sampling regime, Y_t is already exact")
        return (1.0 - 1.0 / kw) ** t
    raise ValueError(f"unknown bound kind {kind!r}")


# ---------------------------------------------------------------- replicates


FirstFn = Callable[[np.random.Generator, int], tuple]


def replicate_runner(stream: WeightedStream, times: Sequence[float], m: int, seed: int,
                     first_fn: Optional[FirstFn] = None, workers: int = 1,
                     block_size: int = BLOCK_SIZE) -> np.ndarray:
    """``Y_t`` of ``m`` independent runs, shape ``(len(times), m)``.

    Replicates run in blocks keyed by ``(seed, block)``, so results do not
    depend on ``workers``.  ``first_fn(rng, size)`` may supply the first
    points (e.g. a stationary start).
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    times = np.asarray(times, dtype=float)

    def run(block):
        b, lo, hi = block
        first = first_fn(make_rng(seed, b, Role.START), hi - lo) if first_fn else None
        try:
            return marginals(stream, times, hi - lo, make_rng(seed, b, Role.SIMULATE), first=first)
        except Exception as exc:  # attach the replicate range
            raise RuntimeError(f"replicates {lo}..{hi - 1}: {exc}") from exc

    parts = blocks(m, block_size)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, parts))
    else:
        results = [run(p) for p in parts]
    return np.concatenate(results, axis=1)


@dataclass
class TvReport:
    times: list
    tv_empirical: list
    mc_error: list
    replicates: int
    bins: dict
    tv_bound: Optional[list] = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    def write_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time", "tv", "bound", "mc_error"])
        bound = self.tv_bound or [None] * len(self.times)
        for t, tv, b, e in zip(self.times, self.tv_empirical, bound, self.mc_error):
            w.writerow([repr(t), repr(tv), "" if b is None else repr(b), repr(e)])


def tv_report(ys: np.ndarray, times, reference, bins: Optional[Bins] = None, seed: int = 0,
              bound: Optional[tuple[str, dict]] = None) -> TvReport:
    """TV estimates for each row of ``ys`` (as returned by :func:`replicate_runner`)."""
    if isinstance(reference, Density) and not reference.discrete and bins is None:
        bins = default_bins(reference)
    tvs, errs = [], []
    for k in range(len(times)):
        tv, err = estimate_tv(ys[k], reference, bins, rng=make_rng(seed, k, Role.BOOTSTRAP))
        tvs.append(tv)
        errs.append(err)
    desc = {"edges": np.asarray(bins.edges).tolist()} if bins is not None else {"discrete": True}
    curve = bound_curve(bound[0], bound[1], times).tolist() if bound else None
    return TvReport([float(t) for t in times], tvs, errs, ys.shape[1], desc, curve)
