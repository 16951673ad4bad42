"""Densities, importance-weight functions and transition densities.

Everything is evaluated in log space.  Continuous densities are with
respect to Lebesgue measure on an :class:`Interval`; discrete ones are
probability mass functions on the integer labels ``0..k-1`` of a
:class:`FiniteSupport` (counting measure).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import integrate, optimize, special, stats

from .errors import ConfigurationError, DimensionError, SupportError

TINY = np.finfo(float).tiny


@dataclass(frozen=True)
class Interval:
    lo: float = -np.inf
    hi: float = np.inf

    discrete = False

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        return (x >= self.lo) & (x <= self.hi)


@dataclass(frozen=True)
class FiniteSupport:
    k: int

    discrete = True

    def contains(self, x):
        x = np.asarray(x)
        return (x == np.round(x)) & (x >= 0) & (x < self.k)

    @property
    def states(self) -> np.ndarray:
        return np.arange(self.k)


Support = Union[Interval, FiniteSupport]


@dataclass(frozen=True)
class Density:
    """A (possibly unnormalized) density on a declared support.

    ``normalizer`` is the total mass of ``exp(log_density_unnormalized)``;
    ``None`` means it is unknown.  ``exact_sampler(rng, size)`` returns an
    array of draws.  ``cdf`` is optional and refers to the normalized law.
    """

    log_density_unnormalized: Callable[[np.ndarray], np.ndarray]
    support: Support = field(default_factory=Interval)
    normalizer: Optional[float] = None
    exact_sampler: Optional[Callable[[np.random.Generator, int], np.ndarray]] = None
    cdf: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = "density"

    @property
    def discrete(self) -> bool:
        return self.support.discrete

    def log_unnormalized(self, x) -> np.ndarray:
        x = np.asarray(x)
        inside = self.support.contains(x)
        if np.all(inside):
            return np.asarray(self.log_density_unnormalized(x), dtype=float)
        out = np.full(x.shape, -np.inf)
        if np.any(inside):
            out[inside] = self.log_density_unnormalized(x[inside])
        return out

    def logpdf(self, x) -> np.ndarray:
        if self.normalizer is None:
            raise ConfigurationError(f"{self.name}: normalizer unknown")
        return self.log_unnormalized(x) - np.log(self.normalizer)

    def pdf(self, x) -> np.ndarray:
        return np.exp(self.logpdf(x))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.exact_sampler is None:
            raise ConfigurationError(f"{self.name}: no exact sampler")
        return self.exact_sampler(rng, size)

    def pmf(self) -> np.ndarray:
        """Full probability vector of a discrete density."""
        if not self.discrete:
            raise ConfigurationError(f"{self.name} is not discrete")
        p = np.exp(self.log_unnormalized(self.support.states))
        return p / p.sum()

    def mean(self) -> float:
        if self.discrete:
            return float(np.dot(self.support.states, self.pmf()))
        lo, hi = self.support.lo, self.support.hi
        val, _ = integrate.quad(lambda x: x * self.pdf(x), lo, hi, limit=400)
        return float(val)

    def interval_prob(self, a, b) -> np.ndarray:
        """P(a <= X < b) under the normalized law, by cdf or by quadrature."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if self.cdf is not None:
            return self.cdf(b) - self.cdf(a)
        if self.normalizer is None:
            raise ConfigurationError(f"{self.name}: normalizer unknown")
        out = np.empty(np.broadcast(a, b).shape)
        for i, (lo, hi) in enumerate(zip(np.broadcast_to(a, out.shape).ravel(), np.broadcast_to(b, out.shape).ravel())):
            lo, hi = max(lo, self.support.lo), min(hi, self.support.hi)
            out.flat[i] = integrate.quad(lambda x: float(self.pdf(x)), lo, hi, limit=200)[0] if hi > lo else 0.0
        return out


def normal(mu: float, sigma: float) -> Density:
    if sigma <= 0:
        raise ConfigurationError("normal: sigma must be positive")
    return Density(
        log_density_unnormalized=lambda x: stats.norm.logpdf(x, mu, sigma),
        support=Interval(),
        normalizer=1.0,
        exact_sampler=lambda rng, size: rng.normal(mu, sigma, size),
        cdf=lambda x: stats.norm.cdf(x, mu, sigma),
        name=f"normal({mu:g},{sigma:g})",
    )


def cauchy(x0: float, gamma: float) -> Density:
    if gamma <= 0:
        raise ConfigurationError("cauchy: gamma must be positive")
    return Density(
        log_density_unnormalized=lambda x: stats.cauchy.logpdf(x, x0, gamma),
        support=Interval(),
        normalizer=1.0,
        exact_sampler=lambda rng, size: x0 + gamma * rng.standard_cauchy(size),
        cdf=lambda x: stats.cauchy.cdf(x, x0, gamma),
        name=f"cauchy({x0:g},{gamma:g})",
    )


def mixture(weights: Sequence[float], components: Sequence[Density]) -> Density:
    w = np.asarray(weights, dtype=float)
    if len(w) != len(components) or len(w) == 0:
        raise DimensionError("mixture: one weight per component")
    if np.any(w <= 0):
        raise ConfigurationError("mixture: weights must be positive")
    w = w / w.sum()
    logw = np.log(w)
    comps = tuple(components)
    if any(c.normalizer != 1.0 for c in comps):
        raise ConfigurationError("mixture: components must be normalized")
    supp = comps[0].support

    def logf(x):
        terms = np.stack([lw + c.log_unnormalized(x) for lw, c in zip(logw, comps)])
        return special.logsumexp(terms, axis=0)

    sampler = None
    if all(c.exact_sampler is not None for c in comps):
        def sampler(rng, size):
            which = rng.choice(len(comps), size=size, p=w)
            out = np.empty(size)
            for j, c in enumerate(comps):
                sel = which == j
                n = int(sel.sum())
                if n:
                    out[sel] = c.sample(rng, n)
            return out

    cdf = None
    if all(c.cdf is not None for c in comps):
        def cdf(x):
            return sum(wj * c.cdf(x) for wj, c in zip(w, comps))

    return Density(logf, supp, 1.0, sampler, cdf,
                   name="mixture(" + ", ".join(f"{wj:.4g}:{c.name}" for wj, c in zip(w, comps)) + ")")


def discrete(pmf: Sequence[float]) -> Density:
    p = np.asarray(pmf, dtype=float)
    if p.ndim != 1 or len(p) == 0:
        raise DimensionError("discrete: pmf must be a nonempty vector")
    if np.any(p <= 0):
        raise ConfigurationError("discrete: pmf entries must be positive")
    total = float(p.sum())
    logp = np.log(p)
    k = len(p)
    return Density(
        log_density_unnormalized=lambda x: logp[np.asarray(x).astype(int)],
        support=FiniteSupport(k),
        normalizer=total,
        exact_sampler=lambda rng, size: rng.choice(k, size=size, p=p / total),
        cdf=None,
        name="discrete([" + ",".join(f"{v:.4g}" for v in p) + "])",
    )


def paper_example_target() -> Density:
    """The three-component normal mixture 1/3 N(0,9) + 1/3 N(5,1) + 1/3 N(15,4)."""
    return mixture([1 / 3, 1 / 3, 1 / 3], [normal(0, 3), normal(5, 1), normal(15, 2)])


def paper_example_trial() -> Density:
    """Centered Cauchy with scale 10."""
    return cauchy(0.0, 10.0)


@dataclass(frozen=True)
class WeightFunction:
    """``x -> kappa * pi(x) / g(x)`` evaluated in log space."""

    target: Density
    trial: Density
    kappa: float = 1.0
    w_star: Optional[float] = None

    def __post_init__(self):
        if not self.kappa > 0:
            raise ConfigurationError("kappa must be positive")

    def log_value(self, x) -> np.ndarray:
        x = np.asarray(x)
        log_g = self.trial.log_unnormalized(x)
        if not np.all(np.isfinite(log_g)):
            bad = np.asarray(x)[~np.isfinite(log_g)] if np.ndim(x) else x
            raise SupportError(f"trial density vanishes at {np.ravel(bad)[:3]}")
        return np.log(self.kappa) + self.target.log_unnormalized(x) - log_g

    def value(self, x) -> np.ndarray:
        # weights beyond exp(-708) underflow; keep them strictly positive
        return np.maximum(np.exp(self.log_value(x)), TINY)

    __call__ = value


def weight(wf: WeightFunction, x) -> float:
    return float(wf.value(x))


def weight_supremum(wf: WeightFunction, lo: float = -60.0, hi: float = 80.0, step: float = 1e-3) -> tuple[float, float]:
    """Grid search then bounded refinement of ``sup_x pi(x)/g(x)`` (kappa excluded).

    Returns ``(w_star, argmax)``.  For discrete supports the grid is the state set.
    """
    if wf.trial.discrete:
        xs = wf.trial.support.states
        w = wf.value(xs) / wf.kappa
        i = int(np.argmax(w))
        return float(w[i]), float(xs[i])
    xs = np.arange(lo, hi + step / 2, step)
    logw = wf.log_value(xs) - np.log(wf.kappa)
    i = int(np.argmax(logw))
    a, b = xs[max(i - 1, 0)], xs[min(i + 1, len(xs) - 1)]
    res = optimize.minimize_scalar(lambda x: -float(wf.log_value(x)) + np.log(wf.kappa),
                                   bounds=(a, b), method="bounded", options={"xatol": 1e-10})
    if -res.fun > logw[i]:
        return float(np.exp(-res.fun)), float(res.x)
    return float(np.exp(logw[i])), float(xs[i])


@dataclass(frozen=True)
class TransitionDensity:
    """Markov transition ``q(to | from)``, vectorized over paired arrays."""

    log_density: Callable[[np.ndarray, np.ndarray], np.ndarray]
    sampler: Callable[[np.ndarray, np.random.Generator], np.ndarray]
    name: str = "transition"
    matrix: Optional[np.ndarray] = None

    def sample(self, from_state, rng: np.random.Generator) -> np.ndarray:
        return self.sampler(np.asarray(from_state), rng)


def from_matrix(P, name: str = "matrix") -> TransitionDensity:
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise DimensionError("transition matrix must be square")
    if np.any(P < 0) or not np.allclose(P.sum(axis=1), 1.0, atol=1e-12):
        raise ConfigurationError("transition matrix rows must be probability vectors")
    cum = np.cumsum(P, axis=1)
    cum[:, -1] = 1.0
    with np.errstate(divide="ignore"):
        logP = np.log(P)

    def sampler(frm, rng):
        frm = np.asarray(frm).astype(int)
        u = rng.random(frm.shape)
        return (u[..., None] >= cum[frm]).sum(axis=-1)

    return TransitionDensity(
        log_density=lambda frm, to: logP[np.asarray(frm).astype(int), np.asarray(to).astype(int)],
        sampler=sampler,
        name=name,
        matrix=P,
    )


def uniform_proposal(k: int) -> TransitionDensity:
    return from_matrix(np.full((k, k), 1.0 / k), name=f"uniform({k})")


def independent(density: Density) -> TransitionDensity:
    """Independence proposal: ``q(z | y) = density(z)``."""
    if density.normalizer is None:
        raise ConfigurationError("independence proposal needs a normalized density")
    P = None
    if density.discrete:
        P = np.tile(density.pmf(), (density.support.k, 1))

    def sampler(frm, rng):
        shape = np.shape(frm)
        draws = density.sample(rng, int(np.prod(shape)) if shape else 1)
        return draws.reshape(shape) if shape else draws[0]

    return TransitionDensity(
        log_density=lambda frm, to: density.logpdf(np.broadcast_to(to, np.broadcast(frm, to).shape)),
        sampler=sampler,
        name=f"independent({density.name})",
        matrix=P,
    )


def random_walk(sigma: float) -> TransitionDensity:
    if sigma <= 0:
        raise ConfigurationError("random_walk: sigma must be positive")
    return TransitionDensity(
        log_density=lambda frm, to: stats.norm.logpdf(to, frm, sigma),
        sampler=lambda frm, rng: frm + sigma * rng.standard_normal(np.shape(frm)),
        name=f"random_walk({sigma:g})",
    )


def mh_kernel_matrix(target_pmf, proposal_matrix) -> np.ndarray:
    """Exact Metropolis-Hastings kernel on a finite state space."""
    p = np.asarray(target_pmf, dtype=float)
    Q = np.asarray(proposal_matrix, dtype=float)
    if Q.shape != (len(p), len(p)):
        raise DimensionError("proposal matrix must match the pmf length")
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = (p[None, :] * Q.T) / (p[:, None] * Q)
    accept = np.where(Q > 0, np.minimum(1.0, np.nan_to_num(ratio, nan=0.0, posinf=1.0)), 0.0)
    K = Q * accept
    np.fill_diagonal(K, 0.0)
    K[np.diag_indices_from(K)] = 1.0 - K.sum(axis=1)
    return K
