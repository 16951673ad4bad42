"""Generators of properly weighted sequences.

Every scheme is a :class:`WeightedStream`.  Streams are vectorized across
independent chains: ``init(rng, size)`` returns one cursor per chain and
``step(rng, cursor)`` advances each chain by exactly one emitted point.  A
stream object holds no randomness of its own; ``next`` keeps a private
single-chain cursor for one-point-at-a-time consumption.

The batch simulator :func:`marginals` records ``Y_t`` on a time grid for many
independent chains at once, and :func:`simulate_path` builds one
:class:`~weightjump.renewal.JumpPath` covering a horizon.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from .errors import (
    ConfigurationError,
    InvalidWeightError,
    SupportError,
    UndefinedAnchorError,
    UnsupportedLawError,
)
from .measure import TINY, Density, TransitionDensity, WeightFunction
from .renewal import JumpPath, WeightedPoint
from .rng import Role, as_rng, make_rng

# ---------------------------------------------------------------- sojourn laws


@dataclass(frozen=True)
class SojournLaw:
    """Conditional law ``p(v | x)`` of a sojourn weight given the state.

    ``param_fn`` is the mean for deterministic/exponential laws and the
    success probability for geometric laws (support ``{1, 2, ...}``).
    Custom laws provide their own callables; the missing ones raise
    :class:`UnsupportedLawError` when needed.
    """

    kind: str
    param_fn: Callable[[np.ndarray], np.ndarray]
    discrete: bool = False
    custom: dict = field(default_factory=dict)

    def _param(self, x):
        return np.asarray(self.param_fn(np.asarray(x)), dtype=float)

    def _custom(self, name):
        fn = self.custom.get(name)
        if fn is None:
            raise UnsupportedLawError(f"custom sojourn law lacks '{name}'")
        return fn

    def mean(self, x) -> np.ndarray:
        if self.kind == "geometric":
            return 1.0 / self._param(x)
        if self.kind == "custom":
            return np.asarray(self._custom("mean")(np.asarray(x)), dtype=float)
        return self._param(x)

    def variance(self, x) -> np.ndarray:
        if self.kind == "deterministic":
            return np.zeros(np.shape(x))
        if self.kind == "exponential":
            return self._param(x) ** 2
        if self.kind == "geometric":
            a = self._param(x)
            return (1.0 - a) / a**2
        return np.asarray(self._custom("variance")(np.asarray(x)), dtype=float)

    def sample(self, rng: np.random.Generator, x) -> np.ndarray:
        x = np.asarray(x)
        if self.kind == "deterministic":
            return self._param(x).copy()
        if self.kind == "exponential":
            return np.maximum(rng.exponential(self._param(x)), TINY)
        if self.kind == "geometric":
            return rng.geometric(self._param(x)).astype(float)
        return np.asarray(self._custom("sample")(rng, x), dtype=float)

    def density(self, v, x) -> np.ndarray:
        """``p(v | x)``: pmf for geometric, pdf for exponential."""
        v = np.asarray(v, dtype=float)
        if self.kind == "exponential":
            m = self._param(x)
            return np.where(v >= 0, np.exp(-v / m) / m, 0.0)
        if self.kind == "geometric":
            a = self._param(x)
            ok = (v >= 1) & (v == np.round(v))
            return np.where(ok, a * (1.0 - a) ** np.maximum(v - 1, 0), 0.0)
        if self.kind == "deterministic":
            raise UnsupportedLawError("deterministic sojourns have no density")
        return np.asarray(self._custom("density")(v, np.asarray(x)), dtype=float)

    def survival(self, u, x) -> np.ndarray:
        """``P(xi >= u | x)``."""
        u = np.asarray(u, dtype=float)
        if self.kind == "deterministic":
            return np.where(u <= self._param(x), 1.0, 0.0)
        if self.kind == "exponential":
            return np.where(u <= 0, 1.0, np.exp(-np.maximum(u, 0) / self._param(x)))
        if self.kind == "geometric":
            a = self._param(x)
            return (1.0 - a) ** np.maximum(np.ceil(u) - 1.0, 0.0)
        return np.asarray(self._custom("survival")(u, np.asarray(x)), dtype=float)

    def hazard(self, v, x) -> np.ndarray:
        return self.density(v, x) / self.survival(v, x)

    def size_biased(self, rng: np.random.Generator, x) -> np.ndarray:
        """Draw ``T ~ t p(t|x) / E(xi|x)``."""
        x = np.asarray(x)
        if self.kind == "deterministic":
            return self._param(x).copy()
        if self.kind == "exponential":
            return rng.gamma(2.0, self._param(x))
        if self.kind == "geometric":
            # t a^2 (1-a)^(t-1) is one plus a negative binomial(2, a) count
            return rng.negative_binomial(2, self._param(x)).astype(float) + 1.0
        return np.asarray(self._custom("size_biased")(rng, x), dtype=float)


def deterministic_law(mean_fn, discrete: bool = False) -> SojournLaw:
    return SojournLaw("deterministic", mean_fn, discrete)


def exponential_law(mean_fn) -> SojournLaw:
    return SojournLaw("exponential", mean_fn, False)


def geometric_law(success_fn) -> SojournLaw:
    return SojournLaw("geometric", success_fn, True)


def custom_law(mean, sample, density=None, survival=None, variance=None, size_biased=None,
               discrete: bool = False) -> SojournLaw:
    fns = dict(mean=mean, sample=sample, density=density, survival=survival,
               variance=variance, size_biased=size_biased)
    return SojournLaw("custom", mean, discrete, {k: v for k, v in fns.items() if v is not None})


def table_fn(values) -> Callable[[np.ndarray], np.ndarray]:
    """Per-state parameter lookup for finite state spaces."""
    table = np.asarray(values, dtype=float)
    return lambda x: table[np.asarray(x).astype(int)]


# ---------------------------------------------------------------- containers


@dataclass(frozen=True)
class WeightedSample:
    """A finite run of one stream: parallel arrays of states and weights."""

    states: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if len(self.states) != len(self.weights):
            raise ValueError("states and weights differ in length")

    def __len__(self):
        return len(self.weights)

    @property
    def points(self) -> list[WeightedPoint]:
        return [WeightedPoint(s, float(w)) for s, w in zip(self.states.tolist(), self.weights)]

    def path(self, time_mode: str = "continuous") -> JumpPath:
        return JumpPath(self.states, self.weights, time_mode)


def as_arrays(points) -> tuple[np.ndarray, np.ndarray]:
    """Normalize a WeightedSample, JumpPath or sequence of points to arrays."""
    if isinstance(points, (WeightedSample, JumpPath)):
        return np.asarray(points.states), np.asarray(points.weights, dtype=float)
    if isinstance(points, tuple) and len(points) == 2 and isinstance(points[0], np.ndarray):
        return points[0], np.asarray(points[1], dtype=float)
    pts = list(points)
    states = np.array([p.state if isinstance(p, WeightedPoint) else p[0] for p in pts])
    weights = np.array([p.weight if isinstance(p, WeightedPoint) else p[1] for p in pts], dtype=float)
    return states, weights


def _expect(density: Density, f) -> float:
    """``E_density f`` exactly on finite supports, by quadrature otherwise."""
    if density.discrete:
        xs = density.support.states
        return float(np.dot(density.pmf(), f(xs)))
    lo, hi = density.support.lo, density.support.hi
    pdf = lambda x: float(density.pdf(x) * f(np.asarray(x)))  # noqa: E731
    pieces = [(lo, -50.0), (-50.0, 50.0), (50.0, hi)] if np.isinf(lo) and np.isinf(hi) else [(lo, hi)]
    return float(sum(integrate.quad(pdf, a, b, limit=400)[0] for a, b in pieces if b > a))


# ---------------------------------------------------------------- streams


class WeightedStream:
    """Base class.  Subclasses implement ``init`` and ``step``."""

    scheme = "stream"
    iid = False
    time_mode = "continuous"

    def __init__(self, kappa: Optional[float] = None, law: Optional[SojournLaw] = None, **params):
        self.kappa = kappa
        self.law = law
        self.params = params
        self._cursor = None

    @property
    def description(self) -> dict:
        return {"scheme": self.scheme, "kappa": self.kappa, **self.params}

    def init(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.zeros(size)

    def step(self, rng: np.random.Generator, cursor: np.ndarray):
        raise NotImplementedError

    def next(self, rng) -> WeightedPoint:
        rng = as_rng(rng)
        if self._cursor is None:
            self._cursor = self.init(rng, 1)
        self._cursor, x, w = self.step(rng, self._cursor)
        return WeightedPoint(x[0].item(), float(w[0]))

    def sample(self, rng, n: int) -> WeightedSample:
        """``n`` consecutive points of one fresh chain."""
        rng = as_rng(rng)
        if self.iid:
            _, x, w = self.step(rng, self.init(rng, n))
            return WeightedSample(x, w)
        cursor = self.init(rng, 1)
        xs, ws = [], []
        for _ in range(n):
            cursor, x, w = self.step(rng, cursor)
            xs.append(x[0])
            ws.append(w[0])
        return WeightedSample(np.array(xs), np.array(ws, dtype=float))

    def mean_weight(self, x) -> np.ndarray:
        """``E(xi | X = x)`` for state-only sojourn laws."""
        if self.law is None:
            raise UnsupportedLawError(f"{self.scheme}: weights depend on more than the emitted state")
        return self.law.mean(x)

    def __repr__(self):
        return f"{type(self).__name__}({self.description})"


def _check_weights(w: np.ndarray, scheme: str) -> np.ndarray:
    if not np.all(np.isfinite(w) & (w > 0)):
        raise InvalidWeightError(f"{scheme}: emitted a non-positive or non-finite weight")
    return w


class IIDWeighted(WeightedStream):
    """iid states from ``trial`` with sojourns drawn from ``law``."""

    iid = True

    def __init__(self, trial: Density, law: SojournLaw, scheme: str = "iid", kappa=None, **params):
        if trial.exact_sampler is None:
            raise ConfigurationError(f"{scheme}: trial density has no exact sampler")
        super().__init__(kappa=kappa, law=law, **params)
        self.trial = trial
        self.scheme = scheme
        self.time_mode = "discrete" if law.discrete else "continuous"

    def step(self, rng, cursor):
        x = self.trial.sample(rng, len(cursor))
        return cursor, x, _check_weights(self.law.sample(rng, x), self.scheme)

    def embedded_pmf(self) -> np.ndarray:
        return self.trial.pmf()


class ChainWeighted(WeightedStream):
    """States from a Markov chain, sojourns from a state-only ``law``."""

    def __init__(self, transition: TransitionDensity, initial, law: SojournLaw, scheme: str = "chain",
                 kappa=None, **params):
        super().__init__(kappa=kappa, law=law, **params)
        self.transition = transition
        self.initial = initial
        self.scheme = scheme
        self.time_mode = "discrete" if law.discrete else "continuous"

    def init(self, rng, size):
        return np.full(size, self.initial)

    def step(self, rng, cursor):
        w = _check_weights(self.law.sample(rng, cursor), self.scheme)
        return self.transition.sample(cursor, rng), cursor, w


def _check_trial(trial: Density, wf: WeightFunction, scheme: str):
    if trial.exact_sampler is None:
        raise ConfigurationError(f"{scheme}: trial density has no exact sampler")
    if wf.trial is not trial:
        raise ConfigurationError(f"{scheme}: weight function was built for a different trial density")


def standard_is(trial: Density, wf: WeightFunction) -> IIDWeighted:
    """iid ``x ~ g`` weighted deterministically by ``kappa w(x)``."""
    _check_trial(trial, wf, "is")
    law = deterministic_law(wf.value)
    return IIDWeighted(trial, law, scheme="is", kappa=wf.kappa)


def exponential_weight_sampler(base, wf: WeightFunction, initial=None) -> WeightedStream:
    """Exponential sojourns with mean ``kappa w(x)``.

    ``base`` is either the trial density (iid states) or a transition density
    whose stationary law is ``wf.trial``; the latter needs ``initial``.
    """
    law = exponential_law(wf.value)
    if isinstance(base, Density):
        _check_trial(base, wf, "exp")
        return IIDWeighted(base, law, scheme="exp", kappa=wf.kappa)
    if initial is None:
        raise ConfigurationError("exp: a chain base needs an initial state")
    return ChainWeighted(base, initial, law, scheme="exp", kappa=wf.kappa)


class _RejectingIID(WeightedStream):
    """Shared machinery of the two geometric independence samplers."""

    iid = True
    time_mode = "discrete"

    def __init__(self, trial_tilde: Density, wf_tilde: WeightFunction, **params):
        super().__init__(**params)
        self.trial = trial_tilde
        self.wf = wf_tilde

    def _draw(self, rng, z):
        """Return (accepted mask, weights for accepted)."""
        raise NotImplementedError

    def step(self, rng, cursor):
        size = len(cursor)
        xs = np.empty(size, dtype=int if self.trial.discrete else float)
        ws = np.empty(size)
        pending = np.arange(size)
        while pending.size:
            z = self.trial.sample(rng, pending.size)
            acc, w = self._draw(rng, z)
            xs[pending[acc]] = z[acc]
            ws[pending[acc]] = w
            pending = pending[~acc]
        return cursor, xs, ws

    def embedded_pmf(self) -> np.ndarray:
        """Law of the accepted states (finite supports only)."""
        xs = self.trial.support.states
        p = self.trial.pmf() * self.accept_prob(xs)
        return p / p.sum()


class SZSampler(_RejectingIID):
    scheme = "sz"

    def __init__(self, trial_tilde: Density, wf_tilde: WeightFunction):
        _check_trial(trial_tilde, wf_tilde, "sz")
        success = lambda x: 1.0 / (1.0 + wf_tilde.value(x))  # noqa: E731
        super().__init__(trial_tilde, wf_tilde, law=geometric_law(success), kappa_tilde=wf_tilde.kappa)
        self.kappa = self._accepted_kappa()

    def accept_prob(self, x):
        kw = self.wf.value(x)
        return kw / (1.0 + kw)

    def _accepted_kappa(self):
        t = self.wf.target
        if t.normalizer is None or self.trial.normalizer is None:
            return None
        # E(xi|x) = 1 + c w(x) = K pi(x)/g(x), K = 1 / int pi/(1 + c w) = c / E_g~[accept],
        # c = kappa rescaled to normalized densities
        c = self.wf.kappa * t.normalizer / self.trial.normalizer
        return c / _expect(self.trial, self.accept_prob)

    def _draw(self, rng, z):
        # pre-rejection geometric on {0, 1, ...}; M = 0 rejects z
        m = rng.geometric(1.0 / (1.0 + self.wf.value(z))) - 1
        acc = m > 0
        return acc, m[acc].astype(float)


def sz_sampler(trial_tilde: Density, wf_tilde: WeightFunction) -> SZSampler:
    return SZSampler(trial_tilde, wf_tilde)


class GasemyrSampler(_RejectingIID):
    scheme = "gasemyr"

    def __init__(self, trial_tilde: Density, wf_tilde: WeightFunction, accept_prob, geo_param,
                 probes: Optional[np.ndarray] = None, rtol: float = 1e-9):
        _check_trial(trial_tilde, wf_tilde, "gasemyr")
        super().__init__(trial_tilde, wf_tilde, law=geometric_law(geo_param))
        self.q = accept_prob
        self.a = geo_param
        self.ratio = self._validate(probes, rtol)
        self.params.update(kappa_tilde=wf_tilde.kappa, proportionality=self.ratio)
        self.kappa = self._accepted_kappa()

    def accept_prob(self, x):
        return np.asarray(self.q(np.asarray(x)), dtype=float)

    def _validate(self, probes, rtol):
        if probes is None:
            if self.trial.discrete:
                probes = self.trial.support.states
            else:
                probes = self.trial.sample(make_rng(0, 0, Role.PROBE), 100)
        probes = np.asarray(probes)
        q = self.accept_prob(probes)
        a = np.asarray(self.a(probes), dtype=float)
        if np.any((q <= 0) | (q > 1)) or np.any((a <= 0) | (a > 1)):
            raise ConfigurationError("gasemyr: q and a must lie in (0, 1]")
        w_tilde = self.wf.value(probes) / self.wf.kappa
        r = a * w_tilde / q
        if not np.allclose(r, r[0], rtol=rtol, atol=0.0):
            raise ConfigurationError("gasemyr: a(z) is not proportional to q(z)/w~(z)")
        return float(r[0])

    def _accepted_kappa(self):
        if self.wf.target.normalizer is None or self.trial.normalizer is None:
            return None
        # 1/a = w~/(c q) = pi / (c Z g) with Z = E_g~ q
        w_tilde_scale = self.wf.target.normalizer / self.trial.normalizer
        return w_tilde_scale / (self.ratio * _expect(self.trial, self.accept_prob))

    def _draw(self, rng, z):
        acc = rng.random(len(z)) < self.accept_prob(z)
        w = rng.geometric(np.asarray(self.a(z[acc]), dtype=float)).astype(float)
        return acc, w


def gasemyr_sampler(trial_tilde: Density, wf_tilde: WeightFunction, accept_prob=None, geo_param=None,
                    **kwargs) -> GasemyrSampler:
    """Geometric-weight independence sampler with a general rejection rule.

    Omitting both ``accept_prob`` and ``geo_param`` selects the
    variance-optimal pair ``q = min(1, kw~)``, ``a = min(1, 1/kw~)``.
    """
    if accept_prob is None and geo_param is None:
        accept_prob = lambda z: np.minimum(1.0, wf_tilde.value(z))  # noqa: E731
        geo_param = lambda z: np.minimum(1.0, 1.0 / wf_tilde.value(z))  # noqa: E731
    elif accept_prob is None or geo_param is None:
        raise ConfigurationError("gasemyr: give both q and a, or neither")
    return GasemyrSampler(trial_tilde, wf_tilde, accept_prob, geo_param, **kwargs)


# ---------------------------------------------------------------- Metropolis-Hastings


def _log_accept(target: Density, proposal: TransitionDensity, y, z):
    lq_fwd = proposal.log_density(y, z)
    if np.any(~np.isfinite(lq_fwd)):
        raise SupportError("proposal density vanishes at a proposed state")
    num = target.log_unnormalized(z) + proposal.log_density(z, y)
    den = target.log_unnormalized(y) + lq_fwd
    with np.errstate(invalid="ignore"):
        return np.minimum(0.0, np.where(np.isfinite(num), num - den, -np.inf))


def mh_trace(target: Density, proposal: TransitionDensity, initial, n_steps: int, rng):
    """Plain Metropolis-Hastings.

    Returns ``(chain, proposals, accepted)`` where ``chain[t]`` is the state
    at time ``t`` (length ``n_steps + 1``), ``proposals[0] = initial`` and
    ``accepted[0] = True``; entries ``1..n_steps`` hold each proposal and its
    accept flag.
    """
    rng = as_rng(rng)
    if not np.isfinite(target.log_unnormalized(initial)):
        raise SupportError("target density vanishes at the initial state")
    y = np.asarray(initial)
    chain = [y.item()]
    proposals = [y.item()]
    accepted = [True]
    for _ in range(n_steps):
        z = proposal.sample(y, rng)
        if np.log(rng.random()) < _log_accept(target, proposal, y, z):
            y = np.asarray(z)
            accepted.append(True)
        else:
            accepted.append(False)
        proposals.append(np.asarray(z).item())
        chain.append(y.item())
    return np.array(chain), np.array(proposals), np.array(accepted)


def compress_trace(chain, accepted) -> WeightedSample:
    """Run-length compress an MH chain at its acceptance times.

    Holding count = 1 + number of rejections following each acceptance.
    The final run is included even though it may be censored.
    """
    chain = np.asarray(chain)
    starts = np.flatnonzero(np.asarray(accepted))
    if starts.size == 0 or starts[0] != 0:
        raise ValueError("accepted[0] must be True (the initial state)")
    holds = np.diff(np.append(starts, len(chain))).astype(float)
    return WeightedSample(chain[starts], holds)


def decompress(sample) -> np.ndarray:
    states, weights = as_arrays(sample)
    if not np.all(weights == np.round(weights)):
        raise ValueError("decompression needs integer holding counts")
    return np.repeat(states, weights.astype(int))


class MHSampler(WeightedStream):
    """MH output as (accepted state, geometric holding count) pairs."""

    scheme = "mh"
    time_mode = "discrete"

    def __init__(self, target: Density, proposal: TransitionDensity, initial):
        if not np.isfinite(target.log_unnormalized(initial)):
            raise SupportError("mh: target density vanishes at the initial state")
        law = None
        if target.discrete and proposal.matrix is not None:
            _, success = mh_jump_kernel(target.pmf(), proposal.matrix)
            law = geometric_law(table_fn(success))
        super().__init__(kappa=None, law=law, proposal=proposal.name)
        self.target = target
        self.proposal = proposal
        self.initial = initial

    def init(self, rng, size):
        return np.full(size, self.initial)

    def step(self, rng, cursor):
        cursor = cursor.copy()
        size = len(cursor)
        xs = cursor.copy()
        hold = np.ones(size)
        pending = np.arange(size)
        while pending.size:
            y = cursor[pending]
            z = self.proposal.sample(y, rng)
            acc = np.log(rng.random(pending.size)) < _log_accept(self.target, self.proposal, y, z)
            cursor[pending[acc]] = z[acc]
            hold[pending[~acc]] += 1.0
            pending = pending[~acc]
        return cursor, xs, hold

    def embedded_pmf(self) -> np.ndarray:
        embedded, _ = mh_jump_kernel(self.target.pmf(), self.proposal.matrix)
        return stationary_pmf(embedded)


def mh_sampler(target: Density, proposal: TransitionDensity, initial) -> MHSampler:
    return MHSampler(target, proposal, initial)


def mh_jump_kernel(target_pmf, proposal_matrix) -> tuple[np.ndarray, np.ndarray]:
    """Embedded accepted-state kernel and per-state acceptance probability.

    ``success[x] = sum_z a(x,z) q(z|x)`` (self-proposals count as accepted)
    and ``embedded[x, z] = a(x,z) q(z|x) / success[x]``.
    """
    p = np.asarray(target_pmf, dtype=float)
    Q = np.asarray(proposal_matrix, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(Q > 0, np.minimum(1.0, (p[None, :] * Q.T) / (p[:, None] * Q)), 0.0)
    aq = a * Q
    success = aq.sum(axis=1)
    return aq / success[:, None], success


def implied_transition_matrix(embedded, success) -> np.ndarray:
    """One-step kernel of the discrete-time jump process with geometric holding."""
    embedded = np.asarray(embedded, dtype=float)
    success = np.asarray(success, dtype=float)
    return np.diag(1.0 - success) + success[:, None] * embedded


def stationary_pmf(P) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    vals, vecs = np.linalg.eig(P.T)
    v = np.real(vecs[:, np.argmin(np.abs(vals - 1.0))])
    return v / v.sum()


# ---------------------------------------------------------------- reweighted MCMC output


def reweight_chain_output(states, transition: TransitionDensity, target: Density) -> WeightedSample:
    """``(y_i, pi(y_i) / pi(y_i | y_{i-1}))`` for ``i >= 1``."""
    y = np.asarray(states)
    if len(y) < 2:
        raise ValueError("need at least two chain states")
    lt = transition.log_density(y[:-1], y[1:])
    if np.any(~np.isfinite(lt)):
        raise SupportError("transition density vanishes along the trace")
    return WeightedSample(y[1:], np.exp(target.log_unnormalized(y[1:]) - lt))


def anchor_indices(accepted) -> np.ndarray:
    """``tau_i`` = index of the last accepted entry strictly before ``i``, for ``i >= 1``."""
    acc = np.asarray(accepted, dtype=bool)
    idx = np.where(acc, np.arange(len(acc)), -1)
    last = np.maximum.accumulate(idx)[:-1]
    if np.any(last < 0):
        raise UndefinedAnchorError(f"no accepted state before index {int(np.argmax(last < 0)) + 1}")
    return last


def reweight_mh_proposals(full_trace, accepted, proposal: TransitionDensity, target: Density) -> WeightedSample:
    """``(y_i, pi(y_i) / q(y_i | y_{tau_i}))`` over every proposal, accepted or not."""
    y = np.asarray(full_trace)
    tau = anchor_indices(accepted)
    lq = proposal.log_density(y[tau], y[1:])
    if np.any(~np.isfinite(lq)):
        raise SupportError("proposal density vanishes along the trace")
    return WeightedSample(y[1:], np.exp(target.log_unnormalized(y[1:]) - lq))


class ReweightedChain(WeightedStream):
    """Streaming form of :func:`reweight_chain_output` on a simulated chain."""

    scheme = "reweight-chain"

    def __init__(self, transition: TransitionDensity, target: Density, initial):
        super().__init__(kappa=target.normalizer, kernel=transition.name)
        self.transition = transition
        self.target = target
        self.initial = initial

    def init(self, rng, size):
        return np.full(size, self.initial)

    def step(self, rng, cursor):
        y = self.transition.sample(cursor, rng)
        w = np.exp(self.target.log_unnormalized(y) - self.transition.log_density(cursor, y))
        return y, y, _check_weights(w, self.scheme)


class ReweightedMHProposals(WeightedStream):
    """Streaming form of :func:`reweight_mh_proposals`; the cursor is the anchor."""

    scheme = "reweight-mh"

    def __init__(self, target: Density, proposal: TransitionDensity, initial):
        super().__init__(kappa=target.normalizer, proposal=proposal.name)
        self.target = target
        self.proposal = proposal
        self.initial = initial

    def init(self, rng, size):
        return np.full(size, self.initial)

    def step(self, rng, cursor):
        z = self.proposal.sample(cursor, rng)
        w = np.exp(self.target.log_unnormalized(z) - self.proposal.log_density(cursor, z))
        acc = np.log(rng.random(len(cursor))) < _log_accept(self.target, self.proposal, cursor, z)
        return np.where(acc, z, cursor), z, _check_weights(w, self.scheme)


# ---------------------------------------------------------------- batch simulation


def marginals(stream: WeightedStream, times: Sequence[float], size: int, rng,
              first: Optional[tuple[np.ndarray, np.ndarray]] = None,
              on_point: Optional[Callable] = None) -> np.ndarray:
    """``Y_t`` for ``size`` independent chains at each time in ``times``.

    ``first`` optionally replaces each chain's initial point (e.g. a
    stationary start).  ``on_point(idx, states, weights, epoch_start)`` is
    called for every emitted point, including the first.  Returns an array
    of shape ``(len(times), size)``.
    """
    rng = as_rng(rng)
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) < 0):
        raise ValueError("times must be sorted ascending")
    cursor = stream.init(rng, size)
    if first is None:
        cursor, x, w = stream.step(rng, cursor)
    else:
        x, w = (np.array(a) for a in first)
    cur_x = np.array(x)
    start = np.zeros(size)
    end = start + w
    if on_point is not None:
        on_point(np.arange(size), cur_x, w, start)
    out = np.empty((len(times), size), dtype=cur_x.dtype)
    for k, t in enumerate(times):
        while True:
            idx = np.flatnonzero(end <= t)
            if idx.size == 0:
                break
            sub, nx, nw = stream.step(rng, cursor[idx])
            cursor[idx] = sub
            start[idx] = end[idx]
            cur_x[idx] = nx
            end[idx] = start[idx] + nw
            if on_point is not None:
                on_point(idx, nx, nw, start[idx])
        out[k] = cur_x
    return out


def batch_points(stream: WeightedStream, n: int, size: int, rng,
                 first: Optional[tuple[np.ndarray, np.ndarray]] = None) -> tuple[np.ndarray, np.ndarray]:
    """First ``n`` points of ``size`` independent chains, arrays of shape ``(size, n)``.

    ``first`` optionally replaces each chain's initial point.
    """
    rng = as_rng(rng)
    if stream.iid and first is None:
        _, x, w = stream.step(rng, stream.init(rng, size * n))
        return x.reshape(size, n), w.reshape(size, n)
    cursor = stream.init(rng, size)
    xs, ws = [], []
    for k in range(n):
        if k == 0 and first is not None:
            x, w = (np.asarray(a) for a in first)
        else:
            cursor, x, w = stream.step(rng, cursor)
        xs.append(x)
        ws.append(np.asarray(w, dtype=float))
    return np.stack(xs, axis=1), np.stack(ws, axis=1)


def simulate_path(stream: WeightedStream, rng, horizon: float, first: Optional[WeightedPoint] = None,
                  chunk: int = 64) -> JumpPath:
    """Shortest path whose last epoch exceeds ``horizon``."""
    rng = as_rng(rng)
    states, weights = [], []
    total = 0.0
    if first is not None:
        states.append(first.state)
        weights.append(first.weight)
        total = first.weight
    if stream.iid:
        while total <= horizon:
            s = stream.sample(rng, chunk)
            states.extend(s.states.tolist())
            weights.extend(s.weights.tolist())
            total = float(np.sum(weights))
    else:
        cursor = stream.init(rng, 1)
        while total <= horizon:
            cursor, x, w = stream.step(rng, cursor)
            states.append(x[0].item())
            weights.append(float(w[0]))
            total += float(w[0])
    # drop chunk overshoot: keep the shortest prefix whose horizon exceeds ``horizon``
    keep = int(np.searchsorted(np.cumsum(weights), horizon, side="right")) + 1
    return JumpPath(states[:keep], weights[:keep], stream.time_mode)
