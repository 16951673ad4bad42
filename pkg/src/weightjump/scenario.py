"""Scenario files: parsing, validation and construction of runnable objects.

A scenario is an INI-style file::

    [scenario]
    mode = limit-study          # limit-study | estimate | exact-start | tv-curve
    seed = 2101
    replicates = 10000
    times = 1, 3, 10

    [target]
    density = mixture(1/3: normal(0,3), 1/3: normal(5,1), 1/3: normal(15,2))

    [trial]
    density = cauchy(0, 10)

    [scheme]
    name = is                   # is | sz | gasemyr | exp | mh | reweight-chain | reweight-mh
    kappa = 1

Densities: ``normal(mu,sigma)``, ``cauchy(x0,gamma)``,
``mixture(w1:d1, w2:d2, ...)``, ``discrete([p1,...,pk])``.  Transitions:
``uniform``, ``independent(<density>)``, ``random_walk(sigma)``,
``matrix([[...],...])``, ``mh(<proposal>)`` (exact MH kernel, finite
supports only).
"""
from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from . import measure as M
from . import samplers as S
from .diagnostics import Bins, default_bins
from .equilibrium import hazard_floor, stationary_first
from .errors import WeightJumpError

MODES = ("limit-study", "estimate", "exact-start", "tv-curve")
SCHEMES = ("is", "sz", "gasemyr", "exp", "mh", "reweight-chain", "reweight-mh")


class ScenarioParseError(WeightJumpError):
    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column

    def as_dict(self):
        return {"error": "parse", "message": str(self), "line": self.line, "column": self.column}


class ScenarioValidationError(WeightJumpError):
    def __init__(self, issues):
        super().__init__("; ".join(issues))
        self.issues = list(issues)

    def as_dict(self):
        return {"error": "validation", "issues": self.issues}


# ---------------------------------------------------------------- expression parser

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+\.?\d*(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?)|(?P<name>[A-Za-z_][\w\-]*)|(?P<op>[()\[\],:/\-+]))")


@dataclass
class Call:
    name: str
    args: list
    col: int


@dataclass
class Pair:
    key: Any
    value: Any
    col: int


class _Parser:
    def __init__(self, text: str, line: Optional[int], col0: int):
        self.text, self.line, self.col0 = text, line, col0
        self.toks = []
        pos = 0
        text = text.rstrip()
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                self.fail(f"unexpected character {text[pos]!r}", pos)
            kind = m.lastgroup
            self.toks.append((kind, m.group(kind), m.start(kind)))
            pos = m.end()
        self.i = 0

    def fail(self, msg, pos):
        raise ScenarioParseError(msg, self.line, self.col0 + pos + 1)

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None, len(self.text))

    def take(self, value=None, kind=None):
        tok = self.peek()
        if tok[0] is None or (value is not None and tok[1] != value) or (kind is not None and tok[0] != kind):
            want = value or kind
            self.fail(f"expected {want!r}" + (f", found {tok[1]!r}" if tok[1] else " before end of value"), tok[2])
        self.i += 1
        return tok

    def number(self) -> float:
        sign = 1.0
        if self.peek()[1] in ("-", "+"):
            sign = -1.0 if self.take()[1] == "-" else 1.0
        val = float(self.take(kind="num")[1])
        if self.peek()[1] == "/":
            self.take("/")
            den = float(self.take(kind="num")[1])
            if den == 0:
                self.fail("division by zero", self.peek()[2])
            val /= den
        return sign * val

    def item(self):
        kind, val, pos = self.peek()
        if val == "[":
            self.take("[")
            items = [self.item()]
            while self.peek()[1] == ",":
                self.take(",")
                items.append(self.item())
            self.take("]")
            return items
        if kind == "name":
            self.take()
            if self.peek()[1] != "(":
                return Call(val, [], pos)
            self.take("(")
            args = []
            if self.peek()[1] != ")":
                args.append(self.arg())
                while self.peek()[1] == ",":
                    self.take(",")
                    args.append(self.arg())
            self.take(")")
            return Call(val, args, pos)
        return self.number()

    def arg(self):
        pos = self.peek()[2]
        first = self.item()
        if self.peek()[1] == ":":
            self.take(":")
            return Pair(first, self.item(), pos)
        return first

    def parse(self):
        if not self.toks:
            self.fail("empty value", 0)
        out = self.item()
        if self.i < len(self.toks):
            self.fail(f"unexpected trailing {self.toks[self.i][1]!r}", self.toks[self.i][2])
        return out


def parse_expr(text: str, line: Optional[int] = None, col0: int = 0):
    return _Parser(text, line, col0).parse()


def _nums(args, n, name, p: _Parser, col):
    if len(args) != n or not all(isinstance(a, float) for a in args):
        p.fail(f"{name} takes {n} numeric argument(s)", col)
    return args


def _density(node, p: _Parser) -> M.Density:
    if not isinstance(node, Call):
        p.fail("expected a density", 0)
    name, args, col = node.name, node.args, node.col
    try:
        if name == "normal":
            return M.normal(*_nums(args, 2, name, p, col))
        if name == "cauchy":
            return M.cauchy(*_nums(args, 2, name, p, col))
        if name == "mixture":
            if not args or not all(isinstance(a, Pair) and isinstance(a.key, float) for a in args):
                p.fail("mixture takes weight:density pairs", col)
            return M.mixture([a.key for a in args], [_density(a.value, p) for a in args])
        if name == "discrete":
            if len(args) != 1 or not isinstance(args[0], list) or not all(isinstance(v, float) for v in args[0]):
                p.fail("discrete takes one list of probabilities", col)
            return M.discrete(args[0])
    except (M.ConfigurationError, M.DimensionError) as exc:
        p.fail(str(exc), col)
    p.fail(f"unknown density {name!r}", col)


def _transition(node, p: _Parser, target: M.Density) -> M.TransitionDensity:
    if not isinstance(node, Call):
        p.fail("expected a transition", 0)
    name, args, col = node.name, node.args, node.col
    if name == "uniform":
        if not target.discrete:
            p.fail("uniform proposal needs a finite target support", col)
        return M.uniform_proposal(target.support.k)
    if name == "independent":
        if len(args) != 1:
            p.fail("independent takes one density", col)
        return M.independent(_density(args[0], p))
    if name == "random_walk":
        return M.random_walk(*_nums(args, 1, name, p, col))
    if name == "matrix":
        if len(args) != 1 or not isinstance(args[0], list):
            p.fail("matrix takes a list of rows", col)
        try:
            return M.from_matrix(np.array(args[0], dtype=float))
        except (M.ConfigurationError, M.DimensionError, ValueError) as exc:
            p.fail(str(exc), col)
    if name == "mh":
        if len(args) != 1 or not target.discrete:
            p.fail("mh(<proposal>) takes one proposal and a finite target", col)
        q = _transition(args[0], p, target)
        if q.matrix is None:
            p.fail("mh kernel needs a proposal matrix", col)
        return M.from_matrix(M.mh_kernel_matrix(target.pmf(), q.matrix), name=f"mh({q.name})")
    p.fail(f"unknown transition {name!r}", col)


# ---------------------------------------------------------------- scenario


@dataclass
class Scenario:
    mode: str
    seed: int
    replicates: int
    times: list
    target: M.Density
    scheme: str
    kappa: float = 1.0
    trial: Optional[M.Density] = None
    proposal: Optional[M.TransitionDensity] = None
    kernel: Optional[M.TransitionDensity] = None
    initial: Any = None
    optimal: bool = True
    accept_table: Optional[list] = None
    success_table: Optional[list] = None
    start: str = "ordinary"
    n: Optional[int] = None
    horizon: Optional[float] = None
    h: str = "id"
    bins: Optional[int] = None
    bin_range: Optional[tuple] = None
    bound: Optional[str] = None
    beta: float = 1.0
    w_star: Optional[float] = None
    out_dir: str = "out"
    dump_path: Optional[float] = None
    notes: list = field(default_factory=list)

    # -------------------------------------------------------------- builders

    def weight_function(self) -> M.WeightFunction:
        return M.WeightFunction(self.target, self.trial, self.kappa)

    def stream(self) -> S.WeightedStream:
        s = self.scheme
        if s == "is":
            return S.standard_is(self.trial, self.weight_function())
        if s == "exp":
            return S.exponential_weight_sampler(self.trial, self.weight_function())
        if s == "sz":
            return S.sz_sampler(self.trial, self.weight_function())
        if s == "gasemyr":
            wf = self.weight_function()
            if self.accept_table is not None:
                return S.gasemyr_sampler(self.trial, wf, S.table_fn(self.accept_table), S.table_fn(self.success_table))
            if self.optimal:
                return S.gasemyr_sampler(self.trial, wf)
            return S.gasemyr_sampler(
                self.trial, wf,
                lambda z: wf.value(z) / (1.0 + wf.value(z)),
                lambda z: 1.0 / (1.0 + wf.value(z)))
        if s == "mh":
            return S.mh_sampler(self.target, self.proposal, self.initial)
        if s == "reweight-chain":
            return S.ReweightedChain(self.kernel, self.target, self.initial)
        return S.ReweightedMHProposals(self.target, self.proposal, self.initial)

    def first_fn(self, stream: S.WeightedStream):
        if self.start != "stationary":
            return None
        law = stream.law
        return lambda rng, size: stationary_first(self.target, law, rng, size)

    def h_fn(self):
        if self.h == "id":
            return lambda x: np.asarray(x, dtype=float)
        if self.h == "square":
            return lambda x: np.asarray(x, dtype=float) ** 2
        m = re.fullmatch(r"indicator\((-?\d+)\)", self.h)
        if m:
            k = int(m.group(1))
            return lambda x: (np.asarray(x) == k).astype(float)
        raise ValueError(f"unknown h {self.h!r}")

    def tv_bins(self) -> Optional[Bins]:
        if self.target.discrete:
            return None
        if self.bin_range is not None:
            return Bins.uniform(self.bin_range[0], self.bin_range[1], self.bins or 60)
        b = default_bins(self.target, self.bins or 60)
        return b

    def bound_spec(self) -> Optional[tuple[str, dict]]:
        if not self.bound:
            return None
        return self.bound, {"beta": self.beta, "kappa": self.kappa, "w_star": self.w_star}

    def w_tilde_star(self) -> float:
        if self.w_star is not None:
            return self.w_star
        return M.weight_supremum(M.WeightFunction(self.target, self.trial))[0]


def _locate(text: str) -> dict:
    """Map (section, key) to (line, column of value) in the raw file."""
    where, section = {}, None
    for i, raw in enumerate(text.splitlines(), start=1):
        s = raw.strip()
        if s.startswith("[") and s.endswith("]"):
            section = s[1:-1].strip()
            continue
        m = re.match(r"\s*([^=:#;\s][^=:]*?)\s*[=:]\s*", raw)
        if m and section is not None:
            where[(section, m.group(1).strip().lower())] = (i, m.end())
    return where


def parse_scenario(text: str) -> Scenario:
    """Parse and statically validate scenario text.

    Raises :class:`ScenarioParseError` (syntax, with line/column) or
    :class:`ScenarioValidationError` (list of issues).
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ScenarioParseError("missing section header", exc.lineno, 1) from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else None
        raise ScenarioParseError("malformed line", lineno, 1) from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ScenarioParseError(str(exc), getattr(exc, "lineno", None), 1) from None
    where = _locate(text)
    issues: list[str] = []

    def get(section, key, default=None):
        if cp.has_option(section, key):
            return cp.get(section, key).strip()
        return default

    def expr(section, key):
        raw = get(section, key)
        if raw is None:
            return None, None
        line, col = where.get((section, key), (None, 0))
        p = _Parser(raw, line, col)
        return p.parse(), p

    def number(section, key, default, cast=float):
        raw = get(section, key)
        if raw is None:
            return default
        try:
            return cast(raw)
        except ValueError:
            line, col = where.get((section, key), (None, 0))
            raise ScenarioParseError(f"{section}.{key}: not a number: {raw!r}", line, col + 1) from None

    def numlist(section, key):
        raw = get(section, key)
        if raw is None:
            return None
        line, col = where.get((section, key), (None, 0))
        p = _Parser("[" + raw + "]", line, col - 1)
        vals = p.parse()
        if not all(isinstance(v, float) for v in vals):
            p.fail("expected a list of numbers", 1)
        return vals

    if not cp.has_section("scenario"):
        issues.append("missing [scenario] section")
    mode = get("scenario", "mode", "limit-study")
    if mode not in MODES:
        issues.append(f"unknown mode {mode!r}")
    seed = number("scenario", "seed", 0, int)
    m = number("scenario", "replicates", 1000, int)
    if m < 1:
        issues.append("replicates must be >= 1")
    times = numlist("scenario", "times") or []
    if any(b < a for a, b in zip(times, times[1:])):
        issues.append("times must be sorted ascending")
    if any(t < 0 for t in times):
        issues.append("times must be nonnegative")
    if mode in ("limit-study", "tv-curve") and not times:
        issues.append(f"mode {mode} needs times")

    node, p = expr("target", "density")
    if node is None:
        raise ScenarioValidationError(issues + ["missing [target] density"])
    target = _density(node, p)
    node, p = expr("trial", "density")
    trial = _density(node, p) if node is not None else None

    scheme = get("scheme", "name", "is")
    if scheme not in SCHEMES:
        issues.append(f"unknown scheme {scheme!r}")
    sc = Scenario(mode=mode, seed=seed, replicates=m, times=[float(t) for t in times], target=target,
                  scheme=scheme, trial=trial)
    sc.kappa = number("scheme", "kappa", 1.0)
    if sc.kappa <= 0:
        issues.append("kappa must be positive")
    sc.optimal = get("scheme", "optimal", "yes").lower() in ("yes", "true", "1", "on")
    sc.start = get("scheme", "start", "ordinary")
    if sc.start not in ("ordinary", "stationary"):
        issues.append(f"unknown start {sc.start!r}")
    init_raw = get("scheme", "initial")
    if init_raw is not None:
        sc.initial = int(float(init_raw)) if target.discrete else number("scheme", "initial", 0.0)
    acc, suc = numlist("scheme", "accept"), numlist("scheme", "success")
    if (acc is None) != (suc is None):
        issues.append("gasemyr accept and success tables must be given together")
    else:
        sc.accept_table, sc.success_table = acc, suc

    node, p = expr("scheme", "proposal")
    if node is not None:
        sc.proposal = _transition(node, p, target)
    node, p = expr("scheme", "kernel")
    if node is not None:
        sc.kernel = _transition(node, p, target)

    sc.n = number("scenario", "n", None, int)
    sc.horizon = number("scenario", "t", None)
    sc.h = get("scenario", "h", "id")
    try:
        sc.h_fn()
    except ValueError as exc:
        issues.append(str(exc))
    sc.bins = number("diagnostics", "bins", None, int)
    rng_ = numlist("diagnostics", "range")
    if rng_ is not None:
        if len(rng_) != 2 or rng_[0] >= rng_[1]:
            issues.append("diagnostics.range must be 'lo, hi' with lo < hi")
        else:
            sc.bin_range = tuple(rng_)
    sc.bound = get("diagnostics", "bound")
    sc.beta = number("diagnostics", "beta", 1.0)
    sc.w_star = number("diagnostics", "w_star", None)
    sc.out_dir = get("output", "dir", "out")
    sc.dump_path = number("output", "dump_path", None)

    issues += _check_scheme(sc)
    if issues:
        raise ScenarioValidationError(issues)
    return sc


def _check_scheme(sc: Scenario) -> list[str]:
    issues = []
    iid = sc.scheme in ("is", "exp", "sz", "gasemyr")
    if iid:
        if sc.trial is None:
            return [f"scheme {sc.scheme} needs a [trial] density"]
        if sc.trial.discrete != sc.target.discrete:
            return ["target and trial must both be discrete or both continuous"]
        if sc.trial.exact_sampler is None:
            issues.append("trial density has no exact sampler")
    if sc.scheme in ("mh", "reweight-mh") and sc.proposal is None:
        issues.append(f"scheme {sc.scheme} needs a proposal")
    if sc.scheme == "reweight-chain" and sc.kernel is None:
        issues.append("scheme reweight-chain needs a kernel")
    if not iid and sc.initial is None:
        issues.append(f"scheme {sc.scheme} needs an initial state")
    if sc.scheme == "gasemyr" and sc.accept_table is not None:
        if not sc.target.discrete or len(sc.accept_table) != sc.target.support.k:
            issues.append("gasemyr tables need one entry per state of a finite target")
    if sc.start == "stationary":
        if not iid:
            issues.append("stationary start needs an iid scheme")
        elif sc.target.exact_sampler is None:
            issues.append("stationary start needs an exact target sampler")
    if sc.mode == "exact-start":
        if sc.scheme not in ("exp", "sz", "gasemyr"):
            issues.append("exact-start needs iid states with a bounded-hazard law (exp, sz or gasemyr)")
    if sc.mode == "estimate" and (sc.n is None) == (sc.horizon is None):
        issues.append("estimate mode needs exactly one of n or t")
    if sc.bound:
        if sc.bound not in ("prop31", "mh_independence", "sz", "gasemyr"):
            issues.append(f"unknown bound {sc.bound!r}")
        elif sc.w_star is None and sc.trial is None:
            issues.append("bound needs diagnostics.w_star or a trial density")
    if sc.mode in ("limit-study", "tv-curve") and not sc.target.discrete:
        if sc.target.cdf is None and sc.target.normalizer is None:
            issues.append("TV against a continuous target needs a normalized target")
    if issues:
        return issues
    # construct once so configuration errors surface at validation time
    try:
        sc.stream()
    except (WeightJumpError, ValueError, IndexError) as exc:
        issues.append(f"scheme {sc.scheme}: {exc}")
    if sc.scheme == "gasemyr" and sc.trial is not None and sc.accept_table is None and sc.optimal:
        w_star = sc.w_tilde_star()
        if sc.kappa <= 1.0 / w_star:
            sc.notes.append("rejection-sampling regime: kappa <= 1/w~*, accepted states are exact pi draws")
    return issues


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())
