"""Closed-form JBR reliability and cost model, with Monte Carlo checks.

Every closed form is a pure function of its arguments.  Where a formula's
literal algebra and its intended meaning disagree, both readings are exposed
and the caller picks one by name (``mode`` / ``variant``).  Monte Carlo helpers take an
explicit seed and trial count and return ``(estimate, half_width)`` where the
half width is a normal-approximation 95% interval.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import Literal, NamedTuple

import numpy as np

Z95 = NormalDist().inv_cdf(0.975)
MIN_TRIALS = 1000
DEFAULT_TRIALS = 1_000_000


class DomainError(ValueError):
    """Inputs outside the domain where a formula is defined."""


def _prob(name: str, value: float) -> float:
    if not (0.0 <= value <= 1.0) or math.isnan(value):
        raise DomainError(f"{name}={value} is not a probability")
    return float(value)


def _nonneg(name: str, value: float) -> float:
    if not value >= 0:
        raise DomainError(f"{name}={value} must be nonnegative")
    return float(value)


@dataclass(frozen=True)
class AnalyticParams:
    mu: float = 0.1
    lambda_rate: float = 1.0
    e_l: float = 4.0
    e_n: int = 4
    k: float = 1.0
    k_hat: float = 1.0
    k_cap: int = 3
    p_l: float = 0.9
    p_js: float = 0.8
    p_0: float = 0.2
    p_s: float = 0.8
    c_ls: float = 1.0
    c_lf: float = 1.0
    c_qd: float = 1.0
    c_ru: float = 1.0
    q: float = 1.0
    z: float = 1.0

    def __post_init__(self) -> None:
        for name in ("p_l", "p_js", "p_0", "p_s"):
            _prob(name, getattr(self, name))
        for name in ("mu", "lambda_rate", "k", "k_hat", "c_ls", "c_lf", "c_qd", "c_ru", "q", "z"):
            _nonneg(name, getattr(self, name))
        if self.e_l < 1:
            raise DomainError("e_l must be at least 1")
        if self.e_n < 0 or self.k_cap < 1:
            raise DomainError("need e_n >= 0 and k_cap >= 1")
        if self.k + self.k_hat > 3 * self.e_l:
            raise DomainError("k + k_hat may not exceed 3 * e_l")

    def replace(self, **changes) -> "AnalyticParams":
        return dataclasses.replace(self, **changes)


class Estimate(NamedTuple):
    value: float
    half_width: float

    def covers(self, target: float, slack: float = 0.0) -> bool:
        return abs(self.value - target) <= self.half_width + slack


def _bernoulli_estimate(hits: np.ndarray) -> Estimate:
    n = hits.size
    p = float(hits.mean())
    return Estimate(p, Z95 * math.sqrt(p * (1.0 - p) / n))


def _check_trials(trials: int) -> int:
    if trials < MIN_TRIALS:
        raise DomainError(f"trials={trials} is below {MIN_TRIALS}; the interval would be meaningless")
    return int(trials)


# -- route breakage -------------------------------------------------------------


def p_route_broken(mu: float, lambda_rate: float) -> float:
    """Chance a route breaks before the next packet: mu / (mu + lambda)."""
    mu, lam = _nonneg("mu", mu), _nonneg("lambda_rate", lambda_rate)
    if mu + lam == 0:
        raise DomainError("mu and lambda_rate are both zero")
    return mu / (mu + lam)


def mc_route_broken(mu: float, lambda_rate: float, trials: int = DEFAULT_TRIALS, seed: int = 0) -> Estimate:
    """Race an exponential break time against an exponential packet arrival."""
    p_route_broken(mu, lambda_rate)
    rng = np.random.default_rng(seed)
    n = _check_trials(trials)
    breaks = rng.exponential(1.0 / mu, n) if mu > 0 else np.full(n, np.inf)
    arrivals = rng.exponential(1.0 / lambda_rate, n) if lambda_rate > 0 else np.full(n, np.inf)
    return _bernoulli_estimate(breaks < arrivals)


# -- link and janitor success -----------------------------------------------------


def p_routing_success(p_l: float, p_js: float, mode: Literal["literal", "conjunction"] = "literal") -> float:
    """Per-term routing success.

    ``literal`` expands the inclusion-exclusion form
    ``P_L + P_JS - (P_L or P_JS)`` with ``P(or) = P_L + P_JS - P_L P_JS``;
    ``conjunction`` multiplies the two independent events directly.
    """
    p_l, p_js = _prob("p_l", p_l), _prob("p_js", p_js)
    if mode == "literal":
        either = p_l + p_js - p_l * p_js
        return min(1.0, max(0.0, p_l + p_js - either))
    if mode == "conjunction":
        return p_l * p_js
    raise DomainError(f"unknown mode {mode!r}")


def mc_routing_success(p_l: float, p_js: float, trials: int = DEFAULT_TRIALS, seed: int = 0) -> Estimate:
    _prob("p_l", p_l), _prob("p_js", p_js)
    rng = np.random.default_rng(seed)
    n = _check_trials(trials)
    return _bernoulli_estimate((rng.random(n) < p_l) & (rng.random(n) < p_js))


# -- attempt ratios ---------------------------------------------------------------


def _attempt_denominator(e_l: float, k: float, k_hat: float) -> float:
    den = e_l + (e_l - k) + (e_l - k_hat)
    if not den > 0:
        raise DomainError(f"3*e_l - k - k_hat = {den} must be positive")
    return den


def expected_success_ratio(p_s: float, e_l: float, k: float, k_hat: float) -> float:
    return _prob("p_s", p_s) / _attempt_denominator(e_l, k, k_hat)


def expected_failure_ratio(p_s: float, e_l: float, k: float, k_hat: float) -> float:
    return (1.0 - _prob("p_s", p_s)) / _attempt_denominator(e_l, k, k_hat)


# -- cost -------------------------------------------------------------------------


@dataclass(frozen=True)
class RoutingCost:
    c_rf: float
    c_rs: float
    c_r: float
    # bracketed form; None where P_L = 1 or P_s = 0 makes it undefined
    c_r_bracket: float | None

    @property
    def bracket_defined(self) -> bool:
        return self.c_r_bracket is not None


def routing_cost(params: AnalyticParams) -> RoutingCost:
    p = params
    c_rf = p.q * p.c_ls + p.q * p.c_lf + p.q * p.c_qd + p.q * p.c_ru
    c_rs = 3 * p.e_l * p.c_ls - p.c_ls * (p.k + p.k_hat)
    c_r = p.z * c_rf * c_rs
    bracket = None
    if p.p_l < 1 and p.p_s > 0:
        factor = p.e_l + (p.e_l - p.k) + (p.e_l - p.k_hat) + p.p_l * (1 - p.p_s) / (p.p_s * (1 - p.p_l))
        bracket = factor * c_rf * c_rs
    return RoutingCost(c_rf, c_rs, c_r, bracket)


# -- janitor availability ---------------------------------------------------------


def janitor_tau(p_b: float) -> float:
    """Chance one janitor finds the route: three links all survive."""
    return (1.0 - _prob("p_b", p_b)) ** 3


def p_janitor_route(p_b: float, e_n: int, variant: Literal["literal", "at-least-one"] = "literal") -> float:
    """``literal`` is ``(1 - tau)^E_N`` taken as written, which is the chance
    that every janitor fails; ``at-least-one`` is its complement."""
    tau = janitor_tau(p_b)
    if e_n < 1:
        raise DomainError("e_n must be at least 1")
    all_fail = (1.0 - tau) ** e_n
    if variant == "literal":
        return all_fail
    if variant == "at-least-one":
        return 1.0 - all_fail
    raise DomainError(f"unknown variant {variant!r}")


def binomial_janitor_count(e_n: int, tau: float, k_count: int) -> float:
    """P(H = K) for H ~ Binomial(E_N, tau)."""
    tau = _prob("tau", tau)
    if e_n < 0 or not 0 <= k_count <= e_n:
        raise DomainError(f"k_count={k_count} outside 0..{e_n}")
    # exact integer coefficient; stays finite for subnormal tau where
    # incomplete-beta based pmf routines overflow
    return math.comb(e_n, k_count) * tau**k_count * (1.0 - tau) ** (e_n - k_count)


def mc_janitor_route(p_b: float, e_n: int, trials: int = DEFAULT_TRIALS, seed: int = 0) -> Estimate:
    """Each janitor needs its three links up; estimate P(at least one succeeds)."""
    janitor_tau(p_b)
    rng = np.random.default_rng(seed)
    n = _check_trials(trials)
    links_up = rng.random((n, e_n, 3)) >= p_b
    return _bernoulli_estimate(links_up.all(axis=2).any(axis=1))


# -- discovery --------------------------------------------------------------------


class DiscoveryOdds(NamedTuple):
    p_r: float
    p_f0: float
    p_f1: float


def discovery_odds(p_0: float, k_cap: int, e_n: int) -> DiscoveryOdds:
    p_0 = _prob("p_0", p_0)
    if k_cap < 1 or e_n < 0:
        raise DomainError("need k_cap >= 1 and e_n >= 0")
    p_f0 = (1.0 - p_0) ** k_cap
    p_f1 = (1.0 - p_0) ** (k_cap * e_n)
    return DiscoveryOdds(1.0 - p_f0 * p_f1, p_f0, p_f1)


def p_discovery_success(p_0: float, k_cap: int, e_n: int) -> float:
    return discovery_odds(p_0, k_cap, e_n).p_r


def mc_discovery_success(p_0: float, k_cap: int, e_n: int, trials: int = DEFAULT_TRIALS, seed: int = 0) -> Estimate:
    """K own attempts plus K per janitor, each succeeding independently with P_0."""
    discovery_odds(p_0, k_cap, e_n)
    rng = np.random.default_rng(seed)
    n = _check_trials(trials)
    attempts = k_cap * (1 + e_n)
    hits = np.empty(n, dtype=bool)
    chunk = max(1, 4_000_000 // attempts)
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk)
        hits[lo:hi] = (rng.random((hi - lo, attempts)) < p_0).any(axis=1)
    return _bernoulli_estimate(hits)


# -- end-to-end packet success ----------------------------------------------------


@dataclass(frozen=True)
class PacketScenario:
    """Abstraction for one packet: ``e_l`` links, each failing independently
    with ``link_failure``; a single failure can be repaired with probability
    ``recovery``.  ``k`` and ``k_hat`` mark the janitor's position on the
    route and only affect which segment failures are attributed to."""

    link_failure: float
    e_l: int
    recovery: float
    k: int = 0
    k_hat: int = 0

    def __post_init__(self) -> None:
        _prob("link_failure", self.link_failure)
        _prob("recovery", self.recovery)
        if self.e_l < 1:
            raise DomainError("e_l must be at least 1")
        if self.k < 0 or self.k_hat < 0 or self.k + self.k_hat > self.e_l:
            raise DomainError("need 0 <= k, k_hat and k + k_hat <= e_l")

    @classmethod
    def from_params(cls, params: AnalyticParams) -> "PacketScenario":
        e_l = max(1, round(params.e_l))
        k = min(round(params.k), e_l)
        k_hat = min(round(params.k_hat), e_l - k)
        recovery = p_discovery_success(params.p_0, params.k_cap, params.e_n)
        return cls(p_route_broken(params.mu, params.lambda_rate), e_l, recovery, k, k_hat)


def packet_success_two_term(link_failure: float, e_l: int, recovery: float) -> float:
    """Exact value of the no-error plus single-repaired-error decomposition."""
    p = _prob("link_failure", link_failure)
    r = _prob("recovery", recovery)
    return (1 - p) ** e_l + e_l * p * (1 - p) ** (e_l - 1) * r


def p_packet_success_mc(scenario: PacketScenario, trials: int = DEFAULT_TRIALS, seed: int = 0) -> Estimate:
    """Estimate P(no link fails) + P(exactly one fails and is repaired)."""
    n = _check_trials(trials)
    rng = np.random.default_rng(seed)
    failures = (rng.random((n, scenario.e_l)) < scenario.link_failure).sum(axis=1)
    repaired = rng.random(n) < scenario.recovery
    return _bernoulli_estimate((failures == 0) | ((failures == 1) & repaired))
