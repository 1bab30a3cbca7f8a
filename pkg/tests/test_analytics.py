import math
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jbrsim import analytics as an

prob = st.floats(0.0, 1.0, allow_nan=False)
rate = st.floats(0.0, 100.0, allow_nan=False)


# -- route breakage ------------------------------------------------------------


def test_route_broken_examples():
    assert an.p_route_broken(2.0, 2.0) == 0.5
    assert an.p_route_broken(0.0, 3.0) == 0.0
    assert an.p_route_broken(1.0, 3.0) == 0.25


def test_route_broken_race_matches_closed_form():
    est = an.mc_route_broken(1.0, 3.0, trials=1_000_000, seed=1)
    assert abs(est.value - 0.25) <= 0.005
    assert est.covers(0.25, slack=1e-3)


def test_both_rates_zero_is_a_domain_error():
    with pytest.raises(an.DomainError):
        an.p_route_broken(0.0, 0.0)


@settings(max_examples=100, deadline=None)
@given(rate, rate, st.floats(0.0, 10.0))
def test_route_broken_monotone(mu, lam, bump):
    if mu + lam == 0:
        return
    p = an.p_route_broken(mu, lam)
    assert 0.0 <= p <= 1.0
    assert an.p_route_broken(mu + bump, lam) >= p - 1e-15
    assert an.p_route_broken(mu, lam + bump) <= p + 1e-15


# -- routing success -----------------------------------------------------------


def test_routing_success_examples():
    for mode in ("literal", "conjunction"):
        assert an.p_routing_success(1, 1, mode) == 1.0
        assert an.p_routing_success(0, 0.7, mode) == 0.0
        assert an.p_routing_success(0.9, 0.8, mode) == pytest.approx(0.72)


def test_routing_success_monte_carlo():
    est = an.mc_routing_success(0.9, 0.8, trials=1_000_000, seed=2)
    assert abs(est.value - 0.72) <= 0.005


@settings(max_examples=100, deadline=None)
@given(prob, prob)
def test_routing_success_modes_agree_and_stay_in_unit_interval(pl, pjs):
    a = an.p_routing_success(pl, pjs, "literal")
    b = an.p_routing_success(pl, pjs, "conjunction")
    assert 0.0 <= a <= 1.0
    assert a == pytest.approx(b, abs=1e-12)


def test_bad_inputs_rejected():
    with pytest.raises(an.DomainError):
        an.p_routing_success(1.2, 0.5)
    with pytest.raises(an.DomainError):
        an.p_routing_success(0.5, 0.5, "other")


# -- ratios --------------------------------------------------------------------


def test_ratio_examples():
    assert an.expected_success_ratio(0.8, 4, 1, 1) == pytest.approx(0.08)
    assert an.expected_failure_ratio(0.8, 4, 1, 1) == pytest.approx(0.02)
    assert an.expected_failure_ratio(1.0, 4, 1, 1) == 0.0


@settings(max_examples=100, deadline=None)
@given(prob, st.floats(1, 50), st.floats(0, 1), st.floats(0, 1))
def test_ratios_share_denominator(ps, el, fk, fkh):
    k, kh = fk * el, fkh * el
    den = 3 * el - k - kh
    s = an.expected_success_ratio(ps, el, k, kh)
    f = an.expected_failure_ratio(ps, el, k, kh)
    assert s * den + f * den == pytest.approx(1.0)


def test_nonpositive_denominator_rejected():
    with pytest.raises(an.DomainError):
        an.expected_success_ratio(0.5, 1, 2, 1)


# -- cost ----------------------------------------------------------------------


def test_cost_example_and_zero_costs():
    c = an.routing_cost(an.AnalyticParams())
    assert (c.c_rf, c.c_rs, c.c_r) == (4.0, 10.0, 40.0)
    zero = an.routing_cost(an.AnalyticParams(c_ls=0, c_lf=0, c_qd=0, c_ru=0))
    assert zero.c_r == 0.0


@settings(max_examples=100, deadline=None)
@given(st.floats(1, 20), st.floats(0, 1), st.floats(0, 1), st.floats(0, 5))
def test_cost_matches_expanded_sum(el, fk, fkh, cls):
    p = an.AnalyticParams(e_l=el, k=fk * el, k_hat=fkh * el, c_ls=cls)
    expanded = el * cls + (el - p.k) * cls + (el - p.k_hat) * cls
    assert an.routing_cost(p).c_rs == pytest.approx(expanded, abs=1e-9)


def test_bracket_form_flagged_when_singular():
    assert an.routing_cost(an.AnalyticParams(p_l=1.0)).c_r_bracket is None
    assert an.routing_cost(an.AnalyticParams(p_s=0.0)).c_r_bracket is None
    assert an.routing_cost(an.AnalyticParams()).bracket_defined


# -- janitors ------------------------------------------------------------------


def test_janitor_route_extremes():
    assert an.janitor_tau(0.0) == 1.0
    assert an.p_janitor_route(0.0, 4, "literal") == 0.0
    assert an.p_janitor_route(0.0, 4, "at-least-one") == 1.0
    assert an.p_janitor_route(1.0, 4, "literal") == 1.0
    assert an.p_janitor_route(1.0, 4, "at-least-one") == 0.0


def test_janitor_route_monte_carlo():
    closed = an.p_janitor_route(0.5, 4, "at-least-one")
    assert closed == pytest.approx(1 - 0.875**4)
    est = an.mc_janitor_route(0.5, 4, trials=1_000_000, seed=3)
    assert abs(est.value - closed) <= 0.005


@settings(max_examples=80, deadline=None)
@given(prob, st.integers(1, 30))
def test_janitor_route_monotone_in_janitor_count(pb, en):
    a = an.p_janitor_route(pb, en, "at-least-one")
    b = an.p_janitor_route(pb, en + 1, "at-least-one")
    assert 0.0 <= a <= b <= 1.0
    assert an.p_janitor_route(pb, en, "literal") == pytest.approx(1 - a)


def test_binomial_examples():
    assert an.binomial_janitor_count(4, 0.0, 0) == 1.0
    assert an.binomial_janitor_count(4, 0.125, 1) == pytest.approx(4 * 0.125 * 0.875**3)
    with pytest.raises(an.DomainError):
        an.binomial_janitor_count(4, 0.5, 5)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 60), prob)
def test_binomial_normalizes(en, tau):
    total = math.fsum(an.binomial_janitor_count(en, tau, k) for k in range(en + 1))
    assert abs(total - 1.0) <= 1e-12


def test_binomial_matches_direct_formula():
    for en, tau in product(range(0, 9), (0.1, 0.37, 0.9)):
        for k in range(en + 1):
            direct = math.comb(en, k) * tau**k * (1 - tau) ** (en - k)
            assert an.binomial_janitor_count(en, tau, k) == pytest.approx(direct, rel=1e-12, abs=1e-15)


# -- discovery -----------------------------------------------------------------


def test_discovery_examples():
    assert an.p_discovery_success(1.0, 3, 2) == 1.0
    assert an.p_discovery_success(0.0, 3, 2) == 0.0
    odds = an.discovery_odds(0.2, 3, 2)
    assert odds.p_r == pytest.approx(1 - 0.8**9)
    assert odds.p_f0 == pytest.approx(0.8**3) and odds.p_f1 == pytest.approx(0.8**6)


def test_discovery_monte_carlo():
    est = an.mc_discovery_success(0.2, 3, 2, trials=1_000_000, seed=4)
    assert abs(est.value - (1 - 0.8**9)) <= 0.005


@settings(max_examples=100, deadline=None)
@given(prob, st.integers(1, 10), st.integers(0, 10), st.floats(0, 0.5))
def test_discovery_monotone(p0, k, en, bump):
    p = an.p_discovery_success(p0, k, en)
    assert 0.0 <= p <= 1.0
    assert an.p_discovery_success(min(1.0, p0 + bump), k, en) >= p - 1e-12
    assert an.p_discovery_success(p0, k + 1, en) >= p - 1e-12
    assert an.p_discovery_success(p0, k, en + 1) >= p - 1e-12


# -- packet success ------------------------------------------------------------


def test_packet_success_exact_when_links_never_fail():
    est = an.p_packet_success_mc(an.PacketScenario(0.0, 4, 0.3), trials=10_000, seed=0)
    assert est.value == 1.0 and est.half_width == 0.0


def test_packet_success_without_recovery_is_clean_route():
    est = an.p_packet_success_mc(an.PacketScenario(0.1, 4, 0.0), trials=1_000_000, seed=5)
    assert abs(est.value - 0.9**4) <= 0.005


def test_packet_success_two_term_oracle():
    target = 0.9**4 + 4 * 0.1 * 0.9**3 * 0.8
    assert an.packet_success_two_term(0.1, 4, 0.8) == pytest.approx(target)
    est = an.p_packet_success_mc(an.PacketScenario(0.1, 4, 0.8, 1, 1), trials=1_000_000, seed=6)
    assert abs(est.value - target) <= 0.005


def test_packet_success_is_seed_deterministic():
    s = an.PacketScenario(0.2, 5, 0.5)
    assert an.p_packet_success_mc(s, trials=5000, seed=9) == an.p_packet_success_mc(s, trials=5000, seed=9)


def test_too_few_trials_rejected():
    with pytest.raises(an.DomainError):
        an.p_packet_success_mc(an.PacketScenario(0.1, 4, 0.8), trials=999)
    with pytest.raises(an.DomainError):
        an.mc_route_broken(1, 1, trials=10)


@settings(max_examples=30, deadline=None)
@given(prob, st.integers(1, 8), prob, st.integers(0, 2**32 - 1))
def test_packet_estimate_interval_is_sane(p, el, r, seed):
    est = an.p_packet_success_mc(an.PacketScenario(p, el, r), trials=2000, seed=seed)
    assert 0.0 <= est.value <= 1.0 and est.half_width >= 0.0


# -- parameters ----------------------------------------------------------------


@pytest.mark.parametrize(
    "changes", [{"p_l": 1.5}, {"mu": -1}, {"e_l": 0.5}, {"k": 10, "k_hat": 3}, {"k_cap": 0}, {"p_0": float("nan")}]
)
def test_params_validated(changes):
    with pytest.raises(an.DomainError):
        an.AnalyticParams(**changes)


def test_scenario_from_params_uses_model_quantities():
    p = an.AnalyticParams()
    s = an.PacketScenario.from_params(p)
    assert s.link_failure == pytest.approx(an.p_route_broken(p.mu, p.lambda_rate))
    assert s.recovery == pytest.approx(an.p_discovery_success(p.p_0, p.k_cap, p.e_n))
    assert s.e_l == 4


def test_half_width_is_normal_approximation():
    est = an.mc_routing_success(0.5, 1.0, trials=40_000, seed=0)
    assert est.half_width == pytest.approx(1.959964 * math.sqrt(est.value * (1 - est.value) / 40_000), rel=1e-5)
    assert np.isclose(an.Z95, 1.959964, atol=1e-6)
