import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aoisched.bounds import (
    BoundDomainError,
    age_bound,
    bound_report,
    fading_age_bound,
    non_isolation_probs,
    regret_bound,
    tradeoff_eta,
    two_link_prediction,
)
from aoisched.network import NetworkConfig

P2 = [0.8, 0.7, 0.6, 0.9, 0.2, 0.5, 0.8, 0.9, 0.7, 0.85]


def regret_by_hand(eta, n, t, s):
    # written out term by term, independently of the module
    first = n * t / eta if eta else 0.0
    second = 2 * (6 * n * s * t * math.log(t)) ** 0.5
    third = n + n * 5 * math.pi * math.pi / 12
    return first + second + third


class TestAgeBound:
    @pytest.mark.parametrize("eta,n,p,expected", [(0, 5, 1, 25), (200, 5, 1, 5025), (0, 1, 1, 1), (0, 10, 0.2, 500)])
    def test_examples(self, eta, n, p, expected):
        assert age_bound(eta, n, p) == pytest.approx(expected, rel=1e-15)

    def test_exact(self):
        assert age_bound(0, 5, 1) == 25

    @given(st.floats(0, 1e4), st.floats(1e-3, 1e4), st.integers(1, 100), st.floats(0.01, 1))
    def test_increasing_in_eta(self, eta, d, n, p):
        assert age_bound(eta + d, n, p) > age_bound(eta, n, p)

    @given(st.floats(0, 1e4), st.integers(1, 100), st.floats(0.01, 1))
    def test_increasing_in_n(self, eta, n, p):
        assert age_bound(eta, n + 1, p) > age_bound(eta, n, p)

    @given(st.floats(0, 1e4), st.integers(1, 100), st.floats(0.01, 0.99))
    def test_decreasing_in_p(self, eta, n, p):
        assert age_bound(eta, n, min(1.0, p + 0.01)) < age_bound(eta, n, p)

    @pytest.mark.parametrize("args", [(-1, 5, 1), (0, 5, 0), (0, 5, 1.5)])
    def test_domain(self, args):
        with pytest.raises(BoundDomainError):
            age_bound(*args)


class TestRegretBound:
    def test_setup1_eta100(self):
        assert regret_bound(100, 5, 30_000, 1) == pytest.approx(7617.7, rel=1e-3)
        assert regret_bound(100, 5, 30_000, 1) == pytest.approx(regret_by_hand(100, 5, 30_000, 1), rel=1e-12)

    def test_limit_term(self):
        rest = regret_bound(100, 5, 30_000, 1) - 5 * 30_000 / 100
        assert rest == pytest.approx(6117.7, rel=1e-3)
        assert regret_bound(1e15, 5, 30_000, 1) == pytest.approx(rest, rel=1e-9)

    def test_tiny(self):
        assert regret_bound(1, 1, 2, 1) == pytest.approx(12.88, abs=5e-3)

    @pytest.mark.parametrize("args", [(0, 5, 100, 1), (-2, 5, 100, 1), (1, 5, 1, 1)])
    def test_domain(self, args):
        with pytest.raises(BoundDomainError):
            regret_bound(*args)

    @given(st.floats(1e-3, 1e6), st.floats(1e-3, 1e3), st.integers(1, 50), st.integers(2, 10**7))
    def test_decreasing_in_eta(self, eta, d, n, t):
        assert regret_bound(eta + d, n, t, 1) < regret_bound(eta, n, t, 1)

    @pytest.mark.parametrize("n", range(2, 21, 3))
    @pytest.mark.parametrize("t", [10**3, 10**4, 10**5, 10**6])
    def test_order_with_tuned_eta(self, n, t):
        eta = math.floor(math.sqrt(n * t / math.log(t)))
        assert regret_bound(eta, n, t, 1) <= 10 * math.sqrt(n * t * math.log(t))


class TestFading:
    def test_setup2(self):
        assert fading_age_bound(P2) == pytest.approx(4.6e7, rel=0.05)

    def test_independent_evaluation(self):
        prod_off = math.prod(1 - x for x in P2)
        nu = max(1 - p / (1 - p) * prod_off for p in P2)
        assert fading_age_bound(P2) == pytest.approx(len(P2) * nu / (1 - nu), rel=1e-9)

    @pytest.mark.parametrize("p,expected", [([0.5, 0.5], 6), ([0.5], 1)])
    def test_small(self, p, expected):
        assert fading_age_bound(p) == pytest.approx(expected)

    def test_nu(self):
        assert non_isolation_probs([0.5, 0.5]) == [0.75, 0.75]

    @pytest.mark.parametrize("p", [[1.0, 0.5], [0.0, 0.5], []])
    def test_domain(self, p):
        with pytest.raises(BoundDomainError):
            fading_age_bound(p)

    @given(st.lists(st.floats(0.01, 0.99), min_size=1, max_size=12))
    @settings(max_examples=200)
    def test_finite_and_positive(self, p):
        b = fading_age_bound(p)
        nus = non_isolation_probs(p)
        nu_min = min(nus)
        assert math.isfinite(b)
        assert b >= len(p) * nu_min / (1 - nu_min) >= 0


class TestTwoLink:
    def test_weak_strong_example(self):
        pred = two_link_prediction(50, 0.9, 0.5)
        assert (pred.period, pred.weak_link_avg_age, pred.strong_link_avg_age) == (20, 10.5, 1.05)

    def test_period_one(self):
        pred = two_link_prediction(1, 0.9, 0.0)
        assert (pred.period, pred.weak_link_avg_age, pred.strong_link_avg_age) == (1, 1, 2)

    def test_small_gap(self):
        pred = two_link_prediction(200, 0.9, 0.8)
        assert pred.period == 20 and pred.weak_link_avg_age == 10.5

    def test_non_integer_rounds_up(self):
        assert two_link_prediction(10, 0.9, 0.55).period == 4

    @pytest.mark.parametrize("args", [(0, 0.9, 0.5), (10, 0.5, 0.9), (10, 0.5, 0.5)])
    def test_domain(self, args):
        with pytest.raises(BoundDomainError):
            two_link_prediction(*args)


class TestTradeoff:
    @pytest.mark.parametrize("n,t,s,p", [(5, 30_000, 1, 1.0), (10, 30_000, 2, 0.2), (2, 1000, 1, 0.5)])
    def test_matches_closed_form(self, n, t, s, p):
        assert tradeoff_eta(n, t, s, p) == pytest.approx(math.sqrt(t * p / n), rel=1e-5)

    def test_is_minimum(self):
        eta = tradeoff_eta(5, 30_000, 1, 1.0)

        def total(e):
            return age_bound(e, 5, 1.0) + regret_bound(e, 5, 30_000, 1)

        assert total(eta) <= min(total(eta * 0.9), total(eta * 1.1))


class TestReport:
    def test_non_fading(self):
        cfg = NetworkConfig.from_vectors([0.9, 0.8, 0.5, 0.7, 0.2], max_active=1)
        rep = bound_report(cfg, 0, 30_000)
        assert rep.age_bound == 25 and rep.regret_bound is None and rep.fading_age_bound is None
        assert rep.two_link is None

    def test_fading(self):
        cfg = NetworkConfig.from_vectors([0.5] * 10, P2, max_active=2)
        rep = bound_report(cfg, 10, 30_000)
        assert rep.fading_age_bound == pytest.approx(4.6e7, rel=0.05)
        assert rep.age_bound == pytest.approx(11 * 100 / 0.2)

    def test_two_link(self):
        cfg = NetworkConfig.from_vectors([0.5, 0.9], max_active=1)
        assert bound_report(cfg, 50, 1000).two_link.period == 20

    @given(st.floats(0, 500), st.integers(2, 10**6))
    def test_nonnegative(self, eta, t):
        cfg = NetworkConfig.from_vectors([0.5] * 4, [0.5, 0.6, 0.7, 0.8], max_active=2)
        rep = bound_report(cfg, eta, t)
        assert rep.age_bound >= 0 and rep.fading_age_bound >= 0
        assert rep.regret_bound is None or rep.regret_bound >= 0
