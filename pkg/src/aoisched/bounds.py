"""Closed-form performance bounds for the age/UCB max-weight scheduler."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from scipy.optimize import minimize_scalar


class BoundDomainError(ValueError):
    """Bound evaluated outside the range where it is defined."""


def age_bound(eta: float, n_links: int, p_min: float) -> float:
    """Upper bound (eta + 1) N^2 / p_min on the running average total age."""
    if eta < 0:
        raise BoundDomainError(f"eta must be >= 0, got {eta}")
    if not 0 < p_min <= 1:
        raise BoundDomainError(f"p_min must lie in (0, 1], got {p_min}")
    return (eta + 1.0) * n_links**2 / p_min


def regret_bound(eta: float, n_links: int, horizon: int, max_schedule_size: int) -> float:
    """Upper bound on cumulative regret after ``horizon`` slots:

    N T / eta + 2 sqrt(6 N |S|max T ln T) + N (1 + 5 pi^2 / 12)
    """
    if eta == 0:
        raise BoundDomainError("regret bound is undefined for eta = 0 (division by zero)")
    if eta < 0:
        raise BoundDomainError(f"eta must be > 0, got {eta}")
    if horizon < 2:
        raise BoundDomainError(f"regret bound needs T >= 2, got {horizon}")
    n, t = n_links, horizon
    return (
        n * t / eta
        + 2.0 * math.sqrt(6.0 * n * max_schedule_size * t * math.log(t))
        + n * (1.0 + 5.0 * math.pi**2 / 12.0)
    )


def non_isolation_probs(p: Sequence[float]) -> list[float]:
    """Per link, one minus the probability that it is the only ON link in a slot."""
    out = []
    for n, pn in enumerate(p):
        others_off = 1.0
        for m, pm in enumerate(p):
            if m != n:
                others_off *= 1.0 - pm
        out.append(1.0 - pn * others_off)
    return out


def fading_age_bound(p: Sequence[float]) -> float:
    """eta-free bound N nu / (1 - nu) on the mean total age in fading networks.

    Requires every ON probability strictly below 1.
    """
    p = [float(x) for x in p]
    if not p:
        raise BoundDomainError("need at least one link")
    if any(not 0 < x < 1 for x in p):
        raise BoundDomainError(
            "the fading age bound requires 0 < p_n < 1 for every link; "
            "with an always-ON link the isolation event has zero probability"
        )
    nu = max(non_isolation_probs(p))
    return len(p) * nu / (1.0 - nu)


@dataclass(frozen=True)
class TwoLinkPrediction:
    period: int
    weak_link_avg_age: float
    strong_link_avg_age: float


def two_link_prediction(eta: float, mu_strong: float, mu_weak: float) -> TwoLinkPrediction:
    """Steady-state pattern for two interfering always-ON links.

    The weak link is served about once every ceil(eta * gap) slots.
    """
    x = eta * (mu_strong - mu_weak)
    if not x > 0:
        raise BoundDomainError("two-link prediction needs eta * (mu_strong - mu_weak) > 0")
    # rounding guards against 50 * (0.9 - 0.5) landing one ulp above 20
    period = math.ceil(round(x, 9))
    return TwoLinkPrediction(period, (1 + period) / 2, 1 + 1 / period)


def tradeoff_eta(n_links: int, horizon: int, max_schedule_size: int, p_min: float) -> float:
    """eta minimizing age_bound + regret_bound, found by a bounded 1-D search.

    The regret bound alone decreases in eta without limit; adding the age
    bound gives a finite minimizer, which is sqrt(T p_min / N) analytically.
    """

    def total(log_eta):
        eta = math.exp(log_eta)
        return age_bound(eta, n_links, p_min) + regret_bound(eta, n_links, horizon, max_schedule_size)

    res = minimize_scalar(total, bounds=(math.log(1e-6), math.log(1e12)), method="bounded",
                          options={"xatol": 1e-10})
    return math.exp(res.x)


@dataclass(frozen=True)
class BoundReport:
    eta: float
    age_bound: float
    regret_bound: float | None
    fading_age_bound: float | None
    two_link: TwoLinkPrediction | None


def bound_report(config, eta: float, horizon: int) -> BoundReport:
    """All bounds that apply to ``config`` (a NetworkConfig) under LAES(eta)."""
    n = config.n_links
    p = config.channel_on_probs
    regret = regret_bound(eta, n, horizon, config.max_schedule_size) if eta > 0 else None
    fading = fading_age_bound(p) if all(x < 1 for x in p) else None
    two = None
    mu = sorted(config.mean_rewards, reverse=True)
    if (
        n == 2
        and config.max_schedule_size == 1
        and config.non_fading
        and eta * (mu[0] - mu[1]) > 0
    ):
        two = two_link_prediction(eta, mu[0], mu[1])
    return BoundReport(eta, age_bound(eta, n, config.p_min), regret, fading, two)
