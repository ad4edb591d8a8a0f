"""Static network description and the per-slot max-weight schedule solver.

Links are indexed from 0 internally. Config files and output tables use
1-based link numbers; the translation happens in :mod:`aoisched.config`.

Tie order
---------
Several feasible schedules can reach the same objective value. The
deterministic ("lowest-index") order prefers the schedule whose 0/1
activation vector is lexicographically largest: the schedule that includes
the lowest link index at which two candidates differ. Equivalently, sorted
index tuples are compared lexicographically with a proper prefix ranked
after its extensions, so ``{0, 2}`` beats ``{0, 3}`` and ``{0}`` beats ``{}``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

TIE_BREAK_MODES = ("lowest-index", "random")
BRUTE_FORCE_MAX_LINKS = 20


class ConfigurationError(ValueError):
    """Invalid network description or solver input."""


class OracleScopeError(ValueError):
    """Instance too large for exhaustive enumeration."""


@dataclass(frozen=True)
class LinkParams:
    mean_reward: float
    channel_on_prob: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.mean_reward <= 1.0:
            raise ConfigurationError(f"mean_reward must lie in [0, 1], got {self.mean_reward}")
        if not 0.0 < self.channel_on_prob <= 1.0:
            raise ConfigurationError(
                f"channel_on_prob must lie in (0, 1], got {self.channel_on_prob}"
            )


@dataclass(frozen=True)
class AtMostK:
    """Any set of at most ``k`` links may transmit together."""

    k: int


@dataclass(frozen=True)
class ExplicitList:
    """Only the listed link sets (and the empty set) may transmit together."""

    schedules: tuple[frozenset[int], ...]

    def __init__(self, schedules: Iterable[Iterable[int]]):
        object.__setattr__(self, "schedules", tuple(frozenset(int(i) for i in s) for s in schedules))


FeasibleSet = AtMostK | ExplicitList


def activation_key(active: Iterable[int], n_links: int) -> tuple[int, ...]:
    """Sort key implementing the lowest-index tie order (smaller is preferred)."""
    active = set(active)
    return tuple(0 if n in active else 1 for n in range(n_links))


@dataclass(frozen=True)
class NetworkConfig:
    links: tuple[LinkParams, ...]
    feasible: FeasibleSet

    def __init__(self, links: Sequence[LinkParams], feasible: FeasibleSet):
        links = tuple(links)
        object.__setattr__(self, "links", links)
        object.__setattr__(self, "feasible", feasible)
        n = len(links)
        if n < 1:
            raise ConfigurationError("a network needs at least one link")
        if isinstance(feasible, AtMostK):
            if not 1 <= feasible.k <= n:
                raise ConfigurationError(f"AtMostK requires 1 <= k <= N={n}, got k={feasible.k}")
        elif isinstance(feasible, ExplicitList):
            if not feasible.schedules:
                raise ConfigurationError("ExplicitList needs at least one schedule")
            for s in feasible.schedules:
                bad = [i for i in s if not 0 <= i < n]
                if bad:
                    raise ConfigurationError(f"schedule {sorted(s)} references unknown links {bad}")
        else:
            raise ConfigurationError(f"unsupported feasible set {feasible!r}")

    @classmethod
    def from_vectors(cls, mean_rewards, channel_on_probs=None, *, max_active=None, schedules=None):
        """Build a config from per-link vectors; exactly one of ``max_active``/``schedules``."""
        if channel_on_probs is None:
            channel_on_probs = [1.0] * len(mean_rewards)
        if len(channel_on_probs) != len(mean_rewards):
            raise ConfigurationError("mean_rewards and channel_on_probs differ in length")
        if (max_active is None) == (schedules is None):
            raise ConfigurationError("give exactly one of max_active or schedules")
        feasible = AtMostK(int(max_active)) if max_active is not None else ExplicitList(schedules)
        links = [LinkParams(float(m), float(p)) for m, p in zip(mean_rewards, channel_on_probs)]
        return cls(links, feasible)

    @property
    def n_links(self) -> int:
        return len(self.links)

    @property
    def mean_rewards(self) -> np.ndarray:
        return np.array([l.mean_reward for l in self.links], dtype=float)

    @property
    def channel_on_probs(self) -> np.ndarray:
        return np.array([l.channel_on_prob for l in self.links], dtype=float)

    @property
    def p_min(self) -> float:
        return min(l.channel_on_prob for l in self.links)

    @property
    def max_schedule_size(self) -> int:
        """|S|_max, the largest number of links active in one slot."""
        if isinstance(self.feasible, AtMostK):
            return self.feasible.k
        return max(len(s) for s in self.feasible.schedules)

    @property
    def non_fading(self) -> bool:
        return all(l.channel_on_prob == 1.0 for l in self.links)

    def is_feasible(self, active: Iterable[int]) -> bool:
        active = frozenset(active)
        if any(not 0 <= i < self.n_links for i in active):
            return False
        if not active:
            return True
        if isinstance(self.feasible, AtMostK):
            return len(active) <= self.feasible.k
        return active in self.feasible.schedules

    def candidate_schedules(self) -> list[frozenset[int]]:
        """Distinct ExplicitList schedules plus the empty one, best tie rank first."""
        if not isinstance(self.feasible, ExplicitList):
            raise ConfigurationError("candidate_schedules is only defined for ExplicitList")
        distinct = set(self.feasible.schedules) | {frozenset()}
        return sorted(distinct, key=lambda s: activation_key(s, self.n_links))


@dataclass(frozen=True)
class Schedule:
    active: frozenset[int]

    def __init__(self, active: Iterable[int] = ()):
        object.__setattr__(self, "active", frozenset(int(i) for i in active))

    def indicator(self, n_links: int) -> np.ndarray:
        s = np.zeros(n_links, dtype=bool)
        s[list(self.active)] = True
        return s

    def __iter__(self):
        return iter(sorted(self.active))

    def __len__(self):
        return len(self.active)

    def __contains__(self, n):
        return n in self.active

    def __repr__(self):
        return f"Schedule({sorted(self.active)})"


def objective(weights: Sequence[float], channels: Sequence[int], schedule: Schedule) -> float:
    """Sum of weight * channel over the active links, added in index order."""
    total = 0.0
    for n in sorted(schedule.active):
        total = total + float(weights[n]) * float(channels[n])
    return total


def _check_inputs(config: NetworkConfig, weights, channels) -> tuple[np.ndarray, np.ndarray]:
    w = np.asarray(weights, dtype=float)
    c = np.asarray(channels)
    n = config.n_links
    if w.shape != (n,) or c.shape != (n,):
        raise ConfigurationError(
            f"expected weights and channels of length {n}, got {w.shape} and {c.shape}"
        )
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ConfigurationError("weights must be finite and nonnegative")
    return w, c.astype(bool)


def select_batch(
    config: NetworkConfig,
    contributions: np.ndarray,
    tie_break: str = "lowest-index",
    tie_keys: np.ndarray | None = None,
) -> np.ndarray:
    """Solve the max-weight problem row by row.

    ``contributions`` has shape (B, N) and holds weight * channel per link.
    Returns a boolean (B, N) activation matrix. Every row is solved
    independently of the others, so results do not depend on batch makeup.

    With ``tie_break="random"``, ``tie_keys`` supplies uniform draws of shape
    (B, N) for AtMostK or (B, L) for ExplicitList (L candidate schedules);
    ties are then broken by the smallest key instead of by link index.
    """
    if tie_break not in TIE_BREAK_MODES:
        raise ConfigurationError(f"unknown tie_break {tie_break!r}")
    contrib = np.asarray(contributions, dtype=float)
    b, n = contrib.shape
    out = np.zeros((b, n), dtype=bool)
    rows = np.arange(b)
    feasible = config.feasible

    if isinstance(feasible, AtMostK):
        k = feasible.k
        if tie_break == "random":
            order = np.lexsort((tie_keys, -contrib), axis=-1)[:, :k]
        elif k == 1:
            # argmax returns the first maximum, i.e. the lowest index
            order = np.argmax(contrib, axis=1)[:, None]
        else:
            order = np.argsort(-contrib, axis=1, kind="stable")[:, :k]
        out[rows[:, None], order] = True
        return out

    candidates = config.candidate_schedules()
    values = np.zeros((b, len(candidates)))
    for j, s in enumerate(candidates):
        acc = np.zeros(b)
        for idx in sorted(s):
            acc = acc + contrib[:, idx]
        values[:, j] = acc
    tied = values == values.max(axis=1, keepdims=True)
    if tie_break == "random":
        rank = np.where(tied, tie_keys, np.inf)
    else:
        # candidates are already sorted best tie rank first
        rank = np.where(tied, np.arange(len(candidates))[None, :], len(candidates))
    choice = np.argmin(rank, axis=1)
    masks = np.array([[i in s for i in range(n)] for s in candidates], dtype=bool)
    return masks[choice]


def tie_key_width(config: NetworkConfig) -> int:
    if isinstance(config.feasible, AtMostK):
        return config.n_links
    return len(config.candidate_schedules())


def max_weight_schedule(
    config: NetworkConfig,
    weights: Sequence[float],
    channels: Sequence[int],
    tie_break: str = "lowest-index",
    rng: np.random.Generator | None = None,
    tie_keys: np.ndarray | None = None,
) -> Schedule:
    """Feasible schedule maximizing sum(weights[n] * channels[n]) over active links.

    AtMostK is solved greedily (top-k ON links by weight); ExplicitList by a
    scan over the listed schedules. Both are exact.
    """
    w, c = _check_inputs(config, weights, channels)
    keys = None
    if tie_break == "random":
        if tie_keys is not None:
            keys = np.asarray(tie_keys, dtype=float).reshape(1, -1)
        elif rng is not None:
            keys = rng.random((1, tie_key_width(config)))
        else:
            raise ConfigurationError("tie_break='random' needs an rng or tie_keys")
    active = select_batch(config, (w * c)[None, :], tie_break, keys)[0]
    return Schedule(np.flatnonzero(active))


def enumerate_feasible(config: NetworkConfig) -> list[frozenset[int]]:
    """Every feasible schedule, including the empty one."""
    n = config.n_links
    if n > BRUTE_FORCE_MAX_LINKS:
        raise OracleScopeError(f"N={n} exceeds the enumeration limit of {BRUTE_FORCE_MAX_LINKS}")
    if isinstance(config.feasible, AtMostK):
        return [
            frozenset(c)
            for size in range(config.feasible.k + 1)
            for c in itertools.combinations(range(n), size)
        ]
    return list(set(config.feasible.schedules) | {frozenset()})


def brute_force_schedule(config: NetworkConfig, weights, channels) -> Schedule:
    """Exhaustive oracle for :func:`max_weight_schedule` (lowest-index ties).

    Objective values are compared in exact rational arithmetic.
    """
    w, c = _check_inputs(config, weights, channels)
    exact = [Fraction(float(x)) if on else Fraction(0) for x, on in zip(w, c)]

    def key(s):
        return (-sum((exact[i] for i in s), Fraction(0)), activation_key(s, config.n_links))

    return Schedule(min(enumerate_feasible(config), key=key))


def schedule_value_exact(weights, channels, schedule: Schedule) -> Fraction:
    return sum(
        (Fraction(float(weights[n])) for n in schedule.active if channels[n]), Fraction(0)
    )

