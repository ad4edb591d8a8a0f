"""Per-link learning statistics and ages.

:class:`LearningState` stores its fields as arrays whose last axis indexes
links. The simulation engine keeps one row per replication in a single
(R, N) state; the public per-slot functions work on the 1-D case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from .network import Schedule


class ConsistencyError(ValueError):
    """Slot outcome that contradicts the schedule or channel state."""


@dataclass(frozen=True)
class LinkStats:
    deliveries: int = 0
    reward_sum: float = 0.0
    age: int = 0


def sample_mean(stats: LinkStats) -> float:
    """Mean delivered packet value, or 1 for a link that has never delivered."""
    if stats.deliveries == 0:
        return 1.0
    return stats.reward_sum / stats.deliveries


def exploration_radius(deliveries: int, t: int) -> float:
    if t <= 1:
        return 0.0
    return math.sqrt(3.0 * math.log(t) / (2.0 * deliveries))


def ucb_estimate(stats: LinkStats, t: int) -> float:
    """Truncated UCB index min{mean + sqrt(3 ln t / (2 H)), 1}; 1 while H = 0."""
    if stats.deliveries == 0:
        return 1.0
    return min(sample_mean(stats) + exploration_radius(stats.deliveries, t), 1.0)


def ucb_estimates(deliveries: np.ndarray, reward_sum: np.ndarray, t: int) -> np.ndarray:
    """Vectorized :func:`ucb_estimate` over arrays of any shape."""
    h = np.asarray(deliveries)
    explored = h > 0
    safe_h = np.where(explored, h, 1)
    mean = np.asarray(reward_sum) / safe_h
    if t > 1:
        mean = mean + np.sqrt((3.0 * math.log(t)) / (2.0 * safe_h))
    return np.where(explored, np.minimum(mean, 1.0), 1.0)


@dataclass
class LearningState:
    """Everything a policy may observe at the start of slot ``slot``."""

    ages: np.ndarray
    deliveries: np.ndarray
    reward_sum: np.ndarray
    slot: int = 0
    scheduled: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def initial(cls, n_links: int, batch: int | None = None) -> "LearningState":
        shape = (n_links,) if batch is None else (batch, n_links)
        return cls(
            ages=np.zeros(shape, dtype=np.int64),
            deliveries=np.zeros(shape, dtype=np.int64),
            reward_sum=np.zeros(shape, dtype=float),
            scheduled=np.zeros(shape, dtype=np.int64),
        )

    @property
    def n_links(self) -> int:
        return self.ages.shape[-1]

    def link(self, n: int) -> LinkStats:
        return LinkStats(int(self.deliveries[n]), float(self.reward_sum[n]), int(self.ages[n]))

    def sample_means(self) -> np.ndarray:
        h = self.deliveries
        return np.where(h > 0, self.reward_sum / np.where(h > 0, h, 1), 1.0)

    def ucb(self) -> np.ndarray:
        return ucb_estimates(self.deliveries, self.reward_sum, self.slot)

    def total_age(self):
        return self.ages.sum(axis=-1)

    def copy(self) -> "LearningState":
        return replace(
            self,
            ages=self.ages.copy(),
            deliveries=self.deliveries.copy(),
            reward_sum=self.reward_sum.copy(),
            scheduled=None if self.scheduled is None else self.scheduled.copy(),
        )

    def advance(self, active: np.ndarray, channels: np.ndarray, values: np.ndarray) -> np.ndarray:
        """Apply one slot in place and return the delivery mask.

        ``active`` and ``channels`` are boolean arrays shaped like ``ages``;
        ``values`` holds packet values, read only where a delivery happens.
        """
        delivered = active & channels
        self.ages = np.where(delivered, 1, self.ages + 1)
        self.deliveries = self.deliveries + delivered
        self.reward_sum = self.reward_sum + np.where(delivered, values, 0.0)
        if self.scheduled is not None:
            self.scheduled = self.scheduled + active
        self.slot += 1
        return delivered


def update_after_slot(
    state: LearningState,
    schedule: Schedule,
    channels,
    rewards: Mapping[int, float],
) -> LearningState:
    """Return the state after one slot.

    ``rewards`` maps each delivered link (scheduled and ON) to its packet
    value; it must contain exactly those links.
    """
    n = state.n_links
    ch = np.asarray(channels).astype(bool)
    active = schedule.indicator(n)
    delivered = set(np.flatnonzero(active & ch).tolist())
    supplied = set(rewards)
    if supplied - delivered:
        raise ConsistencyError(f"rewards supplied for undelivered links {sorted(supplied - delivered)}")
    if delivered - supplied:
        raise ConsistencyError(f"missing rewards for delivered links {sorted(delivered - supplied)}")
    for link, x in rewards.items():
        if not 0.0 <= x <= 1.0:
            raise ConsistencyError(f"reward {x} for link {link} outside [0, 1]")
    values = np.zeros(n)
    for link, x in rewards.items():
        values[link] = x
    new = state.copy()
    new.advance(active, ch, values)
    return new
