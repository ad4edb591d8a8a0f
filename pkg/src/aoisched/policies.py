"""Scheduling policies.

Each policy maps the observed state and the probed channels to per-link
weights, and the schedule is the max-weight solution for those weights.
Round-robin is the exception: it follows a fixed cyclic order.

Policies never mutate the :class:`~aoisched.state.LearningState` they get.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import AtMostK, ConfigurationError, NetworkConfig, Schedule, max_weight_schedule, select_batch
from .state import LearningState

POLICY_KINDS = ("laes", "ucb", "age", "genie", "round-robin")


class UnsupportedPolicyError(ConfigurationError):
    pass


@dataclass(frozen=True)
class PolicySpec:
    kind: str
    eta: float | None = None

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ConfigurationError(f"unknown policy {self.kind!r}; expected one of {POLICY_KINDS}")
        if self.kind == "laes":
            if self.eta is None or not self.eta >= 0 or not np.isfinite(self.eta):
                raise ConfigurationError(f"LAES needs a finite eta >= 0, got {self.eta}")
        elif self.eta is not None:
            raise ConfigurationError(f"policy {self.kind!r} takes no eta")

    @classmethod
    def laes(cls, eta: float) -> "PolicySpec":
        return cls("laes", float(eta))

    @property
    def label(self) -> str:
        if self.kind == "laes":
            return f"laes_eta{self.eta:g}"
        return self.kind.replace("-", "_")

    def check_network(self, config: NetworkConfig) -> None:
        if self.kind == "round-robin" and config.feasible != AtMostK(1):
            raise UnsupportedPolicyError("round-robin is only defined for AtMostK(1) networks")


def policy_weights(policy: PolicySpec, config: NetworkConfig, state: LearningState) -> np.ndarray:
    """Per-link weights at the current slot, shaped like ``state.ages``."""
    if policy.kind == "laes":
        return state.ages + policy.eta * state.ucb()
    if policy.kind == "ucb":
        return state.ucb()
    if policy.kind == "age":
        return state.ages.astype(float)
    if policy.kind == "genie":
        return np.broadcast_to(config.mean_rewards, state.ages.shape)
    raise UnsupportedPolicyError(f"policy {policy.kind!r} is not weight based")


def round_robin_batch(n_links: int, slot: int, channels: np.ndarray) -> np.ndarray:
    """Serve link ``slot mod N``, or the next ON link after it in cyclic order.

    Rows with every channel OFF get the empty schedule.
    """
    channels = np.asarray(channels, dtype=bool)
    order = (slot + np.arange(n_links)) % n_links
    rotated = channels[:, order]
    first = order[np.argmax(rotated, axis=1)]
    rows = np.flatnonzero(rotated.any(axis=1))
    out = np.zeros(channels.shape, dtype=bool)
    out[rows, first[rows]] = True
    return out


def decide_batch(
    policy: PolicySpec,
    config: NetworkConfig,
    state: LearningState,
    channels: np.ndarray,
    tie_break: str = "lowest-index",
    tie_keys: np.ndarray | None = None,
) -> np.ndarray:
    """Activation matrix (B, N) for a batched state with boolean channels (B, N)."""
    if policy.kind == "round-robin":
        policy.check_network(config)
        return round_robin_batch(config.n_links, state.slot, channels)
    w = policy_weights(policy, config, state)
    return select_batch(config, w * channels, tie_break, tie_keys)


def _decide(policy, config, state, channels, tie_break="lowest-index", rng=None, tie_keys=None) -> Schedule:
    if policy.kind == "round-robin":
        policy.check_network(config)
        active = round_robin_batch(config.n_links, state.slot, np.asarray(channels)[None, :])
        return Schedule(np.flatnonzero(active[0]))
    w = policy_weights(policy, config, state)
    return max_weight_schedule(config, w, channels, tie_break, rng, tie_keys)


def laes_decide(config: NetworkConfig, state: LearningState, channels, eta: float, **kw) -> Schedule:
    """Max-weight schedule for weights age + eta * UCB estimate."""
    return _decide(PolicySpec.laes(eta), config, state, channels, **kw)


def ucb_only_decide(config: NetworkConfig, state: LearningState, channels, **kw) -> Schedule:
    return _decide(PolicySpec("ucb"), config, state, channels, **kw)


def age_based_decide(config: NetworkConfig, state: LearningState, channels, **kw) -> Schedule:
    return _decide(PolicySpec("age"), config, state, channels, **kw)


def genie_decide(config: NetworkConfig, channels, **kw) -> Schedule:
    """Best schedule under the true mean rewards, given the realized channels."""
    state = LearningState.initial(config.n_links)
    return _decide(PolicySpec("genie"), config, state, channels, **kw)


def round_robin_decide(config: NetworkConfig, state: LearningState, channels) -> Schedule:
    return _decide(PolicySpec("round-robin"), config, state, channels)


def decide(policy: PolicySpec, config: NetworkConfig, state: LearningState, channels, **kw) -> Schedule:
    return _decide(policy, config, state, channels, **kw)
