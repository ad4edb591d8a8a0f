"""Slot-by-slot simulation, metrics, and aggregation over replications.

Slot order: probe channels, compute weights from the state at slot t,
pick the policy's and the genie's schedules, deliver packets, then update
ages and learning statistics.

Replications run in lockstep as rows of (R, N) arrays. Every operation on a
row is elementwise or a per-row reduction, so a replication's trajectory
does not depend on which other replications share its batch. That is what
keeps results byte-identical across worker counts.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import __version__
from .bounds import age_bound
from .env import BLOCK_SLOTS, GENERATOR_NAME, RewardModel, SlotStream, TieStream
from .network import AtMostK, ConfigurationError, NetworkConfig, Schedule, select_batch, tie_key_width
from .policies import PolicySpec, decide, decide_batch, genie_decide
from .state import LearningState, update_after_slot

FULL_SERIES_MAX_SLOTS = 100_000
DEFAULT_LONG_STRIDE = 100
REGRET_TOLERANCE = 1e-12
DELIVERY_RATIO_MODES = ("delivered", "scheduled")


class InvariantViolation(AssertionError):
    pass


def default_stride(horizon: int) -> int:
    return 1 if horizon <= FULL_SERIES_MAX_SLOTS else DEFAULT_LONG_STRIDE


def recorded_slots(horizon: int, stride: int) -> np.ndarray:
    """Slot counts t at which metrics are kept: stride, 2*stride, ..., ending at T."""
    n = -(-horizon // stride)
    return np.minimum(np.arange(1, n + 1) * stride, horizon)


@dataclass(frozen=True)
class RunSettings:
    reward_model: str = "bernoulli"
    tie_break: str = "lowest-index"
    stride: int | None = None
    delivery_ratio: str = "delivered"
    check: bool = True
    record_link_ages: bool = False

    def __post_init__(self):
        if self.delivery_ratio not in DELIVERY_RATIO_MODES:
            raise ConfigurationError(f"unknown delivery_ratio {self.delivery_ratio!r}")
        if self.stride is not None and self.stride < 1:
            raise ConfigurationError("stride must be >= 1")


@dataclass
class SlotRecord:
    slot: int
    channels: tuple[int, ...]
    chosen: Schedule
    genie: Schedule
    regret: float
    total_age: int
    delivered: frozenset[int]
    rewards: dict[int, float] = field(default_factory=dict)


@dataclass
class ReplicationSeries:
    """Metric series for a batch of replications (first axis), at ``slots``.

    ``total_age[:, i]`` is the total age entering slot ``slots[i]``;
    ``avg_age[:, i]`` averages the total age over slots 0 .. slots[i]-1.
    """

    slots: np.ndarray
    cum_regret: np.ndarray
    avg_age: np.ndarray
    total_age: np.ndarray
    deliveries: np.ndarray
    scheduled: np.ndarray
    link_age_sums: np.ndarray | None
    min_slot_regret: float
    lyapunov_checked_slots: int

    @property
    def n_replications(self) -> int:
        return self.cum_regret.shape[0]

    def delivery_ratio(self, mode: str = "delivered") -> np.ndarray:
        counts = self.deliveries if mode == "delivered" else self.scheduled
        return counts / self.slots[None, :, None]

    @staticmethod
    def concat(parts: Sequence["ReplicationSeries"]) -> "ReplicationSeries":
        first = parts[0]
        ages = None
        if first.link_age_sums is not None:
            ages = np.concatenate([p.link_age_sums for p in parts])
        return ReplicationSeries(
            slots=first.slots,
            cum_regret=np.concatenate([p.cum_regret for p in parts]),
            avg_age=np.concatenate([p.avg_age for p in parts]),
            total_age=np.concatenate([p.total_age for p in parts]),
            deliveries=np.concatenate([p.deliveries for p in parts]),
            scheduled=np.concatenate([p.scheduled for p in parts]),
            link_age_sums=ages,
            min_slot_regret=min(p.min_slot_regret for p in parts),
            lyapunov_checked_slots=sum(p.lyapunov_checked_slots for p in parts),
        )


def per_slot_regret(config: NetworkConfig, channels, genie: Schedule, chosen: Schedule) -> float:
    """Pseudo-regret of one slot: sum of mu_n * C_n * (S*_n - S_n), in link order."""
    mu = config.mean_rewards
    total = 0.0
    for n in range(config.n_links):
        diff = int(bool(channels[n])) * (int(n in genie) - int(n in chosen))
        total = total + mu[n] * diff
    return total


def _simulate_batch(
    config: NetworkConfig,
    policy: PolicySpec,
    horizon: int,
    master_seed: int,
    replications: Sequence[int],
    settings: RunSettings,
) -> ReplicationSeries:
    if horizon < 1:
        raise ConfigurationError("horizon must be >= 1")
    policy.check_network(config)
    n = config.n_links
    b = len(replications)
    mu = config.mean_rewards
    model = RewardModel.for_network(config, settings.reward_model)
    streams = [SlotStream(config, model, master_seed, r) for r in replications]
    random_ties = settings.tie_break == "random"
    ties = [TieStream(tie_key_width(config), master_seed, r) for r in replications] if random_ties else None

    slots = recorded_slots(horizon, settings.stride or default_stride(horizon))
    n_rec = len(slots)
    cum_regret_rec = np.zeros((b, n_rec))
    avg_age_rec = np.zeros((b, n_rec))
    total_age_rec = np.zeros((b, n_rec), dtype=np.int64)
    deliveries_rec = np.zeros((b, n_rec, n), dtype=np.int64)
    scheduled_rec = np.zeros((b, n_rec, n), dtype=np.int64)
    link_ages_rec = np.zeros((b, n_rec, n), dtype=np.int64) if settings.record_link_ages else None

    state = LearningState.initial(n, b)
    cum_regret = np.zeros(b)
    cum_total_age = np.zeros(b, dtype=np.int64)
    link_age_cum = np.zeros((b, n), dtype=np.int64)
    delivered_count = np.zeros(b, dtype=np.int64)
    min_regret = math.inf
    rec = 0
    keys = None

    for t in range(horizon):
        i = t % BLOCK_SLOTS
        if i == 0:
            blocks = [s.block(t // BLOCK_SLOTS) for s in streams]
            chan_blk = np.stack([c for c, _ in blocks], axis=1)
            value_blk = np.stack([x for _, x in blocks], axis=1)
        channels = chan_blk[i]
        values = value_blk[i]
        if random_ties:
            keys = np.stack([tk.slot(t) for tk in ties])

        ages = state.ages
        total_age = ages.sum(axis=1)
        cum_total_age += total_age
        if link_ages_rec is not None:
            link_age_cum += ages

        active = decide_batch(policy, config, state, channels, settings.tie_break, keys)
        if policy.kind == "genie":
            best = active
        else:
            best = select_batch(config, mu * channels, settings.tie_break, keys)

        diff = (best & channels).astype(np.int8) - (active & channels).astype(np.int8)
        slot_regret = np.zeros(b)
        for link in range(n):
            slot_regret = slot_regret + mu[link] * diff[:, link]
        cum_regret = cum_regret + slot_regret

        delivered = state.advance(active, channels, values)
        delivered_count += delivered.sum(axis=1)

        if settings.check:
            low = slot_regret.min()
            min_regret = min(min_regret, float(low))
            if low < -REGRET_TOLERANCE:
                raise InvariantViolation(f"negative slot regret {low} at slot {t}")
            served_age = (ages * delivered).sum(axis=1)
            new_total = state.ages.sum(axis=1)
            if not np.array_equal(new_total, total_age - served_age + n):
                raise InvariantViolation(f"Lyapunov identity broken at slot {t}")
            if state.ages.max() > t + 1:
                raise InvariantViolation(f"age above t+1 after slot {t}")
            if isinstance(config.feasible, AtMostK) and active.sum(axis=1).max() > config.max_schedule_size:
                raise InvariantViolation(f"infeasible schedule at slot {t}")

        if t + 1 == slots[rec]:
            cum_regret_rec[:, rec] = cum_regret
            avg_age_rec[:, rec] = cum_total_age / (t + 1)
            total_age_rec[:, rec] = state.ages.sum(axis=1)
            deliveries_rec[:, rec] = state.deliveries
            scheduled_rec[:, rec] = state.scheduled
            if link_ages_rec is not None:
                link_ages_rec[:, rec] = link_age_cum
            rec += 1

    if settings.check and not np.array_equal(state.deliveries.sum(axis=1), delivered_count):
        raise InvariantViolation("delivery counts disagree with delivered link-slots")

    return ReplicationSeries(
        slots=slots,
        cum_regret=cum_regret_rec,
        avg_age=avg_age_rec,
        total_age=total_age_rec,
        deliveries=deliveries_rec,
        scheduled=scheduled_rec,
        link_age_sums=link_ages_rec,
        min_slot_regret=min_regret if settings.check else math.nan,
        lyapunov_checked_slots=horizon * b if settings.check else 0,
    )


def run_replication(
    config: NetworkConfig,
    policy: PolicySpec,
    horizon: int,
    seed: int,
    index: int = 0,
    settings: RunSettings | None = None,
) -> ReplicationSeries:
    """One replication, drawing from the stream for ``(seed, index)``."""
    return _simulate_batch(config, policy, horizon, seed, [index], settings or RunSettings())


def _run_chunk(args):
    return _simulate_batch(*args)


@dataclass
class ExperimentResult:
    series: ReplicationSeries
    metadata: dict

    @property
    def slots(self) -> np.ndarray:
        return self.series.slots

    def _mean_stderr(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        r = x.shape[0]
        mean = x.mean(axis=0)
        if r < 2:
            return mean, np.zeros_like(mean)
        return mean, x.std(axis=0, ddof=1) / math.sqrt(r)

    @property
    def regret(self):
        """(mean, stderr) of the cumulative regret at each recorded slot."""
        return self._mean_stderr(self.series.cum_regret)

    @property
    def avg_age(self):
        return self._mean_stderr(self.series.avg_age)

    @property
    def total_age(self):
        return self._mean_stderr(self.series.total_age.astype(float))

    @property
    def delivery_ratio(self):
        return self._mean_stderr(self.series.delivery_ratio(self.metadata["delivery_ratio"]))

    def age_bound_violations(self) -> int | None:
        """Recorded (replication, slot) pairs whose running average total age exceeds
        the LAES age bound; None for policies the bound does not cover."""
        eta = self.metadata.get("age_bound_eta")
        if eta is None:
            return None
        bound = self.metadata["age_bound"]
        return int(np.count_nonzero(self.series.avg_age > bound))


def run_experiment(
    config: NetworkConfig,
    policy: PolicySpec,
    horizon: int,
    replications: int,
    master_seed: int,
    workers: int = 1,
    settings: RunSettings | None = None,
) -> ExperimentResult:
    """Run ``replications`` independent replications and aggregate them in index order."""
    if replications < 1:
        raise ConfigurationError("replications must be >= 1")
    settings = settings or RunSettings()
    workers = max(1, min(int(workers), replications))
    chunks = np.array_split(np.arange(replications), workers)
    jobs = [(config, policy, horizon, master_seed, c.tolist(), settings) for c in chunks]
    if workers == 1:
        parts = [_run_chunk(jobs[0])]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, jobs))
    series = ReplicationSeries.concat(parts)

    eta = {"laes": policy.eta, "age": 0.0}.get(policy.kind)
    metadata = {
        "policy": policy.label,
        "kind": policy.kind,
        "eta": policy.eta,
        "horizon": horizon,
        "replications": replications,
        "master_seed": master_seed,
        "stride": settings.stride or default_stride(horizon),
        "reward_model": settings.reward_model,
        "tie_break": settings.tie_break,
        "delivery_ratio": settings.delivery_ratio,
        "generator": GENERATOR_NAME,
        "version": __version__,
        "age_bound_eta": eta,
        "age_bound": None if eta is None else age_bound(eta, config.n_links, config.p_min),
    }
    return ExperimentResult(series, metadata)


def trace_replication(
    config: NetworkConfig,
    policy: PolicySpec,
    horizon: int,
    seed: int,
    index: int = 0,
    reward_model: str = "bernoulli",
    tie_break: str = "lowest-index",
) -> list[SlotRecord]:
    """Slot-level reference run built from the single-slot public functions.

    Slow; meant for inspection and for cross-checking the batched engine.
    """
    model = RewardModel.for_network(config, reward_model)
    stream = SlotStream(config, model, seed, index)
    ties = TieStream(tie_key_width(config), seed, index) if tie_break == "random" else None
    state = LearningState.initial(config.n_links)
    records = []
    for t in range(horizon):
        chans, values = stream.slot(t)
        channels = chans.astype(int)
        keys = ties.slot(t) if ties is not None else None
        chosen = decide(policy, config, state, channels, tie_break=tie_break, tie_keys=keys)
        genie = genie_decide(config, channels, tie_break=tie_break, tie_keys=keys)
        delivered = frozenset(n for n in chosen if channels[n])
        rewards = {n: float(values[n]) for n in sorted(delivered)}
        records.append(
            SlotRecord(
                slot=t,
                channels=tuple(channels.tolist()),
                chosen=chosen,
                genie=genie,
                regret=per_slot_regret(config, channels, genie, chosen),
                total_age=int(state.ages.sum()),
                delivered=delivered,
                rewards=rewards,
            )
        )
        state = update_after_slot(state, chosen, channels, rewards)
    return records
