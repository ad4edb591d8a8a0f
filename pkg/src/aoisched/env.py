"""Seeded channel and reward sampling.

Every replication draws from its own PCG64 stream derived from
``(master_seed, replication_index)`` through :class:`numpy.random.SeedSequence`,
so adding replications never changes the draws of earlier ones.

Within a replication, uniforms are consumed in fixed-size blocks: for each
block of ``BLOCK_SLOTS`` slots the stream first yields a (block, N) array for
the channels, then a (block, N) array for the packet values. A packet value
is drawn for every link in every slot whether or not it gets delivered, so
the random stream is the same under every policy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import ConfigurationError, NetworkConfig

GENERATOR_NAME = f"numpy.random.PCG64 via SeedSequence (numpy {np.__version__})"
REWARD_KINDS = ("bernoulli", "uniform", "pointmass")
BLOCK_SLOTS = 1024

ENV_STREAM = 0
TIE_STREAM = 1


def replication_rng(master_seed: int, replication: int, stream: int = ENV_STREAM) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(replication), int(stream)))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class RewardModel:
    """Per-link packet-value law with means ``means``; every law lives in [0, 1].

    ``uniform`` draws from [max(0, 2m - 1), min(1, 2m)], which has mean m.
    """

    kind: str
    means: tuple[float, ...]

    def __post_init__(self):
        if self.kind not in REWARD_KINDS:
            raise ConfigurationError(f"unknown reward model {self.kind!r}; expected one of {REWARD_KINDS}")
        object.__setattr__(self, "means", tuple(float(m) for m in self.means))
        if any(not 0.0 <= m <= 1.0 for m in self.means):
            raise ConfigurationError("reward means must lie in [0, 1]")

    @classmethod
    def for_network(cls, config: NetworkConfig, kind: str = "bernoulli") -> "RewardModel":
        return cls(kind, tuple(config.mean_rewards))

    def transform(self, u: np.ndarray) -> np.ndarray:
        """Map uniforms of shape (..., N) to packet values."""
        mu = np.asarray(self.means)
        if self.kind == "bernoulli":
            return (u < mu).astype(float)
        if self.kind == "uniform":
            lo = np.maximum(0.0, 2.0 * mu - 1.0)
            hi = np.minimum(1.0, 2.0 * mu)
            return lo + (hi - lo) * u
        return np.broadcast_to(mu, u.shape).copy()


def sample_channels(config: NetworkConfig, rng: np.random.Generator) -> np.ndarray:
    """One slot of independent Bernoulli(p_n) ON/OFF states, as 0/1 ints."""
    u = rng.random(config.n_links)
    return (u < config.channel_on_probs).astype(np.int8)


def sample_reward(model: RewardModel, link: int, rng: np.random.Generator) -> float:
    u = rng.random(len(model.means))
    return float(model.transform(u)[link])


class SlotStream:
    """Block-buffered channel and packet-value draws for one replication."""

    def __init__(self, config: NetworkConfig, model: RewardModel, master_seed: int, replication: int = 0):
        self.p = config.channel_on_probs
        self.model = model
        self.rng = replication_rng(master_seed, replication, ENV_STREAM)
        self._block_start = None
        self._channels = None
        self._rewards = None

    def block(self, block_index: int) -> tuple[np.ndarray, np.ndarray]:
        """Channels (bool) and packet values for slots in ``block_index``; blocks are read in order."""
        if self._block_start != block_index:
            n = len(self.p)
            expected = 0 if self._block_start is None else self._block_start + 1
            if block_index != expected:
                raise RuntimeError("slot blocks must be consumed in order")
            self._channels = self.rng.random((BLOCK_SLOTS, n)) < self.p
            self._rewards = self.model.transform(self.rng.random((BLOCK_SLOTS, n)))
            self._block_start = block_index
        return self._channels, self._rewards

    def slot(self, t: int) -> tuple[np.ndarray, np.ndarray]:
        chans, rews = self.block(t // BLOCK_SLOTS)
        i = t % BLOCK_SLOTS
        return chans[i], rews[i]


class TieStream:
    """Per-replication uniforms used only by the random tie-break mode."""

    def __init__(self, width: int, master_seed: int, replication: int = 0):
        self.width = width
        self.rng = replication_rng(master_seed, replication, TIE_STREAM)
        self._block_start = None
        self._keys = None

    def slot(self, t: int) -> np.ndarray:
        b = t // BLOCK_SLOTS
        if self._block_start != b:
            self._keys = self.rng.random((BLOCK_SLOTS, self.width))
            self._block_start = b
        return self._keys[t % BLOCK_SLOTS]
