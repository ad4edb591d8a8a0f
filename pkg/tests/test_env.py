import numpy as np
import pytest

from aoisched.env import (
    BLOCK_SLOTS,
    RewardModel,
    SlotStream,
    replication_rng,
    sample_channels,
    sample_reward,
)
from aoisched.network import ConfigurationError, NetworkConfig


def fading(p):
    return NetworkConfig.from_vectors([0.5] * len(p), p, max_active=1)


def test_always_on():
    cfg = fading([1, 1, 1, 1, 1])
    rng = replication_rng(0, 0)
    for _ in range(100):
        assert sample_channels(cfg, rng).tolist() == [1] * 5


def test_on_frequency():
    cfg = fading([0.8, 0.3])
    rng = replication_rng(11, 0)
    draws = np.array([sample_channels(cfg, rng) for _ in range(100_000)])
    assert set(np.unique(draws)) <= {0, 1}
    assert abs(draws[:, 0].mean() - 0.8) < 0.01


def test_channels_independent():
    cfg = fading([0.5, 0.5])
    rng = replication_rng(12, 0)
    draws = np.array([sample_channels(cfg, rng) for _ in range(100_000)])
    assert abs((draws[:, 0] & draws[:, 1]).mean() - 0.25) < 0.01


class TestRewards:
    def test_point_mass(self):
        model = RewardModel("pointmass", (0.7,))
        rng = replication_rng(0, 0)
        assert all(sample_reward(model, 0, rng) == 0.7 for _ in range(50))

    def test_bernoulli_mean(self):
        model = RewardModel("bernoulli", (0.9,))
        x = model.transform(replication_rng(5, 0).random((100_000, 1)))
        assert set(np.unique(x)) == {0.0, 1.0}
        assert abs(x.mean() - 0.9) < 0.005

    def test_bernoulli_zero(self):
        model = RewardModel("bernoulli", (0.0,))
        assert model.transform(replication_rng(5, 0).random((10_000, 1))).max() == 0.0

    @pytest.mark.parametrize("mu", [0.0, 0.2, 0.5, 0.75, 1.0])
    def test_uniform_support_and_mean(self, mu):
        model = RewardModel("uniform", (mu,))
        x = model.transform(replication_rng(6, 0).random((100_000, 1)))
        assert x.min() >= 0.0 and x.max() <= 1.0
        assert abs(x.mean() - mu) < 0.005

    def test_rejects_unknown(self):
        with pytest.raises(ConfigurationError):
            RewardModel("gaussian", (0.5,))
        with pytest.raises(ConfigurationError):
            RewardModel("bernoulli", (1.5,))


class TestStreams:
    def test_reproducible(self):
        cfg = fading([0.3, 0.6, 0.9])
        model = RewardModel.for_network(cfg)
        a = SlotStream(cfg, model, 99, 4)
        b = SlotStream(cfg, model, 99, 4)
        for t in range(3 * BLOCK_SLOTS + 7):
            ca, xa = a.slot(t)
            cb, xb = b.slot(t)
            assert np.array_equal(ca, cb) and np.array_equal(xa, xb)

    def test_replications_differ(self):
        cfg = fading([0.5] * 4)
        model = RewardModel.for_network(cfg)
        a = SlotStream(cfg, model, 99, 0).block(0)[0]
        b = SlotStream(cfg, model, 99, 1).block(0)[0]
        assert not np.array_equal(a, b)

    def test_substream_depends_only_on_seed_and_index(self):
        # the stream of replication 3 never depends on how many replications exist
        g1 = replication_rng(2021, 3).random(5)
        _ = [replication_rng(2021, r).random(5) for r in range(10)]
        g2 = replication_rng(2021, 3).random(5)
        assert np.array_equal(g1, g2)

    def test_blocks_in_order(self):
        cfg = fading([0.5])
        s = SlotStream(cfg, RewardModel.for_network(cfg), 1)
        with pytest.raises(RuntimeError):
            s.block(1)
