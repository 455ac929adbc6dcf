import numpy as np
import pytest

from planenav.replay import PerBuffer, SumTree, Transition
from planenav.rng import SplitMix64


def make_transition(tag: float) -> Transition:
    return Transition(
        obs_hist=np.full((2, 4, 4), tag, dtype=np.float32),
        actions=np.array([0, 1, 2]),
        rewards=np.array([tag, 0.0, 0.0], dtype=np.float32),
        next_obs=np.full((4, 4), tag, dtype=np.float32),
        done=False,
    )


class TestSumTree:
    def test_prefix_lookup(self):
        t = SumTree(4)
        for i, p in enumerate([1.0, 2.0, 3.0, 4.0]):
            t.update(i, p)
        # cumulative intervals: [0,1) [1,3) [3,6) [6,10)
        assert t.find(0.5) == 0
        assert t.find(1.0) == 1
        assert t.find(2.999) == 1
        assert t.find(3.0) == 2
        assert t.find(6.5) == 3
        assert t.total == pytest.approx(10.0)

    def test_batch_find_matches_scalar(self):
        t = SumTree(8)
        rng = SplitMix64(3)
        for i in range(8):
            t.update(i, rng.uniform() + 0.1)
        masses = rng.uniform_array(500) * t.total
        batch = t.find_batch(masses)
        assert batch.tolist() == [t.find(m) for m in masses]

    def test_root_changes_by_exact_leaf_delta(self):
        t = SumTree(8)
        for i in range(8):
            t.update(i, float(i + 1))
        before = t.total
        old_leaf = t.leaf(3)
        t.update(3, 11.25)
        assert t.total == before + (11.25 - old_leaf)

    def test_rebuilt_tree_matches_after_random_updates(self):
        t = SumTree(16)
        rng = SplitMix64(9)
        leaves = np.zeros(16)
        for _ in range(2000):
            i = rng.randrange(16)
            p = rng.uniform() * 10
            leaves[i] = p
            t.update(i, p)
        rebuilt = SumTree(16)
        for i, p in enumerate(leaves):
            rebuilt.update(i, p)
        assert t.total == pytest.approx(rebuilt.total, rel=1e-6)
        assert t.max_leaf == pytest.approx(rebuilt.max_leaf, rel=0)
        for i in range(16):
            assert t.leaf(i) == leaves[i]

    def test_internal_sums_consistent(self):
        t = SumTree(8)
        rng = SplitMix64(10)
        for _ in range(500):
            t.update(rng.randrange(8), rng.uniform())
        for node in range(1, t.size):
            assert t.sums[node] == pytest.approx(
                t.sums[2 * node] + t.sums[2 * node + 1], rel=1e-6, abs=1e-12
            )


class TestPushRules:
    def test_first_push_priority_one(self):
        buf = PerBuffer(capacity=8)
        buf.push(make_transition(1.0))
        assert len(buf) == 1
        assert buf.total_priority == pytest.approx(1.0)

    def test_push_inherits_current_max(self):
        buf = PerBuffer(capacity=8, alpha=1.0)
        buf.push(make_transition(1.0))
        buf.update_priorities([0], [4.0])  # priority (4 + eps)^1
        buf.push(make_transition(2.0))
        assert buf._tree.leaf(1) == pytest.approx(4.0 + 1e-6)

    def test_fifo_eviction_at_capacity(self):
        buf = PerBuffer(capacity=5)
        for i in range(6):
            buf.push(make_transition(float(i)))
        assert len(buf) == 5
        stored = [t.rewards[0] for t in buf._storage]
        assert 0.0 not in stored  # the first transition was evicted
        assert set(stored) == {1.0, 2.0, 3.0, 4.0, 5.0}

    def test_priorities_match_flat_oracle(self):
        buf = PerBuffer(capacity=16, alpha=0.6)
        flat = []
        rng = SplitMix64(4)
        for i in range(40):
            buf.push(make_transition(float(i)))
            flat.append(max(flat) if flat else 1.0)
            if len(flat) > 16:
                flat.pop(0)
            if i % 3 == 0 and len(buf) > 2:
                idx = rng.randrange(min(len(buf), 16))
                td = rng.uniform() * 5
                buf.update_priorities([idx], [td])
                flat[_ring_to_flat(buf, idx, len(flat))] = (td + 1e-6) ** 0.6
        total = buf.total_priority
        assert total == pytest.approx(sum(flat), rel=1e-9)


def _ring_to_flat(buf, ring_idx, flat_len):
    """Map a ring slot to its position in a FIFO-ordered flat list."""
    if len(buf) < buf.capacity:
        return ring_idx
    oldest = buf._next
    return (ring_idx - oldest) % buf.capacity


class TestSampling:
    def test_empty_buffer_raises(self):
        with pytest.raises(RuntimeError):
            PerBuffer(capacity=4).sample(1, beta=0.4)

    def test_equal_priorities_give_unit_weights(self):
        buf = PerBuffer(capacity=8, seed=2)
        for i in range(8):
            buf.push(make_transition(float(i)))
        batch = buf.sample(6, beta=1.0)
        assert (batch.weights == 1.0).all()
        batch = buf.sample(6, beta=0.4)
        assert (batch.weights == 1.0).all()  # (N * 1/N)^-beta = 1 regardless

    def test_weights_bounded_and_max_one(self):
        buf = PerBuffer(capacity=8, seed=3)
        for i in range(8):
            buf.push(make_transition(float(i)))
        buf.update_priorities(range(8), np.linspace(0.1, 3.0, 8))
        batch = buf.sample(8, beta=0.7)
        assert batch.weights.max() == 1.0
        assert (batch.weights > 0).all()
        assert (batch.weights <= 1.0).all()

    def test_stratified_draws_match_alpha_distribution(self):
        buf = PerBuffer(capacity=8, alpha=0.6, seed=5)
        tds = np.array([0.2, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0, 8.0])
        for i in range(8):
            buf.push(make_transition(float(i)))
        buf.update_priorities(np.arange(8), tds)
        expected = (tds + 1e-6) ** 0.6
        expected = expected / expected.sum()
        counts = np.zeros(8)
        draws = 10**6
        batch = buf.sample(draws, beta=0.4)
        for i in batch.indices:
            counts[i] += 1
        freqs = counts / draws
        assert np.abs(freqs / expected - 1.0).max() < 0.02

    def test_never_returns_unfilled_slot(self):
        buf = PerBuffer(capacity=16, seed=6)
        for i in range(5):
            buf.push(make_transition(float(i)))
        for _ in range(50):
            batch = buf.sample(4, beta=0.5)
            assert (batch.indices < 5).all()


class TestUpdatePriorities:
    def test_zero_td_keeps_floor(self):
        buf = PerBuffer(capacity=4, alpha=0.6, priority_eps=1e-6)
        buf.push(make_transition(0.0))
        buf.update_priorities([0], [0.0])
        assert buf._tree.leaf(0) == pytest.approx((1e-6) ** 0.6)
        assert buf._tree.leaf(0) > 0

    def test_stale_index_rejected(self):
        buf = PerBuffer(capacity=4)
        buf.push(make_transition(0.0))
        with pytest.raises(IndexError):
            buf.update_priorities([3], [1.0])

    def test_random_interleaving_keeps_tree_consistent(self):
        buf = PerBuffer(capacity=64, alpha=0.6, seed=7)
        rng = SplitMix64(8)
        flat = {}
        for step in range(5000):
            op = rng.randrange(3)
            if op == 0 or len(buf) == 0:
                buf.push(make_transition(float(step)))
            elif op == 1:
                n = 1 + rng.randrange(4)
                buf.sample(n, beta=0.5)
            else:
                idx = rng.randrange(len(buf))
                buf.update_priorities([idx], [rng.uniform() * 4])
            leaf_sum = sum(buf._tree.leaf(i) for i in range(len(buf)))
            assert buf.total_priority == pytest.approx(leaf_sum, rel=1e-6)


class TestTransition:
    def test_next_hist_shifts_frames(self):
        t = Transition(
            obs_hist=np.stack([np.full((2, 2), i, dtype=np.float32) for i in range(3)]),
            actions=np.array([0, 0, 0]),
            rewards=np.zeros(3, dtype=np.float32),
            next_obs=np.full((2, 2), 9, dtype=np.float32),
            done=False,
        )
        nh = t.next_hist()
        assert nh.shape == (3, 2, 2)
        assert nh[0, 0, 0] == 1 and nh[1, 0, 0] == 2 and nh[2, 0, 0] == 9
