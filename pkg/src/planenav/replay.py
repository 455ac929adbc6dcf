"""Prioritized experience replay: proportional sampling over a sum tree.

Priorities are (|td| + eps)**alpha; sampling is stratified (one uniform draw
per equal-mass segment) and bias-corrected with importance weights
(N * P(i))**-beta, normalized by the batch maximum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import SplitMix64


@dataclass
class Transition:
    obs_hist: np.ndarray  # (H, S, S) float32, oldest frame first
    actions: np.ndarray  # (3,) int
    rewards: np.ndarray  # (3,) float32
    next_obs: np.ndarray  # (S, S) float32
    done: bool

    def next_hist(self) -> np.ndarray:
        """Frame stack after the step: drop the oldest, append next_obs."""
        return np.concatenate([self.obs_hist[1:], self.next_obs[None]], axis=0)


class SumTree:
    """Binary tree of prefix sums (and maxima) over a fixed leaf array.

    Leaves live at indices [size, 2*size); internal node i sums children
    2i and 2i+1. Sum updates propagate the leaf delta upward, so the root
    changes by exactly the applied delta.
    """

    def __init__(self, capacity: int):
        size = 1
        while size < capacity:
            size *= 2
        self.capacity = capacity
        self.size = size
        self.sums = np.zeros(2 * size)
        self.maxs = np.zeros(2 * size)

    @property
    def total(self) -> float:
        return float(self.sums[1])

    @property
    def max_leaf(self) -> float:
        return float(self.maxs[1])

    def leaf(self, i: int) -> float:
        return float(self.sums[self.size + i])

    def update(self, i: int, priority: float) -> None:
        node = self.size + i
        delta = priority - self.sums[node]
        self.sums[node] = priority
        self.maxs[node] = priority
        node //= 2
        while node >= 1:
            self.sums[node] += delta
            self.maxs[node] = max(self.maxs[2 * node], self.maxs[2 * node + 1])
            node //= 2

    def find(self, mass: float) -> int:
        """Leaf index whose cumulative-sum interval contains `mass`."""
        node = 1
        while node < self.size:
            left = 2 * node
            if mass < self.sums[left]:
                node = left
            else:
                mass -= self.sums[left]
                node = left + 1
        return node - self.size

    def find_batch(self, masses: np.ndarray) -> np.ndarray:
        """Vectorized `find` over many prefix masses."""
        nodes = np.ones(len(masses), dtype=np.int64)
        masses = masses.astype(np.float64, copy=True)
        while nodes[0] < self.size:
            left = 2 * nodes
            left_sum = self.sums[left]
            go_left = masses < left_sum
            nodes = np.where(go_left, left, left + 1)
            masses = np.where(go_left, masses, masses - left_sum)
        return nodes - self.size


@dataclass
class SampleBatch:
    transitions: list
    indices: np.ndarray  # ring-slot indices, valid for update_priorities
    weights: np.ndarray  # importance weights in (0, 1], batch max exactly 1


class PerBuffer:
    """FIFO ring of transitions with proportional prioritized sampling."""

    def __init__(self, capacity: int = 25000, alpha: float = 0.6,
                 priority_eps: float = 1e-6, seed: int = 0):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.alpha = alpha
        self.priority_eps = priority_eps
        self._tree = SumTree(capacity)
        self._storage = [None] * capacity
        self._next = 0
        self._count = 0
        self._rng = SplitMix64(seed)

    def __len__(self) -> int:
        return self._count

    @property
    def total_priority(self) -> float:
        return self._tree.total

    def push(self, t: Transition) -> None:
        """Store with the current maximum leaf priority (1 if empty);
        overwrites the oldest slot once full."""
        priority = self._tree.max_leaf if self._count > 0 else 1.0
        slot = self._next
        self._storage[slot] = t
        self._tree.update(slot, priority)
        self._next = (self._next + 1) % self.capacity
        self._count = min(self._count + 1, self.capacity)

    def sample(self, n: int, beta: float) -> SampleBatch:
        if self._count == 0:
            raise RuntimeError("cannot sample from an empty buffer")
        if n < 1:
            raise ValueError("sample size must be >= 1")
        total = self._tree.total
        segment = total / n
        offsets = self._rng.uniform_array(n)
        masses = (np.arange(n) + offsets) * segment
        idx = self._tree.find_batch(masses)
        # Rounding at segment boundaries can overshoot into unused leaves.
        idx = np.minimum(idx, self._count - 1)
        priorities = self._tree.sums[self._tree.size + idx]
        probs = priorities / total
        weights = (self._count * probs) ** (-beta)
        weights = weights / weights.max()
        return SampleBatch(
            transitions=[self._storage[i] for i in idx],
            indices=idx,
            weights=weights,
        )

    def update_priorities(self, indices, td_errors) -> None:
        """Set leaf priorities to (|td| + eps)**alpha for the given slots."""
        indices = np.asarray(indices, dtype=np.int64)
        td_errors = np.asarray(td_errors, dtype=np.float64)
        if indices.min(initial=0) < 0 or indices.max(initial=-1) >= self._count:
            raise IndexError(f"stale or out-of-range slot index in {indices}")
        for i, td in zip(indices, td_errors):
            self._tree.update(int(i), (abs(float(td)) + self.priority_eps) ** self.alpha)
