"""Ring buffers for demo / replay observation pairs and the demo-blend mixer."""
from __future__ import annotations

import numpy as np


class RingBuffer:
    """Fixed-capacity FIFO store of equal-width rows with uniform sampling."""

    def __init__(self, width, capacity):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.width = int(width)
        self.capacity = int(capacity)
        self._data = np.zeros((min(self.capacity, 1024), self.width))
        self._next = 0  # slot of the next write once full
        self._size = 0

    def __len__(self):
        return self._size

    def _grow(self, need):
        cap = len(self._data)
        if need <= cap or cap == self.capacity:
            return
        new = min(self.capacity, max(need, 2 * cap))
        data = np.zeros((new, self.width))
        data[:self._size] = self._data[:self._size]
        self._data = data

    def add(self, rows):
        rows = np.asarray(rows, float).reshape(-1, self.width)
        if len(rows) > self.capacity:
            rows = rows[-self.capacity:]
        n = len(rows)
        if n == 0:
            return
        if self._size < self.capacity:
            self._grow(self._size + n)
        # write position: append while filling, then overwrite the oldest rows
        start = self._size if self._size < self.capacity else self._next
        idx = (start + np.arange(n)) % self.capacity
        self._data[idx] = rows
        filled = self._size + n
        if filled >= self.capacity:
            self._next = (idx[-1] + 1) % self.capacity
        self._size = min(filled, self.capacity)

    def ordered(self):
        """Stored rows, oldest first."""
        if self._size < self.capacity:
            return self._data[:self._size].copy()
        return np.roll(self._data, -self._next, axis=0).copy()

    def sample(self, n, rng):
        if self._size == 0:
            raise ValueError("cannot sample from an empty buffer")
        return self._data[rng.integers(0, self._size, size=n)].copy()

    def sample_indices(self, n, rng):
        if self._size == 0:
            raise ValueError("cannot sample from an empty buffer")
        return rng.integers(0, self._size, size=n)

    @property
    def rows(self):
        """Read-only view of the filled region (storage order)."""
        v = self._data[:self._size]
        v.flags.writeable = False
        return v


class PartBuffers:
    """One ring buffer per part (or interaction discriminator)."""

    def __init__(self, widths, capacity):
        self.buffers = [RingBuffer(w, capacity) for w in widths]

    def __getitem__(self, k):
        return self.buffers[k]

    def __len__(self):
        return len(self.buffers)

    def add(self, per_part_rows):
        if len(per_part_rows) != len(self.buffers):
            raise ValueError("one row block per part expected")
        for b, r in zip(self.buffers, per_part_rows):
            b.add(r)

    def sizes(self):
        return [len(b) for b in self.buffers]


def demo_blend(agent_pairs, demo, lam, rng, return_masks=False):
    """Replace each agent pair by a uniform demo pair with probability ``lam``, per part.

    ``agent_pairs`` is a list of (N_k, d_k) arrays and ``demo`` a matching
    :class:`PartBuffers` (or list of ring buffers).  Inputs are never mutated.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError("blend probability must lie in [0, 1]")
    out, masks = [], []
    for k, x in enumerate(agent_pairs):
        x = np.asarray(x, float)
        n = len(x)
        if lam == 0.0:
            mask = np.zeros(n, bool)
        elif lam == 1.0:
            mask = np.ones(n, bool)
        else:
            mask = rng.random(n) < lam
        y = x.copy()
        m = int(mask.sum())
        if m:
            y[mask] = demo[k].sample(m, rng)
        out.append(y)
        masks.append(mask)
    return (out, masks) if return_masks else out
