"""Vectorized environment protocol shared by the grasping gym and the task scenes.

``step`` auto-resets finished worlds and returns an ``info`` dict with:

``timeout`` / ``terminal`` (E,) bool, ``reasons`` list of str or "",
``components`` dict of per-world task-reward terms,
``part_pairs`` list of (E, 2 d_k) observation pairs (pre-reset) or None,
``hand_pairs`` list of (E, d_u + d_y) interaction-discriminator inputs,
``sigma`` (E, |H|) interaction kernel weights,
``monitor_pairs`` per-part pairs under an optional evaluation-only split.
"""
from __future__ import annotations

import numpy as np

from .prior import KERNEL_GAMMA, interaction_kernel
from .sim import SimulationDiverged  # noqa: F401  (re-exported for env users)


def action_to_target(action, lo, hi):
    """Map actions in [-1, 1] (clipped) onto PD targets spanning the joint limits."""
    a = np.clip(np.asarray(action, float), -1.0, 1.0)
    return lo + 0.5 * (a + 1.0) * (hi - lo)


class VecEnv:
    n_envs: int
    obs_dim: int
    act_dim: int
    max_steps: int
    part_dims: list = []
    hand_dims: list = []
    hand_part_ids: list = []  # indices of hand parts inside the part spec
    blend_mode: str = "per-hand"

    def reset(self, rng):
        raise NotImplementedError

    def step(self, action):
        raise NotImplementedError

    def demo_pairs(self):
        """Per-discriminator demo rows (style parts first, then hands); empty without a prior."""
        return []

    def monitor_demo_pairs(self):
        """Demo rows for the evaluation-only monitor split (empty when there is none)."""
        return []


class SimEnv(VecEnv):
    """Common stepping, auto-reset and pair bookkeeping around a :class:`Simulator`."""

    def __init__(self, sim, n_envs, max_steps, observer=None, hands=()):
        self.sim = sim
        self.n_envs = int(n_envs)
        self.max_steps = int(max_steps)
        self.observer = observer
        self.hands = list(hands)
        a = sim.arrays
        self.q_lo, self.q_hi = a.q_lo.copy(), a.q_hi.copy()
        self.act_dim = sim.model.n_joints
        self.state = sim.new_state(self.n_envs)
        self.t = np.zeros(self.n_envs, np.int64)
        self.rng = np.random.default_rng(0)
        self.incidents = 0
        self.part_dims = list(observer.dims) if observer is not None else []
        self._feat = None
        self._u = None
        self.monitor_observer = None
        self._mfeat = None
        self.kernel_gamma = KERNEL_GAMMA

    # -- hooks --------------------------------------------------------
    def _reset_worlds(self, idx):
        raise NotImplementedError

    def _observe(self):
        raise NotImplementedError

    def _reward(self, prev, target, action):
        """(reward (E,), components dict)."""
        raise NotImplementedError

    def _terminate(self):
        """(mask (E,), reason str per world)."""
        return np.zeros(self.n_envs, bool), [""] * self.n_envs

    def _before_step(self, target):
        """Called with the PD target just before physics; may add wrenches."""

    def _after_reset(self, idx):
        """Called after worlds ``idx`` have been reset."""

    # -- protocol -----------------------------------------------------
    def hand_inputs(self, action):
        """(E, d_u + d_y) per hand: interaction state and normalized hand action."""
        target = action_to_target(action, self.q_lo, self.q_hi)
        return [np.concatenate([h.state(self.state), h.normalized_action(target)], axis=1) for h in self.hands]

    def hand_sigma(self):
        if not self.hands:
            return np.zeros((self.n_envs, 0))
        return np.stack([interaction_kernel(h.wrist_distance(self.state), self.kernel_gamma) for h in self.hands],
                        axis=1)

    def _features(self):
        if self.observer is None:
            return None
        return self.observer.state_features(self.state)

    def reset(self, rng):
        self.rng = rng
        self.state = self.sim.new_state(self.n_envs)
        self.t[:] = 0
        idx = np.arange(self.n_envs)
        self._reset_worlds(idx)
        self._after_reset(idx)
        self._feat = self._features()
        if self.monitor_observer is not None:
            self._mfeat = self.monitor_observer.state_features(self.state)
        return self._observe()

    def step(self, action):
        action = np.asarray(action, float).reshape(self.n_envs, self.act_dim)
        target = action_to_target(action, self.q_lo, self.q_hi)
        prev = self.state
        hand_pairs = self.hand_inputs(action) if self.hands else []
        sigma = self.hand_sigma()
        self._before_step(target)
        new, bad = self.sim.step_unchecked(self.state, target)
        if bad.any():
            self.incidents += int(bad.sum())
            # diverged worlds keep their previous (finite) state and end the episode
            new.put(np.flatnonzero(bad), prev.take(np.flatnonzero(bad)))
        self.state = new
        self.t += 1
        reward, comps = self._reward(prev, target, action)
        reward = np.where(bad, 0.0, reward)
        term, reasons = self._terminate()
        term = term | bad
        reasons = ["diverged" if b else r for b, r in zip(bad, reasons)]
        timeout = (self.t >= self.max_steps) & ~term
        done = term | timeout

        pairs = None
        if self.observer is not None:
            nxt = self._features()
            pairs = [np.concatenate([a, b], axis=1) for a, b in zip(self._feat, nxt)]
            self._feat = nxt
        mpairs = None
        if self.monitor_observer is not None:
            nxt = self.monitor_observer.state_features(self.state)
            mpairs = [np.concatenate([a, b], axis=1) for a, b in zip(self._mfeat, nxt)]
            self._mfeat = nxt
        idx = np.flatnonzero(done)
        if len(idx):
            fresh = self.sim.new_state(len(idx))
            self.state.put(idx, fresh)
            self.t[idx] = 0
            self._reset_worlds(idx)
            self._after_reset(idx)
            if self.observer is not None:
                f = self._features()
                for k in range(len(f)):
                    self._feat[k][idx] = f[k][idx]
            if self.monitor_observer is not None:
                f = self.monitor_observer.state_features(self.state)
                for k in range(len(f)):
                    self._mfeat[k][idx] = f[k][idx]
        info = {"timeout": timeout, "terminal": term, "reasons": [r if d else "" for r, d in zip(reasons, done)],
                "components": comps, "part_pairs": pairs, "hand_pairs": hand_pairs, "sigma": sigma,
                "diverged": bad, "monitor_pairs": mpairs}
        return self._observe(), reward, done, info
