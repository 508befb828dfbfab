"""Point-mass reach: a no-style smoke task for the RL core."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..envs import VecEnv
from .rewards import position_reward


@dataclass
class ReachConfig:
    episode_steps: int = 60
    max_speed: float = 2.0  # m/s at |action| = 1
    goal_radius: float = 0.5
    gamma_pos: float = 2.0
    dt: float = 1.0 / 30.0


class PointReachEnv(VecEnv):
    """A point mass with velocity control chasing a random goal in the plane.

    Observation: [goal - position, last velocity]; reward exp(-g |goal - pos|^2).
    """

    part_dims: list = []
    hand_dims: list = []
    hand_part_ids: list = []

    def __init__(self, n_envs=16, cfg: ReachConfig | None = None):
        self.cfg = cfg or ReachConfig()
        self.n_envs = int(n_envs)
        self.obs_dim, self.act_dim = 4, 2
        self.max_steps = self.cfg.episode_steps
        self.pos = np.zeros((self.n_envs, 2))
        self.vel = np.zeros((self.n_envs, 2))
        self.goal = np.zeros((self.n_envs, 2))
        self.t = np.zeros(self.n_envs, np.int64)
        self.rng = np.random.default_rng(0)
        self.incidents = 0

    def _reset(self, idx):
        n = len(idx)
        r = self.cfg.goal_radius * np.sqrt(self.rng.random(n))
        a = self.rng.uniform(0.0, 2.0 * np.pi, n)
        self.goal[idx] = np.stack([r * np.cos(a), r * np.sin(a)], 1)
        self.pos[idx] = 0.0
        self.vel[idx] = 0.0
        self.t[idx] = 0

    def _observe(self):
        return np.concatenate([self.goal - self.pos, self.vel], axis=1)

    def reset(self, rng):
        self.rng = rng
        self._reset(np.arange(self.n_envs))
        return self._observe()

    def step(self, action):
        a = np.clip(np.asarray(action, float).reshape(self.n_envs, 2), -1.0, 1.0)
        self.vel = self.cfg.max_speed * a
        self.pos = self.pos + self.cfg.dt * self.vel
        self.t += 1
        r = position_reward(self.goal - self.pos, self.cfg.gamma_pos)
        timeout = self.t >= self.max_steps
        idx = np.flatnonzero(timeout)
        if len(idx):
            self._reset(idx)
        info = {"timeout": timeout, "terminal": np.zeros(self.n_envs, bool),
                "reasons": ["" for _ in range(self.n_envs)], "components": {"r_pos": r}, "part_pairs": None,
                "hand_pairs": [], "sigma": np.zeros((self.n_envs, 0)), "diverged": np.zeros(self.n_envs, bool)}
        return self._observe(), r, timeout.copy(), info
