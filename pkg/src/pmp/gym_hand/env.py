"""The grasping gym: a fixed-base two-finger gripper holding a disturbed, gravity-free rod."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..envs import SimEnv
from ..sim import ObjectDef, SimParams, Simulator, build_model, builtin_body
from .interaction import STATE_DIM, HandSpec, InteractionObserver
from .rewards import (finger_reward, gym_total_reward, mcp_reward, rod_reward, tip_reward,
                      torque_reward, wrist_reward)

ROD_OFFSET = (0.065, 0.0)  # rod center in the wrist frame at wrist angle 0
GRIPPER_HEIGHT = 1.0


@dataclass
class GymEpisodeConfig:
    rod_angle_range: tuple = (-np.pi, np.pi)
    force_range: tuple = (50.0, 100.0)  # N before scaling
    torque_range: tuple = (-30.0, 30.0)  # N m before scaling
    force_scale: float = 10.0  # divides the force range for the light planar rod
    torque_scale: float = 100.0  # divides the torque range
    disturb_hz: float = 30.0
    disturb_delay: int = 15  # control steps of calm while the fingers close
    episode_steps: int = 90
    wrist_target_range: tuple = (-0.3, 0.3)
    wrist_period: int = 30  # control steps between wrist target changes
    rod_mass: float = 1.0  # 4.0 selects the heavier rod option
    rod_radius: float = 0.025
    rod_inertia: float = 0.01
    lost_distance: float = 0.12  # rod center this far from its start ends the episode
    contact_stiffness: float = 6.0e4
    contact_damping: float = 100.0
    tangential_damping: float = 100.0
    friction: float = 1.0
    substeps: int = 4

    def __post_init__(self):
        for name in ("rod_angle_range", "force_range", "torque_range", "wrist_target_range"):
            lo, hi = getattr(self, name)
            if not lo <= hi:
                raise ValueError(f"{name} must be ordered (got {lo}, {hi})")
        if self.force_range[0] < 0:
            raise ValueError("force magnitudes must be non-negative")
        if self.disturb_hz <= 0 or self.force_scale <= 0 or self.torque_scale <= 0:
            raise ValueError("disturbance frequency and scales must be positive")
        if self.episode_steps < 1 or self.wrist_period < 1 or self.substeps < 1:
            raise ValueError("episode length, wrist period and substeps must be >= 1")


def sample_disturbance(cfg: GymEpisodeConfig, rng, n=1):
    """Forces (n, 2) with uniform magnitude and uniform direction, torques (n,)."""
    lo, hi = cfg.force_range
    mag = rng.uniform(lo, hi, n) / cfg.force_scale
    ang = rng.uniform(0.0, 2.0 * np.pi, n)
    force = mag[:, None] * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    torque = rng.uniform(*cfg.torque_range, n) / cfg.torque_scale
    return force, torque


def build_gym_sim(cfg: GymEpisodeConfig):
    params = SimParams(gravity=(0.0, 0.0), contact_stiffness=cfg.contact_stiffness,
                       contact_damping=cfg.contact_damping, tangential_damping=cfg.tangential_damping,
                       friction=cfg.friction)
    rod = ObjectDef("rod", cfg.rod_radius, cfg.rod_mass, inertia=cfg.rod_inertia, gravity=False,
                    ground_contact=False)
    return Simulator(build_model(builtin_body("gripper"), [rod], params=params), substeps=cfg.substeps)


class GraspGym(SimEnv):
    """Observation: interaction state followed by the current wrist target."""

    def __init__(self, n_envs=16, cfg: GymEpisodeConfig | None = None):
        self.cfg = cfg or GymEpisodeConfig()
        sim = build_gym_sim(self.cfg)
        super().__init__(sim, n_envs, self.cfg.episode_steps)
        self.hand = InteractionObserver(sim, HandSpec(), "rod")
        self.obs_dim = STATE_DIM + 1
        self.wrist_target = np.zeros(self.n_envs)
        self.rod_home = np.zeros((self.n_envs, 2))
        self._every = max(1, int(round(30.0 / self.cfg.disturb_hz)))

    def _reset_worlds(self, idx):
        s = self.state
        s.root[idx] = [0.0, GRIPPER_HEIGHT, 0.0]
        home = np.array([ROD_OFFSET[0], GRIPPER_HEIGHT + ROD_OFFSET[1]])
        s.obj_pose[idx, 0, :2] = home
        s.obj_pose[idx, 0, 2] = self.rng.uniform(*self.cfg.rod_angle_range, len(idx))
        self.rod_home[idx] = home
        self.wrist_target[idx] = self.rng.uniform(*self.cfg.wrist_target_range, len(idx))

    def _before_step(self, target):
        t = self.t
        # new wrist targets on schedule
        change = (t > 0) & (t % self.cfg.wrist_period == 0)
        if change.any():
            self.wrist_target[change] = self.rng.uniform(*self.cfg.wrist_target_range, int(change.sum()))
        push = (t >= self.cfg.disturb_delay) & (t % self._every == 0)
        f, tq = sample_disturbance(self.cfg, self.rng, self.n_envs)
        if push.any():
            self.state.obj_wrench[push, 0, :2] += f[push]
            self.state.obj_wrench[push, 0, 2] += tq[push]

    def _observe(self):
        return np.concatenate([self.hand.state(self.state), self.wrist_target[:, None]], axis=1)

    def reward_terms(self, state, hand_action, wrist_target):
        h = self.hand
        phi, org = h._frames(state)
        wj = self.sim.model.body.joint_index("wrist")
        comps = {
            "r_rod": rod_reward(state.obj_vel[:, 0, :2], state.obj_vel[:, 0, 2]),
            "r_fin": finger_reward(h.link_gaps(state, phi, org)),
            "r_mcp": mcp_reward(h.mcp_action(hand_action)),
            "r_tip": tip_reward(h.tip_dots(state, phi, org)),
            "r_wrist": wrist_reward(state.q[:, wj, None], wrist_target[:, None], state.qd[:, wj, None]),
            "r_tau": torque_reward(state.tau[:, h.jidx], h.mcp_mask),
        }
        return gym_total_reward(**comps), comps

    def _reward(self, prev, target, action):
        return self.reward_terms(self.state, action, self.wrist_target)

    def _terminate(self):
        lost = np.linalg.norm(self.state.obj_pose[:, 0, :2] - self.rod_home, axis=1) > self.cfg.lost_distance
        return lost, ["rod_lost" if l else "" for l in lost]

    def rod_contact(self):
        return self.hand.link_contact(self.state)
