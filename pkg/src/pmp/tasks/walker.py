"""Pinned two-part walker: the split-prior locomotion scene.

The torso is fixed in the air so the legs and arms can follow their own
reference clips without balance.  Legs and arms draw their demonstrations
from different clips, so no single clip shows the combined motion.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..envs import SimEnv
from ..motion import (Part, PartObserver, PartSpec, clip_to_demo_pairs, generate_procedural_clip,
                      sample_reference_init, whole_body_spec)
from ..motion.clip import WALKER_JOINTS
from ..sim import SimParams, Simulator, build_model, builtin_body
from .rewards import torque_min_reward

LEG_JOINTS = ("hip_l", "knee_l", "hip_r", "knee_r")
ARM_JOINTS = ("shoulder_l", "elbow_l", "shoulder_r", "elbow_r")
PIN_HEIGHT = 1.5


@dataclass
class SplitWalkerConfig:
    leg_clip: str = "gait"
    arm_clip: str = "wave"
    clip_seconds: float = 4.0
    episode_steps: int = 60
    torque_scale: float = 1e-4
    prior: str = "parts"  # "parts" (one discriminator per part) or "whole" (single discriminator)

    def __post_init__(self):
        if self.prior not in ("parts", "whole"):
            raise ValueError("prior must be 'parts' or 'whole'")
        if self.episode_steps < 2 or self.clip_seconds <= 0:
            raise ValueError("episode must span at least two steps and clips must be non-empty")


def walker_markers(body):
    return {"legs": tuple(body.markers["feet"]), "arms": tuple(body.markers["hands"])}


def split_spec(cfg: SplitWalkerConfig, body):
    m = walker_markers(body)
    return PartSpec([Part("legs", LEG_JOINTS, (cfg.leg_clip,), m["legs"], is_base=True),
                     Part("arms", ARM_JOINTS, (cfg.arm_clip,), m["arms"])], WALKER_JOINTS)


def whole_spec(cfg: SplitWalkerConfig, body):
    m = walker_markers(body)
    return whole_body_spec(WALKER_JOINTS, (cfg.leg_clip, cfg.arm_clip), m["legs"] + m["arms"])


def demo_rows(spec, observer, clips):
    """Per-part demo pairs, each part drawing only from its own clips."""
    out = []
    for k, p in enumerate(spec.parts):
        rows = [clip_to_demo_pairs(clips[c], observer)[k] for c in p.clips]
        out.append(np.concatenate(rows) if rows else np.zeros((0, 2 * observer.dims[k])))
    return out


class SplitWalkerEnv(SimEnv):
    """Observation: joint angles and velocities; no balance, no contacts."""

    def __init__(self, n_envs=16, cfg: SplitWalkerConfig | None = None):
        self.cfg = cfg or SplitWalkerConfig()
        body = replace(builtin_body("walker"), base="fixed")
        sim = Simulator(build_model(body, params=SimParams(contacts=False)))
        self.clips = {s: generate_procedural_clip(s, self.cfg.clip_seconds)
                      for s in {self.cfg.leg_clip, self.cfg.arm_clip}}
        # the two-part split is always available for evaluation
        self.split = split_spec(self.cfg, body)
        self.split_observer = PartObserver(sim.model, self.split)
        self.spec = self.split if self.cfg.prior == "parts" else whole_spec(self.cfg, body)
        super().__init__(sim, n_envs, self.cfg.episode_steps, PartObserver(sim.model, self.spec))
        self.obs_dim = 2 * sim.model.n_joints
        self.monitor_observer = self.split_observer

    def _reset_worlds(self, idx):
        s = self.state
        _, q, qd, _ = sample_reference_init(self.spec, self.clips, self.rng, self.sim.model.body.joint_names,
                                            len(idx))
        s.root[idx] = [0.0, PIN_HEIGHT, 0.0]
        s.root_vel[idx] = 0.0
        s.q[idx], s.qd[idx] = q, qd

    def _observe(self):
        return np.concatenate([self.state.q, self.state.qd], axis=1)

    def _reward(self, prev, target, action):
        r = torque_min_reward(self.state.tau, self.cfg.torque_scale)
        return r, {"r_torque": r}

    def demo_pairs(self):
        return demo_rows(self.spec, self.observer, self.clips)

    def monitor_demo_pairs(self):
        return demo_rows(self.split, self.split_observer, self.clips)

