"""Interaction scenes: cart pulling (two hands) and grasp-and-hold (one arm).

Both combine a kinematic prior on the body parts with interaction
discriminators whose demonstrations are the expert pairs exported from the
grasping gym.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..envs import SimEnv
from ..gym_hand import HandSpec, InteractionObserver, load_expert_pairs
from ..motion import (MotionClip, Part, PartObserver, PartSpec, clip_to_demo_pairs, generate_procedural_clip,
                      sample_reference_init)
from ..motion.clip import WALKER_JOINTS
from ..prior import BLEND_MODES
from ..sim import ObjectDef, SimParams, Simulator, Terrain, build_model, builtin_body
from ..sim.body import GROUND
from .rewards import (CART_TRACKING, GAMMA_HAND_CART, barbell_task_reward, barbell_tracking_reward,
                      cart_task_reward, cart_tracking_reward, cosine_indicator, hand_reach_reward)
from .termination import TerminationRule, TerminationTracker


def ground_contact(sim, state, links):
    """(E,) any of ``links`` pressing on the ground above the contact threshold."""
    a = sim.arrays
    links = np.asarray(links, np.int64)
    cand = (a.cand_kind == GROUND) & np.isin(a.cand_link, links)
    if not cand.any():
        return np.zeros(state.n_envs, bool)
    mag = np.linalg.norm(state.c_force[:, cand], axis=-1)
    return (state.c_active[:, cand] & (mag > sim.model.params.contact_threshold)).any(axis=1)


def part_demo_rows(spec, observer, clips):
    """Demo pairs per style part; hand parts use the body clips with relaxed fingers."""
    out = []
    for k, p in enumerate(spec.parts):
        names = p.clips or tuple(c for q in spec.parts for c in q.clips)
        rows = [clip_to_demo_pairs(clips[c], observer)[k] for c in dict.fromkeys(names)]
        out.append(np.concatenate(rows))
    return out


def expert_rows(path):
    pairs, _ = load_expert_pairs(path)
    if len(pairs) == 0:
        raise ValueError(f"{path}: expert-pair file holds no pairs")
    return pairs


# -- cart pulling ---------------------------------------------------------

@dataclass
class CartConfig:
    expert_path: str | None = None
    body_clip: str = "gait"
    clip_seconds: float = 4.0
    episode_steps: int = 150
    cart_mass: float = 30.0
    cart_damping: float = 2.0
    handle_radius: float = 0.025
    handle_offset: tuple = (0.5, 1.0)  # handle start relative to the root x / world height
    goal_distance: float = 2.0  # goal lies this far behind the handle start (pulling)
    root_height: float = 0.82
    above_margin: float = 0.05  # hand counts as above the handle within this margin
    blend_mode: str = "per-hand"

    def __post_init__(self):
        if self.blend_mode not in BLEND_MODES:
            raise ValueError(f"blend_mode must be one of {BLEND_MODES}")
        if self.episode_steps < 1 or self.cart_mass <= 0:
            raise ValueError("episode length and cart mass must be positive")


class CartPullEnv(SimEnv):
    """Walker on a rail with two grippers pulling a cart handle toward a goal."""

    def __init__(self, n_envs=16, cfg: CartConfig | None = None):
        self.cfg = c = cfg or CartConfig()
        body = builtin_body("cart_hauler")
        handle = ObjectDef("handle", c.handle_radius, c.cart_mass, gravity=False, lock=(False, True, True),
                           lin_damping=c.cart_damping, ground_contact=False)
        sim = Simulator(build_model(body, [handle], params=SimParams()))
        self.clips = {c.body_clip: generate_procedural_clip(c.body_clip, c.clip_seconds, joints=body.joint_names,
                                                            root_height=c.root_height)}
        self.hand_specs = [HandSpec("r_", "right"), HandSpec("l_", "left")]
        hand_parts = [Part(f"hand_{h.name}", h.joints, markers=((h.prefix + "dist_a", (0.04, 0.0)),
                                                                (h.prefix + "dist_b", (0.04, 0.0))),
                           frame=h.wrist_link, is_hand=True) for h in self.hand_specs]
        feet = tuple(body.markers["feet"])
        palms = tuple(body.markers["palms"])
        self.spec = PartSpec([Part("body", WALKER_JOINTS, (c.body_clip,), feet + palms, is_base=True,
                                   include_root=True)] + hand_parts, tuple(body.joint_names))
        hands = [InteractionObserver(sim, h, "handle") for h in self.hand_specs]
        super().__init__(sim, n_envs, c.episode_steps, PartObserver(sim.model, self.spec), hands)
        self.hand_dims = [h.state(self.state).shape[1] + 5 for h in hands]
        self.hand_part_ids = [1, 2]
        self.blend_mode = c.blend_mode
        self.palm_links = np.array([body.link_index(h.wrist_link) for h in self.hand_specs])
        self.palm_point = np.array(palms[0][1])
        self.foot_links = [body.link_index(l) for l, _ in feet]
        self.nonfoot = [i for i in range(len(body.links)) if i not in self.foot_links]
        self.goal = np.zeros(self.n_envs)
        self.term = TerminationTracker(TerminationRule(fall=True), self.n_envs)
        self.obs_dim = self._observe().shape[1]

    def _reset_worlds(self, idx):
        s = self.state
        c = self.cfg
        _, q, qd, _ = sample_reference_init(self.spec, self.clips, self.rng, self.sim.model.body.joint_names,
                                            len(idx))
        s.root[idx] = [0.0, c.root_height, 0.0]
        s.root_vel[idx] = 0.0
        s.q[idx], s.qd[idx] = q, qd
        s.obj_pose[idx, 0] = [c.handle_offset[0], c.handle_offset[1], 0.0]
        s.obj_vel[idx, 0] = 0.0
        self.goal[idx] = c.handle_offset[0] - c.goal_distance
        self.term.reset(idx)

    def _palms(self):
        return self.sim.points_world(self.state, self.palm_links, np.tile(self.palm_point, (2, 1)))

    def _observe(self):
        s = self.state
        handle = s.obj_pose[:, 0, :2]
        rel = handle - s.root[:, :2]
        return np.concatenate([s.q, s.qd, s.root_vel[:, :1], rel, s.obj_vel[:, 0, :1],
                               (self.goal - handle[:, 0])[:, None]] + [h.state(s) for h in self.hands], axis=1)

    def reward_terms(self):
        s = self.state
        handle = s.obj_pose[:, 0, :2]
        palms = self._palms()
        p_hands = handle[:, None] - palms
        c_n = (palms[..., 1] >= handle[:, None, 1] - self.cfg.above_margin).astype(float)
        r_hand = hand_reach_reward(p_hands, c_n, GAMMA_HAND_CART)
        disp = np.stack([self.goal - handle[:, 0], np.zeros(self.n_envs)], 1)
        vel = np.stack([s.obj_vel[:, 0, 0], np.zeros(self.n_envs)], 1)
        r_cart = cart_tracking_reward(disp, vel, CART_TRACKING)
        return cart_task_reward(r_hand, r_cart), {"r_hand": r_hand, "r_cart": r_cart}

    def _reward(self, prev, target, action):
        return self.reward_terms()

    def _terminate(self):
        fell = ground_contact(self.sim, self.state, self.nonfoot)
        feet = ground_contact(self.sim, self.state, self.foot_links)
        return self.term(fell, feet, self.state.time)

    def demo_pairs(self):
        if self.cfg.expert_path is None:
            raise FileNotFoundError("cart pulling needs an expert-pair file (expert_path)")
        expert = expert_rows(self.cfg.expert_path)
        return part_demo_rows(self.spec, self.observer, self.clips) + [expert, expert]


# -- grasp and hold -------------------------------------------------------

@dataclass
class GraspHoldConfig:
    expert_path: str | None = None
    arm_clip: str = "carry_idle"
    clip_seconds: float = 4.0
    episode_steps: int = 120
    mount_height: float = 1.0
    table_height: float = 0.6
    table_span: tuple = (0.2, 0.8)
    rod_x: float = 0.45
    rod_radius: float = 0.025
    rod_mass: float = 0.5
    lift_height: float = 0.15  # target rise of the rod above its resting height
    drop_margin: float = 0.1  # rod this far below the table top ends the episode

    def __post_init__(self):
        lo, hi = self.table_span
        if not lo < self.rod_x < hi:
            raise ValueError("the rod must start on the table")


class GraspHoldEnv(SimEnv):
    """Fixed-base arm with a gripper picking a rod off a table and holding it up."""

    def __init__(self, n_envs=16, cfg: GraspHoldConfig | None = None):
        self.cfg = c = cfg or GraspHoldConfig()
        body = builtin_body("arm")
        lo, hi = c.table_span
        terrain = Terrain(heights=(0.0, c.table_height, 0.0), x0=lo - (hi - lo), dx=hi - lo)
        rod = ObjectDef("rod", c.rod_radius, c.rod_mass)
        sim = Simulator(build_model(body, [rod], terrain, SimParams(contact_stiffness=6.0e4)))
        src = generate_procedural_clip(c.arm_clip, c.clip_seconds)
        cols = [WALKER_JOINTS.index(j) for j in ("shoulder_r", "elbow_r")]
        self.clips = {c.arm_clip: MotionClip(c.arm_clip, src.fps, ("shoulder", "elbow"), src.root,
                                             src.q[:, cols], src.qd[:, cols])}
        hand = HandSpec("", "hand")
        self.spec = PartSpec([
            Part("arm", ("shoulder", "elbow"), (c.arm_clip,), tuple(body.markers["wrists"]), is_base=True),
            Part("hand", hand.joints, markers=tuple(body.markers["fingertips"]), frame=hand.wrist_link,
                 is_hand=True),
        ], tuple(body.joint_names))
        obs = InteractionObserver(sim, hand, "rod")
        super().__init__(sim, n_envs, c.episode_steps, PartObserver(sim.model, self.spec), [obs])
        self.hand_dims = [obs.state(self.state).shape[1] + 5]
        self.hand_part_ids = [1]
        self.palm = body.link_index(hand.wrist_link)
        self.inward = np.array(body.inward[hand.wrist_link], float)
        self.rest_y = c.table_height + c.rod_radius
        self.term = TerminationTracker(TerminationRule(fall=False, ball_drop=True,
                                                       ball_min_height=c.table_height - c.drop_margin),
                                       self.n_envs)
        self.obs_dim = self._observe().shape[1]

    def _reset_worlds(self, idx):
        s = self.state
        c = self.cfg
        _, q, qd, _ = sample_reference_init(self.spec, self.clips, self.rng, self.sim.model.body.joint_names,
                                            len(idx))
        s.root[idx] = [0.0, c.mount_height, 0.0]
        s.q[idx], s.qd[idx] = q, qd
        s.obj_pose[idx, 0] = [c.rod_x, self.rest_y, 0.0]
        s.obj_vel[idx, 0] = 0.0
        self.term.reset(idx)

    def _observe(self):
        s = self.state
        rel = s.obj_pose[:, 0, :2] - s.root[:, :2]
        return np.concatenate([s.q, s.qd, rel, s.obj_vel[:, 0, :2], self.hands[0].state(s)], axis=1)

    def reward_terms(self):
        s = self.state
        phi, org, _ = self.sim.link_frames(s)
        rod = s.obj_pose[:, 0, :2]
        to_rod = rod - org[:, self.palm]
        c, sn = np.cos(phi[:, self.palm]), np.sin(phi[:, self.palm])
        d_h = np.stack([c * self.inward[0] - sn * self.inward[1], sn * self.inward[0] + c * self.inward[1]], 1)
        c_n = cosine_indicator(d_h, to_rod)
        r_hand = hand_reach_reward(to_rod[:, None], c_n[:, None], GAMMA_HAND_CART)
        err = self.rest_y + self.cfg.lift_height - rod[:, 1]
        r_lift = barbell_tracking_reward(err, s.obj_vel[:, 0, 1])
        r = barbell_task_reward(r_lift, 1.0, r_hand)
        return r, {"r_hand": r_hand, "r_lift": r_lift}

    def _reward(self, prev, target, action):
        return self.reward_terms()

    def _terminate(self):
        z = np.zeros(self.n_envs, bool)
        return self.term(z, z, self.state.time, self.state.obj_pose[:, 0, 1])

    def demo_pairs(self):
        if self.cfg.expert_path is None:
            raise FileNotFoundError("grasp-and-hold needs an expert-pair file (expert_path)")
        return part_demo_rows(self.spec, self.observer, self.clips) + [expert_rows(self.cfg.expert_path)]
