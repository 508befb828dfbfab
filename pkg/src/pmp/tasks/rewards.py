"""Task reward formulas for the locomotion and interaction scenarios.

All rewards are normalized to [0, 1].  Vector arguments carry their
components on the last axis; leading axes broadcast (one row per world).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TargetLocationParams:
    v_star: float = 2.0
    gamma_pos: float = 0.5
    gamma_vel: float = 1.0
    w_pos: float = 0.7
    w_vel: float = 0.3


CART_TRACKING = TargetLocationParams(v_star=0.5, gamma_pos=0.5, gamma_vel=64.0, w_pos=0.8, w_vel=0.2)
GAMMA_SIGHT = 2.0
GAMMA_HAND_CART = 10.0
GAMMA_HAND_HANG = 3.0
GAMMA_HAND_CLIMB_FIRST = 128.0
GAMMA_HAND_CLIMB = 16.0
CLIMB_OFFSET = 0.05
BALANCE_GAIN = 4.0
STYLE_SPEED = {"gait": 0.5, "soldier": 0.5, "hopping": 0.3}


def _sq(v):
    v = np.asarray(v, float)
    return (v * v).sum(-1)


def position_reward(p, gamma_pos=0.5):
    return np.exp(-gamma_pos * _sq(p))


def velocity_reward(p, v_root, v_star=2.0, gamma_vel=1.0):
    """exp(-g max(0, v* - <v, p/|p|>)^2); defined as 1 at the goal (|p| = 0)."""
    p = np.asarray(p, float)
    v = np.asarray(v_root, float)
    n = np.sqrt(_sq(p))
    safe = np.where(n > 0, n, 1.0)
    proj = (v * p).sum(-1) / safe
    r = np.exp(-gamma_vel * np.maximum(0.0, v_star - proj) ** 2)
    return np.where(n > 0, r, 1.0)


def target_location_reward(p, v_root, params: TargetLocationParams = TargetLocationParams()):
    """w_pos r_pos + w_vel r_vel for root-to-goal displacement ``p`` and root velocity ``v_root``."""
    return (params.w_pos * position_reward(p, params.gamma_pos)
            + params.w_vel * velocity_reward(p, v_root, params.v_star, params.gamma_vel))


def wrap_angle(a):
    """Map angles onto [-pi, pi)."""
    return (np.asarray(a, float) + np.pi) % (2.0 * np.pi) - np.pi


def sight_reward(q_goal, q_head, gamma=GAMMA_SIGHT):
    d = wrap_angle(np.asarray(q_goal, float) - np.asarray(q_head, float))
    return np.exp(-gamma * d * d)


def sight_task_reward(r_root, r_sight, w_root=0.7, w_sight=0.3):
    return w_root * np.asarray(r_root, float) + w_sight * np.asarray(r_sight, float)


def heading_reward(v_root, heading, v_star=0.5, gamma_vel=1.0):
    """Speed-along-heading reward; ``heading`` is an angle (rad) or a unit vector."""
    h = np.asarray(heading, float)
    if h.ndim == 0 or h.shape[-1] != 2:
        h = np.stack([np.cos(h), np.sin(h)], -1)
    proj = (np.asarray(v_root, float) * h).sum(-1)
    return np.exp(-gamma_vel * np.maximum(0.0, v_star - proj) ** 2)


def hand_reach_reward(p_hands, c, gamma_hand):
    """prod_n c_n exp(-g |p_n|^2) for displacements (..., H, 2) and indicators (..., H)."""
    c = np.asarray(c, float)
    return np.prod(c * np.exp(-gamma_hand * _sq(p_hands)), axis=-1)


def cosine_indicator(a, b):
    """Cosine between two direction vectors rescaled from [-1, 1] to [0, 1]."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    na, nb = np.sqrt(_sq(a)), np.sqrt(_sq(b))
    cos = (a * b).sum(-1) / np.maximum(na * nb, 1e-12)
    return 0.5 * (np.clip(cos, -1.0, 1.0) + 1.0)


def alignment_indicator(palm_dir, front_dir, threshold=0.5):
    """Binary: 1 when the cosine between palm normal and character front exceeds ``threshold``."""
    return (2.0 * cosine_indicator(palm_dir, front_dir) - 1.0 > threshold).astype(float)


def cart_task_reward(r_hand, r_cart, w_cart=0.8, w_hand=0.2):
    """r_hand (w_cart r_cart + w_hand)."""
    return np.asarray(r_hand, float) * (w_cart * np.asarray(r_cart, float) + w_hand)


def cart_tracking_reward(p_cart, v_cart, params: TargetLocationParams = CART_TRACKING):
    return target_location_reward(p_cart, v_cart, params)


def hang_task_reward(p_hands, aligned, gamma_hand=GAMMA_HAND_HANG):
    return hand_reach_reward(p_hands, aligned, gamma_hand)


def balance_reward(tilt, gain=BALANCE_GAIN):
    """Stand-in barbell balance term exp(-k tilt^2)."""
    t = np.asarray(tilt, float)
    return np.exp(-gain * t * t)


def barbell_tracking_reward(height_err, v_vertical, params: TargetLocationParams = CART_TRACKING):
    """Target-location form on the barbell height (1-D displacement and velocity)."""
    return target_location_reward(np.asarray(height_err, float)[..., None],
                                  np.asarray(v_vertical, float)[..., None], params)


def barbell_task_reward(r_bbl, r_bal, r_hand, w_bbl=0.8, w_hand=0.2):
    """r_hand (w_bbl r_bbl r_bal + w_hand)."""
    return np.asarray(r_hand, float) * (w_bbl * np.asarray(r_bbl, float) * np.asarray(r_bal, float) + w_hand)


def climb_task_reward(p_hands, c, first_phase, s=CLIMB_OFFSET):
    """prod_n c_n ((1 - s) exp(-g |p_n|^2) + s), g = 128 on the first hang and 16 after."""
    g = np.where(np.asarray(first_phase, bool), GAMMA_HAND_CLIMB_FIRST, GAMMA_HAND_CLIMB)
    g = np.asarray(g, float)[..., None] if np.ndim(g) else float(g)
    c = np.asarray(c, float)
    return np.prod(c * ((1.0 - s) * np.exp(-g * _sq(p_hands)) + s), axis=-1)


def torque_min_reward(tau, scale=0.002):
    t = np.asarray(tau, float)
    return np.exp(-scale * (t * t).sum(-1))
