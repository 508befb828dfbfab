"""Grasping-gym reward terms.  Every term lies in (0, 1]."""
import numpy as np


def rod_reward(v_rod, omega_rod):
    """0.3 exp(-v^2) + 0.7 exp(-0.1 w^2); ``v_rod`` is a speed or a (..., 2) velocity."""
    v = np.asarray(v_rod, float)
    v2 = (v * v).sum(-1) if v.ndim and v.shape[-1] == 2 else v * v
    w = np.asarray(omega_rod, float)
    return 0.3 * np.exp(-v2) + 0.7 * np.exp(-0.1 * w * w)


def finger_reward(dists):
    """exp(-128 max_k |p_k|^2) over hand-link-to-rod distances (last axis)."""
    d = np.asarray(dists, float)
    return np.exp(-128.0 * np.max(d * d, axis=-1))


def mcp_reward(a_mcp):
    """exp(-3 (1 - a)^2) for the mean normalized MCP action a in [0, 1]."""
    a = np.asarray(a_mcp, float)
    return np.exp(-3.0 * (1.0 - a) ** 2)


def tip_reward(dots):
    """exp(-3 max_k (1 - <d_h,k, d_r,k>)^2) over fingertips (last axis)."""
    g = 1.0 - np.asarray(dots, float)
    return np.exp(-3.0 * np.max(g * g, axis=-1))


def wrist_reward(q, q_target, qd):
    """exp(-3 |q_hat - q|^2) exp(-0.1 |qd|^2); wrist DoFs on the last axis (scalars allowed)."""
    e = np.asarray(q_target, float) - np.asarray(q, float)
    w = np.asarray(qd, float)
    e2 = (e * e).sum(-1) if e.ndim else e * e
    w2 = (w * w).sum(-1) if w.ndim else w * w
    return np.exp(-3.0 * e2) * np.exp(-0.1 * w2)


def torque_reward(tau, mcp_mask):
    """exp(-0.002 sum of squared torques over joints outside the MCP set)."""
    tau = np.asarray(tau, float)
    keep = ~np.asarray(mcp_mask, bool)
    return np.exp(-0.002 * (tau[..., keep] ** 2).sum(-1))


def gym_total_reward(r_rod, r_fin, r_mcp, r_tip, r_wrist, r_tau):
    return 0.95 * r_rod * r_fin * r_mcp * r_tip * r_wrist + 0.05 * r_tau
