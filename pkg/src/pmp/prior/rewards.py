"""Style, interaction and total reward composition.

All functions accept scalars or numpy arrays and broadcast elementwise.
Probabilities are clamped to ``[EPS, 1 - EPS]`` so every reward is finite.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EPS = 1e-4
KERNEL_RADIUS = 0.10  # m, full interaction weight inside this wrist-object distance
KERNEL_GAMMA = 4000.0
INTERACTION_OFFSET = 0.3
BLEND_MODES = ("per-hand", "synchronized")


@dataclass
class RewardWeights:
    w_g: float = 0.5
    w_s: float = 0.5
    c: float = 1.0
    beta: float = INTERACTION_OFFSET
    w_disc: float = 5.0
    w_gp: float = 5.0
    w_reg: float = 1e-4

    def __post_init__(self):
        vals = [self.w_g, self.w_s, self.c, self.beta, self.w_disc, self.w_gp, self.w_reg]
        if any(not np.isfinite(v) or v < 0 for v in vals):
            raise ValueError("reward weights must be finite and non-negative")
        if abs(self.w_g + self.w_s - 1.0) > 1e-12:
            raise ValueError(f"w_g + w_s must equal 1 (got {self.w_g} + {self.w_s})")


def clamp_prob(p):
    return np.clip(p, EPS, 1.0 - EPS)


def sigmoid(z):
    # tanh form avoids overflow warnings for large |z|
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, float)))


def prob_from_logit(z):
    return clamp_prob(sigmoid(z))


def style_reward_part(prob):
    """-log(1 - D) for a (clamped) discriminator probability."""
    return -np.log1p(-clamp_prob(np.asarray(prob, float)))


def interaction_reward(prob, beta=INTERACTION_OFFSET):
    """Interaction-discriminator reward with the constant offset added."""
    return style_reward_part(prob) + beta


def style_reward_product(parts, c=1.0):
    """c times the product of the per-part rewards (last axis of ``parts``)."""
    parts = np.asarray(parts, float)
    if (parts < 0).any():
        raise ValueError("per-part style rewards must be non-negative")
    return c * np.prod(parts, axis=-1)


def interaction_kernel(dist, gamma=KERNEL_GAMMA, radius=KERNEL_RADIUS):
    """1 inside ``radius`` (inclusive), exp(-gamma * d^3) beyond."""
    d = np.asarray(dist, float)
    if (d < 0).any():
        raise ValueError("distance must be non-negative")
    # gamma * d * d * d, left to right, gives exactly 32 at d = 0.2 (d ** 3 is one ulp high)
    return np.where(d <= radius, 1.0, np.exp(-(gamma * d * d * d)))


def blended_style_reward(body_parts, hands, c=1.0, mode="per-hand"):
    """Combine non-hand part rewards with kernel-blended hand rewards.

    ``body_parts``: (..., K_body) rewards of parts outside H.
    ``hands``: (..., |H|, 3) rows of (r^s_n, r^i_n, sigma_n) where r^i_n already
    carries the offset.  ``per-hand`` blends each hand independently;
    ``synchronized`` uses ``(1 - max sigma) * prod(sigma_n r^i_n)``.
    """
    if mode not in BLEND_MODES:
        raise ValueError(f"unknown blend mode {mode!r}; expected one of {BLEND_MODES}")
    body = np.asarray(body_parts, float)
    hands = np.asarray(hands, float)
    if hands.shape[-1] != 3:
        raise ValueError("hand rows must be (r_style, r_interaction, sigma)")
    rs, ri, sig = hands[..., 0], hands[..., 1], hands[..., 2]
    if ((sig < 0) | (sig > 1)).any():
        raise ValueError("sigma must lie in [0, 1]")
    if hands.shape[-2] == 0:
        return style_reward_product(body, c)
    if mode == "per-hand":
        # same factor order as the plain product, so sigma = 0 reproduces it bit for bit
        return c * np.prod(np.concatenate([body, hand_factors(rs, ri, sig)], axis=-1), axis=-1)
    body_term = np.prod(body, axis=-1)
    hand_term = (1.0 - sig.max(axis=-1)) * np.prod(np.maximum(sig * ri, 0.0), axis=-1)
    return c * hand_term * body_term


def hand_factors(r_style, r_inter, sigma):
    """Per-hand kernel blend ``(1 - sigma) r^s + sigma r^i``, floored at 0."""
    return np.maximum((1.0 - sigma) * r_style + sigma * r_inter, 0.0)


def total_reward(r_task, r_style, weights=None):
    w = weights or RewardWeights()
    return w.w_g * np.asarray(r_task, float) + w.w_s * np.asarray(r_style, float)


def total_disc_loss(pieces, weights=None):
    """w_disc * L_disc + w_gp * L_gp + w_reg * L_reg."""
    w = weights or RewardWeights()
    l_disc, l_gp, l_reg = (float(p) for p in pieces)
    if not all(np.isfinite(p) for p in (l_disc, l_gp, l_reg)):
        raise FloatingPointError("non-finite loss piece")
    return w.w_disc * l_disc + w.w_gp * l_gp + w.w_reg * l_reg


@dataclass
class StyleRewardBreakdown:
    part: np.ndarray  # (E, K) r^s_k for every part (hands included)
    interaction: np.ndarray  # (E, |H|) r^i_n with offset
    sigma: np.ndarray  # (E, |H|)
    style: np.ndarray  # (E,) combined r^s
    task: np.ndarray  # (E,) r^g
    total: np.ndarray  # (E,)


def compose_rewards(part_rewards, hand_ids, inter_rewards, sigma, r_task, weights=None, mode="per-hand"):
    """Assemble the breakdown from per-part rewards (E, K) and hand terms (E, |H|)."""
    w = weights or RewardWeights()
    part_rewards = np.atleast_2d(np.asarray(part_rewards, float))
    E, K = part_rewards.shape
    hand_ids = list(hand_ids)
    body_ids = [k for k in range(K) if k not in hand_ids]
    inter = np.asarray(inter_rewards, float).reshape(E, len(hand_ids))
    sig = np.asarray(sigma, float).reshape(E, len(hand_ids))
    if mode == "per-hand":
        factors = part_rewards.copy()
        factors[:, hand_ids] = hand_factors(part_rewards[:, hand_ids], inter, sig)
        style = style_reward_product(factors, w.c)
    else:
        hands = np.stack([part_rewards[:, hand_ids], inter, sig], axis=-1)
        style = blended_style_reward(part_rewards[:, body_ids], hands, w.c, mode)
    r_task = np.broadcast_to(np.asarray(r_task, float), (E,)).copy()
    return StyleRewardBreakdown(part_rewards, inter, sig, style, r_task, total_reward(r_task, style, w))
