"""Early-termination rules (fall, ball drop, ground-contact deadline)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HANG_DEADLINE = 0.7  # s


@dataclass
class TerminationRule:
    fall: bool = True  # any non-foot link touching the ground
    ball_drop: bool = False  # carried object below a height
    ball_min_height: float = 0.3
    ground_deadline: float | None = None  # feet on the ground past this time (s)

    def __post_init__(self):
        if self.ground_deadline is not None and self.ground_deadline <= 0:
            raise ValueError("ground-contact deadline must be positive")


class TerminationTracker:
    """Stateful per-world checker; a triggered world stays triggered until reset."""

    def __init__(self, rule: TerminationRule, n_envs):
        self.rule = rule
        self.triggered = np.zeros(n_envs, bool)
        self.reason = np.array([""] * n_envs, dtype=object)

    def reset(self, idx):
        self.triggered[idx] = False
        self.reason[idx] = ""

    def __call__(self, nonfoot_ground, foot_ground, elapsed, ball_height=None):
        fired, why = check_termination(self.rule, nonfoot_ground, foot_ground, elapsed, ball_height)
        new = fired & ~self.triggered
        self.reason[new] = why[new]
        self.triggered |= fired
        return self.triggered.copy(), list(self.reason)


def check_termination(rule: TerminationRule, nonfoot_ground, foot_ground, elapsed, ball_height=None):
    """Per-world (terminate mask, reason array); reasons: 'fall', 'ball_drop', 'deadline'."""
    nonfoot_ground = np.atleast_1d(np.asarray(nonfoot_ground, bool))
    foot_ground = np.atleast_1d(np.asarray(foot_ground, bool))
    elapsed = np.broadcast_to(np.asarray(elapsed, float), nonfoot_ground.shape)
    out = np.zeros(nonfoot_ground.shape, bool)
    why = np.array([""] * out.size, dtype=object).reshape(out.shape)
    if rule.ground_deadline is not None:
        late = foot_ground & (elapsed > rule.ground_deadline)
        why[late & ~out] = "deadline"
        out |= late
    if rule.ball_drop and ball_height is not None:
        drop = np.atleast_1d(np.asarray(ball_height, float)) < rule.ball_min_height
        why[drop & ~out] = "ball_drop"
        out |= drop
    if rule.fall:
        why[nonfoot_ground & ~out] = "fall"
        out |= nonfoot_ground
    return out, why
