"""Motion clips: storage, resampling, file format and procedural generators.

Clip file (JSON)::

    {"format_version": 1, "kind": "motion_clip", "name": "gait", "fps": 30.0,
     "joints": ["hip_l", ...],
     "frames": [[root_x, root_y, root_theta, q_1..q_n, qd_1..qd_n], ...]}

Angles in radians, velocities in rad/s.  The expert-pair file of the
interaction gym uses the same container with ``kind = "expert_pairs"``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

CONTROL_FPS = 30.0
FORMAT_VERSION = 1

WALKER_JOINTS = ("hip_l", "knee_l", "hip_r", "knee_r", "shoulder_l", "elbow_l", "shoulder_r", "elbow_r")
STYLES = ("gait", "carry_idle", "wave")


class ClipError(ValueError):
    pass


@dataclass
class MotionClip:
    name: str
    fps: float
    joints: tuple
    root: np.ndarray  # (F, 3)
    q: np.ndarray  # (F, nj)
    qd: np.ndarray  # (F, nj)

    def __post_init__(self):
        self.joints = tuple(self.joints)
        self.root = np.asarray(self.root, float).reshape(-1, 3)
        self.q = np.asarray(self.q, float).reshape(len(self.root), -1)
        self.qd = np.asarray(self.qd, float).reshape(self.q.shape)
        if len(self.root) < 2:
            raise ClipError(f"clip {self.name!r} needs at least 2 frames")
        if self.q.shape[1] != len(self.joints):
            raise ClipError(f"clip {self.name!r}: {self.q.shape[1]} joint columns for {len(self.joints)} joints")
        if self.fps <= 0:
            raise ClipError("fps must be positive")
        for a in (self.root, self.q, self.qd):
            if not np.isfinite(a).all():
                raise ClipError(f"clip {self.name!r} has non-finite values")

    @property
    def n_frames(self):
        return len(self.root)

    @property
    def duration(self):
        return (self.n_frames - 1) / self.fps

    def joint_columns(self, names):
        """Column indices of ``names``; KeyError when the clip lacks a joint."""
        idx = []
        for n in names:
            if n not in self.joints:
                raise KeyError(f"clip {self.name!r} has no joint {n!r}")
            idx.append(self.joints.index(n))
        return np.array(idx, np.int64)

    def resample(self, fps=CONTROL_FPS):
        """Linear interpolation of every channel onto a ``fps`` grid."""
        if fps == self.fps:
            return self
        t_src = np.arange(self.n_frames) / self.fps
        n_out = int(np.floor(self.duration * fps + 1e-9)) + 1
        if n_out < 2:
            raise ClipError(f"clip {self.name!r} too short to resample to {fps} Hz")
        t = np.arange(n_out) / fps

        def interp(a):
            return np.stack([np.interp(t, t_src, a[:, k]) for k in range(a.shape[1])], axis=1)

        return MotionClip(self.name, float(fps), self.joints, interp(self.root), interp(self.q), interp(self.qd))

    # -- file format ---------------------------------------------------
    def to_dict(self):
        frames = np.concatenate([self.root, self.q, self.qd], axis=1)
        return {"format_version": FORMAT_VERSION, "kind": "motion_clip", "name": self.name,
                "fps": float(self.fps), "joints": list(self.joints), "frames": frames.tolist()}

    @classmethod
    def from_dict(cls, d):
        if d.get("format_version") != FORMAT_VERSION or d.get("kind") != "motion_clip":
            raise ClipError("not a version-1 motion clip document")
        nj = len(d["joints"])
        frames = np.asarray(d["frames"], float)
        if frames.ndim != 2 or frames.shape[1] != 3 + 2 * nj:
            raise ClipError(f"frames must have {3 + 2 * nj} columns")
        return cls(d["name"], float(d["fps"]), d["joints"], frames[:, :3], frames[:, 3:3 + nj],
                   frames[:, 3 + nj:])


def save_clip(clip, path):
    Path(path).write_text(json.dumps(clip.to_dict()))


def load_clip(path):
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ClipError(f"{path}: {exc}") from None
    return MotionClip.from_dict(doc)


# -- procedural clips ----------------------------------------------------

def _style_angles(style, t, phase, amp):
    """Joint-angle trajectories for the walker joint set at times t (s)."""
    two_pi = 2.0 * np.pi
    out = {n: np.zeros_like(t) for n in WALKER_JOINTS}
    if style == "gait":
        # 1 Hz stride; right leg half a cycle behind, arms counter-swing
        w = two_pi * 1.0 * t + phase
        out["hip_l"] = 0.45 * amp * np.sin(w)
        out["hip_r"] = 0.45 * amp * np.sin(w + np.pi)
        out["knee_l"] = 0.3 + 0.3 * amp * (1.0 + np.sin(w + 0.5 * np.pi))
        out["knee_r"] = 0.3 + 0.3 * amp * (1.0 + np.sin(w + 1.5 * np.pi))
        out["shoulder_l"] = 0.25 * amp * np.sin(w + np.pi)
        out["shoulder_r"] = 0.25 * amp * np.sin(w)
        out["elbow_l"] = 0.3 + 0.05 * np.sin(w)
        out["elbow_r"] = 0.3 + 0.05 * np.sin(w + np.pi)
    elif style == "carry_idle":
        # arms held forward with a slow sway; legs standing, slightly flexed
        w = two_pi * 0.5 * t + phase
        out["shoulder_l"] = 1.3 + 0.08 * amp * np.sin(w)
        out["shoulder_r"] = 1.3 + 0.08 * amp * np.sin(w)
        out["elbow_l"] = 0.35 + 0.05 * amp * np.sin(w + 0.5)
        out["elbow_r"] = 0.35 + 0.05 * amp * np.sin(w + 0.5)
        out["hip_l"] = 0.05 * np.sin(w)
        out["hip_r"] = 0.05 * np.sin(w)
        out["knee_l"] = 0.15 + 0.03 * np.sin(w)
        out["knee_r"] = 0.15 + 0.03 * np.sin(w)
    elif style == "wave":
        # both arms raised overhead, forearms waving side to side at 1 Hz
        w = two_pi * 1.0 * t + phase
        out["shoulder_l"] = 2.6 + 0.15 * amp * np.sin(w)
        out["shoulder_r"] = 2.6 + 0.15 * amp * np.sin(w + np.pi)
        out["elbow_l"] = 0.9 + 0.7 * amp * np.sin(w)
        out["elbow_r"] = 0.9 + 0.7 * amp * np.sin(w + np.pi)
        out["hip_l"] = 0.03 * np.sin(w)
        out["hip_r"] = -0.03 * np.sin(w)
        out["knee_l"] = 0.1 + 0.02 * np.sin(w)
        out["knee_r"] = 0.1 + 0.02 * np.sin(w)
    else:
        raise ClipError(f"unknown style {style!r}; expected one of {STYLES}")
    return out


STYLE_PERIOD = {"gait": 1.0, "carry_idle": 2.0, "wave": 1.0}


def generate_procedural_clip(style, duration, rng=None, joints=WALKER_JOINTS, fps=CONTROL_FPS,
                             root_height=0.85, speed=0.0, name=None):
    """Smooth periodic clip; joints outside the walker set are held at 0.

    ``rng`` (optional) draws a random phase and a +-5% amplitude jitter.
    Velocities are forward differences of the positions, so
    ``qd[t] == (q[t+1] - q[t]) * fps`` holds for every frame.
    """
    if duration <= 0:
        raise ClipError("duration must be positive")
    if style not in STYLES:
        raise ClipError(f"unknown style {style!r}; expected one of {STYLES}")
    n = int(round(duration * fps))
    if n < 2:
        raise ClipError("duration too short for two frames")
    phase, amp = 0.0, 1.0
    if rng is not None:
        phase = float(rng.uniform(0.0, 2.0 * np.pi))
        amp = float(rng.uniform(0.95, 1.05))
    t = np.arange(n + 1) / fps
    ang = _style_angles(style, t, phase, amp)
    q_ext = np.stack([ang.get(j, np.zeros_like(t)) for j in joints], axis=1)
    root_ext = np.stack([speed * t, np.full_like(t, root_height), np.zeros_like(t)], axis=1)
    qd = (q_ext[1:] - q_ext[:-1]) * fps
    return MotionClip(name or style, float(fps), tuple(joints), root_ext[:-1], q_ext[:-1], qd)
