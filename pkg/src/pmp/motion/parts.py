"""Body-part partitions, per-part observation features and reference-state init."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..sim.kernels_numpy import _rotate, forward_kinematics
from .clip import CONTROL_FPS, ClipError


class PartSpecError(ValueError):
    pass


@dataclass
class Part:
    name: str
    joints: tuple
    clips: tuple = ()  # names of bound clips (hands may instead use an expert source)
    markers: tuple = ()  # (link name, (x, y)) end-effector points
    frame: str | None = None  # link whose frame expresses the markers; None = root
    is_hand: bool = False
    is_base: bool = False  # root pose for composite initialization comes from here
    include_root: bool = False  # append root height / attitude / local velocity

    def __post_init__(self):
        self.joints = tuple(self.joints)
        self.clips = tuple(self.clips)
        self.markers = tuple((str(l), tuple(map(float, p))) for l, p in self.markers)


@dataclass
class PartSpec:
    parts: list
    joints: tuple = field(default=())  # the configured joint list J

    def __post_init__(self):
        self.parts = list(self.parts)
        if not self.joints:
            self.joints = tuple(j for p in self.parts for j in p.joints)
        self.joints = tuple(self.joints)
        self.validate()

    @property
    def K(self):
        return len(self.parts)

    @property
    def names(self):
        return [p.name for p in self.parts]

    def index(self, name):
        return self.names.index(name)

    @property
    def base_index(self):
        for k, p in enumerate(self.parts):
            if p.is_base:
                return k
        return 0

    def validate(self):
        if not self.parts:
            raise PartSpecError("a part spec needs at least one part")
        if len(set(self.names)) != len(self.names):
            raise PartSpecError("part names must be unique")
        seen = {}
        for p in self.parts:
            if not p.joints:
                raise PartSpecError(f"part {p.name!r} has no joints")
            for j in p.joints:
                if j in seen:
                    raise PartSpecError(f"joint {j!r} is in both {seen[j]!r} and {p.name!r}")
                seen[j] = p.name
            if not p.clips and not p.is_hand:
                raise PartSpecError(f"part {p.name!r} binds no clip")
        if set(seen) != set(self.joints):
            missing = sorted(set(self.joints) - set(seen))
            extra = sorted(set(seen) - set(self.joints))
            raise PartSpecError(f"parts must partition the joint list (missing {missing}, unknown {extra})")
        if sum(p.is_base for p in self.parts) > 1:
            raise PartSpecError("at most one base part")


def whole_body_spec(joints, clips, markers=(), name="body"):
    """K = 1: a single part holding every joint (the single-discriminator baseline)."""
    return PartSpec([Part(name, tuple(joints), tuple(clips), tuple(markers), is_base=True)], tuple(joints))


class PartObserver:
    """Computes per-part features for one character model.

    Layout of part k: ``[q_j for j in J_k] + [qd_j for j in J_k] +
    [marker x, y in the part frame ...] (+ root terms if enabled)``.
    """

    def __init__(self, model, spec: PartSpec):
        self.model = model
        self.spec = spec
        body = model.body
        for j in spec.joints:
            body.joint_index(j)
        self._jidx = [np.array([body.joint_index(j) for j in p.joints], np.int64) for p in spec.parts]
        self._mlink = [np.array([body.link_index(l) for l, _ in p.markers], np.int64) for p in spec.parts]
        self._mloc = [np.array([pt for _, pt in p.markers], float).reshape(-1, 2) for p in spec.parts]
        self._frame = [0 if p.frame is None else body.link_index(p.frame) for p in spec.parts]
        self.dims = [2 * len(p.joints) + 2 * len(p.markers) + (6 if p.include_root else 0) for p in spec.parts]

    def features(self, root, q, qd, root_vel=None, parts=None):
        """List of (E, d_k) arrays for the requested parts (all by default)."""
        root = np.atleast_2d(np.asarray(root, float))
        q = np.atleast_2d(np.asarray(q, float))
        qd = np.atleast_2d(np.asarray(qd, float))
        phi, org, _ = forward_kinematics(self.model.arrays, root, q)
        parts = range(self.spec.K) if parts is None else parts
        out = []
        for k in parts:
            p = self.spec.parts[k]
            cols = [q[:, self._jidx[k]], qd[:, self._jidx[k]]]
            if len(self._mlink[k]):
                links = self._mlink[k]
                pts = org[:, links] + _rotate(phi[:, links], self._mloc[k][None])
                f = self._frame[k]
                local = _rotate(-phi[:, f, None], pts - org[:, f, None])
                cols.append(local.reshape(len(root), -1))
            if p.include_root:
                rv = np.zeros_like(root) if root_vel is None else np.atleast_2d(root_vel)
                c, s = np.cos(root[:, 2]), np.sin(root[:, 2])
                vx = c * rv[:, 0] + s * rv[:, 1]
                vy = -s * rv[:, 0] + c * rv[:, 1]
                cols.append(np.stack([root[:, 1], c, s, vx, vy, rv[:, 2]], axis=1))
            out.append(np.concatenate(cols, axis=1))
        return out

    def state_features(self, state, parts=None):
        return self.features(state.root, state.q, state.qd, state.root_vel, parts)


def extract_part_obs(observer: PartObserver, state, k):
    """Feature vectors of part ``k`` for every world in ``state`` (E, d_k)."""
    if not 0 <= k < observer.spec.K:
        raise IndexError(f"part index {k} out of range")
    return observer.state_features(state, [k])[0]


def clip_full_q(clip, joint_names):
    """Clip joint channels reordered to ``joint_names``; missing joints are zero."""
    F = clip.n_frames
    q = np.zeros((F, len(joint_names)))
    qd = np.zeros((F, len(joint_names)))
    for i, n in enumerate(joint_names):
        if n in clip.joints:
            c = clip.joints.index(n)
            q[:, i] = clip.q[:, c]
            qd[:, i] = clip.qd[:, c]
    return q, qd


def clip_to_demo_pairs(clip, observer: PartObserver, fps=CONTROL_FPS):
    """Per-part (F-1, 2 d_k) arrays of consecutive-frame feature pairs [o, o']."""
    if clip.n_frames < 2:
        raise ClipError("clip shorter than 2 frames")
    c = clip.resample(fps)
    names = observer.model.body.joint_names
    for p in observer.spec.parts:
        if clip.name in p.clips:
            c.joint_columns(p.joints)
    q, qd = clip_full_q(c, names)
    rv = np.zeros_like(c.root)
    rv[:-1] = (c.root[1:] - c.root[:-1]) * fps
    rv[-1] = rv[-2]
    feats = observer.features(c.root, q, qd, rv)
    return [np.concatenate([f[:-1], f[1:]], axis=1) for f in feats]


def sample_reference_init(spec: PartSpec, clips, rng, joint_names, n=1):
    """Independent per-part (clip, frame) draws assembled into whole-body poses.

    Returns ``(root (n,3), q (n,nj), qd (n,nj), picks)`` where ``picks[k]`` is an
    (n, 2) array of (clip index within the part's list, frame) choices.
    Hand parts without clips keep their joints at zero.
    """
    joint_names = list(joint_names)
    root = np.zeros((n, 3))
    q = np.zeros((n, len(joint_names)))
    qd = np.zeros((n, len(joint_names)))
    picks = []
    for k, p in enumerate(spec.parts):
        if not p.clips:
            if not p.is_hand:
                raise ClipError(f"part {p.name!r} has an empty clip list")
            picks.append(np.zeros((n, 2), np.int64))
            continue
        ci = rng.integers(0, len(p.clips), size=n)
        fi = np.empty(n, np.int64)
        cols = [joint_names.index(j) for j in p.joints]
        for i in range(n):
            clip = clips[p.clips[ci[i]]]
            fi[i] = rng.integers(0, clip.n_frames)
            src = clip.joint_columns(p.joints)
            q[i, cols] = clip.q[fi[i], src]
            qd[i, cols] = clip.qd[fi[i], src]
            if k == spec.base_index:
                root[i] = clip.root[fi[i]]
        picks.append(np.stack([ci, fi], axis=1))
    return root, q, qd, picks
