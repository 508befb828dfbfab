"""Interaction state of a two-finger planar hand relative to a disk-section rod.

Layout (per hand, all positions in the wrist frame, i.e. the palm link frame
whose origin is the wrist joint)::

    q_h (5) | qd_h (5) | fingertips (2 x 2) | rod end points (2 x 2) |
    fingertip contact flags (2) | <d_h, d_c> per hand link (5)

``d_h`` is the fixed body-frame "inside of the hand" axis of each link and
``d_c`` the unit net contact force the link exerts on its surroundings, so a
link pressing straight into the rod scores +1 and a link without contact 0.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..sim.kernels_numpy import _rotate

HAND_JOINTS = ("wrist", "mcp_a", "dip_a", "mcp_b", "dip_b")
HAND_LINKS = ("palm", "prox_a", "dist_a", "prox_b", "dist_b")
TIP_LINKS = ("dist_a", "dist_b")
MCP_JOINTS = ("mcp_a", "mcp_b")
TIP_POINT = (0.04, 0.0)


@dataclass
class HandSpec:
    """Names of one hand's joints and links inside a character (``prefix`` + base name)."""
    prefix: str = ""
    name: str = "hand"

    @property
    def joints(self):
        return tuple(self.prefix + j for j in HAND_JOINTS)

    @property
    def links(self):
        return tuple(self.prefix + l for l in HAND_LINKS)

    @property
    def tips(self):
        return tuple(self.prefix + l for l in TIP_LINKS)

    @property
    def wrist_link(self):
        return self.prefix + "palm"

    @property
    def wrist_joint(self):
        return self.prefix + "wrist"

    @property
    def mcp_mask(self):
        return np.array([j in MCP_JOINTS for j in HAND_JOINTS])


STATE_DIM = 5 + 5 + 4 + 4 + 2 + 5
ACTION_DIM = 5


def state_layout():
    """Named slices of the interaction-state vector."""
    names = [("q", 5), ("qd", 5), ("tips", 4), ("rod", 4), ("contact", 2), ("align", 5)]
    out, i = {}, 0
    for n, d in names:
        out[n] = slice(i, i + d)
        i += d
    return out


def _seg_point_dist(a, b, p):
    """Distance from points p to segments [a, b] (broadcast over leading axes)."""
    ab = b - a
    t = np.clip(((p - a) * ab).sum(-1) / np.maximum((ab * ab).sum(-1), 1e-300), 0.0, 1.0)
    closest = a + t[..., None] * ab
    return np.linalg.norm(p - closest, axis=-1)


class InteractionObserver:
    """Computes interaction states and grasp geometry for one hand and one object."""

    def __init__(self, sim, hand: HandSpec, obj=0):
        self.sim = sim
        body = sim.model.body
        a = sim.arrays
        self.hand = hand
        self.obj = sim.model.object_index(obj) if isinstance(obj, str) else int(obj)
        self.jidx = np.array([body.joint_index(j) for j in hand.joints], np.int64)
        self.lidx = np.array([body.link_index(l) for l in hand.links], np.int64)
        self.tidx = np.array([body.link_index(l) for l in hand.tips], np.int64)
        self.wrist = body.link_index(hand.wrist_link)
        self.inward = np.array([body.inward[l] for l in hand.links], float)
        self.tip_inward = np.array([body.inward[l] for l in hand.tips], float)
        self.cap_a = a.cap_a[self.lidx]
        self.cap_b = a.cap_b[self.lidx]
        self.cap_r = a.cap_r[self.lidx]
        self.radius = float(a.obj_radius[self.obj])
        self.mcp_mask = hand.mcp_mask
        self.q_lo = a.q_lo[self.jidx]
        self.q_hi = a.q_hi[self.jidx]

    # -- frames -------------------------------------------------------
    def _frames(self, state):
        phi, org, _ = self.sim.link_frames(state)
        return phi, org

    def to_wrist(self, phi, org, pts):
        """World points (E, P, 2) into the wrist frame."""
        w = self.wrist
        return _rotate(-phi[:, w, None], pts - org[:, w, None])

    def tip_points(self, phi, org):
        local = np.broadcast_to(np.array(TIP_POINT), (len(self.tidx), 2))
        return org[:, self.tidx] + _rotate(phi[:, self.tidx], local[None])

    def rod_endpoints(self, state):
        pose = state.obj_pose[:, self.obj]
        d = self.radius * np.stack([np.cos(pose[:, 2]), np.sin(pose[:, 2])], -1)
        return np.stack([pose[:, :2] - d, pose[:, :2] + d], axis=1)

    # -- state --------------------------------------------------------
    def state(self, st, phi=None, org=None):
        if phi is None:
            phi, org = self._frames(st)
        E = st.n_envs
        tips = self.to_wrist(phi, org, self.tip_points(phi, org)).reshape(E, -1)
        rod = self.to_wrist(phi, org, self.rod_endpoints(st)).reshape(E, -1)
        flags, dirs = self.sim.contact_features(st, self.tidx)
        align = self.alignment(st, phi)
        return np.concatenate([st.q[:, self.jidx], st.qd[:, self.jidx], tips, rod,
                               flags.astype(float), align], axis=1)

    def alignment(self, st, phi):
        _, dirs = self.sim.contact_features(st, self.lidx)
        d_h = _rotate(phi[:, self.lidx], self.inward[None])
        # force on the surroundings is minus the force on the link
        return -(d_h * dirs).sum(-1)

    def link_contact(self, st):
        """Any hand link touching something above the force threshold (E,)."""
        flags, _ = self.sim.contact_features(st, self.lidx)
        return flags.any(axis=1)

    # -- grasp geometry -----------------------------------------------
    def link_gaps(self, st, phi=None, org=None):
        """Surface gap between every hand link capsule and the rod (E, 5), floored at 0."""
        if phi is None:
            phi, org = self._frames(st)
        a = org[:, self.lidx] + _rotate(phi[:, self.lidx], self.cap_a[None])
        b = org[:, self.lidx] + _rotate(phi[:, self.lidx], self.cap_b[None])
        c = st.obj_pose[:, self.obj, None, :2]
        return np.maximum(_seg_point_dist(a, b, c) - self.cap_r[None] - self.radius, 0.0)

    def tip_dots(self, st, phi=None, org=None):
        """<d_h, d_r> per fingertip, d_r pointing from the tip to the nearest rod surface point."""
        if phi is None:
            phi, org = self._frames(st)
        tips = self.tip_points(phi, org)
        rel = st.obj_pose[:, self.obj, None, :2] - tips
        dist = np.linalg.norm(rel, axis=-1, keepdims=True)
        # outside the rod the nearest surface point lies toward the center, inside away from it
        sign = np.where(dist > self.radius, 1.0, -1.0)
        d_r = sign * rel / np.maximum(dist, 1e-12)
        d_h = _rotate(phi[:, self.tidx], self.tip_inward[None])
        return (d_h * d_r).sum(-1)

    def wrist_distance(self, st, phi=None, org=None):
        """Distance between the wrist joint and the object center (E,)."""
        if phi is None:
            phi, org = self._frames(st)
        return np.linalg.norm(st.obj_pose[:, self.obj, :2] - org[:, self.wrist], axis=-1)

    # -- actions ------------------------------------------------------
    def normalized_action(self, target):
        """PD targets of the hand joints mapped to [-1, 1] by the joint limits."""
        t = np.asarray(target, float)[..., self.jidx]
        return np.clip(2.0 * (t - self.q_lo) / (self.q_hi - self.q_lo) - 1.0, -1.0, 1.0)

    def mcp_action(self, hand_action):
        """Mean MCP action rescaled to [0, 1] (1 = fist)."""
        a = np.clip(np.asarray(hand_action, float)[..., self.mcp_mask], -1.0, 1.0)
        return ((a + 1.0) * 0.5).mean(-1)
