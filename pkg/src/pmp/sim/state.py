"""Simulation state container.

Every array carries a leading world axis ``E`` so one ``SimState`` can hold a
batch of independent worlds; a single world is simply ``E == 1``.
"""
from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np


@dataclass
class SimState:
    root: np.ndarray  # (E, 3) x, y, theta
    root_vel: np.ndarray  # (E, 3)
    q: np.ndarray  # (E, nj) rad
    qd: np.ndarray  # (E, nj) rad/s
    obj_pose: np.ndarray  # (E, no, 3)
    obj_vel: np.ndarray  # (E, no, 3)
    obj_wrench: np.ndarray  # (E, no, 3) fx, fy, torque for the next control period
    tau: np.ndarray  # (E, nj) last applied (clamped) joint torques
    time: np.ndarray  # (E,) s
    steps: np.ndarray  # (E,) control steps taken
    c_active: np.ndarray  # (E, C) bool, one slot per contact candidate
    c_point: np.ndarray  # (E, C, 2)
    c_normal: np.ndarray  # (E, C, 2) unit normal, direction of the force on the first body
    c_force: np.ndarray  # (E, C, 2) force on the first body (link, or object for object-ground)
    c_depth: np.ndarray  # (E, C) penetration depth, m

    @property
    def n_envs(self):
        return self.root.shape[0]

    def copy(self):
        return SimState(**{f.name: getattr(self, f.name).copy() for f in fields(self)})

    def take(self, idx):
        """Sub-batch of worlds (always copies)."""
        idx = np.atleast_1d(idx)
        return SimState(**{f.name: getattr(self, f.name)[idx].copy() for f in fields(self)})

    def put(self, idx, other):
        """Overwrite worlds ``idx`` in place with the worlds of ``other``."""
        for f in fields(self):
            getattr(self, f.name)[idx] = getattr(other, f.name)

    def is_finite(self):
        """Per-world finiteness of the dynamic fields."""
        ok = np.ones(self.n_envs, bool)
        for name in ("root", "root_vel", "q", "qd", "obj_pose", "obj_vel"):
            a = getattr(self, name)
            ok &= np.isfinite(a.reshape(self.n_envs, -1)).all(axis=1)
        return ok

    @classmethod
    def zeros(cls, model, n_envs=1):
        nj, no, nc = model.n_joints, model.n_objects, model.n_candidates
        e = n_envs
        return cls(
            root=np.zeros((e, 3)), root_vel=np.zeros((e, 3)),
            q=np.zeros((e, nj)), qd=np.zeros((e, nj)),
            obj_pose=np.zeros((e, no, 3)), obj_vel=np.zeros((e, no, 3)),
            obj_wrench=np.zeros((e, no, 3)), tau=np.zeros((e, nj)),
            time=np.zeros(e), steps=np.zeros(e, np.int64),
            c_active=np.zeros((e, nc), bool), c_point=np.zeros((e, nc, 2)),
            c_normal=np.zeros((e, nc, 2)), c_force=np.zeros((e, nc, 2)),
            c_depth=np.zeros((e, nc)),
        )
