"""Planar articulated-body simulator front-end."""
from __future__ import annotations

import csv

import numpy as np

from .. import _accel
from . import kernels_numpy
from .state import SimState

CONTROL_HZ = 30.0
DEFAULT_SUBSTEPS = 4

if _accel.use_numba():
    from . import kernels_numba as _kern
else:
    _kern = kernels_numpy


class SimulationDiverged(RuntimeError):
    def __init__(self, step_index, env_ids, state=None):
        super().__init__(f"simulation diverged at control step {step_index} (worlds {[int(i) for i in env_ids]})")
        self.step_index = step_index
        self.env_ids = [int(i) for i in env_ids]
        self.state = state


class InvalidState(ValueError):
    pass


def _rot(phi, v):
    c, s = np.cos(phi), np.sin(phi)
    return np.stack([c * v[..., 0] - s * v[..., 1], s * v[..., 0] + c * v[..., 1]], axis=-1)


class Simulator:
    """Steps batches of worlds that share one compiled :class:`Model`."""

    def __init__(self, model, substeps=DEFAULT_SUBSTEPS, backend=None):
        if substeps < 1:
            raise ValueError("substeps must be >= 1")
        self.model = model
        self.substeps = int(substeps)
        backend = backend or _accel.BACKEND
        if backend == "numba" and _accel.HAVE_NUMBA:
            from . import kernels_numba
            self._kern = kernels_numba
        else:
            self._kern = kernels_numpy
        self.backend = "numba" if self._kern is not kernels_numpy else "numpy"

    @property
    def arrays(self):
        return self.model.arrays

    def new_state(self, n_envs=1):
        return SimState.zeros(self.model, n_envs)

    # -- stepping ----------------------------------------------------
    def step_unchecked(self, state, target, substeps=None):
        """One control period; returns ``(new_state, diverged_mask)``."""
        substeps = self.substeps if substeps is None else int(substeps)
        if substeps < 1:
            raise ValueError("substeps must be >= 1")
        target = np.asarray(target, float)
        if target.ndim == 1:
            target = np.broadcast_to(target, state.q.shape)
        if target.shape != state.q.shape:
            raise ValueError(f"PD target shape {target.shape} != {state.q.shape}")
        if not state.is_finite().all() or not np.isfinite(target).all():
            raise InvalidState("non-finite state or PD target")
        s = state.copy()
        bad = np.zeros(s.n_envs, bool)
        dt = 1.0 / (CONTROL_HZ * substeps)
        self._kern.step_batch(self.arrays, s.root, s.root_vel, s.q, s.qd, s.obj_pose, s.obj_vel,
                              s.obj_wrench, np.ascontiguousarray(target), substeps, dt, s.tau,
                              s.c_active, s.c_point, s.c_normal, s.c_force, s.c_depth, bad)
        # external wrenches last for exactly one control period
        s.obj_wrench[:] = 0.0
        s.time += 1.0 / CONTROL_HZ
        s.steps += 1
        bad |= ~s.is_finite()
        return s, bad

    def step(self, state, target, substeps=None):
        s, bad = self.step_unchecked(state, target, substeps)
        if bad.any():
            ids = np.flatnonzero(bad)
            raise SimulationDiverged(int(s.steps[ids[0]]), ids, s)
        return s

    def apply_wrench(self, state, object_id, force, torque=0.0, env=None):
        """Return a state whose object carries the wrench for the next control period."""
        if isinstance(object_id, str):
            object_id = self.model.object_index(object_id)
        if not (0 <= int(object_id) < self.model.n_objects):
            raise KeyError(f"unknown object id {object_id!r}")
        force = np.asarray(force, float)
        torque = np.asarray(torque, float)
        if not (np.isfinite(force).all() and np.isfinite(torque).all()):
            raise ValueError("wrench must be finite")
        s = state.copy()
        sel = slice(None) if env is None else env
        s.obj_wrench[sel, object_id, :2] += force
        s.obj_wrench[sel, object_id, 2] += torque
        return s

    # -- kinematics / sensing -----------------------------------------
    def link_frames(self, state):
        """World angle (E, nl), frame origin (E, nl, 2) and COM (E, nl, 2) per link."""
        return kernels_numpy.forward_kinematics(self.arrays, state.root, state.q)

    def kinematics(self, root, q):
        return kernels_numpy.forward_kinematics(self.arrays, np.atleast_2d(root), np.atleast_2d(q))

    def points_world(self, state, links, local):
        """World positions of link-local points; links (P,), local (P, 2) -> (E, P, 2)."""
        phi, org, _ = self.link_frames(state)
        links = np.asarray(links, np.int64)
        return org[:, links] + _rot(phi[:, links], np.asarray(local, float)[None])

    def link_velocities(self, state):
        phi, org, cw = self.link_frames(state)
        omega, vorg = kernels_numpy._velocities(self.arrays, state.root_vel, state.qd, org)
        return omega, vorg, org

    def com_velocities(self, state):
        phi, org, cw = self.link_frames(state)
        omega, vorg = kernels_numpy._velocities(self.arrays, state.root_vel, state.qd, org)
        return vorg + omega[..., None] * np.stack([-(cw - org)[..., 1], (cw - org)[..., 0]], -1), omega

    def linear_momentum(self, state):
        v, _ = self.com_velocities(state)
        return (self.arrays.mass[None, :, None] * v).sum(axis=1)

    def energy(self, state):
        """Kinetic + gravitational potential energy of the character (E,)."""
        a = self.arrays
        v, omega = self.com_velocities(state)
        _, _, cw = self.link_frames(state)
        ke = 0.5 * (a.mass[None] * (v ** 2).sum(-1) + a.inertia[None] * omega ** 2).sum(-1)
        ke += 0.5 * (a.armature[None] * state.qd ** 2).sum(-1)
        pe = -(a.mass[None, :, None] * a.gravity[None, None] * cw).sum(axis=(1, 2))
        return ke + pe

    def contact_features(self, state, link_ids, threshold=None):
        """Binary contact flags (E, L) and unit net contact-force directions (E, L, 2).

        A flag is set when any contact on the link carries more than the
        force threshold; the direction is the normalized vector sum of all
        contact forces acting on the link (zero when there is none).
        """
        a = self.arrays
        thr = self.model.params.contact_threshold if threshold is None else threshold
        link_ids = np.atleast_1d(np.asarray(link_ids, np.int64))
        for l in link_ids:
            if not 0 <= l < self.model.n_links:
                raise KeyError(f"unknown link id {l}")
        on_link = (a.cand_kind != 2)[None, :] & state.c_active  # (E, C)
        mag = np.linalg.norm(state.c_force, axis=-1)
        sel = (a.cand_link[None, :, None] == link_ids[None, None, :]) & on_link[..., None]  # (E,C,L)
        flags = ((mag[..., None] > thr) & sel).any(axis=1)
        net = np.einsum("ecl,ecd->eld", sel.astype(float), state.c_force)
        norm = np.linalg.norm(net, axis=-1, keepdims=True)
        direction = np.where(norm > 0, net / np.where(norm > 0, norm, 1.0), 0.0)
        return flags, direction

    def max_penetration(self, state):
        return state.c_depth.max(axis=1) if state.c_depth.shape[1] else np.zeros(state.n_envs)


def export_csv(states, path, env=0):
    """Write one row per recorded control step for world ``env`` (for plotting)."""
    if not states:
        raise ValueError("no states to export")
    s0 = states[0]
    nj, no = s0.q.shape[1], s0.obj_pose.shape[1]
    header = ["time", "root_x", "root_y", "root_theta", "root_vx", "root_vy", "root_omega"]
    header += [f"q{j}" for j in range(nj)] + [f"qd{j}" for j in range(nj)]
    for o in range(no):
        header += [f"obj{o}_x", f"obj{o}_y", f"obj{o}_theta", f"obj{o}_vx", f"obj{o}_vy", f"obj{o}_omega"]
    header += ["n_contacts"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for s in states:
            row = [s.time[env], *s.root[env], *s.root_vel[env], *s.q[env], *s.qd[env]]
            for o in range(no):
                row += [*s.obj_pose[env, o], *s.obj_vel[env, o]]
            row.append(int(s.c_active[env].sum()))
            w.writerow([repr(float(x)) for x in row[:-1]] + [row[-1]])
