"""Vectorized pure-numpy substep kernels (batch axis first).

Same contract as ``kernels_numba``: arrays are updated in place.
"""
import numpy as np

LIMIT_PASSES = 3
CONTACT_ITERS = 4


def _perp(v):
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


def _cross(r, f):
    return r[..., 0] * f[..., 1] - r[..., 1] * f[..., 0]


def _rotate(phi, v):
    c, s = np.cos(phi), np.sin(phi)
    return np.stack([c * v[..., 0] - s * v[..., 1], s * v[..., 0] + c * v[..., 1]], axis=-1)


def _terrain(m, x):
    k = np.clip(np.floor((x - m.ter_x0) / m.ter_dx), 0, len(m.ter_h) - 1).astype(np.int64)
    return m.ter_h[k]


def forward_kinematics(m, root, q):
    E, nl = root.shape[0], len(m.parent)
    phi = np.empty((E, nl))
    org = np.empty((E, nl, 2))
    for i in range(nl):
        if i == 0:
            phi[:, 0] = root[:, 2]
            org[:, 0] = root[:, :2]
        else:
            p = m.parent[i]
            org[:, i] = org[:, p] + _rotate(phi[:, p], m.anchor[i])
            phi[:, i] = phi[:, p] + m.rest[i] + m.axis[i] * q[:, m.link_joint[i]]
    cw = org + _rotate(phi, m.com[None])
    return phi, org, cw


def _velocities(m, root_vel, qd, org):
    E, nl = root_vel.shape[0], len(m.parent)
    omega = np.empty((E, nl))
    vorg = np.empty((E, nl, 2))
    omega[:, 0] = root_vel[:, 2]
    vorg[:, 0] = root_vel[:, :2]
    for i in range(1, nl):
        p = m.parent[i]
        omega[:, i] = omega[:, p] + m.axis[i] * qd[:, m.link_joint[i]]
        vorg[:, i] = vorg[:, p] + omega[:, p, None] * _perp(org[:, i] - org[:, p])
    return omega, vorg


def _momentum(m, org, cw, omega, vorg):
    v = vorg + omega[..., None] * _perp(cw - org)
    return (m.mass[None, :, None] * v).sum(axis=1)


def _joint_weights(m, links):
    """(n_pts, nl) weights: axis of each ancestor joint link, 0 elsewhere."""
    w = m.anc[links].astype(float) * m.axis[None, :]
    w[:, 0] = 0.0
    return w


def _point_forces_to_generalized(m, org, links, pts, forces):
    """Q contribution of point forces; links (P,), pts/forces (E, P, 2)."""
    E = org.shape[0]
    nj = len(m.joint_link)
    Q = np.zeros((E, 3 + nj))
    if len(links) == 0:
        return Q
    Q[:, 0] = forces[..., 0].sum(axis=1)
    Q[:, 1] = forces[..., 1].sum(axis=1)
    Q[:, 2] = _cross(pts - org[:, None, 0], forces).sum(axis=1)
    w = _joint_weights(m, links)  # (P, nl)
    torque = _cross(pts[:, :, None, :] - org[:, None, :, :], forces[:, :, None, :])  # (E,P,nl)
    per_link = (torque * w[None]).sum(axis=1)  # (E, nl)
    Q[:, 3:] = per_link[:, m.joint_link]
    return Q


def _mass_matrix(m, org, cw):
    E, nl = org.shape[:2]
    nj = len(m.joint_link)
    N = 3 + nj
    Jc = np.zeros((E, nl, 2, N))
    Jw = np.zeros((nl, N))
    Jc[:, :, 0, 0] = 1.0
    Jc[:, :, 1, 1] = 1.0
    Jc[:, :, :, 2] = _perp(cw - org[:, None, 0])
    Jw[:, 2] = 1.0
    w = _joint_weights(m, np.arange(nl))  # (nl, nl)
    rel = _perp(cw[:, :, None, :] - org[:, None, :, :]) * w[None, :, :, None]  # (E,nl,nl,2)
    Jc[:, :, :, 3:] = np.moveaxis(rel[:, :, m.joint_link, :], -1, 2)
    Jw[:, 3:] = w[:, m.joint_link]
    M = np.einsum("i,eidk,eidl->ekl", m.mass, Jc, Jc)
    M += np.einsum("i,ik,il->kl", m.inertia, Jw, Jw)[None]
    M[:, 3:, 3:] += np.diag(m.armature)[None]
    return M


def _contacts(m, phi, org, obj_pose):
    """Penetration (E, C), unit normals towards the first body and contact points."""
    E = phi.shape[0]
    C = len(m.cand_kind)
    pen = np.full((E, C), -1.0)
    n = np.zeros((E, C, 2))
    n[..., 1] = 1.0
    p = np.zeros((E, C, 2))
    if C == 0:
        return pen, n, p

    k0 = np.flatnonzero(m.cand_kind == 0)
    if len(k0):
        li = m.cand_link[k0]
        local = np.where((m.cand_end[k0] == 0)[:, None], m.cap_a[li], m.cap_b[li])
        e = org[:, li] + _rotate(phi[:, li], local[None])
        r = m.cap_r[li][None]
        pen0 = r - (e[..., 1] - _terrain(m, e[..., 0]))
        pen[:, k0] = pen0
        p[:, k0] = np.stack([e[..., 0], e[..., 1] - (r - 0.5 * pen0)], axis=-1)

    k1 = np.flatnonzero(m.cand_kind == 1)
    if len(k1):
        li, oi = m.cand_link[k1], m.cand_obj[k1]
        a = org[:, li] + _rotate(phi[:, li], m.cap_a[li][None])
        b = org[:, li] + _rotate(phi[:, li], m.cap_b[li][None])
        c = obj_pose[:, oi, :2]
        d = b - a
        ll = (d * d).sum(-1)
        safe = np.where(ll > 1e-18, ll, 1.0)
        t = np.where(ll > 1e-18, np.clip(((c - a) * d).sum(-1) / safe, 0.0, 1.0), 0.0)
        s = a + t[..., None] * d
        dist = np.sqrt(((s - c) ** 2).sum(-1))
        ok = dist > 1e-12
        ro = m.obj_radius[oi][None]
        pen1 = np.where(ok, m.cap_r[li][None] + ro - dist, -1.0)
        n1 = np.where(ok[..., None], (s - c) / np.where(ok, dist, 1.0)[..., None], np.array([0.0, 1.0]))
        pen[:, k1] = pen1
        n[:, k1] = n1
        p[:, k1] = c + n1 * (ro - 0.5 * pen1)[..., None]

    k2 = np.flatnonzero(m.cand_kind == 2)
    if len(k2):
        oi = m.cand_obj[k2]
        c = obj_pose[:, oi, :2]
        ro = m.obj_radius[oi][None]
        pen2 = ro - (c[..., 1] - _terrain(m, c[..., 0]))
        pen[:, k2] = pen2
        p[:, k2] = np.stack([c[..., 0], c[..., 1] - (ro - 0.5 * pen2)], axis=-1)
    return pen, n, p


def _contact_rows(m, org, obj_pose, p, d, nj, NT):
    """(E, C, NT) generalized force of unit force ``d`` on each candidate's
    first body plus its reaction on the second."""
    E, C = p.shape[:2]
    rows = np.zeros((E, C, NT))
    N = 3 + nj
    kl = np.flatnonzero(m.cand_kind != 2)
    if len(kl):
        pk, dk = p[:, kl], d[:, kl]
        rows[:, kl, 0] = dk[..., 0]
        rows[:, kl, 1] = dk[..., 1]
        rows[:, kl, 2] = _cross(pk - org[:, None, 0], dk)
        if nj:
            w = _joint_weights(m, m.cand_link[kl])  # (Ck, nl)
            torque = _cross(pk[:, :, None, :] - org[:, None, :, :], dk[:, :, None, :]) * w[None]
            rows[:, kl[:, None], 3 + m.link_joint[None, 1:]] = torque[:, :, 1:]
    for kind, sign in ((1, -1.0), (2, 1.0)):
        ks = np.flatnonzero(m.cand_kind == kind)
        if not len(ks):
            continue
        oi = m.cand_obj[ks]
        cols = N + 3 * oi
        dk = d[:, ks]
        rows[:, ks, cols] += sign * dk[..., 0]
        rows[:, ks, cols + 1] += sign * dk[..., 1]
        rows[:, ks, cols + 2] += sign * _cross(p[:, ks] - obj_pose[:, oi, :2], dk)
    return rows


def _substep(m, root, root_vel, q, qd, obj_pose, obj_vel, obj_wrench, target, dt,
             tau, c_active, c_point, c_normal, c_force, c_depth):
    E = root.shape[0]
    nl, nj, no = len(m.parent), q.shape[1], obj_pose.shape[1]
    N = 3 + nj
    NT = N + 3 * no
    C = len(m.cand_kind)
    g = m.gravity
    root_vel[:, m.root_lock] = 0.0
    if no:
        obj_vel[:, m.obj_lock] = 0.0

    phi, org, cw = forward_kinematics(m, root, q)
    omega, vorg = _velocities(m, root_vel, qd, org)
    p0 = _momentum(m, org, cw, omega, vorg)
    u = np.concatenate([root_vel, qd, obj_vel.reshape(E, -1)], axis=1)

    # velocity-product and gravity terms, applied as point forces at each COM
    aorg = np.zeros((E, nl, 2))
    for i in range(1, nl):
        pa = m.parent[i]
        aorg[:, i] = aorg[:, pa] - omega[:, pa, None] ** 2 * (org[:, i] - org[:, pa])
    ac = aorg - omega[..., None] ** 2 * (cw - org)
    body_f = m.mass[None, :, None] * (g[None, None] - ac)
    Q0 = np.zeros((E, NT))
    Q0[:, :N] = _point_forces_to_generalized(m, org, np.arange(nl), cw, body_f)
    mt = m.mass.sum()
    fext = np.broadcast_to(mt * g, (E, 2)).copy()

    t = np.clip(m.kp * (target - q) - m.kd * qd, -m.tau_lim, m.tau_lim)
    tau[:] = t
    Q0[:, 3:N] += t

    if no:
        obj_f = obj_wrench.copy()
        obj_f[..., :2] -= m.obj_lin_damp[None, :, None] * obj_vel[..., :2]
        obj_f[..., 2] -= m.obj_ang_damp[None, :] * obj_vel[..., 2]
        obj_f[..., :2] += (m.obj_gravity * m.obj_mass)[None, :, None] * g[None, None]
        Q0[:, N:] = obj_f.reshape(E, -1)

    A0 = np.zeros((E, NT, NT))
    A0[:, :N, :N] = _mass_matrix(m, org, cw)
    for o in range(no):
        b = N + 3 * o
        A0[:, b, b] = A0[:, b + 1, b + 1] = m.obj_mass[o]
        A0[:, b + 2, b + 2] = m.obj_inertia[o]

    on = np.zeros((E, C), bool)
    if C:
        pen, n, p = _contacts(m, phi, org, obj_pose)
        tvec = _perp(n)
        RN = _contact_rows(m, org, obj_pose, p, n, nj, NT)
        RT = _contact_rows(m, org, obj_pose, p, tvec, nj, NT)
        vn = np.einsum("eca,ea->ec", RN, u)
        vt = np.einsum("eca,ea->ec", RT, u)
        fn_est = m.kn * pen - m.kdn * vn
        on = (pen > 0.0) & (fn_est > 0.0)
        coef = m.kn * dt + m.kdn
        cap = m.mu * fn_est
        ft_est = -m.kt * vt
        implicit_t = np.abs(ft_est) <= cap
        ft_fixed = np.where(ft_est > 0.0, cap, -cap)
        fn0 = m.kn * pen - coef * vn

    lock = np.concatenate([m.root_lock, np.zeros(nj, bool), m.obj_lock.reshape(-1)])
    free = np.flatnonzero(~lock)
    acc = np.zeros((E, NT))
    for it in range(CONTACT_ITERS):
        A = A0.copy()
        Q = Q0.copy()
        if C:
            kn_w = np.where(on, coef, 0.0)
            kt_w = np.where(on & implicit_t, m.kt, 0.0)
            A += dt * np.einsum("ec,eca,ecb->eab", kn_w, RN, RN)
            A += dt * np.einsum("ec,eca,ecb->eab", kt_w, RT, RT)
            Q += np.einsum("ec,eca->ea", np.where(on, fn0, 0.0), RN)
            ft_applied = np.where(on, np.where(implicit_t, -m.kt * vt, ft_fixed), 0.0)
            Q += np.einsum("ec,eca->ea", ft_applied, RT)
        Af = A[:, free][:, :, free]
        acc = np.zeros((E, NT))
        acc[:, free] = np.linalg.solve(Af, Q[:, free][..., None])[..., 0]
        if not C:
            break
        vn1 = np.einsum("eca,ea->ec", RN, u + dt * acc)
        pulling = on & (m.kn * pen - coef * vn1 < 0.0)
        if not pulling.any() or it == CONTACT_ITERS - 1:
            break
        on = on & ~pulling

    u = u + dt * acc

    if C:
        fn = np.maximum(m.kn * pen - coef * np.einsum("eca,ea->ec", RN, u), 0.0)
        ft = np.where(implicit_t, -m.kt * np.einsum("eca,ea->ec", RT, u), ft_fixed)
        f = np.where(on[..., None], fn[..., None] * n + ft[..., None] * tvec, 0.0)
        c_active[:] = on
        c_point[:] = np.where(on[..., None], p, 0.0)
        c_normal[:] = np.where(on[..., None], n, 0.0)
        c_force[:] = f
        c_depth[:] = np.where(on, pen, 0.0)
        fext += f[:, m.cand_kind != 2].sum(axis=1)

    # joint limits: inelastic impulses through the inverse system matrix
    if nj:
        Minv = np.linalg.inv(Af)
        nr = int((~m.root_lock).sum())
        rows = np.arange(E)
        uf = u[:, free]
        for _ in range(LIMIT_PASSES):
            for j in range(nj):
                a = nr + j
                qn = q[:, j] + dt * uf[:, a]
                dv = np.where(qn < m.q_lo[j], (m.q_lo[j] - q[:, j]) / dt - uf[:, a],
                              np.where(qn > m.q_hi[j], (m.q_hi[j] - q[:, j]) / dt - uf[:, a], 0.0))
                if not dv.any():
                    continue
                col = Minv[:, :, a]
                uf = uf + (dv / col[rows, a])[:, None] * col
        u[:, free] = uf

    rfree = ~m.root_lock
    root_vel[:, rfree] = u[:, :3][:, rfree]
    root += dt * root_vel
    qd[:] = u[:, 3:N]
    q += dt * qd
    q[:] = np.clip(q, m.q_lo, m.q_hi)
    if no:
        ov = u[:, N:].reshape(E, no, 3)
        obj_vel[:] = np.where(m.obj_lock[None], obj_vel, ov)
        obj_pose += dt * obj_vel

    # remove the discretization drift of the character's linear momentum
    if not (m.root_lock[0] and m.root_lock[1]):
        phi, org, cw = forward_kinematics(m, root, q)
        omega, vorg = _velocities(m, root_vel, qd, org)
        p1 = _momentum(m, org, cw, omega, vorg)
        corr = (p0 + dt * fext - p1) / mt
        for d in (0, 1):
            if not m.root_lock[d]:
                root_vel[:, d] += corr[:, d]


def step_batch(m, root, root_vel, q, qd, obj_pose, obj_vel, obj_wrench, target, nsub, dt,
               tau, c_active, c_point, c_normal, c_force, c_depth, bad):
    for _ in range(nsub):
        _substep(m, root, root_vel, q, qd, obj_pose, obj_vel, obj_wrench, target, dt,
                 tau, c_active, c_point, c_normal, c_force, c_depth)
    E = root.shape[0]
    lim = m.max_speed
    ok = (np.abs(root) < 1e12).all(1) & (np.abs(root_vel) < lim).all(1)
    ok &= (np.abs(q) < 1e12).all(1) & (np.abs(qd) < lim).all(1)
    ok &= (np.abs(obj_pose.reshape(E, -1)) < 1e12).all(1) & (np.abs(obj_vel.reshape(E, -1)) < lim).all(1)
    bad[:] = ~ok
