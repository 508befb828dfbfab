"""Loop-form substep kernels, compiled with numba.

Mirrors ``kernels_numpy`` operation for operation; the two paths agree to
rounding.  All arrays are float64 and are updated in place.
"""
import math

import numpy as np

from .._accel import njit


@njit
def _terrain(m, x):
    n = m.ter_h.shape[0]
    k = math.floor((x - m.ter_x0) / m.ter_dx)
    if k < 0:
        k = 0
    if k > n - 1:
        k = n - 1
    return m.ter_h[int(k)]


@njit
def forward_kinematics(m, root, q, phi, org, cw):
    nl = m.parent.shape[0]
    for i in range(nl):
        if i == 0:
            phi[0] = root[2]
            org[0, 0] = root[0]
            org[0, 1] = root[1]
        else:
            p = m.parent[i]
            c = math.cos(phi[p])
            s = math.sin(phi[p])
            ax = m.anchor[i, 0]
            ay = m.anchor[i, 1]
            org[i, 0] = org[p, 0] + c * ax - s * ay
            org[i, 1] = org[p, 1] + s * ax + c * ay
            phi[i] = phi[p] + m.rest[i] + m.axis[i] * q[m.link_joint[i]]
        c = math.cos(phi[i])
        s = math.sin(phi[i])
        cw[i, 0] = org[i, 0] + c * m.com[i, 0] - s * m.com[i, 1]
        cw[i, 1] = org[i, 1] + s * m.com[i, 0] + c * m.com[i, 1]


@njit
def _velocities(m, root_vel, qd, org, omega, vorg):
    nl = m.parent.shape[0]
    omega[0] = root_vel[2]
    vorg[0, 0] = root_vel[0]
    vorg[0, 1] = root_vel[1]
    for i in range(1, nl):
        p = m.parent[i]
        omega[i] = omega[p] + m.axis[i] * qd[m.link_joint[i]]
        rx = org[i, 0] - org[p, 0]
        ry = org[i, 1] - org[p, 1]
        vorg[i, 0] = vorg[p, 0] - omega[p] * ry
        vorg[i, 1] = vorg[p, 1] + omega[p] * rx


@njit
def _momentum(m, org, cw, omega, vorg):
    px = 0.0
    py = 0.0
    for i in range(m.parent.shape[0]):
        rx = cw[i, 0] - org[i, 0]
        ry = cw[i, 1] - org[i, 1]
        px += m.mass[i] * (vorg[i, 0] - omega[i] * ry)
        py += m.mass[i] * (vorg[i, 1] + omega[i] * rx)
    return px, py


@njit
def _add_point_force(m, i, x, y, fx, fy, org, Q):
    Q[0] += fx
    Q[1] += fy
    Q[2] += (x - org[0, 0]) * fy - (y - org[0, 1]) * fx
    l = i
    while l > 0:
        Q[3 + m.link_joint[l]] += m.axis[l] * ((x - org[l, 0]) * fy - (y - org[l, 1]) * fx)
        l = m.parent[l]


@njit
def _mass_matrix(m, org, cw, M, dofs, jx, jy, jw):
    nl = m.parent.shape[0]
    N = M.shape[0]
    for a in range(N):
        for b in range(N):
            M[a, b] = 0.0
    for i in range(nl):
        n = 3
        dofs[0] = 0
        jx[0] = 1.0
        jy[0] = 0.0
        jw[0] = 0.0
        dofs[1] = 1
        jx[1] = 0.0
        jy[1] = 1.0
        jw[1] = 0.0
        dofs[2] = 2
        jx[2] = -(cw[i, 1] - org[0, 1])
        jy[2] = cw[i, 0] - org[0, 0]
        jw[2] = 1.0
        l = i
        while l > 0:
            ax = m.axis[l]
            dofs[n] = 3 + m.link_joint[l]
            jx[n] = -ax * (cw[i, 1] - org[l, 1])
            jy[n] = ax * (cw[i, 0] - org[l, 0])
            jw[n] = ax
            n += 1
            l = m.parent[l]
        mi = m.mass[i]
        Ii = m.inertia[i]
        for a in range(n):
            for b in range(n):
                M[dofs[a], dofs[b]] += mi * (jx[a] * jx[b] + jy[a] * jy[b]) + Ii * jw[a] * jw[b]
    for j in range(m.armature.shape[0]):
        M[3 + j, 3 + j] += m.armature[j]


LIMIT_PASSES = 3
CONTACT_ITERS = 4


@njit
def _cholesky_factor(A, n, L):
    # A is SPD; only the leading n x n block is used
    for i in range(n):
        for j in range(i + 1):
            s = A[i, j]
            for k in range(j):
                s -= L[i, k] * L[j, k]
            if i == j:
                L[i, i] = math.sqrt(s) if s > 0.0 else 1e-300
            else:
                L[i, j] = s / L[j, j]


@njit
def _cholesky_apply(L, b, n, y, x):
    for i in range(n):
        s = b[i]
        for k in range(i):
            s -= L[i, k] * y[k]
        y[i] = s / L[i, i]
    for i in range(n - 1, -1, -1):
        s = y[i]
        for k in range(i + 1, n):
            s -= L[k, i] * x[k]
        x[i] = s / L[i, i]


@njit
def _cholesky_solve(A, b, n, L, y, x):
    _cholesky_factor(A, n, L)
    _cholesky_apply(L, b, n, y, x)


@njit
def _contact_geometry(m, c, phi, org, obj_pose):
    """Penetration, unit normal (towards the first body) and contact point."""
    kind = m.cand_kind[c]
    i = m.cand_link[c]
    o = m.cand_obj[c]
    pen = -1.0
    nx = 0.0
    ny = 1.0
    px = 0.0
    py = 0.0
    if kind == 0:
        cs = math.cos(phi[i])
        sn = math.sin(phi[i])
        if m.cand_end[c] == 0:
            lx = m.cap_a[i, 0]
            ly = m.cap_a[i, 1]
        else:
            lx = m.cap_b[i, 0]
            ly = m.cap_b[i, 1]
        ex = org[i, 0] + cs * lx - sn * ly
        ey = org[i, 1] + sn * lx + cs * ly
        r = m.cap_r[i]
        pen = r - (ey - _terrain(m, ex))
        px = ex
        py = ey - (r - 0.5 * pen)
    elif kind == 1:
        cs = math.cos(phi[i])
        sn = math.sin(phi[i])
        ax_ = org[i, 0] + cs * m.cap_a[i, 0] - sn * m.cap_a[i, 1]
        ay_ = org[i, 1] + sn * m.cap_a[i, 0] + cs * m.cap_a[i, 1]
        bx_ = org[i, 0] + cs * m.cap_b[i, 0] - sn * m.cap_b[i, 1]
        by_ = org[i, 1] + sn * m.cap_b[i, 0] + cs * m.cap_b[i, 1]
        cx = obj_pose[o, 0]
        cy = obj_pose[o, 1]
        dx = bx_ - ax_
        dy = by_ - ay_
        ll = dx * dx + dy * dy
        t = 0.0
        if ll > 1e-18:
            t = ((cx - ax_) * dx + (cy - ay_) * dy) / ll
            if t < 0.0:
                t = 0.0
            elif t > 1.0:
                t = 1.0
        sx = ax_ + t * dx
        sy = ay_ + t * dy
        dist = math.sqrt((sx - cx) ** 2 + (sy - cy) ** 2)
        ro = m.obj_radius[o]
        if dist > 1e-12:
            pen = m.cap_r[i] + ro - dist
            nx = (sx - cx) / dist
            ny = (sy - cy) / dist
        px = cx + nx * (ro - 0.5 * pen)
        py = cy + ny * (ro - 0.5 * pen)
    else:
        cx = obj_pose[o, 0]
        cy = obj_pose[o, 1]
        ro = m.obj_radius[o]
        pen = ro - (cy - _terrain(m, cx))
        px = cx
        py = cy - (ro - 0.5 * pen)
    return pen, nx, ny, px, py


@njit
def _obj_row(nj, o, cx, cy, x, y, dx, dy, row, sign):
    b = 3 + nj + 3 * o
    row[b] += sign * dx
    row[b + 1] += sign * dy
    row[b + 2] += sign * ((x - cx) * dy - (y - cy) * dx)


@njit
def _contact_row(m, c, nj, x, y, dx, dy, org, obj_pose, row):
    """Generalized force of a unit force (dx, dy) on the first body and its
    reaction on the second; equivalently the relative-velocity Jacobian row."""
    for k in range(row.shape[0]):
        row[k] = 0.0
    kind = m.cand_kind[c]
    o = m.cand_obj[c]
    if kind == 0 or kind == 1:
        _add_point_force(m, m.cand_link[c], x, y, dx, dy, org, row)
    if kind == 1:
        _obj_row(nj, o, obj_pose[o, 0], obj_pose[o, 1], x, y, dx, dy, row, -1.0)
    elif kind == 2:
        _obj_row(nj, o, obj_pose[o, 0], obj_pose[o, 1], x, y, dx, dy, row, 1.0)


@njit
def _dot(a, b):
    s = 0.0
    for k in range(a.shape[0]):
        s += a[k] * b[k]
    return s


@njit
def _substep(m, root, root_vel, q, qd, obj_pose, obj_vel, obj_wrench, target, dt,
             tau, c_active, c_point, c_normal, c_force, c_depth,
             phi, org, cw, omega, vorg, aorg, M, A, Q0, Q, u, dofs, jx, jy, jw,
             free, Af, Qf, L, yv, xv, acc, RN, RT, cpen, ccoef, cmode, cft, cx, cy, cnx, cny, on):
    nl = m.parent.shape[0]
    nj = q.shape[0]
    no = obj_pose.shape[0]
    N = 3 + nj
    NT = N + 3 * no
    nc = m.cand_kind.shape[0]
    gx = m.gravity[0]
    gy = m.gravity[1]

    for d in range(3):
        if m.root_lock[d]:
            root_vel[d] = 0.0
    for o in range(no):
        for d in range(3):
            if m.obj_lock[o, d]:
                obj_vel[o, d] = 0.0

    forward_kinematics(m, root, q, phi, org, cw)
    _velocities(m, root_vel, qd, org, omega, vorg)
    p0x, p0y = _momentum(m, org, cw, omega, vorg)

    for d in range(3):
        u[d] = root_vel[d]
    for j in range(nj):
        u[3 + j] = qd[j]
    for o in range(no):
        for d in range(3):
            u[N + 3 * o + d] = obj_vel[o, d]

    # velocity-product and gravity terms, applied as point forces at each COM
    for k in range(NT):
        Q0[k] = 0.0
    aorg[0, 0] = 0.0
    aorg[0, 1] = 0.0
    mt = 0.0
    for i in range(nl):
        if i > 0:
            p = m.parent[i]
            w2 = omega[p] * omega[p]
            aorg[i, 0] = aorg[p, 0] - w2 * (org[i, 0] - org[p, 0])
            aorg[i, 1] = aorg[p, 1] - w2 * (org[i, 1] - org[p, 1])
        w2 = omega[i] * omega[i]
        acx = aorg[i, 0] - w2 * (cw[i, 0] - org[i, 0])
        acy = aorg[i, 1] - w2 * (cw[i, 1] - org[i, 1])
        mi = m.mass[i]
        _add_point_force(m, i, cw[i, 0], cw[i, 1], mi * (gx - acx), mi * (gy - acy), org, Q0)
        mt += mi
    fext_x = mt * gx
    fext_y = mt * gy

    for j in range(nj):
        t = m.kp[j] * (target[j] - q[j]) - m.kd[j] * qd[j]
        lim = m.tau_lim[j]
        if t > lim:
            t = lim
        elif t < -lim:
            t = -lim
        tau[j] = t
        Q0[3 + j] += t

    for o in range(no):
        b = N + 3 * o
        Q0[b] += obj_wrench[o, 0] - m.obj_lin_damp[o] * obj_vel[o, 0]
        Q0[b + 1] += obj_wrench[o, 1] - m.obj_lin_damp[o] * obj_vel[o, 1]
        Q0[b + 2] += obj_wrench[o, 2] - m.obj_ang_damp[o] * obj_vel[o, 2]
        if m.obj_gravity[o]:
            Q0[b] += m.obj_mass[o] * gx
            Q0[b + 1] += m.obj_mass[o] * gy

    # contact candidates: geometry and the velocity-independent force model
    for c in range(nc):
        pen, nx, ny, px, py = _contact_geometry(m, c, phi, org, obj_pose)
        on[c] = False
        c_active[c] = False
        c_point[c, 0] = 0.0
        c_point[c, 1] = 0.0
        c_normal[c, 0] = 0.0
        c_normal[c, 1] = 0.0
        c_force[c, 0] = 0.0
        c_force[c, 1] = 0.0
        c_depth[c] = 0.0
        if not pen > 0.0:
            continue
        _contact_row(m, c, nj, px, py, nx, ny, org, obj_pose, RN[c])
        _contact_row(m, c, nj, px, py, -ny, nx, org, obj_pose, RT[c])
        vn = _dot(RN[c], u)
        vt = _dot(RT[c], u)
        fn_est = m.kn * pen - m.kdn * vn
        if fn_est <= 0.0:
            continue
        on[c] = True
        cpen[c] = pen
        ccoef[c] = m.kn * dt + m.kdn
        cap = m.mu * fn_est
        ft_est = -m.kt * vt
        if abs(ft_est) <= cap:
            cmode[c] = 1
            cft[c] = 0.0
        else:
            cmode[c] = 0
            cft[c] = cap if ft_est > 0.0 else -cap
        cx[c] = px
        cy[c] = py
        cnx[c] = nx
        cny[c] = ny

    # linearly implicit contact springs/dampers; contacts whose normal force
    # comes out pulling are dropped and the system is solved again
    _mass_matrix(m, org, cw, M, dofs, jx, jy, jw)
    nf = 0
    for d in range(NT):
        if d < 3 and m.root_lock[d]:
            continue
        if d >= N and m.obj_lock[(d - N) // 3, (d - N) % 3]:
            continue
        free[nf] = d
        nf += 1

    for it in range(CONTACT_ITERS):
        for a in range(NT):
            Q[a] = Q0[a]
            for b in range(NT):
                A[a, b] = M[a, b] if (a < N and b < N) else 0.0
        for o in range(no):
            b = N + 3 * o
            A[b, b] = m.obj_mass[o]
            A[b + 1, b + 1] = m.obj_mass[o]
            A[b + 2, b + 2] = m.obj_inertia[o]
        for c in range(nc):
            if not on[c]:
                continue
            vn = _dot(RN[c], u)
            k = ccoef[c]
            fn0 = m.kn * cpen[c] - k * vn
            for a in range(NT):
                ra = RN[c, a]
                if ra == 0.0:
                    continue
                Q[a] += ra * fn0
                for b in range(NT):
                    A[a, b] += dt * k * ra * RN[c, b]
            if cmode[c] == 1:
                vt = _dot(RT[c], u)
                for a in range(NT):
                    ra = RT[c, a]
                    if ra == 0.0:
                        continue
                    Q[a] -= ra * m.kt * vt
                    for b in range(NT):
                        A[a, b] += dt * m.kt * ra * RT[c, b]
            else:
                for a in range(NT):
                    Q[a] += RT[c, a] * cft[c]
        for a in range(nf):
            Qf[a] = Q[free[a]]
            for b in range(nf):
                Af[a, b] = A[free[a], free[b]]
        _cholesky_solve(Af, Qf, nf, L, yv, xv)
        for d in range(NT):
            acc[d] = 0.0
        for a in range(nf):
            acc[free[a]] = xv[a]
        pulling = False
        for c in range(nc):
            if on[c]:
                vn1 = 0.0
                for a in range(NT):
                    vn1 += RN[c, a] * (u[a] + dt * acc[a])
                if m.kn * cpen[c] - ccoef[c] * vn1 < 0.0:
                    pulling = True
        if not pulling or it == CONTACT_ITERS - 1:
            break
        for c in range(nc):
            if on[c]:
                vn1 = 0.0
                for a in range(NT):
                    vn1 += RN[c, a] * (u[a] + dt * acc[a])
                if m.kn * cpen[c] - ccoef[c] * vn1 < 0.0:
                    on[c] = False

    for d in range(NT):
        u[d] += dt * acc[d]

    # record the forces actually applied, evaluated at the new velocities
    for c in range(nc):
        if not on[c]:
            continue
        fn = m.kn * cpen[c] - ccoef[c] * _dot(RN[c], u)
        if fn < 0.0:
            fn = 0.0
        if cmode[c] == 1:
            ft = -m.kt * _dot(RT[c], u)
        else:
            ft = cft[c]
        fx = fn * cnx[c] - ft * cny[c]
        fy = fn * cny[c] + ft * cnx[c]
        c_active[c] = True
        c_point[c, 0] = cx[c]
        c_point[c, 1] = cy[c]
        c_normal[c, 0] = cnx[c]
        c_normal[c, 1] = cny[c]
        c_force[c, 0] = fx
        c_force[c, 1] = fy
        c_depth[c] = cpen[c]
        if m.cand_kind[c] != 2:
            fext_x += fx
            fext_y += fy

    # joint limits: inelastic impulses along the joint coordinate, routed
    # through the inverse system matrix so momentum is kept and energy never grows
    for _ in range(LIMIT_PASSES):
        for a in range(nf):
            d = free[a]
            if d < 3 or d >= N:
                continue
            j = d - 3
            qn = q[j] + dt * u[d]
            if qn < m.q_lo[j]:
                dv = (m.q_lo[j] - q[j]) / dt - u[d]
            elif qn > m.q_hi[j]:
                dv = (m.q_hi[j] - q[j]) / dt - u[d]
            else:
                continue
            for b in range(nf):
                Qf[b] = 0.0
            Qf[a] = 1.0
            _cholesky_apply(L, Qf, nf, yv, xv)
            lam = dv / xv[a]
            for b in range(nf):
                u[free[b]] += lam * xv[b]

    for d in range(3):
        if not m.root_lock[d]:
            root_vel[d] = u[d]
        root[d] += dt * root_vel[d]
    for j in range(nj):
        qd[j] = u[3 + j]
        q[j] += dt * qd[j]
        if q[j] < m.q_lo[j]:
            q[j] = m.q_lo[j]
        elif q[j] > m.q_hi[j]:
            q[j] = m.q_hi[j]
    for o in range(no):
        for d in range(3):
            if not m.obj_lock[o, d]:
                obj_vel[o, d] = u[N + 3 * o + d]
            obj_pose[o, d] += dt * obj_vel[o, d]

    # remove the discretization drift of the character's linear momentum
    if not (m.root_lock[0] and m.root_lock[1]):
        forward_kinematics(m, root, q, phi, org, cw)
        _velocities(m, root_vel, qd, org, omega, vorg)
        p1x, p1y = _momentum(m, org, cw, omega, vorg)
        if not m.root_lock[0]:
            root_vel[0] += (p0x + dt * fext_x - p1x) / mt
        if not m.root_lock[1]:
            root_vel[1] += (p0y + dt * fext_y - p1y) / mt


@njit
def step_batch(m, root, root_vel, q, qd, obj_pose, obj_vel, obj_wrench, target, nsub, dt,
               tau, c_active, c_point, c_normal, c_force, c_depth, bad):
    E = root.shape[0]
    nl = m.parent.shape[0]
    nj = q.shape[1]
    no = obj_pose.shape[1]
    N = 3 + nj
    NT = N + 3 * no
    nc = m.cand_kind.shape[0]
    phi = np.zeros(nl)
    org = np.zeros((nl, 2))
    cw = np.zeros((nl, 2))
    omega = np.zeros(nl)
    vorg = np.zeros((nl, 2))
    aorg = np.zeros((nl, 2))
    M = np.zeros((N, N))
    A = np.zeros((NT, NT))
    Q0 = np.zeros(NT)
    Q = np.zeros(NT)
    u = np.zeros(NT)
    dofs = np.zeros(nl + 3, np.int64)
    jx = np.zeros(nl + 3)
    jy = np.zeros(nl + 3)
    jw = np.zeros(nl + 3)
    free = np.zeros(NT, np.int64)
    Af = np.zeros((NT, NT))
    Qf = np.zeros(NT)
    L = np.zeros((NT, NT))
    yv = np.zeros(NT)
    xv = np.zeros(NT)
    acc = np.zeros(NT)
    RN = np.zeros((max(nc, 1), NT))
    RT = np.zeros((max(nc, 1), NT))
    cpen = np.zeros(max(nc, 1))
    ccoef = np.zeros(max(nc, 1))
    cmode = np.zeros(max(nc, 1), np.int64)
    cft = np.zeros(max(nc, 1))
    cx = np.zeros(max(nc, 1))
    cy = np.zeros(max(nc, 1))
    cnx = np.zeros(max(nc, 1))
    cny = np.zeros(max(nc, 1))
    on = np.zeros(max(nc, 1), np.bool_)
    for e in range(E):
        for _ in range(nsub):
            _substep(m, root[e], root_vel[e], q[e], qd[e], obj_pose[e], obj_vel[e], obj_wrench[e],
                     target[e], dt, tau[e], c_active[e], c_point[e], c_normal[e], c_force[e],
                     c_depth[e], phi, org, cw, omega, vorg, aorg, M, A, Q0, Q, u, dofs, jx, jy, jw,
                     free, Af, Qf, L, yv, xv, acc, RN, RT, cpen, ccoef, cmode, cft, cx, cy, cnx,
                     cny, on)
        ok = True
        for d in range(3):
            if not (abs(root[e, d]) < 1e12 and abs(root_vel[e, d]) < m.max_speed):
                ok = False
        for j in range(nj):
            if not (abs(q[e, j]) < 1e12 and abs(qd[e, j]) < m.max_speed):
                ok = False
        for o in range(no):
            for d in range(3):
                if not (abs(obj_pose[e, o, d]) < 1e12 and abs(obj_vel[e, o, d]) < m.max_speed):
                    ok = False
        bad[e] = not ok


@njit
def kinematics_batch(m, root, q, phi, org, cw):
    for e in range(root.shape[0]):
        forward_kinematics(m, root[e], q[e], phi[e], org[e], cw[e])
