"""Pure-Python toy dynamics step.

Reference backend; ``_step_cy.pyx`` is a line-by-line port.  Every
geometric operation here is built from distances, normals and radial
clamps about the z axis so that the step commutes with reflections across
any vertical plane through the origin.
"""

from math import atan2, cos, hypot, sin, sqrt

from ._params import (
    P_DT,
    P_FINGER_MAX,
    P_FINGER_STEP,
    P_GLIDE,
    P_GRASP_TOL,
    P_GRIP_LIMIT_R,
    P_GRIP_R,
    P_HIT,
    P_MAX_STEP,
    P_NSUB,
    P_OBJ_LIMIT_R,
    P_OBJ_R,
    P_OBS_HL,
    P_OBS_HW,
    P_TABLE_Z,
    P_TASK,
    P_Z_HI,
    P_Z_LO,
    TASK_PICK_PLACE,
    TASK_PUSH_OBSTACLE,
    TASK_REACH,
    TASK_SLIDE,
)

BACKEND = "python"


def _clamp_radial(x, y, r):
    n = hypot(x, y)
    if n > r:
        k = r / n
        return x * k, y * k, True
    return x, y, False


def _push_out_of_brick(px, py, rad, cx, cy, c, s, hl, hw):
    """Move a disc of radius ``rad`` out of the oriented rectangle.

    Returns the new centre and whether it moved.
    """
    dx, dy = px - cx, py - cy
    lx = c * dx + s * dy
    ly = -s * dx + c * dy
    qx = min(max(lx, -hl), hl)
    qy = min(max(ly, -hw), hw)
    ex, ey = lx - qx, ly - qy
    d = hypot(ex, ey)
    if d > 0.0:
        if d >= rad:
            return px, py, False
        lx = qx + ex / d * rad
        ly = qy + ey / d * rad
    else:
        if hl - abs(lx) < hw - abs(ly):
            lx = (hl + rad) if lx >= 0.0 else -(hl + rad)
        else:
            ly = (hw + rad) if ly >= 0.0 else -(hw + rad)
    return cx + c * lx - s * ly, cy + s * lx + c * ly, True


def step_into(s, a, p, out):
    """Advance state ``s`` under action ``a``; writes the next state into ``out``."""
    sv = s.tolist() if hasattr(s, "tolist") else list(s)
    av = a.tolist() if hasattr(a, "tolist") else list(a)
    pv = p.tolist() if hasattr(p, "tolist") else list(p)
    task = int(pv[P_TASK])
    dt = pv[P_DT]
    nsub = int(pv[P_NSUB])
    cap = pv[P_MAX_STEP] / nsub
    dts = dt / nsub
    grip_r = pv[P_GRIP_R]
    obj_r = pv[P_OBJ_R]
    rr = grip_r + obj_r
    z_lo, z_hi, table_z = pv[P_Z_LO], pv[P_Z_HI], pv[P_TABLE_Z]
    planar = task != TASK_REACH and task != TASK_PICK_PLACE
    contact = planar

    gx, gy, gz = sv[0], sv[1], sv[2]
    fd = sv[6]
    ox, oy, oz = sv[8], sv[9], sv[10]
    ovx, ovy = sv[14], sv[15]
    g0x, g0y, g0z = gx, gy, gz
    o0x, o0y, o0z = ox, oy, oz

    tx, ty, tz = av[0], av[1], av[2]
    if planar:
        tz = table_z
    tx, ty, _ = _clamp_radial(tx, ty, pv[P_GRIP_LIMIT_R])
    tz = min(max(tz, z_lo), z_hi)

    has_obs = task == TASK_PUSH_OBSTACLE
    if has_obs:
        cx, cy = sv[23], sv[24]
        al, be, ga = sv[26], sv[27], sv[28]
        # brick yaw from the first column of Rx(al) Ry(be) Rz(ga)
        yaw = atan2(cos(al) * sin(ga) + sin(al) * sin(be) * cos(ga), cos(be) * cos(ga))
        bc, bs = cos(yaw), sin(yaw)
        hl, hw = pv[P_OBS_HL], pv[P_OBS_HW]

    held0 = False
    if task == TASK_PICK_PLACE:
        d0 = sqrt((ox - gx) ** 2 + (oy - gy) ** 2 + (oz - gz) ** 2)
        held0 = fd <= 2.0 * obj_r + 1e-12 and d0 < pv[P_GRASP_TOL]

    glide_sub = pv[P_GLIDE] ** (1.0 / nsub)
    hit = pv[P_HIT]
    for _ in range(nsub):
        dx, dy, dz = tx - gx, ty - gy, tz - gz
        d = sqrt(dx * dx + dy * dy + dz * dz)
        if d > cap:
            k = cap / d
            dx, dy, dz = dx * k, dy * k, dz * k
        pgx, pgy = gx, gy
        gx, gy, gz = gx + dx, gy + dy, gz + dz
        gx, gy, _ = _clamp_radial(gx, gy, pv[P_GRIP_LIMIT_R])
        gz = min(max(gz, z_lo), z_hi)
        if has_obs:
            gx, gy, _ = _push_out_of_brick(gx, gy, grip_r, cx, cy, bc, bs, hl, hw)
        if not contact:
            continue
        if task == TASK_SLIDE:
            ox += ovx * dts
            oy += ovy * dts
            ovx *= glide_sub
            ovy *= glide_sub
        ex, ey = ox - gx, oy - gy
        dist = hypot(ex, ey)
        if 0.0 < dist < rr:
            nx, ny = ex / dist, ey / dist
            ox, oy = gx + nx * rr, gy + ny * rr
            if task == TASK_SLIDE:
                vgn = ((gx - pgx) * nx + (gy - pgy) * ny) / dts
                von = ovx * nx + ovy * ny
                if hit * vgn > von:
                    ovx += (hit * vgn - von) * nx
                    ovy += (hit * vgn - von) * ny
        if has_obs:
            ox, oy, _ = _push_out_of_brick(ox, oy, obj_r, cx, cy, bc, bs, hl, hw)
        ox, oy, clamped = _clamp_radial(ox, oy, pv[P_OBJ_LIMIT_R])
        if clamped:
            ovx, ovy = 0.0, 0.0
        ex, ey = ox - gx, oy - gy
        dist = hypot(ex, ey)
        if 0.0 < dist < rr:
            gx, gy = ox - ex / dist * rr, oy - ey / dist * rr
            if has_obs:
                gx, gy, _ = _push_out_of_brick(gx, gy, grip_r, cx, cy, bc, bs, hl, hw)

    fd_new = fd
    if task == TASK_PICK_PLACE:
        ftarget = min(max(av[3], 0.0), pv[P_FINGER_MAX])
        fstep = pv[P_FINGER_STEP]
        fd_new = fd + min(max(ftarget - fd, -fstep), fstep)
        if held0:
            ox, oy, oz = gx, gy, gz
        near = sqrt((ox - gx) ** 2 + (oy - gy) ** 2 + (oz - gz) ** 2) < pv[P_GRASP_TOL]
        held = False
        if near and fd_new <= 2.0 * obj_r:
            fd_new = 2.0 * obj_r
            held = True
        if held:
            ox, oy, oz = gx, gy, gz
        else:
            oz = table_z

    for i in range(len(sv)):
        out[i] = sv[i]
    out[0], out[1], out[2] = gx, gy, gz
    out[3], out[4], out[5] = (gx - g0x) / dt, (gy - g0y) / dt, (gz - g0z) / dt
    out[6] = fd_new
    out[7] = (fd_new - fd) / dt
    out[8], out[9], out[10] = ox, oy, oz
    if task == TASK_SLIDE:
        out[14], out[15], out[16] = ovx, ovy, 0.0
    else:
        out[14], out[15], out[16] = (ox - o0x) / dt, (oy - o0y) / dt, (oz - o0z) / dt
    out[20], out[21], out[22] = ox - gx, oy - gy, oz - gz
    return out
