# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled toy dynamics step; a line-by-line port of ``_step_py``."""

from libc.math cimport atan2, cos, fabs, hypot, pow, sin, sqrt

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

BACKEND = "cython"

cdef int _P_DT = P_DT, _P_FINGER_MAX = P_FINGER_MAX, _P_FINGER_STEP = P_FINGER_STEP
cdef int _P_GLIDE = P_GLIDE, _P_GRASP_TOL = P_GRASP_TOL, _P_GRIP_LIMIT_R = P_GRIP_LIMIT_R
cdef int _P_GRIP_R = P_GRIP_R, _P_HIT = P_HIT, _P_MAX_STEP = P_MAX_STEP, _P_NSUB = P_NSUB
cdef int _P_OBJ_LIMIT_R = P_OBJ_LIMIT_R, _P_OBJ_R = P_OBJ_R, _P_OBS_HL = P_OBS_HL
cdef int _P_OBS_HW = P_OBS_HW, _P_TABLE_Z = P_TABLE_Z, _P_TASK = P_TASK
cdef int _P_Z_HI = P_Z_HI, _P_Z_LO = P_Z_LO
cdef int _PICK = TASK_PICK_PLACE, _OBST = TASK_PUSH_OBSTACLE, _REACH = TASK_REACH, _SLIDE = TASK_SLIDE


cdef inline double _clip(double x, double lo, double hi) nogil:
    return lo if x < lo else (hi if x > hi else x)


cdef inline bint _clamp_radial(double *x, double *y, double r) nogil:
    cdef double n = hypot(x[0], y[0]), k
    if n > r:
        k = r / n
        x[0] = x[0] * k
        y[0] = y[0] * k
        return True
    return False


cdef inline bint _push_out_of_brick(double *px, double *py, double rad, double cx, double cy,
                                    double c, double s, double hl, double hw) nogil:
    cdef double dx = px[0] - cx, dy = py[0] - cy
    cdef double lx = c * dx + s * dy
    cdef double ly = -s * dx + c * dy
    cdef double qx = _clip(lx, -hl, hl)
    cdef double qy = _clip(ly, -hw, hw)
    cdef double ex = lx - qx, ey = ly - qy
    cdef double d = hypot(ex, ey)
    if d > 0.0:
        if d >= rad:
            return False
        lx = qx + ex / d * rad
        ly = qy + ey / d * rad
    else:
        if hl - fabs(lx) < hw - fabs(ly):
            lx = (hl + rad) if lx >= 0.0 else -(hl + rad)
        else:
            ly = (hw + rad) if ly >= 0.0 else -(hw + rad)
    px[0] = cx + c * lx - s * ly
    py[0] = cy + s * lx + c * ly
    return True


def step_into(const double[::1] s, const double[::1] a, const double[::1] p, double[::1] out):
    """Advance state ``s`` under action ``a``; writes the next state into ``out``."""
    cdef Py_ssize_t i, n = s.shape[0]
    cdef int task = <int>p[_P_TASK]
    cdef double dt = p[_P_DT]
    cdef int nsub = <int>p[_P_NSUB]
    cdef double cap = p[_P_MAX_STEP] / nsub
    cdef double dts = dt / nsub
    cdef double grip_r = p[_P_GRIP_R], obj_r = p[_P_OBJ_R]
    cdef double rr = grip_r + obj_r
    cdef double z_lo = p[_P_Z_LO], z_hi = p[_P_Z_HI], table_z = p[_P_TABLE_Z]
    cdef bint planar = task != _REACH and task != _PICK
    cdef bint contact = planar
    cdef double gx = s[0], gy = s[1], gz = s[2]
    cdef double fd = s[6]
    cdef double ox = s[8], oy = s[9], oz = s[10]
    cdef double ovx = s[14], ovy = s[15]
    cdef double g0x = gx, g0y = gy, g0z = gz
    cdef double o0x = ox, o0y = oy, o0z = oz
    cdef double tx = a[0], ty = a[1], tz = a[2]
    cdef double cx = 0.0, cy = 0.0, al, be, ga, yaw, bc = 1.0, bs = 0.0, hl = 0.0, hw = 0.0
    cdef bint has_obs = task == _OBST
    cdef bint held0 = False, held, near, clamped
    cdef double d0, glide_sub, hit, dx, dy, dz, d, k, pgx, pgy, ex, ey, dist, nx, ny, vgn, von
    cdef double fd_new, ftarget, fstep
    cdef int it

    if planar:
        tz = table_z
    _clamp_radial(&tx, &ty, p[_P_GRIP_LIMIT_R])
    tz = _clip(tz, z_lo, z_hi)

    if has_obs:
        cx = s[23]
        cy = s[24]
        al = s[26]
        be = s[27]
        ga = s[28]
        yaw = atan2(cos(al) * sin(ga) + sin(al) * sin(be) * cos(ga), cos(be) * cos(ga))
        bc = cos(yaw)
        bs = sin(yaw)
        hl = p[_P_OBS_HL]
        hw = p[_P_OBS_HW]

    if task == _PICK:
        d0 = sqrt((ox - gx) * (ox - gx) + (oy - gy) * (oy - gy) + (oz - gz) * (oz - gz))
        held0 = fd <= 2.0 * obj_r + 1e-12 and d0 < p[_P_GRASP_TOL]

    glide_sub = pow(p[_P_GLIDE], 1.0 / nsub)
    hit = p[_P_HIT]
    for it in range(nsub):
        dx = tx - gx
        dy = ty - gy
        dz = tz - gz
        d = sqrt(dx * dx + dy * dy + dz * dz)
        if d > cap:
            k = cap / d
            dx = dx * k
            dy = dy * k
            dz = dz * k
        pgx = gx
        pgy = gy
        gx = gx + dx
        gy = gy + dy
        gz = gz + dz
        _clamp_radial(&gx, &gy, p[_P_GRIP_LIMIT_R])
        gz = _clip(gz, z_lo, z_hi)
        if has_obs:
            _push_out_of_brick(&gx, &gy, grip_r, cx, cy, bc, bs, hl, hw)
        if not contact:
            continue
        if task == _SLIDE:
            ox += ovx * dts
            oy += ovy * dts
            ovx *= glide_sub
            ovy *= glide_sub
        ex = ox - gx
        ey = oy - gy
        dist = hypot(ex, ey)
        if 0.0 < dist < rr:
            nx = ex / dist
            ny = ey / dist
            ox = gx + nx * rr
            oy = gy + ny * rr
            if task == _SLIDE:
                vgn = ((gx - pgx) * nx + (gy - pgy) * ny) / dts
                von = ovx * nx + ovy * ny
                if hit * vgn > von:
                    ovx += (hit * vgn - von) * nx
                    ovy += (hit * vgn - von) * ny
        if has_obs:
            _push_out_of_brick(&ox, &oy, obj_r, cx, cy, bc, bs, hl, hw)
        clamped = _clamp_radial(&ox, &oy, p[_P_OBJ_LIMIT_R])
        if clamped:
            ovx = 0.0
            ovy = 0.0
        ex = ox - gx
        ey = oy - gy
        dist = hypot(ex, ey)
        if 0.0 < dist < rr:
            gx = ox - ex / dist * rr
            gy = oy - ey / dist * rr
            if has_obs:
                _push_out_of_brick(&gx, &gy, grip_r, cx, cy, bc, bs, hl, hw)

    fd_new = fd
    if task == _PICK:
        ftarget = _clip(a[3], 0.0, p[_P_FINGER_MAX])
        fstep = p[_P_FINGER_STEP]
        fd_new = fd + _clip(ftarget - fd, -fstep, fstep)
        if held0:
            ox = gx
            oy = gy
            oz = gz
        near = sqrt((ox - gx) * (ox - gx) + (oy - gy) * (oy - gy) + (oz - gz) * (oz - gz)) < p[_P_GRASP_TOL]
        held = False
        if near and fd_new <= 2.0 * obj_r:
            fd_new = 2.0 * obj_r
            held = True
        if held:
            ox = gx
            oy = gy
            oz = gz
        else:
            oz = table_z

    for i in range(n):
        out[i] = s[i]
    out[0] = gx
    out[1] = gy
    out[2] = gz
    out[3] = (gx - g0x) / dt
    out[4] = (gy - g0y) / dt
    out[5] = (gz - g0z) / dt
    out[6] = fd_new
    out[7] = (fd_new - fd) / dt
    out[8] = ox
    out[9] = oy
    out[10] = oz
    if task == _SLIDE:
        out[14] = ovx
        out[15] = ovy
        out[16] = 0.0
    else:
        out[14] = (ox - o0x) / dt
        out[15] = (oy - o0y) / dt
        out[16] = (oz - o0z) / dt
    out[20] = ox - gx
    out[21] = oy - gy
    out[22] = oz - gz
    return out
