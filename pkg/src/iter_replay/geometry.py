"""Rotation and reflection primitives.

Positions, linear velocities and Euler triples are plain ``float64`` arrays
whose trailing axis has length 3, so every function here works on a single
vector as well as on a stack of them.  Euler angles use the x-y-z (Cardano)
sequence: ``eul((a, b, c)) == Rx(a) @ Ry(b) @ Rz(c)``.

Every reflection plane contains the z axis and passes through the origin
(the robot base); ``theta`` is the angle of the plane measured from ``xoz``.
An optional ``offset`` shifts the plane to a parallel sagittal plane.
"""

from __future__ import annotations

import logging
import math

import numpy as np

log = logging.getLogger(__name__)

# Tolerances, fixed once for the whole package.
ALG_TOL = 1e-9  # algebraic identities (involution, isometry, additivity)
TRIG_TOL = 1e-7  # round trips through trigonometric extraction
GIMBAL_TOL = 1e-6  # |cos(beta)| below this is treated as gimbal lock

_XOZ = np.array([1.0, -1.0, 1.0])


def _finite(x, name):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite, got {x!r}")
    return arr


def rot_z(theta: float) -> np.ndarray:
    """Rotation matrix for a rotation of ``theta`` radians about z."""
    theta = float(_finite(theta, "theta"))
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def eul(e) -> np.ndarray:
    """Map Cardano angles ``(alpha, beta, gamma)`` to ``Rx(alpha) Ry(beta) Rz(gamma)``.

    Accepts shape ``(3,)`` or ``(..., 3)`` and returns ``(3, 3)`` or ``(..., 3, 3)``.
    """
    e = _finite(e, "euler angles")
    a, b, g = e[..., 0], e[..., 1], e[..., 2]
    ca, sa = np.cos(a), np.sin(a)
    cb, sb = np.cos(b), np.sin(b)
    cg, sg = np.cos(g), np.sin(g)
    m = np.empty(e.shape[:-1] + (3, 3))
    m[..., 0, 0] = cb * cg
    m[..., 0, 1] = -cb * sg
    m[..., 0, 2] = sb
    m[..., 1, 0] = ca * sg + sa * sb * cg
    m[..., 1, 1] = ca * cg - sa * sb * sg
    m[..., 1, 2] = -sa * cb
    m[..., 2, 0] = sa * sg - ca * sb * cg
    m[..., 2, 1] = sa * cg + ca * sb * sg
    m[..., 2, 2] = ca * cb
    return m


def car_with_flag(m) -> tuple[np.ndarray, np.ndarray]:
    """Extract Cardano angles from rotation matrices.

    Returns ``(angles, degenerate)`` where ``degenerate`` marks matrices whose
    middle angle sits at +-pi/2 within :data:`GIMBAL_TOL`.  For those the
    convention ``gamma = 0`` is used and the remaining roll goes into alpha.
    """
    m = np.asarray(m, dtype=float)
    cb = np.hypot(m[..., 1, 2], m[..., 2, 2])
    beta = np.arctan2(m[..., 0, 2], cb)
    degenerate = cb < GIMBAL_TOL
    alpha = np.where(
        degenerate,
        np.arctan2(m[..., 2, 1], m[..., 1, 1]),
        np.arctan2(-m[..., 1, 2], m[..., 2, 2]),
    )
    gamma = np.where(degenerate, 0.0, np.arctan2(-m[..., 0, 1], m[..., 0, 0]))
    out = np.stack([alpha, beta, gamma], axis=-1)
    # atan2 returns -pi for a negative-zero y; canonical range is (-pi, pi]
    out[..., 0] = np.where(out[..., 0] == -np.pi, np.pi, out[..., 0])
    out[..., 2] = np.where(out[..., 2] == -np.pi, np.pi, out[..., 2])
    return out, degenerate


def car(m) -> np.ndarray:
    """Inverse of :func:`eul`; logs a warning on gimbal-lock input."""
    angles, degenerate = car_with_flag(m)
    if np.any(degenerate):
        log.warning("gimbal lock in Cardano extraction (%d matrices)", int(np.sum(degenerate)))
    return angles


def wrap_angle(x):
    """Wrap angles into ``(-pi, pi]``."""
    x = np.asarray(x, dtype=float)
    w = np.mod(x + np.pi, 2 * np.pi) - np.pi
    return np.where(w == -np.pi, np.pi, w)


def reflect_xoz_pos(v) -> np.ndarray:
    """Mirror across the ``xoz`` plane: ``(x, y, z) -> (x, -y, z)``."""
    return _finite(v, "vector") * _XOZ


def reflect_xoz_eul(e) -> np.ndarray:
    """Mirror an orientation across ``xoz``: ``(a, b, c) -> (-a, b, -c)``."""
    return _finite(e, "euler angles") * np.array([-1.0, 1.0, -1.0])


def reflection_matrix(theta: float) -> np.ndarray:
    """Linear part of the reflection across the plane rotated by ``theta``."""
    c2, s2 = math.cos(2 * theta), math.sin(2 * theta)
    return np.array([[c2, s2, 0.0], [s2, -c2, 0.0], [0.0, 0.0, 1.0]])


def reflect_plane_pos(theta: float, v, offset=None) -> np.ndarray:
    """``Rot_z(theta) . xoz(Rot_z(-theta) . v)``, optionally about a shifted plane.

    ``offset`` is a point on the (parallel) plane; coordinates are translated
    so that point becomes the origin, reflected, then translated back.
    """
    v = _finite(v, "vector")
    r = rot_z(theta)
    if offset is None:
        return ((v @ r) * _XOZ) @ r.T
    o = np.asarray(offset, dtype=float)
    return (((v - o) @ r) * _XOZ) @ r.T + o


def reflect_velocity(theta: float, v) -> np.ndarray:
    """Reflect a free vector (velocity, displacement); plane offsets do not apply."""
    return reflect_plane_pos(theta, v)


def reflect_plane_eul(theta: float, e) -> np.ndarray:
    """Mirror Cardano angles across the plane rotated by ``theta`` about z.

    Rotate into the plane frame, apply :func:`reflect_xoz_eul` there, and
    compose the result back with ``Rot_z(theta)``.  The resulting matrix is
    ``M R S`` with ``M`` the plane reflection and ``S = diag(1, -1, 1)``: the
    body x and z axes are mirrored and body y is flipped to keep the frame
    right handed.  For ``theta = 0`` this is exactly ``(-a, b, -c)``.
    """
    e = _finite(e, "euler angles")
    if theta == 0.0:
        return reflect_xoz_eul(e)
    r = rot_z(theta)
    local = car(r.T @ eul(e))
    mirrored = reflect_xoz_eul(local)
    return car(r @ eul(mirrored))


def is_rotation(m, tol: float = ALG_TOL) -> bool:
    m = np.asarray(m, dtype=float)
    return bool(
        np.allclose(m.T @ m, np.eye(3), atol=tol, rtol=0)
        and abs(np.linalg.det(m) - 1.0) <= tol
    )
