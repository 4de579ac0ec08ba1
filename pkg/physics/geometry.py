"""
Elementwise vector and quaternion kernels over arrays whose last axis holds the
components. Only +, -, *, /, sqrt and comparisons are used, so a value does not
depend on how many rollouts are evaluated together.
"""

import numpy as np


def dot3(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] + a[..., 2] * b[..., 2]


def norm3(a: np.ndarray) -> np.ndarray:
    return np.sqrt(dot3(a, a))


def cross3(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.stack([
        a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1],
        a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2],
        a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0],
    ], axis=-1)


def safe_unit(a: np.ndarray, fallback: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unit vector and length; `fallback` where the length is zero."""
    length = norm3(a)
    ok = length > 1e-12
    unit = np.where(ok[..., None], a / np.where(ok, length, 1.0)[..., None], fallback)
    return unit, length


def quat_mul(q: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Hamilton product, (w, x, y, z) convention."""
    w1, x1, y1, z1 = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    w2, x2, y2, z2 = r[..., 0], r[..., 1], r[..., 2], r[..., 3]
    return np.stack([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ], axis=-1)


def quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate body-frame vectors v into the world frame."""
    u = q[..., 1:]
    w = q[..., 0:1]
    t = 2.0 * cross3(u, v)
    return v + w * t + cross3(u, t)


def quat_rotate_inv(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate world-frame vectors v into the body frame."""
    u = -q[..., 1:]
    w = q[..., 0:1]
    t = 2.0 * cross3(u, v)
    return v + w * t + cross3(u, t)


def quat_normalize(q: np.ndarray) -> np.ndarray:
    n = np.sqrt(q[..., 0] ** 2 + q[..., 1] ** 2 + q[..., 2] ** 2 + q[..., 3] ** 2)
    return q / n[..., None]


def integrate_quat(q: np.ndarray, omega: np.ndarray, dt: float) -> np.ndarray:
    """First-order update with a world-frame angular velocity, renormalized."""
    omega_q = np.concatenate([np.zeros(omega.shape[:-1] + (1,)), omega], axis=-1)
    return quat_normalize(q + 0.5 * dt * quat_mul(omega_q, q))


def box_closest(center: np.ndarray, quat: np.ndarray, half: np.ndarray, point: np.ndarray):
    """
    Signed distance from `point` to an oriented box.

    Returns:
        tuple: (signed distance, world surface point closest to `point`,
        outward unit normal from the box towards `point`). Inside the box the
        nearest face is used, lowest axis first on ties.
    """
    local = quat_rotate_inv(quat, point - center)
    clamped = np.clip(local, -half, half)
    outside_vec = local - clamped
    outside_dist = norm3(outside_vec)
    is_outside = outside_dist > 1e-12

    face_gap = half - np.abs(local)
    axis = np.argmin(face_gap, axis=-1)
    axis_mask = np.arange(3) == axis[..., None]
    side = np.where(local >= 0.0, 1.0, -1.0)
    inside_normal = np.where(axis_mask, side, 0.0)
    inside_point = np.where(axis_mask, side * half, local)
    inside_dist = -np.min(face_gap, axis=-1)

    safe_dist = np.where(is_outside, outside_dist, 1.0)
    normal_local = np.where(is_outside[..., None], outside_vec / safe_dist[..., None], inside_normal)
    surface_local = np.where(is_outside[..., None], clamped, inside_point)
    distance = np.where(is_outside, outside_dist, inside_dist)
    return distance, center + quat_rotate(quat, surface_local), quat_rotate(quat, normal_local)


BOX_CORNER_SIGNS = np.array([
    [sx, sy, sz] for sx in (-1.0, 1.0) for sy in (-1.0, 1.0) for sz in (-1.0, 1.0)
])
