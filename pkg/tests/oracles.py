"""Independent reference implementations used as test oracles."""
from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad
from scipy.spatial.transform import Rotation

HALF_PI = math.pi / 2

# World <- chain base: the chain's first axis points up, its second forward.
BASE = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])


def _link(theta, d, a, alpha):
    """Rz(theta) Tz(d) Tx(a) Rx(alpha), composed from scipy rotations."""
    t = np.eye(4)
    rz = np.eye(4)
    rz[:3, :3] = Rotation.from_rotvec([0.0, 0.0, theta]).as_matrix()
    tz = np.eye(4)
    tz[2, 3] = d
    tx = np.eye(4)
    tx[0, 3] = a
    rx = np.eye(4)
    rx[:3, :3] = Rotation.from_rotvec([alpha, 0.0, 0.0]).as_matrix()
    for m in (rz, tz, tx, rx):
        t = t @ m
    return t


def link_table(spine, humerus, radius):
    """(theta offset, d, a, alpha) per joint, written out from the segment vectors."""
    return [
        (0.0, -spine[1], spine[2], -HALF_PI),
        (0.0, -spine[0], 0.0, HALF_PI),
        (HALF_PI, 0.0, 0.0, HALF_PI),
        (-HALF_PI, -humerus[2], -humerus[0], HALF_PI),
        (math.pi, -humerus[1], 0.0, HALF_PI),
        (HALF_PI, -radius[2], -radius[1], HALF_PI),
        (HALF_PI, -radius[0], 0.0, HALF_PI),
        (0.0, 0.0, 0.0, 0.0),
    ]


def oracle_frames(spine, humerus, radius, q):
    t = np.eye(4)
    t[:3, :3] = BASE
    out = [t.copy()]
    for qi, (off, d, a, alpha) in zip(q, link_table(spine, humerus, radius)):
        t = t @ _link(qi + off, d, a, alpha)
        out.append(t.copy())
    return np.array(out)


def oracle_landmarks(spine, humerus, radius, q):
    """pelvis, spine, shoulder, elbow, wrist, hand positions."""
    f = oracle_frames(spine, humerus, radius, q)
    spine_top = f[1, :3, 3] + spine[1] * f[0, :3, 2]
    return np.array([f[0, :3, 3], spine_top, f[3, :3, 3], f[4, :3, 3], f[6, :3, 3], f[8, :3, 3]])


def numeric_jacobian(fun, q, h=1e-6):
    q = np.asarray(q, dtype=float)
    cols = []
    for i in range(q.size):
        e = np.zeros_like(q)
        e[i] = h
        cols.append((np.asarray(fun(q + e)) - np.asarray(fun(q - e))) / (2 * h))
    return np.array(cols).T


def quintic_jerk_integral(amplitude=1.0, duration=1.0):
    """Quadrature of the squared third derivative of the rest-to-rest quintic."""

    def jerk(t):
        tau = t / duration
        return amplitude * (60.0 - 360.0 * tau + 360.0 * tau**2) / duration**3

    val, _ = quad(lambda t: jerk(t) ** 2, 0.0, duration, epsabs=1e-13, epsrel=1e-13)
    return val


def brute_objective_blend(w, alpha, q_m, q_n):
    """Per-joint scalar minimisation of w^2 (x-qm)^2 + alpha (1-w)^2 (x-qn)^2 on a fine grid."""
    out = []
    for wi, a, b in zip(w, q_m, q_n):
        lo, hi = min(a, b) - 1.0, max(a, b) + 1.0
        xs = np.linspace(lo, hi, 200001)
        f = wi**2 * (xs - a) ** 2 + alpha * (1 - wi) ** 2 * (xs - b) ** 2
        out.append(xs[np.argmin(f)])
    return np.array(out)
