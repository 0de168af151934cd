"""Polarization frames for photon wave vectors.

``xi_matrix(k)`` is the rotation taking ``k`` onto the positive third axis,
built as a rotation about axis 1 (angle alpha, removes component 2) followed
by a rotation about axis 2 (angle beta, removes component 1).  Its first two
rows are the H and V polarization vectors.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PolarizationFrame",
    "CompensatingRotation",
    "frame_angles",
    "xi_matrix",
    "compensating_rotation",
    "rotation_matrix",
    "random_rotation",
    "check_rotation",
]

log = logging.getLogger(__name__)

E3 = np.array([0.0, 0.0, 1.0])

# The closed-form gamma divides by cos beta and cos beta'; below this it is not trusted.
SINGULAR_COS_BETA = 1e-8


@dataclass(frozen=True, eq=False)
class PolarizationFrame:
    xi: np.ndarray
    k: np.ndarray

    @property
    def eps_h(self) -> np.ndarray:
        return self.xi[0]

    @property
    def eps_v(self) -> np.ndarray:
        return self.xi[1]

    def to_list(self) -> list[float]:
        """The nine entries of ``xi`` in row-major order."""
        return [float(x) for x in self.xi.reshape(-1)]


@dataclass(frozen=True, eq=False)
class CompensatingRotation:
    """``M = Xi(R k) R Xi(k)^T``, a rotation about the third axis by ``gamma``.

    ``closed_form`` holds ``(cos gamma, sin gamma)`` from the first-row
    formulas, or ``None`` where those formulas divide by (nearly) zero.
    """

    m: np.ndarray
    gamma: float
    closed_form: tuple[float, float] | None


def frame_angles(k) -> tuple[float, float, float, float]:
    """``(cos alpha, sin alpha, cos beta, sin beta)`` for wave vector ``k``.

    On the ray ``k2 = k3 = 0`` alpha is undefined; we take ``alpha = 0``.
    ``cos beta`` is always the non-negative root.
    """
    k = np.asarray(k, dtype=float)
    kn = float(np.linalg.norm(k))
    if kn == 0.0:
        raise ValueError("polarization frame undefined at k = 0")
    rho = math.hypot(k[1], k[2])
    if rho == 0.0:
        ca, sa = 1.0, 0.0
    else:
        ca, sa = k[2] / rho, k[1] / rho
    return ca, sa, rho / kn, k[0] / kn


def _xi_from_angles(ca: float, sa: float, cb: float, sb: float) -> np.ndarray:
    return np.array([
        [cb, -sa * sb, -sb * ca],
        [0.0, ca, -sa],
        [sb, sa * cb, ca * cb],
    ])


def xi_matrix(k) -> PolarizationFrame:
    k = np.asarray(k, dtype=float)
    xi = _xi_from_angles(*frame_angles(k))
    xi.setflags(write=False)
    return PolarizationFrame(xi, k.copy())


def xi_matrices(nodes: np.ndarray) -> np.ndarray:
    """Stack of ``Xi(k_i)`` for an ``(n, 3)`` array, shape ``(n, 3, 3)``."""
    nodes = np.asarray(nodes, dtype=float)
    kn = np.linalg.norm(nodes, axis=1)
    if np.any(kn == 0.0):
        raise ValueError("polarization frame undefined at k = 0")
    rho = np.hypot(nodes[:, 1], nodes[:, 2])
    safe = np.where(rho == 0.0, 1.0, rho)
    ca = np.where(rho == 0.0, 1.0, nodes[:, 2] / safe)
    sa = np.where(rho == 0.0, 0.0, nodes[:, 1] / safe)
    cb = rho / kn
    sb = nodes[:, 0] / kn
    z = np.zeros_like(ca)
    return np.stack([
        np.stack([cb, -sa * sb, -sb * ca], axis=-1),
        np.stack([z, ca, -sa], axis=-1),
        np.stack([sb, sa * cb, ca * cb], axis=-1),
    ], axis=1)


def check_rotation(r, tol: float = 1e-10) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3):
        raise ValueError("rotation must be a 3x3 matrix")
    if np.max(np.abs(r.T @ r - np.eye(3))) > tol or abs(np.linalg.det(r) - 1.0) > tol:
        raise ValueError("matrix is not a proper rotation (orthogonal, det +1)")
    return r


def compensating_rotation(r, k) -> CompensatingRotation:
    """Frame rotation ``M`` with ``Xi(R k) R = M Xi(k)``.

    ``gamma`` comes from ``atan2(M[1, 0], M[0, 0])``; the closed-form
    ``(cos gamma, sin gamma)`` is computed independently from ``R`` and the
    frame angles of ``k`` and ``R k`` as a cross-check.
    """
    r = check_rotation(r)
    k = np.asarray(k, dtype=float)
    kp = r @ k
    ca, sa, cb, sb = frame_angles(k)
    _, _, cbp, sbp = frame_angles(kp)
    m = _xi_from_angles(*frame_angles(kp)) @ r @ _xi_from_angles(ca, sa, cb, sb).T
    gamma = math.atan2(m[1, 0], m[0, 0])
    if min(cb, cbp) < SINGULAR_COS_BETA:
        log.debug("closed-form gamma singular for k=%s (cos beta=%g, cos beta'=%g)", k, cb, cbp)
        closed = None
    else:
        cos_g = (r[0, 0] - sb * sbp) / (cb * cbp)
        sin_g = -(r[0, 1] * ca - r[0, 2] * sa) / cbp
        closed = (cos_g, sin_g)
    m.setflags(write=False)
    return CompensatingRotation(m, gamma, closed)


def rotation_matrix(axis, angle: float) -> np.ndarray:
    """Active right-handed rotation by ``angle`` about ``axis`` (Rodrigues)."""
    u = np.asarray(axis, dtype=float)
    u = u / np.linalg.norm(u)
    kx = np.array([[0, -u[2], u[1]], [u[2], 0, -u[0]], [-u[1], u[0], 0]])
    return np.eye(3) + math.sin(angle) * kx + (1 - math.cos(angle)) * (kx @ kx)


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Haar-random proper rotation."""
    from scipy.spatial.transform import Rotation

    return Rotation.random(random_state=rng).as_matrix()
