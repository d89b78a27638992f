"""The Lie algebra so(3) identified with R^3.

Sign conventions (all other modules route through the helpers here):

* bracket            [xi, eta]          = xi x eta
* coadjoint          ad*_xi mu          = mu x xi     from <ad*_xi mu, eta> = <mu, [xi, eta]>
* diamond            b <> a             = b x a       from <b <> a, xi> = -<b, xi x a>
* Euler-Poincare rate                    d mu/dt = ad*_xi mu = mu x xi

The last line is the classical body-frame rigid body, M' + Omega x M = 0.
``ep_coadjoint_rate`` is the single place where that orientation is chosen.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NotSPD

VEE_TOL = 1e-12


def _vec3(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != 3:
        raise ValueError(f"expected a 3-vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("algebra vector has non-finite components")
    return v


def cross(a, b) -> np.ndarray:
    """Cross product of two 3-vectors; faster than np.cross for single vectors."""
    a0, a1, a2 = a
    b0, b1, b2 = b
    return np.array([a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0])


def hat(v) -> np.ndarray:
    """Skew matrix with ``hat(v) @ w == v x w``. Broadcasts over leading axes."""
    v = _vec3(v)
    m = np.zeros(v.shape[:-1] + (3, 3))
    m[..., 0, 1] = -v[..., 2]
    m[..., 0, 2] = v[..., 1]
    m[..., 1, 0] = v[..., 2]
    m[..., 1, 2] = -v[..., 0]
    m[..., 2, 0] = -v[..., 1]
    m[..., 2, 1] = v[..., 0]
    return m


def vee(m) -> np.ndarray:
    """Inverse of :func:`hat`.

    Raises ValueError if the symmetric part of ``m`` exceeds ``VEE_TOL``.
    """
    m = np.asarray(m, dtype=float)
    if m.shape[-2:] != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {m.shape}")
    sym = 0.5 * (m + np.swapaxes(m, -1, -2))
    if np.max(np.abs(sym), initial=0.0) > VEE_TOL:
        raise ValueError("matrix is not skew-symmetric")
    return np.stack([m[..., 2, 1], m[..., 0, 2], m[..., 1, 0]], axis=-1)


def ad(xi, eta) -> np.ndarray:
    """Lie bracket [xi, eta]."""
    return np.cross(_vec3(xi), _vec3(eta))


def ad_star(xi, mu) -> np.ndarray:
    """Coadjoint operator, the vector with <ad*_xi mu, eta> = <mu, [xi, eta]>."""
    return np.cross(_vec3(mu), _vec3(xi))


def diamond(b, a) -> np.ndarray:
    """Diamond operator V x V* -> so(3)* for the rotation action xi.a = xi x a."""
    return np.cross(_vec3(b), _vec3(a))


def ep_coadjoint_rate(xi, mu) -> np.ndarray:
    """Contribution of the coadjoint term to d(mu)/dt in every EP system here."""
    return cross(mu, xi)


def pairing(mu, xi) -> float:
    return float(np.dot(mu, xi))


@dataclass(frozen=True)
class InertiaTensor:
    """Symmetric positive-definite inertia tensor.

    Construction symmetrizes nothing: an asymmetric or indefinite matrix is
    rejected. Eigenvalues must exceed ``1e-12 * trace``.
    """

    I: np.ndarray

    def __post_init__(self):
        m = np.array(self.I, dtype=float)
        if m.shape != (3, 3):
            raise ValueError(f"inertia must be 3x3, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise NotSPD("inertia has non-finite entries")
        if np.any(m != m.T):
            raise NotSPD("inertia tensor is not symmetric")
        tr = np.trace(m)
        w = np.linalg.eigvalsh(m)
        if tr <= 0 or w.min() <= 1e-12 * tr:
            raise NotSPD(f"inertia tensor is not positive definite (eigenvalues {w})")
        m.setflags(write=False)
        inv = np.linalg.inv(m)
        inv = 0.5 * (inv + inv.T)
        inv.setflags(write=False)
        object.__setattr__(self, "I", m)
        object.__setattr__(self, "_inv", inv)

    @classmethod
    def diag(cls, *d) -> "InertiaTensor":
        if len(d) == 1:
            d = tuple(d[0])
        return cls(np.diag(np.asarray(d, dtype=float)))

    @classmethod
    def identity(cls) -> "InertiaTensor":
        return cls(np.eye(3))

    @property
    def inv(self) -> np.ndarray:
        return self._inv

    def velocity(self, M) -> np.ndarray:
        """Angular velocity I^{-1} M (broadcasts over leading axes)."""
        return np.asarray(M, dtype=float) @ self._inv.T

    def energy(self, Omega) -> float:
        Omega = np.asarray(Omega, dtype=float)
        return 0.5 * float(Omega @ self.I @ Omega)


def body_momentum(I: InertiaTensor, Omega) -> np.ndarray:
    """M = I Omega."""
    return np.asarray(Omega, dtype=float) @ I.I.T


def so3_exp(v) -> np.ndarray:
    """Rodrigues formula for exp(hat(v)); exact orthogonality up to roundoff."""
    v = np.asarray(v, dtype=float)
    theta2 = float(v @ v)
    K = hat(v)
    if theta2 < 1e-12:
        # Taylor terms to O(theta^4)
        a = 1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0
        b = 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0
    else:
        theta = np.sqrt(theta2)
        a = np.sin(theta) / theta
        b = (1.0 - np.cos(theta)) / theta2
    return np.eye(3) + a * K + b * (K @ K)


def so3_log(R) -> np.ndarray:
    """Principal logarithm of a rotation as an axis-angle vector (angle < pi)."""
    R = np.asarray(R, dtype=float)
    c = np.clip(0.5 * (np.trace(R) - 1.0), -1.0, 1.0)
    w = 0.5 * np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    s = np.linalg.norm(w)
    theta = np.arctan2(s, c)
    if s < 1e-12:
        if c > 0:
            return w
        # theta ~ pi: axis from the symmetric part
        B = 0.5 * (R + np.eye(3))
        k = int(np.argmax(np.diag(B)))
        axis = B[:, k] / np.sqrt(B[k, k])
        return theta * axis
    return theta * w / s


def variational_derivative_check(
    l: Callable[[np.ndarray], float], xi, analytic_grad
) -> float:
    """Largest deviation between ``analytic_grad`` and a central-difference gradient of ``l``.

    The step for component i is ``1e-5 * (1 + |xi_i|)``.
    """
    xi = np.asarray(xi, dtype=float)
    g = np.asarray(analytic_grad, dtype=float)
    if g.shape != xi.shape:
        raise ValueError("gradient and point have different shapes")
    fd = np.empty_like(xi)
    flat = xi.ravel()
    for i in range(flat.size):
        h = 1e-5 * (1.0 + abs(flat[i]))
        xp = flat.copy()
        xm = flat.copy()
        xp[i] += h
        xm[i] -= h
        fd.flat[i] = (l(xp.reshape(xi.shape)) - l(xm.reshape(xi.shape))) / (2.0 * h)
    return float(np.max(np.abs(fd - g)))
