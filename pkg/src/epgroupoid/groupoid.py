"""The trivial (pair) Lie groupoid S^2 x SO(3) x S^2.

An arrow ``(x, a, y)`` goes from its source ``y`` to its target ``x`` and carries
an internal rotation ``a``. Arrows compose like matrices::

    (x, a, y) * (y, b, z) = (x, a b, z)
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .algebra import hat, so3_exp, vee
from .errors import NonComposable
from .sphere import SpherePoint

ORTHO_TOL = 1e-10
BASE_TOL = 1e-9


def _ortho_defect(R) -> float:
    return float(np.linalg.norm(R.T @ R - np.eye(3)))


def polar_project(R) -> np.ndarray:
    """Nearest rotation matrix in Frobenius norm."""
    U, _, Vt = np.linalg.svd(R)
    Q = U @ Vt
    if np.linalg.det(Q) < 0:
        U[:, -1] = -U[:, -1]
        Q = U @ Vt
    return Q


@dataclass(frozen=True)
class Rotation:
    R: np.ndarray

    def __post_init__(self):
        R = np.array(self.R, dtype=float)
        if R.shape != (3, 3):
            raise ValueError("rotation must be 3x3")
        if _ortho_defect(R) > ORTHO_TOL or abs(np.linalg.det(R) - 1.0) > ORTHO_TOL:
            raise ValueError("matrix is not a rotation")
        R.setflags(write=False)
        object.__setattr__(self, "R", R)

    @classmethod
    def identity(cls) -> "Rotation":
        return cls(np.eye(3))

    @classmethod
    def exp(cls, v) -> "Rotation":
        return cls(so3_exp(v))

    @classmethod
    def from_product(cls, M) -> "Rotation":
        """Wrap a product of rotations, re-orthonormalizing once drift exceeds ``ORTHO_TOL``."""
        M = np.asarray(M, dtype=float)
        if _ortho_defect(M) > ORTHO_TOL:
            M = polar_project(M)
        return cls(M)

    def __matmul__(self, other: "Rotation") -> "Rotation":
        return Rotation.from_product(self.R @ other.R)

    @property
    def T(self) -> "Rotation":
        return Rotation(self.R.T)


def random_rotation(rng: np.random.Generator) -> Rotation:
    """Haar-distributed rotation via QR of a Gaussian matrix."""
    Q, Rr = np.linalg.qr(rng.standard_normal((3, 3)))
    Q = Q * np.sign(np.diag(Rr))
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Rotation(Q)


def random_sphere_point(rng: np.random.Generator, R: float = 1.0) -> SpherePoint:
    return SpherePoint.from_direction(rng.standard_normal(3), R)


@dataclass(frozen=True)
class GroupoidElement:
    x: SpherePoint
    a: Rotation
    y: SpherePoint

    def __mul__(self, other: "GroupoidElement") -> "GroupoidElement":
        return multiply(self, other)


def source(g: GroupoidElement) -> SpherePoint:
    return g.y


def target(g: GroupoidElement) -> SpherePoint:
    return g.x


def unit(p: SpherePoint) -> GroupoidElement:
    return GroupoidElement(p, Rotation.identity(), p)


def inverse(g: GroupoidElement) -> GroupoidElement:
    return GroupoidElement(g.y, g.a.T, g.x)


def composable(g: GroupoidElement, h: GroupoidElement) -> bool:
    return source(g).close_to(target(h), BASE_TOL)


def multiply(g: GroupoidElement, h: GroupoidElement) -> GroupoidElement:
    if not composable(g, h):
        raise NonComposable(
            f"source(g) = {source(g).p} does not match target(h) = {target(h).p}"
        )
    return GroupoidElement(g.x, g.a @ h.a, h.y)


def isotropy_contains(p: SpherePoint, g: GroupoidElement) -> bool:
    return source(g).close_to(p, BASE_TOL) and target(g).close_to(p, BASE_TOL)


@dataclass(frozen=True)
class Bisection:
    """Section sigma(p) = (phi(p), a_of(p), p) of the source map.

    ``phi`` is a fixed rotation of the sphere acting on base points and
    ``a_of`` maps a base point to the internal rotation (as a 3x3 matrix).
    """

    phi: Rotation
    a_of: Callable[[SpherePoint], np.ndarray]

    @classmethod
    def identity(cls) -> "Bisection":
        return cls(Rotation.identity(), lambda p: np.eye(3))

    def base_map(self, p: SpherePoint) -> SpherePoint:
        return SpherePoint(self.phi.R @ p.p, p.R)

    def base_map_inverse(self, p: SpherePoint) -> SpherePoint:
        return SpherePoint(self.phi.R.T @ p.p, p.R)

    def __call__(self, p: SpherePoint) -> GroupoidElement:
        return GroupoidElement(self.base_map(p), Rotation.from_product(self.a_of(p)), p)

    def inverse(self) -> "Bisection":
        """The bisection sigma^{-1} with L_{sigma^{-1}} = L_sigma^{-1}."""
        phi_inv = self.phi.T
        a_of = self.a_of

        def a_inv(p: SpherePoint) -> np.ndarray:
            return np.asarray(a_of(SpherePoint(phi_inv.R @ p.p, p.R))).T

        return Bisection(phi_inv, a_inv)


def left_translate(sigma: Bisection, g: GroupoidElement) -> GroupoidElement:
    """L_sigma(g) = sigma(target g) * g."""
    return multiply(sigma(target(g)), g)


def right_translate(sigma: Bisection, g: GroupoidElement) -> GroupoidElement:
    """R_sigma(g) = g * sigma(phi^{-1}(source g))."""
    return multiply(g, sigma(sigma.base_map_inverse(source(g))))


def Ad(g: GroupoidElement, X) -> np.ndarray:
    """Adjoint action of an arrow on the isotropy algebra: a X (i.e. a hat(X) a^T)."""
    return g.a.R @ np.asarray(X, dtype=float)


def Ad_star(g: GroupoidElement, xi) -> np.ndarray:
    """Coadjoint action, <Ad*_g xi, X> = <xi, Ad_{g^-1} X>."""
    return g.a.R @ np.asarray(xi, dtype=float)


def Ad_matrix(g: GroupoidElement, X) -> np.ndarray:
    """Ad computed by conjugating hat(X); independent route used in tests."""
    return vee(g.a.R @ hat(X) @ g.a.R.T)


def isotropy_exp(p: SpherePoint, xi, t: float = 1.0) -> GroupoidElement:
    """One-parameter subgroup (p, exp(t hat(xi)), p) of the isotropy group at p."""
    return GroupoidElement(p, Rotation.exp(t * np.asarray(xi, float)), p)
