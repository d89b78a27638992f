"""Fixed-step integration of the ODE-level Euler-Poincare systems.

All right-hand sides follow the coadjoint orientation fixed in
:mod:`epgroupoid.algebra` (``d mu/dt = mu x xi`` for the free motion), so the
free rigid body reads ``M' = M x Omega``.
"""
from __future__ import annotations

import csv
import inspect
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .algebra import InertiaTensor, cross, diamond, ep_coadjoint_rate
from .errors import IntegrationDiverged
from .groupoid import ORTHO_TOL, Rotation, polar_project
from .sphere import SpherePoint, SphereTangent, project_tangent_arrays

SPHERE_DRIFT_TOL = 1e-6


def rk4_step(f, s, t: float, dt: float):
    """One classical Runge-Kutta step of ``s' = f(t, s)``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    s = np.asarray(s, dtype=float)
    k1 = f(t, s)
    k2 = f(t + 0.5 * dt, s + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, s + 0.5 * dt * k2)
    k4 = f(t + dt, s + dt * k3)
    out = s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise IntegrationDiverged(f"non-finite state after step at t = {t}")
    return out


@dataclass
class Trajectory:
    """Time grid, packed state snapshots and per-step invariant log.

    ``states[k]`` is the state at ``times[k]``; ``columns`` names its entries.
    ``invariants`` always carries ``energy``, ``casimir`` and ``speed``.
    """

    times: np.ndarray
    states: np.ndarray
    columns: list[str]
    invariants: dict[str, np.ndarray]
    extras: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise ValueError("times and states differ in length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        for k, v in self.invariants.items():
            if len(v) != len(self.times):
                raise ValueError(f"invariant {k!r} has wrong length")

    def __len__(self):
        return len(self.times)

    def column(self, name: str) -> np.ndarray:
        return self.states[:, self.columns.index(name)]

    def drift(self, name: str) -> float:
        """Largest relative deviation of an invariant from its initial value."""
        v = self.invariants[name]
        scale = abs(v[0]) if v[0] != 0 else 1.0
        return float(np.max(np.abs(v - v[0])) / scale)

    def to_csv(self, path) -> None:
        header = ["t", *self.columns, "energy", "casimir", "speed"]
        inv = [self.invariants[k] for k in ("energy", "casimir", "speed")]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for k in range(len(self.times)):
                row = [self.times[k], *self.states[k], *(c[k] for c in inv)]
                w.writerow([repr(float(v)) for v in row])


def _integrate(f, s0, dt, steps, t0=0.0, post=None):
    if not dt > 0:
        raise ValueError("dt must be positive")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    s0 = np.asarray(s0, dtype=float)
    out = np.empty((steps + 1,) + s0.shape)
    out[0] = s0
    s = s0
    for k in range(steps):
        s = rk4_step(f, s, t0 + k * dt, dt)
        if post is not None:
            s = post(s)
        out[k + 1] = s
    times = t0 + dt * np.arange(steps + 1)
    return times, out


# ---------------------------------------------------------------- free rigid body

@dataclass(frozen=True)
class RigidBodyState:
    M: np.ndarray
    I: InertiaTensor

    def __post_init__(self):
        M = np.array(self.M, dtype=float)
        if M.shape != (3,) or not np.all(np.isfinite(M)):
            raise ValueError("M must be a finite 3-vector")
        object.__setattr__(self, "M", M)

    @property
    def Omega(self) -> np.ndarray:
        return self.I.inv @ self.M

    @property
    def energy(self) -> float:
        return 0.5 * float(self.Omega @ self.M)


def _rigid_rhs(M, Iinv):
    return ep_coadjoint_rate(Iinv @ M, M)


def rigid_body_rhs(s: RigidBodyState) -> np.ndarray:
    """dM/dt = M x Omega with Omega = I^{-1} M."""
    return _rigid_rhs(s.M, s.I.inv)


def _rigid_invariants(Ms, I: InertiaTensor):
    Om = I.velocity(Ms)
    return {
        "energy": 0.5 * np.sum(Om * Ms, axis=1),
        "casimir": np.sum(Ms * Ms, axis=1),
        "speed": np.linalg.norm(Om, axis=1),
    }


def integrate_rigid_body(s0: RigidBodyState, dt: float, steps: int) -> Trajectory:
    """RK4 trajectory of the free rigid body.

    The invariant log holds E = 1/2 <Omega, I Omega>, C = |M|^2 and |Omega|.
    """
    Iinv = s0.I.inv
    times, Ms = _integrate(lambda t, M: _rigid_rhs(M, Iinv), s0.M, dt, steps)
    return Trajectory(times, Ms, ["M1", "M2", "M3"], _rigid_invariants(Ms, s0.I))


# ---------------------------------------------------------------- forced rigid body

def _force_fn(F):
    """Accept F(t) or F(t, M); the two-argument form allows feedback forces."""
    try:
        nargs = len(inspect.signature(F).parameters)
    except (TypeError, ValueError):
        nargs = 1
    if nargs >= 2:
        return lambda t, M: np.asarray(F(t, M), dtype=float)
    return lambda t, M: np.asarray(F(t), dtype=float)


def forced_ep_rhs(s: RigidBodyState, F: Callable, t: float = 0.0) -> np.ndarray:
    """dM/dt = M x Omega + F.

    ``F`` is the body-frame force, already pulled back by the caller. It is
    called as ``F(t)`` or, if it takes two arguments, as ``F(t, M)``.
    """
    return rigid_body_rhs(s) + _force_fn(F)(t, s.M)


def integrate_forced(s0: RigidBodyState, F, dt: float, steps: int) -> Trajectory:
    Iinv = s0.I.inv
    force = _force_fn(F)

    def f(t, M):
        return _rigid_rhs(M, Iinv) + force(t, M)

    times, Ms = _integrate(f, s0.M, dt, steps)
    return Trajectory(times, Ms, ["M1", "M2", "M3"], _rigid_invariants(Ms, s0.I))


# ---------------------------------------------------------------- advected quantities

@dataclass(frozen=True)
class AdvectedState:
    mu: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        for name in ("mu", "a"):
            v = np.array(getattr(self, name), dtype=float)
            if v.shape != (3,) or not np.all(np.isfinite(v)):
                raise ValueError(f"{name} must be a finite 3-vector")
            object.__setattr__(self, name, v)


def advected_ep_rhs(s: AdvectedState, I: InertiaTensor, dl_da) -> tuple[np.ndarray, np.ndarray]:
    """Euler-Poincare with an advected parameter a in V* = R^3.

    With xi = I^{-1} mu::

        d mu/dt = mu x xi + (dl/da) <> a
        d a/dt  = -xi x a
    """
    xi = I.inv @ s.mu
    dmu = ep_coadjoint_rate(xi, s.mu) + diamond(dl_da(s.a), s.a)
    da = -cross(xi, s.a)
    return dmu, da


def integrate_advected(
    s0: AdvectedState,
    I: InertiaTensor,
    dl_da,
    dt: float,
    steps: int,
    ell_a: Callable[[np.ndarray], float] | None = None,
) -> Trajectory:
    """RK4 trajectory of the advected EP system.

    ``ell_a`` is the a-dependent part of the Lagrangian, used only for the
    energy log E = 1/2 <mu, xi> - ell_a(a). When omitted, ``dl_da`` is
    treated as constant so that ell_a(a) = <dl_da(a), a>.
    """
    Iinv = I.inv

    def f(t, s):
        mu, a = s[:3], s[3:]
        xi = Iinv @ mu
        dmu = ep_coadjoint_rate(xi, mu) + diamond(dl_da(a), a)
        return np.concatenate([dmu, -cross(xi, a)])

    times, S = _integrate(f, np.concatenate([s0.mu, s0.a]), dt, steps)
    mu, a = S[:, :3], S[:, 3:]
    xi = I.velocity(mu)
    if ell_a is None:
        pot = np.array([float(np.dot(dl_da(ak), ak)) for ak in a])
    else:
        pot = np.array([float(ell_a(ak)) for ak in a])
    inv = {
        "energy": 0.5 * np.sum(mu * xi, axis=1) - pot,
        "casimir": np.sum(a * a, axis=1),
        "speed": np.linalg.norm(xi, axis=1),
    }
    return Trajectory(times, S, ["mu1", "mu2", "mu3", "a1", "a2", "a3"], inv)


# ---------------------------------------------------------------- trivial groupoid

@dataclass(frozen=True)
class GroupoidEPState:
    """Reduced state on S^2 x SO(3) x S^2: base point, migration velocity,
    internal attitude and internal angular velocity."""

    x: SpherePoint
    X: SphereTangent
    attitude: Rotation
    eta: np.ndarray
    I: InertiaTensor
    alpha: float = 1.0

    def __post_init__(self):
        eta = np.array(self.eta, dtype=float)
        if eta.shape != (3,) or not np.all(np.isfinite(eta)):
            raise ValueError("eta must be a finite 3-vector")
        object.__setattr__(self, "eta", eta)
        if not np.allclose(self.X.base.p, self.x.p, rtol=0, atol=1e-9 * self.x.R):
            raise ValueError("X is not attached at x")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")

    @property
    def mu(self) -> np.ndarray:
        return self.I.I @ self.eta

    @property
    def m(self) -> np.ndarray:
        return self.alpha * self.X.v

    @property
    def energy(self) -> float:
        return 0.5 * float(self.eta @ self.mu) + 0.5 * self.alpha * float(self.X.v @ self.X.v)


def _trivial_rhs(s, Iinv, R):
    x, X, mu = s[:3], s[3:6], s[6:]
    acc = -(float(X @ X) / (R * R)) * x
    return np.concatenate([X, acc, _rigid_rhs(mu, Iinv)])


def trivial_ep_rhs(s: GroupoidEPState) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(dx/dt, dX/dt, d eta/dt) for the position-independent quadratic Lagrangian.

    The TM block is geodesic motion, realized extrinsically as
    ``X' = -(|X|^2 / R^2) x``; the so(3) block is the free rigid body in
    ``mu = I eta``.
    """
    d = _trivial_rhs(np.concatenate([s.x.p, s.X.v, s.mu]), s.I.inv, s.x.R)
    return d[:3], d[3:6], s.I.inv @ d[6:]


def _sphere_post(R):
    def post(s):
        x = s[:3]
        r = np.linalg.norm(x)
        if abs(r - R) > SPHERE_DRIFT_TOL * R:
            raise IntegrationDiverged(f"base point left the sphere: |x| = {r}")
        x = R * x / r
        X = project_tangent_arrays(x, s[3:6])
        return np.concatenate([x, X, s[6:]])

    return post


def integrate_trivial_ep(s0: GroupoidEPState, dt: float, steps: int) -> Trajectory:
    """RK4 for (x, X, mu) with per-step renormalization of x and tangent re-projection of X.

    The attitude path is reconstructed from eta and stored in
    ``extras["attitude"]`` as an array of 3x3 matrices.
    """
    R = s0.x.R
    Iinv = s0.I.inv
    state0 = np.concatenate([s0.x.p, s0.X.v, s0.mu])
    times, S = _integrate(lambda t, s: _trivial_rhs(s, Iinv, R), state0, dt, steps, post=_sphere_post(R))
    mu = S[:, 6:]
    eta = s0.I.velocity(mu)
    X = S[:, 3:6]
    speed = np.linalg.norm(X, axis=1)
    inv = {
        "energy": 0.5 * np.sum(eta * mu, axis=1) + 0.5 * s0.alpha * speed**2,
        "casimir": np.sum(mu * mu, axis=1),
        "speed": speed,
        "rotational_energy": 0.5 * np.sum(eta * mu, axis=1),
    }
    cols = ["x1", "x2", "x3", "X1", "X2", "X3", "mu1", "mu2", "mu3"]
    traj = Trajectory(times, S, cols, inv)
    traj.extras["eta"] = eta
    traj.extras["attitude"] = reconstruct_group_path(eta, s0.attitude, dt)
    return traj


# ---------------------------------------------------------------- reconstruction

def _rodrigues(v0, v1, v2):
    th2 = v0 * v0 + v1 * v1 + v2 * v2
    if th2 < 1e-12:
        a = 1.0 - th2 / 6.0 + th2 * th2 / 120.0
        b = 0.5 - th2 / 24.0 + th2 * th2 / 720.0
    else:
        th = np.sqrt(th2)
        a = np.sin(th) / th
        b = (1.0 - np.cos(th)) / th2
    return np.array([
        [1.0 - b * (v1 * v1 + v2 * v2), -a * v2 + b * v0 * v1, a * v1 + b * v0 * v2],
        [a * v2 + b * v0 * v1, 1.0 - b * (v0 * v0 + v2 * v2), -a * v0 + b * v1 * v2],
        [-a * v1 + b * v0 * v2, a * v0 + b * v1 * v2, 1.0 - b * (v0 * v0 + v1 * v1)],
    ])


def reconstruct_group_path(eta, R0, dt: float, steps: int | None = None) -> np.ndarray:
    """Integrate R' = R hat(eta) by R_{k+1} = R_k exp(hat(eta(t_k + dt/2)) dt).

    ``eta`` is either a callable of time or an array of samples on the uniform
    grid t_k = k dt; for samples, the midpoint value is the mean of the two
    neighbouring samples. Returns an array of shape (N, 3, 3).
    """
    R = np.array(R0.R if isinstance(R0, Rotation) else R0, dtype=float)
    if callable(eta):
        if steps is None:
            raise ValueError("steps is required when eta is a function")
        mids = np.array([eta((k + 0.5) * dt) for k in range(steps)], dtype=float)
    else:
        eta = np.asarray(eta, dtype=float)
        mids = 0.5 * (eta[1:] + eta[:-1])
    out = np.empty((len(mids) + 1, 3, 3))
    out[0] = R
    I3 = np.eye(3)
    for k, (w0, w1, w2) in enumerate((mids * dt).tolist()):
        R = R @ _rodrigues(w0, w1, w2)
        if (k & 63) == 63:
            E = R.T @ R - I3
            if np.sqrt(np.sum(E * E)) > ORTHO_TOL:
                R = polar_project(R)
        out[k + 1] = R
    return out
