import csv

import numpy as np
import pytest

from epgroupoid.algebra import InertiaTensor
from epgroupoid.dynamics import RigidBodyState, integrate_rigid_body
from epgroupoid.errors import CFLViolation
from epgroupoid.field import (
    FieldState,
    SNAPSHOT_HEADER,
    advect_tracer,
    check_cfl,
    diamond_field,
    directional_derivative,
    hat_fields,
    killing_fields,
    lie_derivative,
    pair,
    rotation_field,
    simulate_field,
    step_field,
    write_snapshot_csv,
)
from epgroupoid.sphere import build_icosphere, project_tangent_arrays

I123 = InertiaTensor.diag(1.0, 2.0, 3.0)


@pytest.fixture(scope="module")
def mesh3():
    return build_icosphere(3, 1.0)


@pytest.fixture(scope="module")
def mesh4():
    return build_icosphere(4, 1.0)


def l2(mesh, f):
    f = np.asarray(f)
    return np.sqrt(mesh.integrate(np.sum(f.reshape(len(f), -1) ** 2, axis=1)))


# ---------------------------------------------------------------- Lie derivative

def test_lie_zero_field(mesh3, rng):
    f = rng.standard_normal((mesh3.n_vertices, 3))
    X = np.zeros_like(mesh3.vertices)
    assert np.array_equal(lie_derivative(mesh3, X, f, 0.1), np.zeros_like(f))
    m = project_tangent_arrays(mesh3.vertices, f)
    assert np.array_equal(lie_derivative(mesh3, X, m, 0.1, "covector"), np.zeros_like(m))


def test_lie_constant_flat(mesh4):
    X = rotation_field(mesh4, [0.1, 0.2, 0.3])
    f = np.tile([1.0, -2.0, 0.5], (mesh4.n_vertices, 1))
    dt = 0.25 * mesh4.min_edge / np.max(np.linalg.norm(X, axis=1))
    err = np.max(np.linalg.norm(lie_derivative(mesh4, X, f, dt), axis=1))
    bound = 0.05 * np.linalg.norm(f[0]) * np.max(np.linalg.norm(X, axis=1)) / mesh4.R
    assert err <= bound


def _covector_transport_error(level):
    mesh = build_icosphere(level, 1.0)
    omega = np.array([0.1, 0.2, 0.3])
    c = np.array([1.0, -2.0, 0.5])
    x = mesh.vertices
    X = rotation_field(mesh, omega)
    m = project_tangent_arrays(x, np.broadcast_to(c, x.shape))
    xhat = x / mesh.R
    exact = -(xhat @ c)[:, None] * X / mesh.R - project_tangent_arrays(x, np.cross(omega, m))
    dt = 0.25 * mesh.min_edge / np.max(np.linalg.norm(X, axis=1))
    got = lie_derivative(mesh, X, m, dt, "covector")
    return l2(mesh, got - exact) / l2(mesh, exact)


def test_lie_covector_refinement():
    e3, e4 = _covector_transport_error(3), _covector_transport_error(4)
    assert e4 < 0.05
    assert e3 / e4 >= 1.8


def test_lie_killing_covector(mesh4):
    # the Lie derivative of a Killing 1-form along a commuting Killing field vanishes
    Y = rotation_field(mesh4, [0, 0, 1.0])
    X = rotation_field(mesh4, [0, 0, 0.3])
    dt = 0.25 * mesh4.min_edge / np.max(np.linalg.norm(X, axis=1))
    got = lie_derivative(mesh4, X, Y, dt, "covector")
    assert l2(mesh4, got) <= 0.02 * l2(mesh4, Y) * 0.3


def test_lie_kind_and_cfl(mesh3):
    X = rotation_field(mesh3, [0, 0, 1.0])
    f = np.zeros(mesh3.n_vertices)
    with pytest.raises(ValueError):
        lie_derivative(mesh3, X, f, 0.01, "spinor")
    with pytest.raises(CFLViolation):
        lie_derivative(mesh3, X, f, 10.0)
    with pytest.raises(ValueError):
        check_cfl(mesh3, X, 0.0)


def test_tracer_rotation_period(mesh4):
    omega = np.array([0.0, 0.0, 0.05])
    X = rotation_field(mesh4, omega)
    x = mesh4.vertices
    centre = np.array([1.0, 0.0, 0.0])
    f0 = np.exp(-np.sum((x - centre) ** 2, axis=1) / (2 * 0.4**2))
    steps = 192
    dt = 2 * np.pi / np.linalg.norm(omega) / steps
    f = advect_tracer(mesh4, X, f0, dt, steps)
    assert l2(mesh4, f - f0) / l2(mesh4, f0) <= 0.05
    # a quarter period has moved the bump, so the check is not vacuous
    q = advect_tracer(mesh4, X, f0, dt, steps // 4)
    assert l2(mesh4, q - f0) / l2(mesh4, f0) > 0.5


# ---------------------------------------------------------------- diamond

def test_diamond_constant_fields(mesh4):
    n = mesh4.n_vertices
    mu = np.tile([0.3, -1.0, 2.0], (n, 1))
    eta = np.tile([1.0, 0.5, -0.7], (n, 1))
    d = diamond_field(mesh4, mu, eta)
    bound = 1e-2 * np.linalg.norm(mu[0]) * np.linalg.norm(eta[0]) / mesh4.R
    assert l2(mesh4, d) <= bound


def test_diamond_zero_mu(mesh3, rng):
    eta = rng.standard_normal((mesh3.n_vertices, 3))
    assert np.array_equal(diamond_field(mesh3, np.zeros_like(eta), eta), np.zeros_like(eta))


def test_diamond_adjointness(mesh3, rng):
    n = mesh3.n_vertices
    mu = rng.standard_normal((n, 3))
    eta = np.sin(3 * mesh3.vertices) + rng.standard_normal((n, 3)) * 0.1
    d = diamond_field(mesh3, mu, eta)
    verts = rng.choice(n, 8, replace=False)
    fields = killing_fields(mesh3) + hat_fields(mesh3, verts, rng.standard_normal((8, 3)))
    for Y in fields:
        lhs = pair(mesh3, d, Y)
        rhs = -mesh3.integrate(np.sum(mu * directional_derivative(mesh3, Y, eta), axis=1))
        scale = l2(mesh3, mu) * l2(mesh3, eta) * max(1.0, l2(mesh3, Y)) / mesh3.R
        assert abs(lhs - rhs) <= 1e-10 * scale


# ---------------------------------------------------------------- stepping

def test_uniform_matches_ode(mesh3):
    eta0 = np.array([1.0, 0.5, -0.7])
    s = FieldState.from_velocities(mesh3, eta0, np.zeros(3), I123, alpha=2.0)
    ode = integrate_rigid_body(RigidBodyState(I123.I @ eta0, I123), 1e-3, 1000)
    energy = [s.energy()]
    worst = 0.0
    for k in range(1000):
        s = step_field(s, 1e-3)
        energy.append(s.energy())
        ref = ode.states[k + 1]
        worst = max(worst, np.max(np.abs(s.mu - ref)) / np.linalg.norm(ref))
    assert worst <= 1e-6
    assert np.array_equal(s.X, np.zeros_like(s.X))
    energy = np.array(energy)
    assert np.max(np.abs(energy - energy[0])) / energy[0] <= 1e-6
    assert s.constitutive_defect() <= 1e-10
    assert s.t == pytest.approx(1.0)


def test_zero_stays_zero(mesh3):
    s = FieldState.from_velocities(mesh3, np.zeros(3), np.zeros(3), I123, alpha=1.0)
    s, energy, _ = simulate_field(s, 1e-2, 20)
    assert not np.any(s.mu) and not np.any(s.m)
    assert np.all(energy == 0.0)


def test_rotation_field_transported(mesh4):
    omega = np.array([0.0, 0.0, 0.05])
    X0 = rotation_field(mesh4, omega)
    s = FieldState.from_velocities(mesh4, np.zeros(3), X0, I123, alpha=1.0)
    steps = 192
    dt = 2 * np.pi / np.linalg.norm(omega) / steps
    s, energy, _ = simulate_field(s, dt, steps)
    assert l2(mesh4, s.X - X0) / l2(mesh4, X0) <= 0.05
    assert np.all(s.mu == 0.0)
    assert s.constitutive_defect() <= 1e-10
    assert np.max(np.abs(np.sum(s.X * mesh4.vertices, axis=1))) <= 1e-12


def test_step_cfl(mesh3):
    s = FieldState.from_velocities(mesh3, np.zeros(3), rotation_field(mesh3, [0, 0, 1.0]), I123, 1.0)
    with pytest.raises(CFLViolation):
        step_field(s, 1.0)


def test_state_validation(mesh3):
    with pytest.raises(ValueError):
        FieldState.from_velocities(mesh3, np.zeros(3), np.zeros(3), I123, alpha=0.0)


def test_snapshot_csv(mesh3, tmp_path):
    s = FieldState.from_velocities(mesh3, [1.0, 0, 0], rotation_field(mesh3, [0, 0, 0.1]), I123, 1.0)
    path = tmp_path / "snap.csv"
    write_snapshot_csv(s, path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == SNAPSHOT_HEADER
    assert len(rows) == mesh3.n_vertices + 1
    assert float(rows[5][4]) == s.eta[4, 0]
