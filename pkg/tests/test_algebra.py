import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from epgroupoid.algebra import (
    InertiaTensor,
    ad,
    ad_star,
    body_momentum,
    diamond,
    hat,
    so3_exp,
    so3_log,
    variational_derivative_check,
    vee,
)
from epgroupoid.errors import NotSPD

E1, E2, E3 = np.eye(3)
vec = st.lists(st.floats(-10, 10, allow_nan=False), min_size=3, max_size=3).map(np.array)


def pairing_solve(functional):
    """Vector v with <v, e_k> = functional(e_k); independent of any cross-product formula."""
    return np.array([functional(e) for e in np.eye(3)])


def test_hat_zero_and_cross_identity():
    assert_array_equal(hat([0, 0, 0]), np.zeros((3, 3)))
    assert_array_equal(hat(E1) @ E2, E3)
    assert_allclose(vee(hat([0.3, -1.2, 2.5])), [0.3, -1.2, 2.5], atol=0)


def test_vee_rejects_symmetric_part():
    m = hat([1.0, 2.0, 3.0])
    m[0, 1] += 1e-9
    with pytest.raises(ValueError):
        vee(m)


@given(vec, vec)
def test_hat_is_cross_product(v, w):
    assert_allclose(hat(v) @ w, np.cross(v, w), atol=1e-12)
    assert_array_equal(vee(hat(v)), v)
    assert_array_equal(hat(v) + hat(v).T, np.zeros((3, 3)))


def test_ad_examples():
    assert_array_equal(ad(E1, E2), E3)
    assert_array_equal(ad([1.3, -2, 0.5], [1.3, -2, 0.5]), np.zeros(3))
    assert_array_equal(ad([1, 2, 3], [4, 5, 6]), [-3, 6, -3])


def test_ad_star_examples():
    xi = np.array([0.2, -1.0, 4.0])
    assert_array_equal(ad_star(xi, np.zeros(3)), np.zeros(3))
    expected = pairing_solve(lambda eta: np.dot([0, 1, 0], ad(E1, eta)))
    assert_array_equal(expected, [0, 0, -1])
    assert_array_equal(ad_star(E1, E2), expected)


def test_diamond_examples():
    a = np.array([0.4, 1.0, -2.0])
    assert_array_equal(diamond(a, a), np.zeros(3))
    expected = pairing_solve(lambda xi: -np.dot(E1, np.cross(xi, E2)))
    assert_array_equal(expected, E3)
    assert_array_equal(diamond(E1, E2), expected)


def test_pairing_identities_random(rng):
    X = rng.uniform(-10, 10, size=(1000, 3, 3))
    worst_star = worst_diamond = 0.0
    for xi, mu, eta in X:
        worst_star = max(worst_star, abs(ad_star(xi, mu) @ eta - mu @ ad(xi, eta)))
        worst_diamond = max(worst_diamond, abs(diamond(mu, eta) @ xi + mu @ np.cross(xi, eta)))
    assert worst_star <= 1e-12
    assert worst_diamond <= 1e-12


@given(vec, vec, vec)
def test_jacobi_and_antisymmetry(x, y, z):
    jac = ad(x, ad(y, z)) + ad(y, ad(z, x)) + ad(z, ad(x, y))
    assert np.max(np.abs(jac)) <= 1e-12 * max(1.0, np.max(np.abs(x)) * np.max(np.abs(y)) * np.max(np.abs(z)))
    assert_array_equal(ad(x, y), -ad(y, x))


def test_inertia_validation():
    with pytest.raises(NotSPD):
        InertiaTensor(np.diag([1.0, -1.0, 2.0]))
    with pytest.raises(NotSPD):
        InertiaTensor(np.array([[1.0, 0.1, 0], [0, 1, 0], [0, 0, 1]]))
    with pytest.raises(NotSPD):
        InertiaTensor(np.diag([1.0, 1.0, 1e-14]))
    I = InertiaTensor.diag(1, 2, 3)
    assert_array_equal(I.inv, np.diag([1, 0.5, 1 / 3]))


def test_body_momentum(rng):
    Om = rng.standard_normal(3)
    assert_array_equal(body_momentum(InertiaTensor.identity(), Om), Om)
    assert_array_equal(body_momentum(InertiaTensor.diag(1, 2, 3), [1, 1, 1]), [1, 2, 3])
    for _ in range(50):
        A = rng.standard_normal((3, 3))
        I = InertiaTensor(A @ A.T + 0.1 * np.eye(3))
        Om = rng.standard_normal(3)
        back = np.linalg.solve(I.I, body_momentum(I, Om))
        assert np.linalg.norm(back - Om) <= 1e-10 * np.linalg.norm(Om)


def test_so3_exp_log(rng):
    for _ in range(200):
        v = rng.uniform(-1, 1, 3) * 1.8  # |v| < pi: principal branch
        R = so3_exp(v)
        assert_allclose(R.T @ R, np.eye(3), atol=1e-14)
        assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-14)
        assert_allclose(so3_log(R), v, atol=1e-10)
        assert_allclose(R @ hat(v) @ R.T, hat(v), atol=1e-12)  # exp(v) fixes v
    assert_allclose(so3_exp([0, 0, np.pi / 2]) @ E1, E2, atol=1e-15)
    assert_allclose(so3_exp([1e-9, 0, 0]), np.eye(3) + hat([1e-9, 0, 0]), atol=1e-18)


@pytest.mark.parametrize(
    "l, xi, grad, tol",
    [
        (lambda x: 0.5 * x @ x, [1.0, 2.0, 3.0], [1.0, 2.0, 3.0], 1e-8),
        (lambda x: 0.5 * x @ np.diag([1.0, 2.0, 3.0]) @ x, [1.0, 1.0, 1.0], [1.0, 2.0, 3.0], 1e-8),
    ],
)
def test_variational_check_examples(l, xi, grad, tol):
    assert variational_derivative_check(l, xi, grad) <= tol


def test_variational_check_detects_wrong_gradient():
    assert variational_derivative_check(lambda x: 0.5 * x @ x, [1.0, 2.0, 3.0], [1.0, 2.0, 3.1]) > 0.09


def test_sphere_model_momenta(rng):
    I = InertiaTensor.diag(1.0, 2.0, 3.0)
    alpha = 2.5
    eta, X = rng.standard_normal(3), rng.standard_normal(3)

    def ell(z):
        return 0.5 * (z[:3] @ I.I @ z[:3] + alpha * z[3:] @ z[3:])

    z = np.concatenate([eta, X])
    assert variational_derivative_check(ell, z, np.concatenate([I.I @ eta, alpha * X])) <= 1e-7
