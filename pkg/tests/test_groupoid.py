import numpy as np
import pytest
from numpy.testing import assert_allclose

from epgroupoid.algebra import ad, hat, so3_exp, vee
from epgroupoid.errors import NonComposable
from epgroupoid.groupoid import (
    Ad,
    Ad_matrix,
    Ad_star,
    Bisection,
    GroupoidElement,
    Rotation,
    inverse,
    isotropy_contains,
    isotropy_exp,
    left_translate,
    multiply,
    random_rotation,
    random_sphere_point,
    right_translate,
    source,
    target,
    unit,
)
from epgroupoid.sphere import SpherePoint

R = 100.0


def rand_arrow(rng, y=None, x=None):
    x = random_sphere_point(rng, R) if x is None else x
    y = random_sphere_point(rng, R) if y is None else y
    return GroupoidElement(x, random_rotation(rng), y)


def chain(rng, n):
    """n composable arrows g_1 ... g_n with source(g_i) = target(g_{i+1})."""
    pts = [random_sphere_point(rng, R) for _ in range(n + 1)]
    return [GroupoidElement(pts[i], random_rotation(rng), pts[i + 1]) for i in range(n)]


def diff(g, h):
    return max(
        np.max(np.abs(g.x.p - h.x.p)) / R,
        np.max(np.abs(g.a.R - h.a.R)),
        np.max(np.abs(g.y.p - h.y.p)) / R,
    )


def test_rotation_validation():
    with pytest.raises(ValueError):
        Rotation(np.diag([1.0, 1.0, -1.0]))
    with pytest.raises(ValueError):
        Rotation(np.eye(3) * 1.001)


def test_rotation_product_reprojection(rng):
    R0 = random_rotation(rng)
    drifted = R0.R + 1e-8 * rng.standard_normal((3, 3))
    fixed = Rotation.from_product(drifted)
    assert np.linalg.norm(fixed.R.T @ fixed.R - np.eye(3)) <= 1e-12
    assert np.linalg.norm(fixed.R - R0.R) <= 1e-7


def test_structure_maps(rng):
    g = rand_arrow(rng)
    assert source(g) is g.y and target(g) is g.x
    u = unit(g.x)
    assert u.x is u.y and np.array_equal(u.a.R, np.eye(3))
    assert diff(multiply(u, g), g) == 0.0
    assert diff(inverse(inverse(g)), g) == 0.0
    assert source(inverse(g)) is target(g)
    assert target(inverse(g)) is source(g)


def test_multiply_laws(rng):
    worst = 0.0
    for _ in range(1000):
        g, h, k = chain(rng, 3)
        worst = max(worst, diff(multiply(multiply(g, h), k), multiply(g, multiply(h, k))))
        worst = max(worst, diff(multiply(g, unit(source(g))), g))
        worst = max(worst, diff(multiply(g, inverse(g)), unit(target(g))))
        worst = max(worst, diff(multiply(inverse(g), g), unit(source(g))))
        gh = multiply(g, h)
        assert source(gh) is source(h) and target(gh) is target(g)
    assert worst <= 1e-12


def test_non_composable(rng):
    g, h = rand_arrow(rng), rand_arrow(rng)
    with pytest.raises(NonComposable):
        multiply(g, h)


def _bisection(rng):
    phi = random_rotation(rng)
    w = rng.standard_normal(3)

    def a_of(p):
        return so3_exp(w * p.unit[0] + np.cross(w, p.unit))

    return Bisection(phi, a_of)


def test_bisection_section_property(rng):
    sigma = _bisection(rng)
    for _ in range(20):
        p = random_sphere_point(rng, R)
        s = sigma(p)
        assert source(s) is p
        assert_allclose(target(s).p, sigma.phi.R @ p.p, atol=1e-12 * R)


def test_translations(rng):
    ident = Bisection.identity()
    sigma = _bisection(rng)
    inv = sigma.inverse()
    for _ in range(50):
        g = rand_arrow(rng)
        assert diff(left_translate(ident, g), g) <= 1e-15
        assert diff(right_translate(ident, g), g) <= 1e-15
        lg = left_translate(sigma, g)
        assert source(lg).close_to(source(g))
        assert diff(left_translate(inv, lg), g) <= 1e-10
        rg = right_translate(sigma, g)
        assert target(rg).close_to(target(g))
        assert diff(right_translate(inv, rg), g) <= 1e-10


def test_isotropy(rng):
    p, q = random_sphere_point(rng, R), random_sphere_point(rng, R)
    assert isotropy_contains(p, unit(p))
    assert not isotropy_contains(p, GroupoidElement(p, random_rotation(rng), q))
    for _ in range(100):
        g = GroupoidElement(p, random_rotation(rng), p)
        h = GroupoidElement(p, random_rotation(rng), p)
        assert isotropy_contains(p, multiply(g, h))
        assert isotropy_contains(p, inverse(g))


def test_Ad_properties(rng):
    p = random_sphere_point(rng, R)
    X = rng.standard_normal(3)
    assert np.array_equal(Ad(unit(p), X), X)
    assert np.array_equal(Ad_star(unit(p), X), X)
    worst = 0.0
    for _ in range(1000):
        g, h = chain(rng, 2)
        X, xi = rng.uniform(-10, 10, (2, 3))
        worst = max(worst, np.max(np.abs(Ad(g, Ad(inverse(g), X)) - X)))
        worst = max(worst, np.max(np.abs(hat(Ad(g, X)) - g.a.R @ hat(X) @ g.a.R.T)))
        worst = max(worst, np.max(np.abs(Ad(multiply(g, h), X) - Ad(g, Ad(h, X)))))
        worst = max(worst, abs(Ad_star(g, xi) @ X - xi @ Ad(inverse(g), X)))
        worst = max(worst, abs(np.linalg.norm(Ad_star(g, xi)) - np.linalg.norm(xi)))
        worst = max(worst, np.max(np.abs(Ad_matrix(g, X) - Ad(g, X))))
    assert worst <= 1e-12


def test_ad_is_derivative_of_Ad(rng):
    p = random_sphere_point(rng, R)
    for _ in range(100):
        xi, Y = rng.uniform(-1, 1, (2, 3))
        errs = []
        for t in (1e-3, 1e-4):
            fd = (Ad(isotropy_exp(p, xi, t), Y) - Y) / t
            errs.append(np.linalg.norm(fd - ad(xi, Y)))
        assert errs[1] <= 1e-3
        # first-order remainder: error scales with t
        assert errs[1] <= 0.2 * errs[0] + 1e-12
