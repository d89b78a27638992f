"""The pair groupoid S2 x SO(3) x S2: composition, bisections and the adjoint action.

An arrow (x, a, y) goes from y to x and carries an internal rotation a.
Run: python3 demos/groupoid_actions.py
"""
import numpy as np

from epgroupoid.algebra import ad, so3_exp
from epgroupoid.groupoid import (
    Ad,
    Ad_star,
    Bisection,
    GroupoidElement,
    inverse,
    isotropy_exp,
    left_translate,
    multiply,
    random_rotation,
    right_translate,
)
from epgroupoid.sphere import SpherePoint

rng = np.random.default_rng(0)
R = 100.0
A = SpherePoint.from_latlon(0, 0, R)
B = SpherePoint.from_latlon(60, 0, R)
C = SpherePoint.from_latlon(30, 90, R)

g = GroupoidElement(B, random_rotation(rng), A)   # A -> B
h = GroupoidElement(A, random_rotation(rng), C)   # C -> A
gh = multiply(g, h)
print("g h goes from C to B:", gh.y is C and gh.x is B)
print("g g^-1 is the unit at B:", np.allclose(multiply(g, inverse(g)).a.R, np.eye(3)))

# A bisection moves every base point by a global rotation and attaches a
# position-dependent internal rotation.
sigma = Bisection(random_rotation(rng), lambda p: so3_exp(0.3 * p.unit))
lg = left_translate(sigma, g)
print("left translation keeps the source:", lg.y.close_to(g.y))
print("...and is undone by the inverse bisection:",
      np.allclose(left_translate(sigma.inverse(), lg).a.R, g.a.R, atol=1e-12))
rg = right_translate(sigma, g)
print("right translation keeps the target:", rg.x.close_to(g.x))

# On the isotropy algebra, Ad is conjugation and Ad* preserves the norm.
X = np.array([0.2, -1.0, 0.5])
print("|Ad*_g xi| = |xi|:", np.isclose(np.linalg.norm(Ad_star(g, X)), np.linalg.norm(X)))

# Differentiating Ad along a one-parameter isotropy subgroup gives ad.
xi = np.array([0.3, 0.1, -0.7])
for t in (1e-2, 1e-3, 1e-4):
    fd = (Ad(isotropy_exp(A, xi, t), X) - X) / t
    print(f"t = {t:.0e}: |(Ad - id)/t - ad| = {np.linalg.norm(fd - ad(xi, X)):.2e}")
