"""A cell migrating on a sphere while its polarity rotates.

With the quadratic Lagrangian 1/2 (<I eta, eta> + alpha |X|^2) the base point
follows a great circle at constant speed and the internal rotation is a free
rigid body; the two parts do not exchange energy.
Run: python3 demos/migration_on_sphere.py   (writes migration_on_sphere.png)
"""
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from epgroupoid.algebra import InertiaTensor
from epgroupoid.dynamics import GroupoidEPState, integrate_trivial_ep
from epgroupoid.groupoid import Rotation
from epgroupoid.sphere import SpherePoint, geodesic_distance, log_map

R = 100.0
A = SpherePoint.from_latlon(0, 0, R)
B = SpherePoint.from_latlon(60, 0, R)
T = 74.05                                       # minutes
X0 = log_map(A, B)
X0 = type(X0)(A, X0.v / T)                      # reach B at time T
s0 = GroupoidEPState(A, X0, Rotation.identity(), [0.02, 0.05, 0.01], InertiaTensor.diag(1, 2, 3))

dt = 0.01
traj = integrate_trivial_ep(s0, dt, int(round(T / dt)))
end = SpherePoint(traj.states[-1, :3], R)
print(f"arc length A-B           {geodesic_distance(A, B):.4f} um")
print(f"distance to B at t = T   {geodesic_distance(end, B):.2e} um")
print(f"speed drift              {traj.drift('speed'):.2e}")
print(f"rotational energy drift  {traj.drift('rotational_energy'):.2e}")
att = traj.extras["attitude"]
print(f"attitude orthogonality   {np.max(np.abs(att[-1].T @ att[-1] - np.eye(3))):.2e}")

fig = plt.figure(figsize=(9, 4))
ax = fig.add_subplot(1, 2, 1, projection="3d")
x = traj.states[:, :3]
ax.plot(*x.T)
ax.scatter(*A.p, color="k")
ax.scatter(*B.p, color="r")
ax.set_title("base point path")
ax2 = fig.add_subplot(1, 2, 2)
for k in range(3):
    ax2.plot(traj.times, traj.extras["eta"][:, k], label=f"eta{k + 1}")
ax2.set_xlabel("t (min)")
ax2.legend()
fig.tight_layout()
fig.savefig(Path(__file__).with_name("migration_on_sphere.png"), dpi=120)
