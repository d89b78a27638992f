"""Riemannian geometry of the round sphere of radius R and icosphere meshes.

Points live in R^3 with ``|p| = R``; tangent vectors at p satisfy ``<v, p> = 0``.
The typed API (:class:`SpherePoint`, :class:`SphereTangent`) wraps vectorized
array kernels (``*_arrays``) that the field solver calls directly on whole meshes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.spatial import cKDTree

from .errors import AntipodalPoints, RadiusMismatch

RADIUS_TOL = 1e-9
ANTIPODAL_MARGIN = 1e-6


@dataclass(frozen=True)
class SpherePoint:
    p: np.ndarray
    R: float = 1.0

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        R = float(self.R)
        if p.shape != (3,) or not np.all(np.isfinite(p)):
            raise ValueError("sphere point must be a finite 3-vector")
        if R <= 0:
            raise ValueError("radius must be positive")
        r = np.linalg.norm(p)
        if abs(r - R) > RADIUS_TOL * R:
            raise ValueError(f"|p| = {r} differs from R = {R}")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "R", R)

    @classmethod
    def from_direction(cls, d, R: float = 1.0) -> "SpherePoint":
        d = np.asarray(d, dtype=float)
        return cls(R * d / np.linalg.norm(d), R)

    @classmethod
    def from_latlon(cls, lat_deg: float, lon_deg: float, R: float = 1.0) -> "SpherePoint":
        lat, lon = np.radians(lat_deg), np.radians(lon_deg)
        d = np.array([np.cos(lat) * np.cos(lon), np.cos(lat) * np.sin(lon), np.sin(lat)])
        return cls.from_direction(d, R)

    @property
    def unit(self) -> np.ndarray:
        return self.p / self.R

    def close_to(self, other: "SpherePoint", tol: float = 1e-9) -> bool:
        return bool(np.linalg.norm(self.unit - other.unit) <= tol)


@dataclass(frozen=True)
class SphereTangent:
    base: SpherePoint
    v: np.ndarray

    def __post_init__(self):
        v = np.array(self.v, dtype=float)
        if v.shape != (3,) or not np.all(np.isfinite(v)):
            raise ValueError("tangent vector must be a finite 3-vector")
        R = self.base.R
        if abs(np.dot(v, self.base.p)) > RADIUS_TOL * R * max(np.linalg.norm(v), 1e-300):
            raise ValueError("vector is not tangent at its base point")
        v.setflags(write=False)
        object.__setattr__(self, "v", v)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.v))


# ---------------------------------------------------------------- array kernels

def _unit(P):
    return P / np.linalg.norm(P, axis=-1, keepdims=True)


def project_tangent_arrays(P, W):
    """Remove the radial part of W at points P (any radius)."""
    U = _unit(np.asarray(P, dtype=float))
    W = np.asarray(W, dtype=float)
    return W - np.sum(W * U, axis=-1, keepdims=True) * U


def exp_map_arrays(P, V, R):
    """Great-circle exponential, renormalized onto the sphere of radius R."""
    P = np.asarray(P, dtype=float)
    V = np.asarray(V, dtype=float)
    speed = np.linalg.norm(V, axis=-1, keepdims=True)
    theta = speed / R
    with np.errstate(invalid="ignore", divide="ignore"):
        direction = np.where(speed > 0, V / np.where(speed > 0, speed, 1.0), 0.0)
    Q = np.cos(theta) * P + R * np.sin(theta) * direction
    return R * _unit(Q)


def angle_arrays(P, Q):
    """Central angle between P and Q via atan2, stable near 0 and pi."""
    U, W = _unit(np.asarray(P, float)), _unit(np.asarray(Q, float))
    return np.arctan2(np.linalg.norm(np.cross(U, W), axis=-1), np.sum(U * W, axis=-1))


def log_map_arrays(P, Q, R):
    U, W = _unit(np.asarray(P, float)), _unit(np.asarray(Q, float))
    ang = angle_arrays(U, W)
    if np.any(ang >= np.pi - ANTIPODAL_MARGIN):
        raise AntipodalPoints("log map undefined for (nearly) antipodal points")
    D = W - np.sum(W * U, axis=-1, keepdims=True) * U
    n = np.linalg.norm(D, axis=-1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        D = np.where(n > 0, D / np.where(n > 0, n, 1.0), 0.0)
    return R * ang[..., None] * D


def transport_rotations(P, Q):
    """Rotation matrices carrying T_P S^2 to T_Q S^2 along the minimal geodesic.

    This is the rotation about ``P x Q`` by the central angle, which is exactly
    Levi-Civita transport along the great circle. Returns an array (..., 3, 3).
    """
    U, W = _unit(np.asarray(P, float)), _unit(np.asarray(Q, float))
    c = np.sum(U * W, axis=-1)
    k = np.cross(U, W)
    # Rodrigues with unnormalized axis: R = c I + [k]x + k k^T / (1 + c)
    if np.any(c <= -1.0 + 0.5 * ANTIPODAL_MARGIN**2):
        raise AntipodalPoints("parallel transport undefined between antipodal points")
    out = np.empty(U.shape[:-1] + (3, 3))
    out[...] = c[..., None, None] * np.eye(3)
    out[..., 0, 1] -= k[..., 2]
    out[..., 0, 2] += k[..., 1]
    out[..., 1, 0] += k[..., 2]
    out[..., 1, 2] -= k[..., 0]
    out[..., 2, 0] -= k[..., 1]
    out[..., 2, 1] += k[..., 0]
    out += k[..., :, None] * k[..., None, :] / (1.0 + c)[..., None, None]
    return out


def transport_vectors(P, Q, V):
    """Apply the geodesic transport P -> Q to vectors V without forming matrices."""
    U, W = _unit(np.asarray(P, float)), _unit(np.asarray(Q, float))
    c = np.sum(U * W, axis=-1, keepdims=True)
    if np.any(c <= -1.0 + 0.5 * ANTIPODAL_MARGIN**2):
        raise AntipodalPoints("parallel transport undefined between antipodal points")
    k = np.cross(U, W)
    V = np.asarray(V, float)
    return c * V + np.cross(k, V) + k * np.sum(k * V, axis=-1, keepdims=True) / (1.0 + c)


# ---------------------------------------------------------------- typed API

def _check_radii(p: SpherePoint, q: SpherePoint):
    if abs(p.R - q.R) > RADIUS_TOL * max(p.R, q.R):
        raise RadiusMismatch(f"radii differ: {p.R} vs {q.R}")


def project_tangent(p: SpherePoint, w) -> SphereTangent:
    # second pass removes the radial roundoff left when w is nearly radial
    return SphereTangent(p, project_tangent_arrays(p.p, project_tangent_arrays(p.p, w)))


def exp_map(p: SpherePoint, v: SphereTangent) -> SpherePoint:
    vv = v.v if isinstance(v, SphereTangent) else np.asarray(v, float)
    return SpherePoint(exp_map_arrays(p.p, vv, p.R), p.R)


def log_map(p: SpherePoint, q: SpherePoint) -> SphereTangent:
    """Initial velocity of the unit-time minimal geodesic from p to q."""
    _check_radii(p, q)
    return SphereTangent(p, project_tangent_arrays(p.p, log_map_arrays(p.p, q.p, p.R)))


def geodesic_distance(p: SpherePoint, q: SpherePoint) -> float:
    _check_radii(p, q)
    return float(p.R * angle_arrays(p.p, q.p))


def parallel_transport(p: SpherePoint, q: SpherePoint, v: SphereTangent) -> SphereTangent:
    _check_radii(p, q)
    vv = v.v if isinstance(v, SphereTangent) else np.asarray(v, float)
    w = transport_rotations(p.p, q.p) @ vv
    return SphereTangent(q, project_tangent_arrays(q.p, w))


# ---------------------------------------------------------------- icosphere

def _icosahedron():
    t = (1.0 + 5**0.5) / 2.0
    verts = np.array([
        [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
        [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
        [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
    ], dtype=float)
    faces = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ], dtype=np.int64)
    return _unit(verts), faces


def _subdivide(verts, faces):
    vert_list = list(verts)
    cache: dict[tuple[int, int], int] = {}

    def midpoint(i, j):
        key = (i, j) if i < j else (j, i)
        idx = cache.get(key)
        if idx is None:
            m = verts[i] + verts[j]
            vert_list.append(m / np.linalg.norm(m))
            idx = cache[key] = len(vert_list) - 1
        return idx

    new_faces = []
    for a, b, c in faces.tolist():
        ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
        new_faces += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
    return np.array(vert_list), np.array(new_faces, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class IcosphereMesh:
    """Subdivided icosahedron projected to radius R.

    ``areas`` are barycentric dual areas: each vertex receives one third of
    the spherical area of every incident triangle, so they sum to 4 pi R^2.
    """

    vertices: np.ndarray
    faces: np.ndarray
    R: float
    level: int = 0
    areas: np.ndarray = field(init=False)

    def __post_init__(self):
        tri = self.vertices[self.faces]
        face_area = self.R**2 * _spherical_triangle_area(*(_unit(tri[:, k]) for k in range(3)))
        areas = np.zeros(len(self.vertices))
        for k in range(3):
            np.add.at(areas, self.faces[:, k], face_area / 3.0)
        object.__setattr__(self, "areas", areas)
        object.__setattr__(self, "face_areas", face_area)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @cached_property
    def normals(self) -> np.ndarray:
        return self.vertices / self.R

    @cached_property
    def edges(self) -> np.ndarray:
        e = np.concatenate([self.faces[:, [0, 1]], self.faces[:, [1, 2]], self.faces[:, [2, 0]]])
        e.sort(axis=1)
        return np.unique(e, axis=0)

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        """Chord lengths of the mesh edges."""
        return np.linalg.norm(self.vertices[self.edges[:, 0]] - self.vertices[self.edges[:, 1]], axis=1)

    @property
    def min_edge(self) -> float:
        return float(self.edge_lengths.min())

    @property
    def max_edge(self) -> float:
        return float(self.edge_lengths.max())

    def euler_characteristic(self) -> int:
        return self.n_vertices - len(self.edges) + len(self.faces)

    @cached_property
    def vertex_faces(self) -> np.ndarray:
        """Incident faces per vertex, padded with -1 to width 6."""
        out = -np.ones((self.n_vertices, 6), dtype=np.int64)
        count = np.zeros(self.n_vertices, dtype=np.int64)
        for f, tri in enumerate(self.faces.tolist()):
            for v in tri:
                out[v, count[v]] = f
                count[v] += 1
        return out

    @cached_property
    def _tree(self) -> cKDTree:
        return cKDTree(self.vertices / self.R)

    @cached_property
    def _corner_normals(self) -> np.ndarray:
        """Per face, (b x c, c x a, a x b) on the unit sphere; shape (F, 3, 3)."""
        U = self.vertices / self.R
        a, b, c = (U[self.faces[:, k]] for k in range(3))
        return np.stack([np.cross(b, c), np.cross(c, a), np.cross(a, b)], axis=1)

    def _weights(self, U, cand):
        W = np.einsum("nj,nckj->nck", U, self._corner_normals[np.maximum(cand, 0)])
        W = W / W.sum(axis=-1, keepdims=True)
        score = np.where(cand >= 0, W.min(axis=-1), -np.inf)
        best = np.argmax(score, axis=1)
        rows = np.arange(len(U))
        return cand[rows, best], W[rows, best], score[rows, best]

    def locate(self, Q):
        """Containing face and gnomonic barycentric weights for points Q on the sphere.

        Faces around the nearest vertex are tried first; points they do not
        contain are retried against the faces around the three nearest
        vertices, keeping the face whose smallest weight is largest.
        """
        U = _unit(np.atleast_2d(np.asarray(Q, dtype=float)))
        _, near = self._tree.query(U, k=1)
        face, W, score = self._weights(U, self.vertex_faces[near])
        miss = np.flatnonzero(score < -1e-12)
        if miss.size:
            _, near3 = self._tree.query(U[miss], k=3)
            f2, W2, _ = self._weights(U[miss], self.vertex_faces[near3].reshape(miss.size, -1))
            face[miss], W[miss] = f2, W2
        return face, W

    @cached_property
    def neighbors(self) -> list[np.ndarray]:
        nb = [set() for _ in range(self.n_vertices)]
        for i, j in self.edges.tolist():
            nb[i].add(j)
            nb[j].add(i)
        return [np.array(sorted(s), dtype=np.int64) for s in nb]

    def _two_ring(self, v: int) -> np.ndarray:
        ring = set(self.neighbors[v].tolist())
        for j in self.neighbors[v].tolist():
            ring.update(self.neighbors[j].tolist())
        ring.discard(v)
        return np.array(sorted(ring), dtype=np.int64)

    @cached_property
    def gradient_operator(self):
        """Difference-form gradient stencil ``(centers, others, B)``.

        At each vertex a quadratic is fitted by least squares to the values on
        the two-ring, in orthographic tangent-plane coordinates; its linear
        coefficients give a second-order accurate tangent gradient. The
        gradient is ``B @ (f[others] - f[centers])``, so constant fields have
        an exactly zero gradient. Row ``3*v + j`` of B is component j at v.
        """
        centers, others, rows, vals = [], [], [], []
        for v in range(self.n_vertices):
            n = self.normals[v]
            e1 = np.cross(n, [1.0, 0.0, 0.0] if abs(n[0]) < 0.9 else [0.0, 1.0, 0.0])
            e1 /= np.linalg.norm(e1)
            e2 = np.cross(n, e1)
            ring = self._two_ring(v)
            d = self.vertices[ring] - self.vertices[v]
            u1, u2 = (d @ e1), (d @ e2)
            h = np.sqrt(np.mean(u1**2 + u2**2))
            u1, u2 = u1 / h, u2 / h
            A = np.column_stack([u1, u2, 0.5 * u1**2, u1 * u2, 0.5 * u2**2])
            P = np.linalg.pinv(A)[:2] / h
            G = np.outer(e1, P[0]) + np.outer(e2, P[1])     # (3, len(ring))
            centers.append(np.full(len(ring), v))
            others.append(ring)
            rows.append(3 * v + np.arange(3)[:, None] + 0 * ring[None, :])
            vals.append(G)
        centers = np.concatenate(centers)
        others = np.concatenate(others)
        npair = len(centers)
        cols = []
        off = 0
        for r in rows:
            k = r.shape[1]
            cols.append(np.broadcast_to(np.arange(off, off + k), r.shape))
            off += k
        B = sparse.csr_matrix(
            (np.concatenate([g.ravel() for g in vals]),
             (np.concatenate([r.ravel() for r in rows]), np.concatenate([c.ravel() for c in cols]))),
            shape=(3 * self.n_vertices, npair),
        )
        return centers, others, B

    def gradient(self, f) -> np.ndarray:
        """Tangent gradients of vertex fields. f: (n, ...) -> (n, ..., 3)."""
        f = np.asarray(f, dtype=float)
        centers, others, B = self.gradient_operator
        flat = f.reshape(len(f), -1)
        g = (B @ (flat[others] - flat[centers])).reshape(len(f), 3, -1)
        g = np.moveaxis(g, 1, -1)
        return g.reshape(f.shape + (3,))

    def integrate(self, f) -> float:
        """Area-weighted vertex quadrature, summed in fixed vertex order."""
        f = np.asarray(f, dtype=float)
        return float(np.sum(self.areas.reshape((-1,) + (1,) * (f.ndim - 1)) * f))

    def write_off(self, path) -> None:
        write_off(self, path)


def _spherical_triangle_area(a, b, c):
    """Spherical excess of unit-vector triangles (van Oosterom-Strackee)."""
    num = np.abs(np.einsum("ij,ij->i", a, np.cross(b, c)))
    den = 1.0 + np.einsum("ij,ij->i", a, b) + np.einsum("ij,ij->i", b, c) + np.einsum("ij,ij->i", c, a)
    return 2.0 * np.arctan2(num, den)


def build_icosphere(subdivisions: int, R: float = 1.0) -> IcosphereMesh:
    """Icosahedron refined ``subdivisions`` times by midpoint splitting.

    Vertex ordering is deterministic, giving ``10 * 4**s + 2`` vertices.
    """
    if not 0 <= int(subdivisions) <= 7:
        raise ValueError("subdivisions must be in [0, 7]")
    if R <= 0:
        raise ValueError("radius must be positive")
    v, f = _icosahedron()
    for _ in range(int(subdivisions)):
        v, f = _subdivide(v, f)
    # outward orientation
    a, b, c = v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]
    flip = np.einsum("ij,ij->i", a, np.cross(b, c)) < 0
    f[flip] = f[flip][:, [0, 2, 1]]
    return IcosphereMesh(R * v, f, float(R), int(subdivisions))


def write_off(mesh: IcosphereMesh, path) -> None:
    lines = ["OFF", f"{mesh.n_vertices} {len(mesh.faces)} {len(mesh.edges)}"]
    lines += [f"{x:.17g} {y:.17g} {z:.17g}" for x, y, z in mesh.vertices.tolist()]
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.faces.tolist()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_off(path, R: float | None = None) -> IcosphereMesh:
    tokens = Path(path).read_text().split()
    if tokens[0] != "OFF":
        raise ValueError("not an OFF file")
    nv, nf = int(tokens[1]), int(tokens[2])
    pos = 4
    verts = np.array(tokens[pos:pos + 3 * nv], dtype=float).reshape(nv, 3)
    pos += 3 * nv
    faces = np.array(tokens[pos:pos + 4 * nf], dtype=np.int64).reshape(nf, 4)[:, 1:]
    if R is None:
        R = float(np.mean(np.linalg.norm(verts, axis=1)))
    return IcosphereMesh(verts, faces, R)
