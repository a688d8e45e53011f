"""Core mesh and point-cloud data types plus basic spatial operations.

All types are immutable after construction (arrays are frozen) and safe to
share across threads; every operation here is a pure function.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class GeometryError(ValueError):
    """Invalid or degenerate geometric input."""


def _frozen(a: np.ndarray, dtype, shape_tail) -> np.ndarray:
    out = np.array(a, dtype=dtype, order="C", copy=True)
    if out.ndim != len(shape_tail) + 1 or out.shape[1:] != shape_tail:
        raise GeometryError(f"expected shape (*, {shape_tail}), got {out.shape}")
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class TriMesh:
    """Indexed triangle surface with an optional per-face part label."""

    vertices: np.ndarray              # (V, 3) float64
    faces: np.ndarray                 # (F, 3) int64
    face_labels: np.ndarray | None = None  # (F,) int64 part ids

    def __post_init__(self):
        v = _frozen(self.vertices, np.float64, (3,))
        f = _frozen(self.faces, np.int64, (3,))
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)
        if not np.isfinite(v).all():
            raise GeometryError("non-finite vertex coordinates")
        if len(f):
            if f.min() < 0 or f.max() >= len(v):
                raise GeometryError("face index out of range")
            if (
                (f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])
            ).any():
                raise GeometryError("degenerate face with repeated vertex index")
        if self.face_labels is not None:
            lab = np.array(self.face_labels, dtype=np.int64, copy=True)
            if lab.shape != (len(f),):
                raise GeometryError("face_labels length must match face count")
            lab.setflags(write=False)
            object.__setattr__(self, "face_labels", lab)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def _memo(self, key: str, fn):
        # derived arrays are cached; safe because the mesh is immutable
        cache = self.__dict__.setdefault("_cache", {})
        if key not in cache:
            cache[key] = fn()
        return cache[key]

    def triangles(self) -> np.ndarray:
        """(F, 3, 3) corner positions."""
        return self.vertices[self.faces]

    def face_areas(self) -> np.ndarray:
        def compute():
            t = self.triangles()
            return 0.5 * np.linalg.norm(
                np.cross(t[:, 1] - t[:, 0], t[:, 2] - t[:, 0]), axis=1
            )

        return self._memo("face_areas", compute)

    def area(self) -> float:
        return float(self.face_areas().sum())

    def face_normals(self) -> np.ndarray:
        """Unit normals; zero-area faces get a zero vector."""
        t = self.triangles()
        n = np.cross(t[:, 1] - t[:, 0], t[:, 2] - t[:, 0])
        norm = np.linalg.norm(n, axis=1, keepdims=True)
        return np.where(norm > 0, n / np.where(norm > 0, norm, 1.0), 0.0)

    def face_centroids(self) -> np.ndarray:
        return self.triangles().mean(axis=1)

    def vertex_normals(self) -> np.ndarray:
        """Area-weighted average of incident face normals, normalized.
        Vertices whose incident normals cancel fall back to +z."""

        def compute():
            t = self.triangles()
            fn = np.cross(t[:, 1] - t[:, 0], t[:, 2] - t[:, 0])  # area-weighted
            vn = np.zeros_like(self.vertices)
            for k in range(3):
                np.add.at(vn, self.faces[:, k], fn)
            norm = np.linalg.norm(vn, axis=1, keepdims=True)
            out = np.where(norm > 1e-20, vn / np.where(norm > 0, norm, 1.0), 0.0)
            dead = norm[:, 0] <= 1e-20
            out[dead] = (0.0, 0.0, 1.0)
            return out

        return self._memo("vertex_normals", compute)

    def submesh(self, face_mask: np.ndarray) -> "TriMesh":
        """Mesh containing only the selected faces; vertices are compacted."""
        faces = self.faces[face_mask]
        used = np.unique(faces)
        remap = np.full(self.n_vertices, -1, dtype=np.int64)
        remap[used] = np.arange(len(used))
        labels = None
        if self.face_labels is not None:
            labels = self.face_labels[face_mask]
        return TriMesh(self.vertices[used], remap[faces], labels)

    def with_labels(self, labels: np.ndarray) -> "TriMesh":
        return TriMesh(self.vertices, self.faces, labels)

    def transformed(self, transform: "NormTransform") -> "TriMesh":
        return TriMesh(transform.apply(self.vertices), self.faces, self.face_labels)


@dataclass(frozen=True)
class PointCloud:
    """Oriented surface samples: positions plus unit normals."""

    positions: np.ndarray  # (N, 3) float64
    normals: np.ndarray    # (N, 3) float64, unit

    def __post_init__(self):
        p = _frozen(self.positions, np.float64, (3,))
        n = _frozen(self.normals, np.float64, (3,))
        object.__setattr__(self, "positions", p)
        object.__setattr__(self, "normals", n)
        if len(p) < 1:
            raise GeometryError("point cloud must contain at least one point")
        if len(p) != len(n):
            raise GeometryError("positions/normals length mismatch")
        nn = np.linalg.norm(n, axis=1)
        if np.abs(nn - 1.0).max() > 1e-6:
            raise GeometryError("normals must be unit length within 1e-6")

    def __len__(self) -> int:
        return len(self.positions)

    def select(self, idx: np.ndarray) -> "PointCloud":
        return PointCloud(self.positions[idx], self.normals[idx])

    def transformed(self, transform: "NormTransform") -> "PointCloud":
        # uniform scaling + translation leaves unit normals unchanged
        return PointCloud(transform.apply(self.positions), self.normals)


@dataclass(frozen=True)
class AABB:
    """Axis-aligned box."""

    min_corner: np.ndarray
    max_corner: np.ndarray

    def __post_init__(self):
        lo = np.array(self.min_corner, dtype=np.float64, copy=True).reshape(3)
        hi = np.array(self.max_corner, dtype=np.float64, copy=True).reshape(3)
        if (lo > hi).any():
            raise GeometryError("AABB min corner exceeds max corner")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "min_corner", lo)
        object.__setattr__(self, "max_corner", hi)

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.min_corner + self.max_corner)

    @property
    def extent(self) -> np.ndarray:
        return self.max_corner - self.min_corner

    @property
    def volume(self) -> float:
        return float(np.prod(self.extent))

    def contains(self, points: np.ndarray, atol: float = 0.0) -> np.ndarray:
        p = np.atleast_2d(points)
        return ((p >= self.min_corner - atol) & (p <= self.max_corner + atol)).all(axis=1)

    def scaled(self, factor: float) -> "AABB":
        """Box scaled about its own center."""
        c = self.center
        h = 0.5 * self.extent * factor
        return AABB(c - h, c + h)

    def padded(self, margin: float) -> "AABB":
        return AABB(self.min_corner - margin, self.max_corner + margin)

    def union(self, other: "AABB") -> "AABB":
        return AABB(
            np.minimum(self.min_corner, other.min_corner),
            np.maximum(self.max_corner, other.max_corner),
        )


@dataclass(frozen=True)
class NormTransform:
    """Similarity transform p -> p * scale + translation, scale > 0."""

    scale: float
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        if not (self.scale > 0.0 and np.isfinite(self.scale)):
            raise GeometryError("scale must be positive and finite")
        t = np.array(self.translation, dtype=np.float64, copy=True).reshape(3)
        t.setflags(write=False)
        object.__setattr__(self, "translation", t)
        object.__setattr__(self, "scale", float(self.scale))

    def apply(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=np.float64) * self.scale + self.translation

    def inverse(self) -> "NormTransform":
        return NormTransform(1.0 / self.scale, -self.translation / self.scale)

    @staticmethod
    def identity() -> "NormTransform":
        return NormTransform(1.0, np.zeros(3))


# ---------------------------------------------------------------------------
# operations


def bounding_box(mesh: TriMesh) -> AABB:
    """Tight componentwise min/max over vertices."""
    if mesh.n_vertices == 0:
        raise GeometryError("empty mesh has no bounding box")
    return AABB(mesh.vertices.min(axis=0), mesh.vertices.max(axis=0))


def points_bounding_box(points: np.ndarray) -> AABB:
    p = np.atleast_2d(points)
    if len(p) == 0:
        raise GeometryError("empty point set has no bounding box")
    return AABB(p.min(axis=0), p.max(axis=0))


def unit_box_transform(box: AABB) -> NormTransform:
    """Transform centering the box and scaling its longest axis to [-1, 1]."""
    ext = float(box.extent.max())
    if ext <= 0.0:
        raise GeometryError("zero-extent geometry cannot be normalized")
    s = 2.0 / ext
    return NormTransform(s, -box.center * s)


def normalize_to_unit(mesh: TriMesh) -> tuple[TriMesh, NormTransform]:
    """Center the mesh on its AABB center and scale the longest axis to span
    exactly [-1, 1]. The returned transform maps original -> normalized."""
    t = unit_box_transform(bounding_box(mesh))
    return mesh.transformed(t), t


def merge_meshes(parts: list[TriMesh]) -> TriMesh:
    """Concatenate meshes; per-face labels are set to the source part index."""
    if not parts:
        raise GeometryError("merge_meshes requires at least one part")
    verts, faces, labels = [], [], []
    offset = 0
    for i, part in enumerate(parts):
        verts.append(part.vertices)
        faces.append(part.faces + offset)
        labels.append(np.full(part.n_faces, i, dtype=np.int64))
        offset += part.n_vertices
    return TriMesh(
        np.concatenate(verts), np.concatenate(faces), np.concatenate(labels)
    )


def edge_face_counts(faces: np.ndarray) -> dict[tuple[int, int], int]:
    """Occurrences of each undirected edge among face boundaries."""
    e = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    e = np.sort(e, axis=1)
    uniq, cnt = np.unique(e, axis=0, return_counts=True)
    return {tuple(k): int(c) for k, c in zip(uniq, cnt)}


def is_edge_manifold(mesh: TriMesh) -> bool:
    """True when every edge borders exactly two faces (closed surface)."""
    if mesh.n_faces == 0:
        return False
    e = np.concatenate(
        [mesh.faces[:, [0, 1]], mesh.faces[:, [1, 2]], mesh.faces[:, [2, 0]]]
    )
    e = np.sort(e, axis=1)
    _, cnt = np.unique(e, axis=0, return_counts=True)
    return bool((cnt == 2).all())


def boundary_edge_count(mesh: TriMesh) -> int:
    e = np.concatenate(
        [mesh.faces[:, [0, 1]], mesh.faces[:, [1, 2]], mesh.faces[:, [2, 0]]]
    )
    e = np.sort(e, axis=1)
    _, cnt = np.unique(e, axis=0, return_counts=True)
    return int((cnt == 1).sum())


def connected_face_components(mesh: TriMesh) -> np.ndarray:
    """Label faces by edge-connected component (int64 per face)."""
    n = mesh.n_faces
    parent = np.arange(n)

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    edges: dict[tuple[int, int], int] = {}
    f = mesh.faces
    for fi in range(n):
        for a, b in ((f[fi, 0], f[fi, 1]), (f[fi, 1], f[fi, 2]), (f[fi, 2], f[fi, 0])):
            key = (int(a), int(b)) if a < b else (int(b), int(a))
            other = edges.get(key)
            if other is None:
                edges[key] = fi
            else:
                ra, rb = find(fi), find(other)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
    roots = np.array([find(i) for i in range(n)])
    _, labels = np.unique(roots, return_inverse=True)
    return labels
