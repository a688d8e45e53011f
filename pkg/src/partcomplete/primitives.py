"""Watertight primitive meshes (box, icosphere, cylinder, truncated cone).

All constructors return closed, outward-oriented surfaces; the icosphere
vertex set doubles as the uniform view-direction sphere for visibility
culling."""

from __future__ import annotations

import numpy as np

from .geometry import TriMesh

# (u, v) parameter axes per box face, chosen so that u x v points outward
_BOX_FACE_AXES = (
    (0, 0, 2, 1),  # -x: face at x=0 lattice, params (z, y)
    (0, 1, 1, 2),  # +x: params (y, z)
    (1, 0, 0, 2),  # -y: params (x, z)
    (1, 1, 2, 0),  # +y: params (z, x)
    (2, 0, 1, 0),  # -z: params (y, x)
    (2, 1, 0, 1),  # +z: params (x, y)
)


def box_mesh(center, size, segments=1) -> TriMesh:
    """Axis-aligned box; ``size`` is the full extent per axis.

    ``segments`` (scalar or per-axis) grid-subdivides each face, which gives
    visibility culling enough face granularity to express partial burial."""
    c = np.asarray(center, dtype=np.float64)
    ext = np.asarray(size, dtype=np.float64)
    seg = np.broadcast_to(np.asarray(segments, dtype=np.int64), (3,)).copy()
    if (seg < 1).any():
        raise ValueError("segments must be >= 1")
    vid: dict[tuple[int, int, int], int] = {}
    verts: list[tuple[float, float, float]] = []

    def lattice(i, j, k):
        key = (i, j, k)
        if key not in vid:
            vid[key] = len(verts)
            frac = np.array([i / seg[0], j / seg[1], k / seg[2]])
            verts.append(tuple(c + (frac - 0.5) * ext))
        return vid[key]

    faces = []
    for axis, side, ua, va in _BOX_FACE_AXES:
        fixed = side * seg[axis]
        for iu in range(seg[ua]):
            for iv in range(seg[va]):
                corner = [0, 0, 0]
                corner[axis] = fixed

                def at(du, dv):
                    p = corner.copy()
                    p[ua] = iu + du
                    p[va] = iv + dv
                    return lattice(*p)

                c00, c10, c11, c01 = at(0, 0), at(1, 0), at(1, 1), at(0, 1)
                faces.append((c00, c10, c11))
                faces.append((c00, c11, c01))
    return TriMesh(np.asarray(verts), np.asarray(faces, dtype=np.int64))


def icosahedron() -> TriMesh:
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    v = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=np.float64,
    )
    v /= np.linalg.norm(v[0])
    f = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ],
        dtype=np.int64,
    )
    return TriMesh(v, f)


def icosphere(level: int = 2, radius: float = 1.0, center=(0.0, 0.0, 0.0)) -> TriMesh:
    """Subdivided icosahedron projected onto the sphere.
    Vertex counts per level: 12, 42, 162, 642, ..."""
    mesh = icosahedron()
    verts = [tuple(p) for p in mesh.vertices]
    faces = [tuple(f) for f in mesh.faces]
    for _ in range(level):
        midpoint: dict[tuple[int, int], int] = {}
        new_faces = []

        def mid(i, j):
            key = (i, j) if i < j else (j, i)
            if key not in midpoint:
                p = np.asarray(verts[i]) + np.asarray(verts[j])
                p /= np.linalg.norm(p)
                midpoint[key] = len(verts)
                verts.append(tuple(p))
            return midpoint[key]

        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    v = np.asarray(verts, dtype=np.float64) * radius + np.asarray(center, dtype=np.float64)
    return TriMesh(v, np.asarray(faces, dtype=np.int64))


def cone_mesh(
    radius_bottom: float,
    radius_top: float,
    height: float,
    center=(0.0, 0.0, 0.0),
    segments: int = 24,
    rings: int = 1,
) -> TriMesh:
    """Closed truncated cone along +z (a cylinder when the radii match).
    ``rings`` subdivides the lateral surface vertically for cull granularity."""
    if radius_bottom <= 0 or radius_top <= 0:
        raise ValueError("radii must be positive")
    if rings < 1 or segments < 3:
        raise ValueError("need rings >= 1 and segments >= 3")
    c = np.asarray(center, dtype=np.float64)
    ang = 2.0 * np.pi * np.arange(segments) / segments
    circle = np.stack([np.cos(ang), np.sin(ang), np.zeros(segments)], axis=1)
    verts = []
    for r in range(rings + 1):
        t = r / rings
        rad = radius_bottom * (1 - t) + radius_top * t
        zc = height * (t - 0.5)
        verts.append(circle * rad + np.array([0, 0, zc]))
    verts = np.concatenate(verts)
    bc = len(verts)
    tc = bc + 1
    verts = np.concatenate([verts, [[0, 0, -height / 2], [0, 0, height / 2]]]) + c
    faces = []
    for r in range(rings):
        lo = r * segments
        hi = (r + 1) * segments
        for i in range(segments):
            j = (i + 1) % segments
            faces += [(lo + i, lo + j, hi + i), (lo + j, hi + j, hi + i)]
    top0 = rings * segments
    for i in range(segments):
        j = (i + 1) % segments
        faces.append((bc, j, i))                  # bottom cap (faces -z)
        faces.append((tc, top0 + i, top0 + j))    # top cap (faces +z)
    return TriMesh(verts, np.asarray(faces, dtype=np.int64))


def cylinder_mesh(
    radius: float,
    height: float,
    center=(0.0, 0.0, 0.0),
    segments: int = 24,
    rings: int = 1,
) -> TriMesh:
    return cone_mesh(radius, radius, height, center=center, segments=segments, rings=rings)


_ICO_LEVELS = {12: 0, 42: 1, 162: 2, 642: 3, 2562: 4}


def sphere_directions(n: int = 162) -> np.ndarray:
    """n unit directions from the icosphere vertex lattice (n must be one of
    12, 42, 162, 642, 2562)."""
    if n not in _ICO_LEVELS:
        raise ValueError(f"n must be one of {sorted(_ICO_LEVELS)}, got {n}")
    v = icosphere(_ICO_LEVELS[n]).vertices
    return v / np.linalg.norm(v, axis=1, keepdims=True)
