"""Visibility culling: drop faces never hit by any orthographic ID-buffer
render over a uniform sphere of view directions."""

from __future__ import annotations

import warnings

import numpy as np

from .. import kernels
from ..geometry import TriMesh
from ..primitives import sphere_directions


def _view_basis(d: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    ref = np.array([0.0, 0.0, 1.0])
    if abs(float(d @ ref)) > 0.9:
        ref = np.array([1.0, 0.0, 0.0])
    u = np.cross(d, ref)
    u /= np.linalg.norm(u)
    v = np.cross(d, u)
    return u, v


def visible_face_ids(
    mesh: TriMesh, n_views: int = 162, res: int = 256, backend=None
) -> np.ndarray:
    """Face indices hit by at least one pixel ray over all views."""
    dirs = sphere_directions(n_views)
    tri = mesh.triangles()
    hit = np.zeros(mesh.n_faces, dtype=bool)
    for d in dirs:
        u, v = _view_basis(d)
        a = tri @ u
        b = tri @ v
        depth = -(tri @ d)  # camera sits at +d looking back; smaller = nearer
        lo_a, hi_a = a.min(), a.max()
        lo_b, hi_b = b.min(), b.max()
        max_ext = max(hi_a - lo_a, hi_b - lo_b)
        if max_ext <= 0.0:
            continue
        scale = 0.96 * res / max_ext
        xy = np.stack(
            [
                (a - 0.5 * (lo_a + hi_a)) * scale + 0.5 * res,
                (b - 0.5 * (lo_b + hi_b)) * scale + 0.5 * res,
            ],
            axis=2,
        )
        buf = kernels.rasterize_ids(xy, depth, res, res, backend=backend)
        ids = np.unique(buf)
        hit[ids[ids >= 0]] = True
    return np.nonzero(hit)[0]


def visibility_cull(
    mesh: TriMesh, n_views: int = 162, res: int = 256, backend=None
) -> TriMesh:
    """Keep exactly the externally visible faces (labels preserved).

    Idempotent: removing hidden faces cannot hide a previously visible one,
    since occluders are always kept."""
    ids = visible_face_ids(mesh, n_views=n_views, res=res, backend=backend)
    mask = np.zeros(mesh.n_faces, dtype=bool)
    mask[ids] = True
    if not mask.any():
        warnings.warn("visibility_cull removed every face", stacklevel=2)
    return mesh.submesh(mask)
