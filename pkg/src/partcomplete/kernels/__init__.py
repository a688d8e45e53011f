"""Hot geometry kernels with a compiled core and a pure NumPy fallback.

The compiled extension (``partcomplete.kernels._native``) is preferred when
importable; set ``PARTCOMPLETE_PURE_PYTHON=1`` to force the fallback.  Both
backends implement identical semantics; ``benchmarks/bench_kernels.py``
compares their throughput.
"""

import os

import numpy as np

from . import fallback
from .bvh import TriangleBVH, build_bvh

_impl = fallback
if not os.environ.get("PARTCOMPLETE_PURE_PYTHON"):
    try:
        from . import _native as _impl  # type: ignore[no-redef]
    except ImportError:
        pass

BACKEND = _impl.NAME


def get_backend(name: str | None = None):
    """Return a backend module by name ('native' or 'python'); default is
    the active one."""
    if name is None:
        return _impl
    if name == "python":
        return fallback
    if name == "native":
        from . import _native

        return _native
    raise ValueError(f"unknown kernel backend {name!r}")


# Fixed probe directions for ray-parity queries. Components are irrational-ish
# and none are axis-aligned, so grazing hits on axis-aligned geometry are
# vanishingly rare; remaining edge grazes trigger a retry on the next row.
RAY_DIRECTIONS = np.array(
    [
        [0.5719917397240584, 0.4193328261043889, 0.7053454117288164],
        [-0.3319832624090945, 0.8704143046228508, 0.3634204549364833],
        [0.2800149743830332, -0.3355462634550342, 0.8994678050137938],
        [0.7831227192716063, 0.1721140576138855, -0.5975483028525538],
        [-0.5493441103373775, -0.5341130114667494, 0.6428232056127236],
    ]
)
RAY_DIRECTIONS /= np.linalg.norm(RAY_DIRECTIONS, axis=1, keepdims=True)
RAY_DIRECTIONS.setflags(write=False)


class MeshQuery:
    """Accelerated nearest-surface and inside/outside queries for one mesh.

    Immutable after construction; safe to share across threads.
    """

    def __init__(self, vertices: np.ndarray, faces: np.ndarray, backend=None):
        if len(faces) == 0:
            raise ValueError("MeshQuery requires at least one face")
        self._impl = get_backend(backend)
        self._bvh = build_bvh(vertices, faces)
        self._accel = self._impl.prepare(self._bvh)

    def closest(self, queries: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Exact distance and face index of the nearest triangle per query.
        Distance ties resolve to the lowest face index."""
        q = np.atleast_2d(np.asarray(queries, dtype=np.float64))
        return self._impl.closest_point_query(self._bvh, self._accel, q)

    def distance(self, queries: np.ndarray) -> np.ndarray:
        return self.closest(queries)[0]

    def inside(self, queries: np.ndarray) -> np.ndarray:
        """Ray-parity inside test (meaningful for closed meshes)."""
        q = np.atleast_2d(np.asarray(queries, dtype=np.float64))
        return self._impl.ray_parity_inside(self._bvh, self._accel, q, RAY_DIRECTIONS)


def marching_cubes_core(values, iso, backend=None):
    return get_backend(backend).marching_cubes_core(values, iso)


def fps_core(points, m, start, backend=None):
    return get_backend(backend).fps_core(points, m, start)


def rasterize_ids(xy, depth, height, width, backend=None):
    return get_backend(backend).rasterize_ids(xy, depth, height, width)


def rasterize_mask(xy, height, width, backend=None):
    return get_backend(backend).rasterize_mask(xy, height, width)
