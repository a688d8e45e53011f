"""Flat-array bounding volume hierarchy over mesh triangles.

The tree is built once in NumPy (median split on the longest centroid axis)
and stored as parallel arrays so that both the compiled traversal and the
pure NumPy fallback can consume it without any Python object overhead.
"""

from dataclasses import dataclass

import numpy as np

LEAF_SIZE = 8


@dataclass(frozen=True)
class TriangleBVH:
    """Packed BVH. Internal nodes store children; leaves store a triangle
    range into ``order`` (a permutation of the original face indices)."""

    node_min: np.ndarray   # (n_nodes, 3) float64
    node_max: np.ndarray   # (n_nodes, 3) float64
    left: np.ndarray       # (n_nodes,) int64, -1 for leaves
    right: np.ndarray      # (n_nodes,) int64, -1 for leaves
    start: np.ndarray      # (n_nodes,) int64, leaf range start
    count: np.ndarray      # (n_nodes,) int64, 0 for internal nodes
    order: np.ndarray      # (n_tris,) int64 original face indices
    tri_a: np.ndarray      # (n_tris, 3) float64, reordered corner A
    tri_b: np.ndarray      # (n_tris, 3)
    tri_c: np.ndarray      # (n_tris, 3)

    @property
    def n_nodes(self) -> int:
        return self.node_min.shape[0]


def build_bvh(vertices: np.ndarray, faces: np.ndarray) -> TriangleBVH:
    vertices = np.ascontiguousarray(vertices, dtype=np.float64)
    faces = np.ascontiguousarray(faces, dtype=np.int64)
    n = faces.shape[0]
    a = vertices[faces[:, 0]]
    b = vertices[faces[:, 1]]
    c = vertices[faces[:, 2]]
    tri_min = np.minimum(np.minimum(a, b), c)
    tri_max = np.maximum(np.maximum(a, b), c)
    centroids = (a + b + c) / 3.0

    order = np.arange(n, dtype=np.int64)
    node_min, node_max = [], []
    left, right, start, count = [], [], [], []

    # (range_start, range_end, node_index) work stack; children are appended
    # after their parent so indices are assigned deterministically.
    def new_node():
        node_min.append(None)
        node_max.append(None)
        left.append(-1)
        right.append(-1)
        start.append(0)
        count.append(0)
        return len(left) - 1

    root = new_node()
    stack = [(0, n, root)]
    while stack:
        lo, hi, node = stack.pop()
        idx = order[lo:hi]
        node_min[node] = tri_min[idx].min(axis=0)
        node_max[node] = tri_max[idx].max(axis=0)
        if hi - lo <= LEAF_SIZE:
            start[node] = lo
            count[node] = hi - lo
            continue
        cen = centroids[idx]
        extent = cen.max(axis=0) - cen.min(axis=0)
        axis = int(np.argmax(extent))
        mid = (hi - lo) // 2
        # argsort (not argpartition) keeps the layout fully deterministic
        perm = np.argsort(cen[:, axis], kind="stable")
        order[lo:hi] = idx[perm]
        lchild = new_node()
        rchild = new_node()
        left[node] = lchild
        right[node] = rchild
        stack.append((lo + mid, hi, rchild))
        stack.append((lo, lo + mid, lchild))

    return TriangleBVH(
        node_min=np.asarray(node_min, dtype=np.float64),
        node_max=np.asarray(node_max, dtype=np.float64),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        start=np.asarray(start, dtype=np.int64),
        count=np.asarray(count, dtype=np.int64),
        order=order,
        tri_a=np.ascontiguousarray(a[order]),
        tri_b=np.ascontiguousarray(b[order]),
        tri_c=np.ascontiguousarray(c[order]),
    )
