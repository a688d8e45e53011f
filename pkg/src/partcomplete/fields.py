"""Distance fields, occupancy voxelization, and isosurface extraction.

Grids store one value per cell, sampled at the cell center; marching cubes
treats those centers as its node lattice.  ``watertight_proxy`` implements
the UDF-based watertighting used by the pair-creation pipeline: the unsigned
field is signed by flood-filling the exterior so that extraction yields a
single closed outer shell instead of a nested double shell.
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from . import kernels
from .geometry import AABB, GeometryError, TriMesh, bounding_box, boundary_edge_count


class FieldError(ValueError):
    """Invalid grid construction or failed extraction."""


def _resolution3(resolution) -> tuple[int, int, int]:
    if np.isscalar(resolution):
        r = int(resolution)
        res = (r, r, r)
    else:
        res = tuple(int(x) for x in resolution)
    if len(res) != 3 or min(res) < 1:
        raise FieldError(f"bad grid resolution {resolution!r}")
    return res


@dataclass(frozen=True)
class ScalarGrid:
    """Dense scalar lattice over an axis-aligned box (values at cell centers)."""

    resolution: tuple[int, int, int]
    domain: AABB
    values: np.ndarray  # (nx, ny, nz) float64

    def __post_init__(self):
        res = _resolution3(self.resolution)
        v = np.array(self.values, dtype=np.float64, order="C", copy=True)
        if v.shape != res:
            raise FieldError(f"values shape {v.shape} != resolution {res}")
        if not np.isfinite(v).all():
            raise FieldError("grid values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "resolution", res)
        object.__setattr__(self, "values", v)

    @property
    def cell_size(self) -> np.ndarray:
        return self.domain.extent / np.asarray(self.resolution, dtype=np.float64)

    def cell_centers(self) -> np.ndarray:
        """(nx*ny*nz, 3) centers in C order (x-major)."""
        nx, ny, nz = self.resolution
        cs = self.cell_size
        ax = self.domain.min_corner[0] + (np.arange(nx) + 0.5) * cs[0]
        ay = self.domain.min_corner[1] + (np.arange(ny) + 0.5) * cs[1]
        az = self.domain.min_corner[2] + (np.arange(nz) + 0.5) * cs[2]
        g = np.meshgrid(ax, ay, az, indexing="ij")
        return np.stack([c.ravel() for c in g], axis=1)


@dataclass(frozen=True)
class OccGrid:
    """Binary occupancy lattice over an axis-aligned box."""

    resolution: tuple[int, int, int]
    domain: AABB
    values: np.ndarray  # (n, n, n) bool

    def __post_init__(self):
        res = _resolution3(self.resolution)
        v = np.array(self.values, order="C", copy=True).astype(bool)
        if v.shape != res:
            raise FieldError(f"values shape {v.shape} != resolution {res}")
        v.setflags(write=False)
        object.__setattr__(self, "resolution", res)
        object.__setattr__(self, "values", v)

    def count(self) -> int:
        return int(self.values.sum())


# ---------------------------------------------------------------------------
# unsigned distance fields


def compute_udf(
    mesh: TriMesh, resolution, domain: AABB | None = None, backend=None
) -> ScalarGrid:
    """Exact cell-center-to-surface distance on a dense lattice.

    Each cell is computed independently (deterministic regardless of any
    internal parallelism in the kernel backend)."""
    if mesh.n_faces == 0:
        raise GeometryError("cannot compute UDF of an empty mesh")
    bbox = bounding_box(mesh)
    if domain is None:
        domain = bbox.padded(0.08 * float(bbox.extent.max()) + 1e-9)
    else:
        if (bbox.min_corner < domain.min_corner).any() or (
            bbox.max_corner > domain.max_corner
        ).any():
            raise FieldError("UDF domain does not contain the mesh bounding box")
    res = _resolution3(resolution)
    grid = ScalarGrid(res, domain, np.zeros(res))
    mq = kernels.MeshQuery(mesh.vertices, mesh.faces, backend=backend)
    dist = mq.distance(grid.cell_centers())
    return ScalarGrid(res, domain, dist.reshape(res))


def signed_from_udf(grid: ScalarGrid, tau: float) -> ScalarGrid:
    """Sign an unsigned field at offset ``tau``: positive outside the
    tau-inflated solid, negative inside.

    Outside is the set of cells with value > tau that are 6-connected to the
    grid boundary; everything else (the near-surface belt and enclosed
    interior) becomes negative.  This kills the inner offset shell that a
    plain ``udf - tau`` level set would produce."""
    v = grid.values
    if (v < 0).any():
        raise FieldError("signed_from_udf expects an unsigned field")
    free = v > tau
    structure = ndimage.generate_binary_structure(3, 1)  # 6-connectivity
    labels, _ = ndimage.label(free, structure=structure)
    border = np.unique(
        np.concatenate(
            [
                labels[0].ravel(), labels[-1].ravel(),
                labels[:, 0].ravel(), labels[:, -1].ravel(),
                labels[:, :, 0].ravel(), labels[:, :, -1].ravel(),
            ]
        )
    )
    border = border[border != 0]
    if border.size == 0:
        raise FieldError("no exterior region: domain padding too small for tau")
    outside = np.isin(labels, border)
    signed = np.where(outside, v - tau, -np.abs(v - tau))
    # interior cells exactly at |v - tau| = 0 must stay strictly inside
    eps = 1e-12 * max(float(v.max()), 1.0)
    signed = np.where(~outside & (signed > -eps), -eps, signed)
    return ScalarGrid(grid.resolution, grid.domain, signed)


# ---------------------------------------------------------------------------
# marching cubes


def marching_cubes(grid: ScalarGrid, iso: float, backend=None) -> TriMesh:
    """Triangulate the iso level of the grid (vertices linearly interpolated
    along lattice edges, welded, outward-oriented for value<iso interiors)."""
    v = grid.values
    if iso < v.min() or iso > v.max():
        raise FieldError(f"iso {iso} outside value range [{v.min()}, {v.max()}]")
    verts_idx, faces = kernels.marching_cubes_core(v, iso, backend=backend)
    if len(faces) == 0:
        raise FieldError("no iso crossing: empty surface")
    cs = grid.cell_size
    verts = grid.domain.min_corner + (verts_idx + 0.5) * cs
    return TriMesh(verts, faces)


def local_marching_cubes(
    occupancy,
    part_box: AABB,
    scale: float = 1.3,
    resolution: int = 64,
    backend=None,
) -> TriMesh:
    """Extract the occupancy-logit zero level inside ``part_box`` scaled
    about its center (inside = positive logit), in whole-shape coordinates.

    ``occupancy`` is a callable mapping (N, 3) points to N logits.  A surface
    clipped by the box is still returned but flagged with a warning."""
    if scale <= 0:
        raise FieldError("scale must be positive")
    n = int(resolution)
    if n < 2:
        raise FieldError("resolution must be >= 2")
    box = part_box.scaled(scale)
    # inflate near-degenerate axes so the lattice always has volume
    ext = np.maximum(box.extent, 0.02 * max(float(box.extent.max()), 1e-6))
    box = AABB(box.center - 0.5 * ext, box.center + 0.5 * ext)

    axes = [np.linspace(box.min_corner[k], box.max_corner[k], n) for k in range(3)]
    g = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([c.ravel() for c in g], axis=1)
    logits = np.asarray(occupancy(pts), dtype=np.float64).reshape(n, n, n)
    if not np.isfinite(logits).all():
        raise FieldError("occupancy returned non-finite logits")
    # negate so that inside (positive logit) matches the value<iso convention
    field = -logits
    if field.min() > 0.0 or field.max() < 0.0:
        raise FieldError("no sign crossing inside the scaled part box")
    verts_idx, faces = kernels.marching_cubes_core(field, 0.0, backend=backend)
    if len(faces) == 0:
        raise FieldError("no sign crossing inside the scaled part box")
    spacing = box.extent / (n - 1)
    verts = box.min_corner + verts_idx * spacing
    mesh = TriMesh(verts, faces)
    if boundary_edge_count(mesh) > 0:
        warnings.warn(
            "local_marching_cubes: surface clipped at the extraction box "
            "(open boundary edges present)",
            stacklevel=2,
        )
    return mesh


# ---------------------------------------------------------------------------
# watertight proxy


def watertight_proxy(
    mesh: TriMesh,
    resolution: int = 128,
    tau_cells: float = 1.5,
    pad_frac: float = 0.08,
    backend=None,
) -> TriMesh:
    """Closed outer shell of a (possibly open / self-intersecting) surface.

    Pipeline: UDF on a padded lattice -> exterior flood sign -> marching
    cubes at the tau offset.  tau defaults to 1.5 cells, thick enough that
    the offset shell closes reliably at the chosen resolution."""
    bbox = bounding_box(mesh)
    max_ext = float(bbox.extent.max())
    if max_ext <= 0:
        raise GeometryError("zero-extent mesh cannot be watertighted")
    cell = max_ext * (1.0 + 2.0 * pad_frac) / resolution
    pad = pad_frac * max_ext + 2.0 * cell
    lo = bbox.min_corner - pad
    res = tuple(int(np.ceil(e / cell)) + 1 for e in bbox.extent + 2 * pad)
    hi = lo + np.asarray(res) * cell
    domain = AABB(lo, hi)
    udf = compute_udf(mesh, res, domain, backend=backend)
    tau = tau_cells * cell
    signed = signed_from_udf(udf, tau)
    return marching_cubes(signed, 0.0, backend=backend)


# ---------------------------------------------------------------------------
# occupancy voxelization


def voxelize_points(points, resolution: int = 64, domain: AABB | None = None) -> OccGrid:
    """Mark cells containing at least one point.  Points exactly on the max
    boundary land in the last cell; points outside the domain are clamped
    and reported via a warning."""
    p = np.atleast_2d(np.asarray(getattr(points, "positions", points), dtype=np.float64))
    if len(p) < 1:
        raise GeometryError("voxelize_points requires at least one point")
    if domain is None:
        lo = p.min(axis=0)
        hi = p.max(axis=0)
        domain = AABB(lo, np.where(hi > lo, hi, lo + 1e-9))
    res = _resolution3(resolution)
    cs = domain.extent / np.asarray(res, dtype=np.float64)
    rel = (p - domain.min_corner) / np.where(cs > 0, cs, 1.0)
    idx = np.floor(rel).astype(np.int64)
    strictly_outside = (p < domain.min_corner) | (p > domain.max_corner)
    n_out = int(strictly_outside.any(axis=1).sum())
    if n_out:
        warnings.warn(f"voxelize_points: {n_out} points outside domain (clamped)", stacklevel=2)
    idx = np.clip(idx, 0, np.asarray(res) - 1)
    vals = np.zeros(res, dtype=bool)
    vals[idx[:, 0], idx[:, 1], idx[:, 2]] = True
    return OccGrid(res, domain, vals)


def occupancy_grid_of_mesh(
    mesh: TriMesh, resolution: int = 64, domain: AABB | None = None, backend=None
) -> OccGrid:
    """Solid occupancy of a closed mesh: cell centers inside by ray parity."""
    if domain is None:
        domain = bounding_box(mesh).padded(1e-6)
    res = _resolution3(resolution)
    grid = ScalarGrid(res, domain, np.zeros(res))
    mq = kernels.MeshQuery(mesh.vertices, mesh.faces, backend=backend)
    inside = mq.inside(grid.cell_centers())
    return OccGrid(res, domain, inside.reshape(res))


# ---------------------------------------------------------------------------
# flat binary serialization (little-endian)

_GRID_MAGIC = b"PCGRID\x00"
_KIND_SCALAR = 0
_KIND_OCC = 1


def save_grid(path, grid: ScalarGrid | OccGrid) -> None:
    """Header: magic, u32 version, u8 kind (0=float64 scalar, 1=u8 occupancy),
    3x u32 resolution, 6x f64 domain; then row-major little-endian values."""
    kind = _KIND_SCALAR if isinstance(grid, ScalarGrid) else _KIND_OCC
    nx, ny, nz = grid.resolution
    header = _GRID_MAGIC + struct.pack(
        "<IB3I6d",
        1,
        kind,
        nx,
        ny,
        nz,
        *grid.domain.min_corner,
        *grid.domain.max_corner,
    )
    if kind == _KIND_SCALAR:
        payload = np.ascontiguousarray(grid.values, dtype="<f8").tobytes()
    else:
        payload = np.ascontiguousarray(grid.values, dtype=np.uint8).tobytes()
    Path(path).write_bytes(header + payload)


def load_grid(path) -> ScalarGrid | OccGrid:
    data = Path(path).read_bytes()
    if data[: len(_GRID_MAGIC)] != _GRID_MAGIC:
        raise FieldError(f"{path}: not a grid file")
    off = len(_GRID_MAGIC)
    version, kind, nx, ny, nz, *dom = struct.unpack_from("<IB3I6d", data, off)
    if version != 1:
        raise FieldError(f"{path}: unsupported grid version {version}")
    off += struct.calcsize("<IB3I6d")
    domain = AABB(dom[:3], dom[3:])
    shape = (nx, ny, nz)
    n = nx * ny * nz
    if kind == _KIND_SCALAR:
        vals = np.frombuffer(data, "<f8", n, off).reshape(shape)
        return ScalarGrid(shape, domain, vals)
    vals = np.frombuffer(data, np.uint8, n, off).reshape(shape).astype(bool)
    return OccGrid(shape, domain, vals)
