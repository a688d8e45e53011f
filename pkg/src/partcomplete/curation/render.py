"""Orthographic silhouette rendering and 2D connected-component counting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .. import kernels
from ..geometry import GeometryError, TriMesh

VIEWS = ("frontal", "side")

# projection plane axes per view: frontal looks along +z, side along +x
_VIEW_AXES = {"frontal": (0, 1), "side": (1, 2)}


@dataclass(frozen=True)
class BinaryImage:
    pixels: np.ndarray  # (H, W) bool

    def __post_init__(self):
        p = np.array(self.pixels, copy=True).astype(bool)
        if p.ndim != 2 or min(p.shape) < 1:
            raise GeometryError("image must be 2D with positive dimensions")
        p.setflags(write=False)
        object.__setattr__(self, "pixels", p)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def fill_count(self) -> int:
        return int(self.pixels.sum())


def render_silhouette(
    mesh: TriMesh,
    view: str,
    res: int = 256,
    frame_mesh: TriMesh | None = None,
    backend=None,
) -> BinaryImage:
    """Binary orthographic rasterization, mesh fit with a 5% margin.

    ``frame_mesh`` fixes the projection frame to another mesh's fit so that
    silhouettes of different meshes can be compared pixelwise.  The projected
    bounding-box center pixel is always set, so degenerate (near-point)
    projections still register one pixel."""
    if view not in _VIEW_AXES:
        raise ValueError(f"view must be one of {VIEWS}, got {view!r}")
    if mesh.n_faces == 0:
        raise GeometryError("cannot render an empty mesh")
    ai, bi = _VIEW_AXES[view]
    frame = frame_mesh if frame_mesh is not None else mesh
    # isotropic fit from the 3D extent so every view shares one scale
    ext3d = float((frame.vertices.max(axis=0) - frame.vertices.min(axis=0)).max())
    if ext3d <= 0.0:
        raise GeometryError("zero-extent projection")
    scale = 0.9 * res / ext3d
    fit = frame.vertices[:, [ai, bi]]
    center = 0.5 * (fit.min(axis=0) + fit.max(axis=0))
    xy = (mesh.vertices[:, [ai, bi]] - center) * scale + 0.5 * res
    tri_xy = xy[mesh.faces]
    pixels = kernels.rasterize_mask(tri_xy, res, res, backend=backend)
    pixels = np.array(pixels)
    if not pixels.any():
        # degenerate (sub-pixel) projection: guarantee one pixel at the
        # projected bounding-box center
        cpix = np.clip(
            (
                (mesh.vertices[:, [ai, bi]].min(0) + mesh.vertices[:, [ai, bi]].max(0)) / 2
                - center
            )
            * scale
            + 0.5 * res,
            0,
            res - 1,
        ).astype(int)
        pixels[cpix[1], cpix[0]] = True
    return BinaryImage(pixels)


def count_components(image: BinaryImage) -> int:
    """Number of 8-connected foreground components."""
    _, n = ndimage.label(image.pixels, structure=np.ones((3, 3), dtype=int))
    return int(n)


def coverage_fraction(part: BinaryImage, whole: BinaryImage) -> float:
    """Fraction of the whole silhouette's foreground covered by the part."""
    denom = whole.fill_count()
    if denom == 0:
        raise GeometryError("empty whole silhouette")
    return float((part.pixels & whole.pixels).sum() / denom)
