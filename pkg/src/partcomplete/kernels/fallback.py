"""Vectorized NumPy implementations of the hot geometry kernels.

This module is the semantic reference for ``_native``: every function here
has a compiled twin with identical outputs (identical per-element formulas,
identical tie-breaking).  Selected automatically when the extension is not
built or when ``PARTCOMPLETE_PURE_PYTHON=1``.
"""

import numpy as np
from scipy.spatial import cKDTree

from .bvh import TriangleBVH
from .tables import (
    CORNER_OFFSETS,
    EDGE_CORNERS,
    TRIANGLE_COUNTS,
    TRIANGLE_TABLE,
)

NAME = "python"

# ---------------------------------------------------------------------------
# point -> triangle closest distance


def _rowdot(u, v):
    # explicit (x + y) + z accumulation matches the compiled twin bit-exactly
    return (u[..., 0] * v[..., 0] + u[..., 1] * v[..., 1]) + u[..., 2] * v[..., 2]


def _closest_on_segment(p, s0, s1):
    d = s1 - s0
    dd = _rowdot(d, d)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = _rowdot(p - s0, d) / dd
    t = np.where(dd > 0.0, np.clip(t, 0.0, 1.0), 0.0)
    return s0 + t[:, None] * d


def closest_on_triangles(p, a, b, c):
    """Row-wise closest point on triangle (a,b,c) to p (Ericson's region
    walk). Degenerate faces fall back to the nearest edge segment."""
    ab = b - a
    ac = c - a
    ap = p - a
    d1 = _rowdot(ab, ap)
    d2 = _rowdot(ac, ap)
    bp = p - b
    d3 = _rowdot(ab, bp)
    d4 = _rowdot(ac, bp)
    cp = p - c
    d5 = _rowdot(ab, cp)
    d6 = _rowdot(ac, cp)
    vc = d1 * d4 - d3 * d2
    vb = d5 * d2 - d1 * d6
    va = d3 * d6 - d5 * d4

    r_a = (d1 <= 0.0) & (d2 <= 0.0)
    r_b = ~r_a & (d3 >= 0.0) & (d4 <= d3)
    seen = r_a | r_b
    r_ab = ~seen & (vc <= 0.0) & (d1 >= 0.0) & (d3 <= 0.0)
    seen |= r_ab
    r_c = ~seen & (d6 >= 0.0) & (d5 <= d6)
    seen |= r_c
    r_ac = ~seen & (vb <= 0.0) & (d2 >= 0.0) & (d6 <= 0.0)
    seen |= r_ac
    r_bc = ~seen & (va <= 0.0) & (d4 - d3 >= 0.0) & (d5 - d6 >= 0.0)
    r_in = ~(seen | r_bc)

    out = np.empty_like(p)
    out[r_a] = a[r_a]
    out[r_b] = b[r_b]
    out[r_c] = c[r_c]
    with np.errstate(divide="ignore", invalid="ignore"):
        if r_ab.any():
            t = (d1 / (d1 - d3))[r_ab, None]
            out[r_ab] = a[r_ab] + t * ab[r_ab]
        if r_ac.any():
            t = (d2 / (d2 - d6))[r_ac, None]
            out[r_ac] = a[r_ac] + t * ac[r_ac]
        if r_bc.any():
            t = ((d4 - d3) / ((d4 - d3) + (d5 - d6)))[r_bc, None]
            out[r_bc] = b[r_bc] + t * (c[r_bc] - b[r_bc])
        if r_in.any():
            denom = (va + vb + vc)[r_in, None]
            v = vb[r_in, None] / denom
            w = vc[r_in, None] / denom
            out[r_in] = a[r_in] + ab[r_in] * v + ac[r_in] * w

    bad = ~np.isfinite(out).all(axis=1)
    if bad.any():
        cand = np.stack(
            [
                _closest_on_segment(p[bad], a[bad], b[bad]),
                _closest_on_segment(p[bad], a[bad], c[bad]),
                _closest_on_segment(p[bad], b[bad], c[bad]),
            ]
        )
        d2s = ((cand - p[bad][None]) ** 2).sum(axis=2)
        out[bad] = cand[np.argmin(d2s, axis=0), np.arange(bad.sum())]
    return out


class Accel:
    """Per-mesh state for the fallback backend: a centroid kd-tree used to
    prune exact point-triangle evaluations."""

    def __init__(self, bvh: TriangleBVH):
        self.cent = (bvh.tri_a + bvh.tri_b + bvh.tri_c) / 3.0
        r = np.maximum(
            ((bvh.tri_a - self.cent) ** 2).sum(1),
            np.maximum(
                ((bvh.tri_b - self.cent) ** 2).sum(1),
                ((bvh.tri_c - self.cent) ** 2).sum(1),
            ),
        )
        self.rad_max = float(np.sqrt(r.max())) if len(r) else 0.0
        self.tree = cKDTree(self.cent)


def prepare(bvh: TriangleBVH) -> Accel:
    return Accel(bvh)


def closest_point_query(bvh, accel, queries, chunk=4096):
    """Exact distance and original face index of the nearest triangle.
    Ties resolve to the lowest original face index."""
    q = np.ascontiguousarray(queries, dtype=np.float64)
    n = q.shape[0]
    dist = np.empty(n, dtype=np.float64)
    face = np.empty(n, dtype=np.int64)
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        qc = q[lo:hi]
        m = hi - lo
        _, icent = accel.tree.query(qc)
        cp0 = closest_on_triangles(
            qc, bvh.tri_a[icent], bvh.tri_b[icent], bvh.tri_c[icent]
        )
        ub = np.sqrt(((qc - cp0) ** 2).sum(1))
        radius = ub + accel.rad_max + 1e-9 * (ub + 1.0)
        groups = accel.tree.query_ball_point(qc, radius)
        counts = np.fromiter((len(g) for g in groups), dtype=np.int64, count=m)
        qi = np.repeat(np.arange(m), counts)
        ti = np.concatenate([np.asarray(g, dtype=np.int64) for g in groups])
        cp = closest_on_triangles(qc[qi], bvh.tri_a[ti], bvh.tri_b[ti], bvh.tri_c[ti])
        d2 = ((qc[qi] - cp) ** 2).sum(1)
        fid = bvh.order[ti]
        sel = np.lexsort((fid, d2, qi))
        first = np.searchsorted(qi[sel], np.arange(m), side="left")
        dist[lo:hi] = np.sqrt(d2[sel[first]])
        face[lo:hi] = fid[sel[first]]
    return dist, face


# ---------------------------------------------------------------------------
# ray-parity inside/outside

_BARY_EPS = 1e-10
_T_EPS = 1e-12


def _parity_single_dir(bvh, queries, direction, tri_chunk=8192, q_chunk=128):
    nq = queries.shape[0]
    counts = np.zeros(nq, dtype=np.int64)
    uncertain = np.zeros(nq, dtype=bool)
    nt = bvh.tri_a.shape[0]
    d = direction
    for tlo in range(0, nt, tri_chunk):
        thi = min(tlo + tri_chunk, nt)
        a = bvh.tri_a[tlo:thi]
        e1 = bvh.tri_b[tlo:thi] - a
        e2 = bvh.tri_c[tlo:thi] - a
        pvec = np.cross(np.broadcast_to(d, e2.shape), e2)
        det = _rowdot(e1, pvec)
        scale = np.sqrt((e1**2).sum(1) * (e2**2).sum(1))
        ok = np.abs(det) > 1e-14 * np.maximum(scale, 1e-300)
        with np.errstate(divide="ignore", invalid="ignore"):
            inv_det = np.where(ok, 1.0 / det, 0.0)
        for qlo in range(0, nq, q_chunk):
            qhi = min(qlo + q_chunk, nq)
            tvec = queries[qlo:qhi, None, :] - a[None, :, :]
            u = _rowdot(tvec, pvec[None, :, :]) * inv_det
            qvec = np.cross(tvec, e1[None, :, :])
            v = _rowdot(qvec, np.broadcast_to(d, qvec.shape)) * inv_det
            t = _rowdot(qvec, e2[None, :, :]) * inv_det
            w = 1.0 - u - v
            near = (
                ok[None, :]
                & (u > -_BARY_EPS)
                & (v > -_BARY_EPS)
                & (w > -_BARY_EPS)
                & (t > -_T_EPS)
            )
            hit = near & (u > _BARY_EPS) & (v > _BARY_EPS) & (w > _BARY_EPS) & (t > _T_EPS)
            counts[qlo:qhi] += hit.sum(axis=1)
            uncertain[qlo:qhi] |= (near & ~hit).any(axis=1)
    return counts % 2 == 1, uncertain


def ray_parity_inside(bvh, accel, queries, directions):
    q = np.ascontiguousarray(queries, dtype=np.float64)
    inside = np.zeros(q.shape[0], dtype=bool)
    pending = np.arange(q.shape[0])
    for d in directions:
        par, unc = _parity_single_dir(bvh, q[pending], np.asarray(d, dtype=np.float64))
        settled = ~unc
        inside[pending[settled]] = par[settled]
        pending = pending[unc]
        if pending.size == 0:
            return inside
        last = par[unc]
    # every probe direction grazed an edge; accept the last parity estimate
    inside[pending] = last
    return inside


# ---------------------------------------------------------------------------
# marching cubes

_EDGE_AXIS = np.array([0, 1, 0, 1, 0, 1, 0, 1, 2, 2, 2, 2], dtype=np.int64)
_EDGE_BASE = np.minimum(
    CORNER_OFFSETS[EDGE_CORNERS[:, 0]], CORNER_OFFSETS[EDGE_CORNERS[:, 1]]
)


def marching_cubes_core(values, iso):
    """Extract the iso-surface of a node lattice.

    Returns vertices in lattice index coordinates and int64 face triples.
    Vertices are welded on shared cell edges, so a single closed crossing
    region yields an edge-manifold surface.
    """
    v = np.ascontiguousarray(values, dtype=np.float64)
    nx, ny, nz = v.shape
    if min(nx, ny, nz) < 2:
        raise ValueError("grid must have at least 2 nodes per axis")
    span = float(v.max() - v.min())
    eps = max(span, 1.0) * 1e-12
    v = np.where(v == iso, iso + eps, v)

    below = v < iso
    ci = np.zeros((nx - 1, ny - 1, nz - 1), dtype=np.int32)
    for bit, (dx, dy, dz) in enumerate(CORNER_OFFSETS):
        ci |= below[dx : dx + nx - 1, dy : dy + ny - 1, dz : dz + nz - 1].astype(np.int32) << bit

    ax, ay, az = np.nonzero((ci > 0) & (ci < 255))
    if ax.size == 0:
        return np.zeros((0, 3), dtype=np.float64), np.zeros((0, 3), dtype=np.int64)
    cases = ci[ax, ay, az]
    ntri = TRIANGLE_COUNTS[cases].astype(np.int64)

    cols = np.arange(15)
    keep = cols[None, :] < (3 * ntri)[:, None]
    slots = TRIANGLE_TABLE[cases][:, :15][keep].astype(np.int64)
    cell = np.repeat(np.arange(ax.size), 3 * ntri)

    base = _EDGE_BASE[slots]
    ex = ax[cell] + base[:, 0]
    ey = ay[cell] + base[:, 1]
    ez = az[cell] + base[:, 2]
    axis = _EDGE_AXIS[slots]
    gid = ((axis * nx + ex) * ny + ey) * nz + ez

    uids, inv = np.unique(gid, return_inverse=True)
    ua = uids // (nx * ny * nz)
    lin = uids % (nx * ny * nz)
    ux = lin // (ny * nz)
    uy = (lin // nz) % ny
    uz = lin % nz
    v0 = v[ux, uy, uz]
    v1 = v[ux + (ua == 0), uy + (ua == 1), uz + (ua == 2)]
    t = (iso - v0) / (v1 - v0)
    verts = np.stack([ux, uy, uz], axis=1).astype(np.float64)
    verts[np.arange(uids.size), ua] += t

    faces = np.ascontiguousarray(inv.reshape(-1, 3)[:, ::-1]).astype(np.int64)
    return verts, faces


# ---------------------------------------------------------------------------
# farthest point sampling

def fps_core(points, m, start):
    p = np.ascontiguousarray(points, dtype=np.float64)
    sel = np.empty(m, dtype=np.int64)
    sel[0] = start
    d = ((p - p[start]) ** 2).sum(1)
    d[start] = -1.0
    for k in range(1, m):
        i = int(np.argmax(d))  # first maximum == lowest index on ties
        sel[k] = i
        d = np.minimum(d, ((p - p[i]) ** 2).sum(1))
        d[i] = -1.0
    return sel


# ---------------------------------------------------------------------------
# orthographic triangle rasterization

_MAX_CANDIDATES = 4_000_000


def _raster_candidates(xy, height, width):
    x0 = np.ceil(xy[:, :, 0].min(axis=1) - 0.5).astype(np.int64)
    x1 = np.floor(xy[:, :, 0].max(axis=1) - 0.5).astype(np.int64)
    y0 = np.ceil(xy[:, :, 1].min(axis=1) - 0.5).astype(np.int64)
    y1 = np.floor(xy[:, :, 1].max(axis=1) - 0.5).astype(np.int64)
    x0 = np.clip(x0, 0, width - 1)
    x1 = np.clip(x1, -1, width - 1)
    y0 = np.clip(y0, 0, height - 1)
    y1 = np.clip(y1, -1, height - 1)
    w = np.maximum(x1 - x0 + 1, 0)
    h = np.maximum(y1 - y0 + 1, 0)
    return x0, y0, w, h, w * h


def _face_chunks(cnt):
    """Split faces into chunks whose candidate-pixel totals stay bounded."""
    bounds = [0]
    acc = 0
    for i, c in enumerate(cnt):
        acc += int(c)
        if acc > _MAX_CANDIDATES:
            bounds.append(i + 1)
            acc = 0
    if bounds[-1] != len(cnt):
        bounds.append(len(cnt))
    return bounds


def _inside_and_depth(xy, depth, face_of, cx, cy):
    v0 = xy[face_of, 0]
    v1 = xy[face_of, 1]
    v2 = xy[face_of, 2]
    e0 = (v1[:, 0] - v0[:, 0]) * (cy - v0[:, 1]) - (v1[:, 1] - v0[:, 1]) * (cx - v0[:, 0])
    e1 = (v2[:, 0] - v1[:, 0]) * (cy - v1[:, 1]) - (v2[:, 1] - v1[:, 1]) * (cx - v1[:, 0])
    e2 = (v0[:, 0] - v2[:, 0]) * (cy - v2[:, 1]) - (v0[:, 1] - v2[:, 1]) * (cx - v2[:, 0])
    area = (v1[:, 0] - v0[:, 0]) * (v2[:, 1] - v0[:, 1]) - (v1[:, 1] - v0[:, 1]) * (
        v2[:, 0] - v0[:, 0]
    )
    pos = (e0 >= 0) & (e1 >= 0) & (e2 >= 0) & (area > 0)
    neg = (e0 <= 0) & (e1 <= 0) & (e2 <= 0) & (area < 0)
    inside = pos | neg
    z = None
    if depth is not None:
        with np.errstate(divide="ignore", invalid="ignore"):
            w0 = e1 / area
            w1 = e2 / area
            w2 = e0 / area
        z = w0 * depth[face_of, 0] + w1 * depth[face_of, 1] + w2 * depth[face_of, 2]
    return inside, z


def rasterize_ids(xy, depth, height, width):
    """Z-buffered ID rasterization at pixel centers. Nearer depth wins;
    exact depth ties resolve to the lower face index."""
    xy = np.ascontiguousarray(xy, dtype=np.float64)
    depth = np.ascontiguousarray(depth, dtype=np.float64)
    buf = np.full((height, width), -1, dtype=np.int32)
    zbuf = np.full(height * width, np.inf, dtype=np.float64)
    x0, y0, w, h, cnt = _raster_candidates(xy, height, width)
    bounds = _face_chunks(cnt)
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        c = cnt[lo:hi]
        total = int(c.sum())
        if total == 0:
            continue
        face_of = np.repeat(np.arange(lo, hi), c)
        k = np.arange(total) - np.repeat(np.concatenate([[0], np.cumsum(c)[:-1]]), c)
        px = x0[face_of] + k % np.maximum(w[face_of], 1)
        py = y0[face_of] + k // np.maximum(w[face_of], 1)
        cx = px + 0.5
        cy = py + 0.5
        inside, z = _inside_and_depth(xy, depth, face_of, cx, cy)
        if not inside.any():
            continue
        face_of, px, py, z = face_of[inside], px[inside], py[inside], z[inside]
        pix = py * width + px
        sel = np.lexsort((face_of, z, pix))
        pix_s, face_s, z_s = pix[sel], face_of[sel], z[sel]
        first = np.searchsorted(pix_s, np.unique(pix_s), side="left")
        better = z_s[first] < zbuf[pix_s[first]]
        upd = first[better]
        zbuf[pix_s[upd]] = z_s[upd]
        buf.ravel()[pix_s[upd]] = face_s[upd].astype(np.int32)
    return buf


def rasterize_mask(xy, height, width):
    """Binary coverage rasterization at pixel centers (no depth)."""
    xy = np.ascontiguousarray(xy, dtype=np.float64)
    buf = np.zeros((height, width), dtype=bool)
    x0, y0, w, h, cnt = _raster_candidates(xy, height, width)
    bounds = _face_chunks(cnt)
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        c = cnt[lo:hi]
        total = int(c.sum())
        if total == 0:
            continue
        face_of = np.repeat(np.arange(lo, hi), c)
        k = np.arange(total) - np.repeat(np.concatenate([[0], np.cumsum(c)[:-1]]), c)
        px = x0[face_of] + k % np.maximum(w[face_of], 1)
        py = y0[face_of] + k // np.maximum(w[face_of], 1)
        inside, _ = _inside_and_depth(xy, None, face_of, px + 0.5, py + 0.5)
        buf[py[inside], px[inside]] = True
    return buf
