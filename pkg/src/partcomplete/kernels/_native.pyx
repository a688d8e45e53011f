# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twins of the NumPy fallback kernels.

Every function mirrors fallback.py element-for-element (same formulas, same
tie-breaking) so the two backends are interchangeable; only iteration
strategy differs (per-query BVH traversal instead of vectorized pruning).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport ceil, fabs, floor, sqrt

cnp.import_array()

from .tables import CORNER_OFFSETS, EDGE_CORNERS, TRIANGLE_COUNTS, TRIANGLE_TABLE

NAME = "native"

ctypedef cnp.int64_t i64
ctypedef cnp.int32_t i32

cdef double INF = float("inf")

_EDGE_AXIS_NP = np.array([0, 1, 0, 1, 0, 1, 0, 1, 2, 2, 2, 2], dtype=np.int64)
_EDGE_BASE_NP = np.minimum(
    CORNER_OFFSETS[EDGE_CORNERS[:, 0]], CORNER_OFFSETS[EDGE_CORNERS[:, 1]]
).astype(np.int64)
_TRI_TABLE_NP = np.ascontiguousarray(TRIANGLE_TABLE, dtype=np.int64)
_TRI_COUNT_NP = np.ascontiguousarray(TRIANGLE_COUNTS, dtype=np.int64)
_CORNER_OFF_NP = np.ascontiguousarray(CORNER_OFFSETS, dtype=np.int64)


def prepare(bvh):
    return None


# ---------------------------------------------------------------------------
# point -> triangle closest distance

cdef inline double _clamp01(double t) noexcept nogil:
    if t < 0.0:
        return 0.0
    if t > 1.0:
        return 1.0
    return t


cdef inline void _seg_closest(const double* p, const double* s0, const double* s1,
                              double* out) noexcept nogil:
    cdef double dx = s1[0] - s0[0]
    cdef double dy = s1[1] - s0[1]
    cdef double dz = s1[2] - s0[2]
    cdef double dd = (dx * dx + dy * dy) + dz * dz
    cdef double t = 0.0
    if dd > 0.0:
        t = _clamp01((((p[0] - s0[0]) * dx + (p[1] - s0[1]) * dy) + (p[2] - s0[2]) * dz) / dd)
    out[0] = s0[0] + t * dx
    out[1] = s0[1] + t * dy
    out[2] = s0[2] + t * dz


cdef inline int _isfinite3(const double* p) noexcept nogil:
    return (p[0] == p[0] and p[1] == p[1] and p[2] == p[2]
            and fabs(p[0]) != INF and fabs(p[1]) != INF and fabs(p[2]) != INF)


cdef void _tri_closest(const double* p, const double* a, const double* b,
                       const double* c, double* out) noexcept nogil:
    cdef double ab0 = b[0] - a[0], ab1 = b[1] - a[1], ab2 = b[2] - a[2]
    cdef double ac0 = c[0] - a[0], ac1 = c[1] - a[1], ac2 = c[2] - a[2]
    cdef double ap0 = p[0] - a[0], ap1 = p[1] - a[1], ap2 = p[2] - a[2]
    cdef double d1 = (ab0 * ap0 + ab1 * ap1) + ab2 * ap2
    cdef double d2 = (ac0 * ap0 + ac1 * ap1) + ac2 * ap2
    cdef double bp0, bp1, bp2, d3, d4, cp0, cp1, cp2, d5, d6
    cdef double vc, vb, va, t, denom, v, w
    cdef double cand0[3]
    cdef double cand1[3]
    cdef double cand2[3]
    cdef double q0, q1, q2
    if d1 <= 0.0 and d2 <= 0.0:
        out[0] = a[0]; out[1] = a[1]; out[2] = a[2]
        return
    bp0 = p[0] - b[0]; bp1 = p[1] - b[1]; bp2 = p[2] - b[2]
    d3 = (ab0 * bp0 + ab1 * bp1) + ab2 * bp2
    d4 = (ac0 * bp0 + ac1 * bp1) + ac2 * bp2
    if d3 >= 0.0 and d4 <= d3:
        out[0] = b[0]; out[1] = b[1]; out[2] = b[2]
        return
    cp0 = p[0] - c[0]; cp1 = p[1] - c[1]; cp2 = p[2] - c[2]
    d5 = (ab0 * cp0 + ab1 * cp1) + ab2 * cp2
    d6 = (ac0 * cp0 + ac1 * cp1) + ac2 * cp2
    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        t = d1 / (d1 - d3)
        out[0] = a[0] + t * ab0; out[1] = a[1] + t * ab1; out[2] = a[2] + t * ab2
        if _isfinite3(out):
            return
    elif d6 >= 0.0 and d5 <= d6:
        out[0] = c[0]; out[1] = c[1]; out[2] = c[2]
        return
    else:
        vb = d5 * d2 - d1 * d6
        if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
            t = d2 / (d2 - d6)
            out[0] = a[0] + t * ac0; out[1] = a[1] + t * ac1; out[2] = a[2] + t * ac2
            if _isfinite3(out):
                return
        else:
            va = d3 * d6 - d5 * d4
            if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
                t = (d4 - d3) / ((d4 - d3) + (d5 - d6))
                out[0] = b[0] + t * (c[0] - b[0])
                out[1] = b[1] + t * (c[1] - b[1])
                out[2] = b[2] + t * (c[2] - b[2])
                if _isfinite3(out):
                    return
            else:
                denom = va + vb + vc
                v = vb / denom
                w = vc / denom
                out[0] = a[0] + ab0 * v + ac0 * w
                out[1] = a[1] + ab1 * v + ac1 * w
                out[2] = a[2] + ab2 * v + ac2 * w
                if _isfinite3(out):
                    return
    # degenerate face: nearest point among the three edges
    _seg_closest(p, a, b, cand0)
    _seg_closest(p, a, c, cand1)
    _seg_closest(p, b, c, cand2)
    q0 = (p[0] - cand0[0]) ** 2 + (p[1] - cand0[1]) ** 2 + (p[2] - cand0[2]) ** 2
    q1 = (p[0] - cand1[0]) ** 2 + (p[1] - cand1[1]) ** 2 + (p[2] - cand1[2]) ** 2
    q2 = (p[0] - cand2[0]) ** 2 + (p[1] - cand2[1]) ** 2 + (p[2] - cand2[2]) ** 2
    if q0 <= q1 and q0 <= q2:
        out[0] = cand0[0]; out[1] = cand0[1]; out[2] = cand0[2]
    elif q1 <= q2:
        out[0] = cand1[0]; out[1] = cand1[1]; out[2] = cand1[2]
    else:
        out[0] = cand2[0]; out[1] = cand2[1]; out[2] = cand2[2]


cdef inline double _aabb_dist2(double px, double py, double pz,
                               const double[:, ::1] bmin, const double[:, ::1] bmax,
                               Py_ssize_t nid) noexcept nogil:
    cdef double d = 0.0, t
    t = bmin[nid, 0] - px
    if t > 0.0:
        d += t * t
    t = px - bmax[nid, 0]
    if t > 0.0:
        d += t * t
    t = bmin[nid, 1] - py
    if t > 0.0:
        d += t * t
    t = py - bmax[nid, 1]
    if t > 0.0:
        d += t * t
    t = bmin[nid, 2] - pz
    if t > 0.0:
        d += t * t
    t = pz - bmax[nid, 2]
    if t > 0.0:
        d += t * t
    return d


def closest_point_query(bvh, accel, queries, chunk=0):
    q_arr = np.ascontiguousarray(queries, dtype=np.float64)
    cdef const double[:, ::1] q = q_arr
    cdef const double[:, ::1] node_min = bvh.node_min
    cdef const double[:, ::1] node_max = bvh.node_max
    cdef const i64[::1] left = bvh.left
    cdef const i64[::1] right = bvh.right
    cdef const i64[::1] start = bvh.start
    cdef const i64[::1] count = bvh.count
    cdef const i64[::1] order = bvh.order
    cdef const double[:, ::1] ta = bvh.tri_a
    cdef const double[:, ::1] tb = bvh.tri_b
    cdef const double[:, ::1] tc = bvh.tri_c

    cdef Py_ssize_t nq = q.shape[0]
    dist_arr = np.empty(nq, dtype=np.float64)
    face_arr = np.empty(nq, dtype=np.int64)
    cdef double[::1] dist = dist_arr
    cdef i64[::1] face = face_arr

    cdef i64 stack[128]
    cdef int sp
    cdef Py_ssize_t i, k, nid, lo, hi
    cdef double px, py, pz, best, d2, dl, dr
    cdef i64 best_fid, fid, lc, rc
    cdef double p[3]
    cdef double cp[3]

    with nogil:
        for i in range(nq):
            px = q[i, 0]; py = q[i, 1]; pz = q[i, 2]
            p[0] = px; p[1] = py; p[2] = pz
            best = INF
            best_fid = -1
            sp = 0
            stack[sp] = 0
            sp += 1
            while sp > 0:
                sp -= 1
                nid = stack[sp]
                if _aabb_dist2(px, py, pz, node_min, node_max, nid) > best:
                    continue
                if count[nid] > 0:
                    lo = start[nid]
                    hi = lo + count[nid]
                    for k in range(lo, hi):
                        _tri_closest(p, &ta[k, 0], &tb[k, 0], &tc[k, 0], cp)
                        d2 = ((px - cp[0]) ** 2 + (py - cp[1]) ** 2) + (pz - cp[2]) ** 2
                        fid = order[k]
                        if d2 < best or (d2 == best and fid < best_fid):
                            best = d2
                            best_fid = fid
                else:
                    lc = left[nid]
                    rc = right[nid]
                    dl = _aabb_dist2(px, py, pz, node_min, node_max, lc)
                    dr = _aabb_dist2(px, py, pz, node_min, node_max, rc)
                    # visit nearer child first
                    if dl <= dr:
                        if dr <= best:
                            stack[sp] = rc; sp += 1
                        if dl <= best:
                            stack[sp] = lc; sp += 1
                    else:
                        if dl <= best:
                            stack[sp] = lc; sp += 1
                        if dr <= best:
                            stack[sp] = rc; sp += 1
            dist[i] = sqrt(best)
            face[i] = best_fid
    return dist_arr, face_arr


# ---------------------------------------------------------------------------
# ray-parity inside/outside

cdef double _BARY_EPS = 1e-10
cdef double _T_EPS = 1e-12


cdef inline int _ray_aabb(double ox, double oy, double oz,
                          const double* inv_d,
                          const double[:, ::1] bmin, const double[:, ::1] bmax,
                          Py_ssize_t nid) noexcept nogil:
    """Slab test for the ray o + t*d, t in (-eps, inf)."""
    cdef double t0 = -1e-6, t1 = INF, ta, tb, tmp
    cdef double o[3]
    o[0] = ox; o[1] = oy; o[2] = oz
    cdef int k
    for k in range(3):
        ta = (bmin[nid, k] - o[k]) * inv_d[k]
        tb = (bmax[nid, k] - o[k]) * inv_d[k]
        if ta > tb:
            tmp = ta; ta = tb; tb = tmp
        if ta > t0:
            t0 = ta
        if tb < t1:
            t1 = tb
        if t0 > t1:
            return 0
    return 1


def ray_parity_inside(bvh, accel, queries, directions):
    q_arr = np.ascontiguousarray(queries, dtype=np.float64)
    dirs = np.ascontiguousarray(directions, dtype=np.float64)
    cdef const double[:, ::1] q = q_arr
    cdef const double[:, ::1] dview = dirs
    cdef const double[:, ::1] node_min = bvh.node_min
    cdef const double[:, ::1] node_max = bvh.node_max
    cdef const i64[::1] left = bvh.left
    cdef const i64[::1] right = bvh.right
    cdef const i64[::1] start = bvh.start
    cdef const i64[::1] count = bvh.count
    cdef const double[:, ::1] ta = bvh.tri_a
    cdef const double[:, ::1] tb = bvh.tri_b
    cdef const double[:, ::1] tc = bvh.tri_c

    cdef Py_ssize_t nq = q.shape[0]
    inside_arr = np.zeros(nq, dtype=np.uint8)
    cdef cnp.uint8_t[::1] inside = inside_arr
    settled_arr = np.zeros(nq, dtype=np.uint8)
    cdef cnp.uint8_t[::1] settled = settled_arr

    cdef i64 stack[128]
    cdef int sp
    cdef Py_ssize_t i, k, nid, lo, hi, di
    cdef double dx, dy, dz, det, inv_det, u, v, t, w, scale, px, py, pz
    cdef double e1x, e1y, e1z, e2x, e2y, e2z, pvx, pvy, pvz, tvx, tvy, tvz
    cdef double qvx, qvy, qvz
    cdef double inv_d[3]
    cdef long cnt
    cdef int unc, near, hit
    cdef int parity

    for di in range(dview.shape[0]):
        dx = dview[di, 0]; dy = dview[di, 1]; dz = dview[di, 2]
        inv_d[0] = 1.0 / dx; inv_d[1] = 1.0 / dy; inv_d[2] = 1.0 / dz
        with nogil:
            for i in range(nq):
                if settled[i]:
                    continue
                px = q[i, 0]; py = q[i, 1]; pz = q[i, 2]
                cnt = 0
                unc = 0
                sp = 0
                stack[sp] = 0
                sp += 1
                while sp > 0:
                    sp -= 1
                    nid = stack[sp]
                    if not _ray_aabb(px, py, pz, inv_d, node_min, node_max, nid):
                        continue
                    if count[nid] > 0:
                        lo = start[nid]
                        hi = lo + count[nid]
                        for k in range(lo, hi):
                            e1x = tb[k, 0] - ta[k, 0]; e1y = tb[k, 1] - ta[k, 1]; e1z = tb[k, 2] - ta[k, 2]
                            e2x = tc[k, 0] - ta[k, 0]; e2y = tc[k, 1] - ta[k, 1]; e2z = tc[k, 2] - ta[k, 2]
                            pvx = dy * e2z - dz * e2y
                            pvy = dz * e2x - dx * e2z
                            pvz = dx * e2y - dy * e2x
                            det = (e1x * pvx + e1y * pvy) + e1z * pvz
                            scale = sqrt(((e1x * e1x + e1y * e1y) + e1z * e1z)
                                         * ((e2x * e2x + e2y * e2y) + e2z * e2z))
                            if scale < 1e-300:
                                scale = 1e-300
                            if fabs(det) <= 1e-14 * scale:
                                continue
                            inv_det = 1.0 / det
                            tvx = px - ta[k, 0]; tvy = py - ta[k, 1]; tvz = pz - ta[k, 2]
                            u = ((tvx * pvx + tvy * pvy) + tvz * pvz) * inv_det
                            qvx = tvy * e1z - tvz * e1y
                            qvy = tvz * e1x - tvx * e1z
                            qvz = tvx * e1y - tvy * e1x
                            v = ((qvx * dx + qvy * dy) + qvz * dz) * inv_det
                            t = ((qvx * e2x + qvy * e2y) + qvz * e2z) * inv_det
                            w = 1.0 - u - v
                            near = (u > -_BARY_EPS and v > -_BARY_EPS
                                    and w > -_BARY_EPS and t > -_T_EPS)
                            hit = (near and u > _BARY_EPS and v > _BARY_EPS
                                   and w > _BARY_EPS and t > _T_EPS)
                            if hit:
                                cnt += 1
                            elif near:
                                unc = 1
                    else:
                        stack[sp] = right[nid]; sp += 1
                        stack[sp] = left[nid]; sp += 1
                parity = 1 if cnt % 2 == 1 else 0
                inside[i] = parity
                if not unc:
                    settled[i] = 1
        if settled_arr.all():
            break
    return inside_arr.astype(bool)


# ---------------------------------------------------------------------------
# marching cubes

def marching_cubes_core(values, double iso):
    v_arr = np.array(values, dtype=np.float64, order="C", copy=True)
    cdef Py_ssize_t nx = v_arr.shape[0], ny = v_arr.shape[1], nz = v_arr.shape[2]
    if min(nx, ny, nz) < 2:
        raise ValueError("grid must have at least 2 nodes per axis")
    cdef double span = float(v_arr.max() - v_arr.min())
    cdef double eps = (span if span > 1.0 else 1.0) * 1e-12
    v_arr[v_arr == iso] = iso + eps
    cdef double[:, :, ::1] v = v_arr

    cdef const i64[:, ::1] corner = _CORNER_OFF_NP
    cdef const i64[:, ::1] tri_table = _TRI_TABLE_NP
    cdef const i64[::1] tri_count = _TRI_COUNT_NP
    cdef const i64[::1] edge_axis = _EDGE_AXIS_NP
    cdef const i64[:, ::1] edge_base = _EDGE_BASE_NP

    ci_arr = np.zeros((nx - 1, ny - 1, nz - 1), dtype=np.int32)
    cdef i32[:, :, ::1] ci = ci_arr
    cdef Py_ssize_t i, j, k, b, n_tri_total = 0
    cdef int case

    with nogil:
        for i in range(nx - 1):
            for j in range(ny - 1):
                for k in range(nz - 1):
                    case = 0
                    for b in range(8):
                        if v[i + corner[b, 0], j + corner[b, 1], k + corner[b, 2]] < iso:
                            case |= 1 << b
                    ci[i, j, k] = case

    n_tri_total = int(_TRI_COUNT_NP[ci_arr].sum())
    faces_arr = np.empty((n_tri_total, 3), dtype=np.int64)
    verts_arr = np.empty((3 * n_tri_total, 3), dtype=np.float64)
    memo_arr = np.full((3, nx, ny, nz), -1, dtype=np.int32)
    cdef i64[:, ::1] faces = faces_arr
    cdef double[:, ::1] verts = verts_arr
    cdef i32[:, :, :, ::1] memo = memo_arr

    cdef Py_ssize_t nv = 0, nf = 0
    cdef Py_ssize_t slot, ax, ex, ey, ez, tcount, ti, e
    cdef i32 vid
    cdef double v0, v1, t

    with nogil:
        for i in range(nx - 1):
            for j in range(ny - 1):
                for k in range(nz - 1):
                    case = ci[i, j, k]
                    tcount = tri_count[case]
                    for ti in range(tcount):
                        for e in range(3):
                            slot = tri_table[case, 3 * ti + e]
                            ax = edge_axis[slot]
                            ex = i + edge_base[slot, 0]
                            ey = j + edge_base[slot, 1]
                            ez = k + edge_base[slot, 2]
                            vid = memo[ax, ex, ey, ez]
                            if vid < 0:
                                v0 = v[ex, ey, ez]
                                if ax == 0:
                                    v1 = v[ex + 1, ey, ez]
                                elif ax == 1:
                                    v1 = v[ex, ey + 1, ez]
                                else:
                                    v1 = v[ex, ey, ez + 1]
                                t = (iso - v0) / (v1 - v0)
                                verts[nv, 0] = ex
                                verts[nv, 1] = ey
                                verts[nv, 2] = ez
                                verts[nv, ax] += t
                                vid = <i32>nv
                                memo[ax, ex, ey, ez] = vid
                                nv += 1
                            faces[nf, 2 - e] = vid
                        nf += 1
    return verts_arr[:nv], faces_arr


# ---------------------------------------------------------------------------
# farthest point sampling

def fps_core(points, Py_ssize_t m, Py_ssize_t start):
    p_arr = np.ascontiguousarray(points, dtype=np.float64)
    cdef const double[:, ::1] p = p_arr
    cdef Py_ssize_t n = p.shape[0]
    sel_arr = np.empty(m, dtype=np.int64)
    cdef i64[::1] sel = sel_arr
    d_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] d = d_arr
    cdef Py_ssize_t i, k, best
    cdef double dx, dy, dz, dd, bestv, sx, sy, sz

    with nogil:
        sx = p[start, 0]; sy = p[start, 1]; sz = p[start, 2]
        for i in range(n):
            dx = p[i, 0] - sx; dy = p[i, 1] - sy; dz = p[i, 2] - sz
            d[i] = (dx * dx + dy * dy) + dz * dz
        d[start] = -1.0
        sel[0] = start
        for k in range(1, m):
            best = 0
            bestv = d[0]
            for i in range(1, n):
                if d[i] > bestv:
                    bestv = d[i]
                    best = i
            sel[k] = best
            sx = p[best, 0]; sy = p[best, 1]; sz = p[best, 2]
            for i in range(n):
                dx = p[i, 0] - sx; dy = p[i, 1] - sy; dz = p[i, 2] - sz
                dd = (dx * dx + dy * dy) + dz * dz
                if dd < d[i]:
                    d[i] = dd
            d[best] = -1.0
    return sel_arr


# ---------------------------------------------------------------------------
# orthographic triangle rasterization

def rasterize_ids(xy, depth, Py_ssize_t height, Py_ssize_t width):
    xy_arr = np.ascontiguousarray(xy, dtype=np.float64)
    depth_arr = np.ascontiguousarray(depth, dtype=np.float64)
    cdef const double[:, :, ::1] pxy = xy_arr
    cdef const double[:, ::1] pz = depth_arr
    buf_arr = np.full((height, width), -1, dtype=np.int32)
    zbuf_arr = np.full((height, width), INF, dtype=np.float64)
    cdef i32[:, ::1] buf = buf_arr
    cdef double[:, ::1] zbuf = zbuf_arr
    cdef Py_ssize_t nf = pxy.shape[0]
    cdef Py_ssize_t f, x0, x1, y0, y1, px, py
    cdef double minx, maxx, miny, maxy, cx, cy
    cdef double v0x, v0y, v1x, v1y, v2x, v2y
    cdef double e0, e1, e2, area, w0, w1, w2, z
    with nogil:
        for f in range(nf):
            v0x = pxy[f, 0, 0]; v0y = pxy[f, 0, 1]
            v1x = pxy[f, 1, 0]; v1y = pxy[f, 1, 1]
            v2x = pxy[f, 2, 0]; v2y = pxy[f, 2, 1]
            area = (v1x - v0x) * (v2y - v0y) - (v1y - v0y) * (v2x - v0x)
            if area == 0.0:
                continue
            minx = v0x
            if v1x < minx: minx = v1x
            if v2x < minx: minx = v2x
            maxx = v0x
            if v1x > maxx: maxx = v1x
            if v2x > maxx: maxx = v2x
            miny = v0y
            if v1y < miny: miny = v1y
            if v2y < miny: miny = v2y
            maxy = v0y
            if v1y > maxy: maxy = v1y
            if v2y > maxy: maxy = v2y
            x0 = <Py_ssize_t>ceil(minx - 0.5)
            x1 = <Py_ssize_t>floor(maxx - 0.5)
            y0 = <Py_ssize_t>ceil(miny - 0.5)
            y1 = <Py_ssize_t>floor(maxy - 0.5)
            if x0 < 0: x0 = 0
            if y0 < 0: y0 = 0
            if x1 > width - 1: x1 = width - 1
            if y1 > height - 1: y1 = height - 1
            for py in range(y0, y1 + 1):
                cy = py + 0.5
                for px in range(x0, x1 + 1):
                    cx = px + 0.5
                    e0 = (v1x - v0x) * (cy - v0y) - (v1y - v0y) * (cx - v0x)
                    e1 = (v2x - v1x) * (cy - v1y) - (v2y - v1y) * (cx - v1x)
                    e2 = (v0x - v2x) * (cy - v2y) - (v0y - v2y) * (cx - v2x)
                    if area > 0.0:
                        if e0 < 0.0 or e1 < 0.0 or e2 < 0.0:
                            continue
                    else:
                        if e0 > 0.0 or e1 > 0.0 or e2 > 0.0:
                            continue
                    w0 = e1 / area
                    w1 = e2 / area
                    w2 = e0 / area
                    z = w0 * pz[f, 0] + w1 * pz[f, 1] + w2 * pz[f, 2]
                    if z < zbuf[py, px]:
                        zbuf[py, px] = z
                        buf[py, px] = <i32>f
    return buf_arr


def rasterize_mask(xy, Py_ssize_t height, Py_ssize_t width):
    xy_arr = np.ascontiguousarray(xy, dtype=np.float64)
    cdef const double[:, :, ::1] pxy = xy_arr
    buf_arr = np.zeros((height, width), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] buf = buf_arr
    cdef Py_ssize_t nf = pxy.shape[0]
    cdef Py_ssize_t f, x0, x1, y0, y1, px, py
    cdef double minx, maxx, miny, maxy, cx, cy
    cdef double v0x, v0y, v1x, v1y, v2x, v2y
    cdef double e0, e1, e2, area
    with nogil:
        for f in range(nf):
            v0x = pxy[f, 0, 0]; v0y = pxy[f, 0, 1]
            v1x = pxy[f, 1, 0]; v1y = pxy[f, 1, 1]
            v2x = pxy[f, 2, 0]; v2y = pxy[f, 2, 1]
            area = (v1x - v0x) * (v2y - v0y) - (v1y - v0y) * (v2x - v0x)
            if area == 0.0:
                continue
            minx = v0x
            if v1x < minx: minx = v1x
            if v2x < minx: minx = v2x
            maxx = v0x
            if v1x > maxx: maxx = v1x
            if v2x > maxx: maxx = v2x
            miny = v0y
            if v1y < miny: miny = v1y
            if v2y < miny: miny = v2y
            maxy = v0y
            if v1y > maxy: maxy = v1y
            if v2y > maxy: maxy = v2y
            x0 = <Py_ssize_t>ceil(minx - 0.5)
            x1 = <Py_ssize_t>floor(maxx - 0.5)
            y0 = <Py_ssize_t>ceil(miny - 0.5)
            y1 = <Py_ssize_t>floor(maxy - 0.5)
            if x0 < 0: x0 = 0
            if y0 < 0: y0 = 0
            if x1 > width - 1: x1 = width - 1
            if y1 > height - 1: y1 = height - 1
            for py in range(y0, y1 + 1):
                cy = py + 0.5
                for px in range(x0, x1 + 1):
                    cx = px + 0.5
                    e0 = (v1x - v0x) * (cy - v0y) - (v1y - v0y) * (cx - v0x)
                    e1 = (v2x - v1x) * (cy - v1y) - (v2y - v1y) * (cx - v1x)
                    e2 = (v0x - v2x) * (cy - v2y) - (v0y - v2y) * (cx - v2x)
                    if area > 0.0:
                        if e0 < 0.0 or e1 < 0.0 or e2 < 0.0:
                            continue
                    else:
                        if e0 > 0.0 or e1 > 0.0 or e2 > 0.0:
                            continue
                    buf[py, px] = 1
    return buf_arr.astype(bool)
