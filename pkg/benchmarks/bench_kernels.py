#!/usr/bin/env python3
"""Benchmark the compiled kernel core against the pure NumPy fallback.

Run:  python3 benchmarks/bench_kernels.py [--quick]

Workloads mirror the pipeline's hot paths: UDF-style closest-point grids,
ray-parity occupancy labeling, marching cubes, farthest point sampling, and
orthographic ID rasterization.
"""

import argparse
import time

import numpy as np

from partcomplete import kernels
from partcomplete.curation.visibility import _view_basis
from partcomplete.kernels import MeshQuery, get_backend
from partcomplete.primitives import icosphere, sphere_directions
from partcomplete.synthetic import AssemblySpec, raw_assembly_parts
from partcomplete.geometry import merge_meshes, normalize_to_unit


def timed(fn, repeat=1):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench(quick: bool):
    try:
        get_backend("native")
        backends = ["native", "python"]
    except ImportError:
        print("native extension not built; benchmarking fallback only")
        backends = ["python"]

    merged, _ = normalize_to_unit(
        merge_meshes(raw_assembly_parts(AssemblySpec("table", 7, occlusion=0.2)))
    )
    sphere = icosphere(3, 0.6)
    rng = np.random.default_rng(0)

    grid_n = 48 if quick else 80
    x = np.linspace(-1.1, 1.1, grid_n)
    g = np.stack(np.meshgrid(x, x, x, indexing="ij"), axis=-1).reshape(-1, 3)

    mc_n = 96 if quick else 160
    xs = np.linspace(-1, 1, mc_n)
    sdf = np.sqrt(
        ((np.stack(np.meshgrid(xs, xs, xs, indexing="ij"), axis=-1)) ** 2).sum(-1)
    ) - 0.55

    fps_pts = rng.normal(size=(30_000 if quick else 100_000, 3))
    occ_q = rng.uniform(-1, 1, size=(4_000 if quick else 20_000, 3))

    dirs = sphere_directions(42 if quick else 162)
    tri = merged.triangles()
    raster_jobs = []
    for d in dirs:
        u, v = _view_basis(d)
        a = tri @ u
        b = tri @ v
        depth = -(tri @ d)
        scale = 0.96 * 256 / max(a.max() - a.min(), b.max() - b.min())
        xy = np.stack(
            [
                (a - 0.5 * (a.min() + a.max())) * scale + 128,
                (b - 0.5 * (b.min() + b.max())) * scale + 128,
            ],
            axis=2,
        )
        raster_jobs.append((xy, depth))

    rows = []
    for be in backends:
        mq_merged = MeshQuery(merged.vertices, merged.faces, backend=be)
        mq_sphere = MeshQuery(sphere.vertices, sphere.faces, backend=be)
        t_cp, _ = timed(lambda: mq_merged.closest(g))
        t_in, _ = timed(lambda: mq_sphere.inside(occ_q))
        t_mc, _ = timed(lambda: kernels.marching_cubes_core(sdf, 0.0, backend=be))
        t_fps, _ = timed(lambda: kernels.fps_core(fps_pts, 1024, 0, backend=be))

        def raster_all():
            for xy, depth in raster_jobs:
                kernels.rasterize_ids(xy, depth, 256, 256, backend=be)

        t_ras, _ = timed(raster_all)
        rows.append((be, t_cp, t_in, t_mc, t_fps, t_ras))

    names = [
        f"closest-point grid ({grid_n}^3 x {merged.n_faces} tris)",
        f"ray-parity inside ({len(occ_q)} queries x {sphere.n_faces} tris)",
        f"marching cubes ({mc_n}^3)",
        f"farthest point sampling ({len(fps_pts)} -> 1024)",
        f"ID raster ({len(raster_jobs)} views x 256^2)",
    ]
    print(f"\nkernel backend comparison (active: {kernels.BACKEND})\n")
    header = f"{'workload':<50} " + " ".join(f"{be:>12}" for be in backends)
    if len(backends) == 2:
        header += f" {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for i, name in enumerate(names):
        vals = [rows[j][i + 1] for j in range(len(backends))]
        line = f"{name:<50} " + " ".join(f"{v:>11.3f}s" for v in vals)
        if len(vals) == 2:
            line += f" {vals[1] / vals[0]:>8.1f}x"
        print(line)


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true", help="smaller workloads")
    args = ap.parse_args()
    bench(args.quick)
