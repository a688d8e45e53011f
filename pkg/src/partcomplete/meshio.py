"""OBJ and PLY readers/writers.

Scope is deliberately narrow: ASCII OBJ, ASCII and binary little-endian PLY.
Meshes written as PLY carry the per-face part label as an int32 ``part_id``
property when present; point clouds carry normals and an optional uchar
``mask`` property.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import GeometryError, PointCloud, TriMesh


class MeshIOError(ValueError):
    """Unreadable or malformed mesh file."""


@dataclass(frozen=True)
class MeshReadStats:
    dropped_degenerate: int


_PLY_DTYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}


def read_mesh(path) -> tuple[TriMesh, MeshReadStats]:
    """Read an OBJ or PLY mesh, dropping degenerate (repeated-index) faces.

    Returns the mesh and the count of dropped faces."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise MeshIOError(f"cannot read {path}: {exc}") from exc
    if data[:3] == b"ply":
        verts, faces, labels = _parse_ply_mesh(data, path)
    else:
        verts, faces, labels = _parse_obj(data, path)
    if len(verts) == 0:
        raise MeshIOError(f"{path}: no vertices")
    if len(faces):
        if faces.min() < 0 or faces.max() >= len(verts):
            raise MeshIOError(f"{path}: face vertex index out of range")
    keep = (
        (faces[:, 0] != faces[:, 1])
        & (faces[:, 1] != faces[:, 2])
        & (faces[:, 0] != faces[:, 2])
    )
    dropped = int((~keep).sum())
    faces = faces[keep]
    if labels is not None:
        labels = labels[keep]
    if len(faces) == 0:
        raise MeshIOError(f"{path}: no valid faces")
    try:
        mesh = TriMesh(verts, faces, labels)
    except GeometryError as exc:
        raise MeshIOError(f"{path}: {exc}") from exc
    return mesh, MeshReadStats(dropped)


def load_mesh(path) -> TriMesh:
    return read_mesh(path)[0]


def _parse_obj(data: bytes, path) -> tuple[np.ndarray, np.ndarray, None]:
    verts: list[tuple[float, float, float]] = []
    faces: list[tuple[int, int, int]] = []
    try:
        text = data.decode("utf-8", errors="replace")
    except Exception as exc:  # pragma: no cover - decode with replace can't fail
        raise MeshIOError(f"{path}: {exc}") from exc
    for ln, line in enumerate(text.splitlines(), start=1):
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        tag = parts[0]
        if tag == "v":
            if len(parts) < 4:
                raise MeshIOError(f"{path}:{ln}: malformed vertex line")
            verts.append(tuple(float(x) for x in parts[1:4]))
        elif tag == "f":
            idx = []
            for tok in parts[1:]:
                s = tok.split("/")[0]
                if not s:
                    raise MeshIOError(f"{path}:{ln}: malformed face token {tok!r}")
                i = int(s)
                # OBJ is 1-based; negative indices count back from the end
                idx.append(i - 1 if i > 0 else len(verts) + i)
            if len(idx) < 3:
                raise MeshIOError(f"{path}:{ln}: face with fewer than 3 vertices")
            for k in range(1, len(idx) - 1):  # fan triangulation
                faces.append((idx[0], idx[k], idx[k + 1]))
        # all other tags (vn, vt, usemtl, o, g, s, mtllib, ...) are ignored
    v = np.array(verts, dtype=np.float64).reshape(-1, 3)
    f = np.array(faces, dtype=np.int64).reshape(-1, 3)
    return v, f, None


def _parse_ply_header(data: bytes, path):
    end = data.find(b"end_header\n")
    if end < 0:
        raise MeshIOError(f"{path}: missing PLY end_header")
    header = data[:end].decode("ascii", errors="replace").splitlines()
    body = data[end + len(b"end_header\n"):]
    fmt = None
    elements: list[dict] = []
    for line in header[1:]:
        tok = line.split()
        if not tok or tok[0] == "comment":
            continue
        if tok[0] == "format":
            fmt = tok[1]
        elif tok[0] == "element":
            elements.append({"name": tok[1], "count": int(tok[2]), "props": []})
        elif tok[0] == "property":
            if not elements:
                raise MeshIOError(f"{path}: property before element")
            if tok[1] == "list":
                elements[-1]["props"].append(("list", tok[2], tok[3], tok[4]))
            else:
                elements[-1]["props"].append(("scalar", tok[1], tok[2]))
    if fmt not in ("ascii", "binary_little_endian"):
        raise MeshIOError(f"{path}: unsupported PLY format {fmt!r}")
    return fmt, elements, body


def _parse_ply_mesh(data: bytes, path):
    fmt, elements, body = _parse_ply_header(data, path)
    verts = np.zeros((0, 3))
    faces: list = []
    labels: list = []
    have_label = False

    if fmt == "ascii":
        tokens = io.StringIO(body.decode("ascii", errors="replace"))
        rows = [line.split() for line in tokens if line.strip()]
        cursor = 0
        for el in elements:
            n = el["count"]
            chunk = rows[cursor : cursor + n]
            cursor += n
            if el["name"] == "vertex":
                names = [p[-1] for p in el["props"]]
                cols = {nm: i for i, nm in enumerate(names)}
                arr = np.array([[float(x) for x in r] for r in chunk], dtype=np.float64)
                verts = arr[:, [cols["x"], cols["y"], cols["z"]]]
            elif el["name"] == "face":
                have_label = any(p[-1] in ("part_id", "label") for p in el["props"])
                for r in chunk:
                    cnt = int(r[0])
                    idx = [int(x) for x in r[1 : 1 + cnt]]
                    lab = int(r[1 + cnt]) if have_label and len(r) > 1 + cnt else 0
                    for k in range(1, cnt - 1):
                        faces.append((idx[0], idx[k], idx[k + 1]))
                        labels.append(lab)
        f = np.array(faces, dtype=np.int64).reshape(-1, 3)
        lab = np.array(labels, dtype=np.int64) if have_label else None
        return verts, f, lab

    # binary little-endian
    off = 0
    for el in elements:
        n = el["count"]
        if el["name"] == "vertex":
            dtype = np.dtype(
                [(p[-1], "<" + _PLY_DTYPES[p[1]]) for p in el["props"]]
            )
            arr = np.frombuffer(body, dtype=dtype, count=n, offset=off)
            off += dtype.itemsize * n
            verts = np.stack(
                [arr["x"], arr["y"], arr["z"]], axis=1
            ).astype(np.float64)
        elif el["name"] == "face":
            props = el["props"]
            if props[0][0] != "list":
                raise MeshIOError(f"{path}: face element must start with a list")
            cnt_dt = np.dtype("<" + _PLY_DTYPES[props[0][1]])
            idx_dt = np.dtype("<" + _PLY_DTYPES[props[0][2]])
            trailing = [(p[-1], "<" + _PLY_DTYPES[p[1]]) for p in props[1:]]
            have_label = any(nm in ("part_id", "label") for nm, _ in trailing)
            for _ in range(n):
                cnt = int(np.frombuffer(body, cnt_dt, 1, off)[0])
                off += cnt_dt.itemsize
                idx = np.frombuffer(body, idx_dt, cnt, off).astype(np.int64)
                off += idx_dt.itemsize * cnt
                lab = 0
                for nm, dt in trailing:
                    val = np.frombuffer(body, np.dtype(dt), 1, off)[0]
                    off += np.dtype(dt).itemsize
                    if nm in ("part_id", "label"):
                        lab = int(val)
                for k in range(1, cnt - 1):
                    faces.append((idx[0], idx[k], idx[k + 1]))
                    labels.append(lab)
        else:
            # skip unknown fixed-size elements
            width = sum(
                np.dtype(_PLY_DTYPES[p[1]]).itemsize for p in el["props"] if p[0] == "scalar"
            )
            if any(p[0] == "list" for p in el["props"]):
                raise MeshIOError(f"{path}: cannot skip list element {el['name']!r}")
            off += width * n
    f = np.array(faces, dtype=np.int64).reshape(-1, 3)
    lab = np.array(labels, dtype=np.int64) if have_label else None
    return verts, f, lab


# ---------------------------------------------------------------------------
# writers


def write_mesh(path, mesh: TriMesh, binary: bool = True, comment: str | None = None) -> None:
    """Write a mesh; format chosen by extension (.obj or .ply).
    ``comment`` is embedded in the PLY header (ignored for OBJ)."""
    path = Path(path)
    ext = path.suffix.lower()
    if ext == ".obj":
        _write_obj(path, mesh)
    elif ext == ".ply":
        _write_ply_mesh(path, mesh, binary=binary, comment=comment)
    else:
        raise MeshIOError(f"unsupported mesh extension {ext!r}")


def _write_obj(path: Path, mesh: TriMesh) -> None:
    # OBJ has no face-property slot, so part labels are not preserved here
    lines = ["# partcomplete mesh"]
    for v in mesh.vertices:
        lines.append(f"v {v[0]:.17g} {v[1]:.17g} {v[2]:.17g}")
    for f in mesh.faces:
        lines.append(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}")
    path.write_text("\n".join(lines) + "\n")


def _write_ply_mesh(path: Path, mesh: TriMesh, binary: bool, comment: str | None = None) -> None:
    labeled = mesh.face_labels is not None
    header = ["ply"]
    header.append(
        "format binary_little_endian 1.0" if binary else "format ascii 1.0"
    )
    if comment:
        header.append(f"comment {comment}")
    header += [
        f"element vertex {mesh.n_vertices}",
        "property double x",
        "property double y",
        "property double z",
        f"element face {mesh.n_faces}",
        "property list uchar int vertex_indices",
    ]
    if labeled:
        header.append("property int part_id")
    header.append("end_header")
    if binary:
        with open(path, "wb") as fh:
            fh.write(("\n".join(header) + "\n").encode("ascii"))
            fh.write(np.ascontiguousarray(mesh.vertices, dtype="<f8").tobytes())
            fdt = [("n", "u1"), ("idx", "<i4", (3,))]
            if labeled:
                fdt.append(("part_id", "<i4"))
            rec = np.empty(mesh.n_faces, dtype=np.dtype(fdt))
            rec["n"] = 3
            rec["idx"] = mesh.faces.astype("<i4")
            if labeled:
                rec["part_id"] = mesh.face_labels.astype("<i4")
            fh.write(rec.tobytes())
        return
    lines = header[:]
    for v in mesh.vertices:
        lines.append(f"{v[0]:.17g} {v[1]:.17g} {v[2]:.17g}")
    for i, f in enumerate(mesh.faces):
        row = f"3 {f[0]} {f[1]} {f[2]}"
        if labeled:
            row += f" {mesh.face_labels[i]}"
        lines.append(row)
    path.write_text("\n".join(lines) + "\n")


def write_point_cloud(path, cloud: PointCloud, mask: np.ndarray | None = None) -> None:
    """Binary little-endian PLY with positions, normals, and an optional
    uchar ``mask`` property."""
    path = Path(path)
    n = len(cloud)
    header = [
        "ply",
        "format binary_little_endian 1.0",
        f"element vertex {n}",
        "property double x",
        "property double y",
        "property double z",
        "property double nx",
        "property double ny",
        "property double nz",
    ]
    if mask is not None:
        header.append("property uchar mask")
    header.append("end_header")
    fields = [("p", "<f8", (3,)), ("n", "<f8", (3,))]
    if mask is not None:
        fields.append(("mask", "u1"))
    rec = np.empty(n, dtype=np.dtype(fields))
    rec["p"] = cloud.positions
    rec["n"] = cloud.normals
    if mask is not None:
        rec["mask"] = np.asarray(mask).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        fh.write(rec.tobytes())


def read_point_cloud(path) -> tuple[PointCloud, np.ndarray | None]:
    path = Path(path)
    data = path.read_bytes()
    if data[:3] != b"ply":
        raise MeshIOError(f"{path}: not a PLY file")
    fmt, elements, body = _parse_ply_header(data, path)
    el = next((e for e in elements if e["name"] == "vertex"), None)
    if el is None:
        raise MeshIOError(f"{path}: no vertex element")
    names = [p[-1] for p in el["props"]]
    if fmt == "ascii":
        rows = [line.split() for line in body.decode("ascii").splitlines() if line.strip()]
        arr = np.array([[float(x) for x in r] for r in rows[: el["count"]]])
        cols = {nm: i for i, nm in enumerate(names)}
        pos = arr[:, [cols["x"], cols["y"], cols["z"]]]
        nrm = arr[:, [cols["nx"], cols["ny"], cols["nz"]]]
        mask = arr[:, cols["mask"]].astype(np.uint8) if "mask" in cols else None
    else:
        dtype = np.dtype([(p[-1], "<" + _PLY_DTYPES[p[1]]) for p in el["props"]])
        arr = np.frombuffer(body, dtype=dtype, count=el["count"])
        pos = np.stack([arr["x"], arr["y"], arr["z"]], axis=1).astype(np.float64)
        nrm = np.stack([arr["nx"], arr["ny"], arr["nz"]], axis=1).astype(np.float64)
        mask = arr["mask"].copy() if "mask" in names else None
    return PointCloud(pos, nrm), mask
