"""Versioned binary checkpoint format.

Layout (little-endian): magic ``PCCKPT\\0``, u32 format version, u64 JSON
header length, JSON header, raw tensor bytes.  The header lists every tensor
(name, dtype, shape, byte offset/length into the payload) plus arbitrary
JSON metadata (step, run config echo).  Round-trips are bit-exact."""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np
import torch

_MAGIC = b"PCCKPT\x00"
_VERSION = 1

_DTYPES = {
    "float32": "<f4",
    "float64": "<f8",
    "int64": "<i8",
    "int32": "<i4",
    "uint8": "u1",
}


class CheckpointError(RuntimeError):
    pass


def save_checkpoint(path, tensors: dict[str, torch.Tensor | np.ndarray], meta: dict) -> None:
    entries = []
    blobs = []
    offset = 0
    for name in sorted(tensors):
        t = tensors[name]
        if torch.is_tensor(t):
            arr = t.detach().cpu().numpy()
        else:
            arr = np.asarray(t)
        dt = str(arr.dtype)
        if dt not in _DTYPES:
            raise CheckpointError(f"unsupported dtype {dt} for tensor {name!r}")
        raw = np.ascontiguousarray(arr).astype(_DTYPES[dt], copy=False).tobytes()
        entries.append(
            {
                "name": name,
                "dtype": dt,
                "shape": list(arr.shape),
                "offset": offset,
                "nbytes": len(raw),
            }
        )
        blobs.append(raw)
        offset += len(raw)
    header = json.dumps(
        {"tensors": entries, "meta": meta}, sort_keys=True, separators=(",", ":")
    ).encode()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<IQ", _VERSION, len(header)))
        fh.write(header)
        for raw in blobs:
            fh.write(raw)


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict]:
    data = Path(path).read_bytes()
    if data[: len(_MAGIC)] != _MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    off = len(_MAGIC)
    version, hlen = struct.unpack_from("<IQ", data, off)
    if version != _VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    off += struct.calcsize("<IQ")
    header = json.loads(data[off : off + hlen])
    payload = off + hlen
    tensors = {}
    for e in header["tensors"]:
        arr = np.frombuffer(
            data, np.dtype(_DTYPES[e["dtype"]]), e["nbytes"] // np.dtype(_DTYPES[e["dtype"]]).itemsize,
            payload + e["offset"],
        ).reshape(e["shape"])
        tensors[e["name"]] = arr.astype(e["dtype"], copy=False)
    return tensors, header["meta"]


def save_model(path, model: torch.nn.Module, meta: dict) -> None:
    save_checkpoint(path, dict(model.state_dict()), meta)


def load_model(path, model: torch.nn.Module) -> dict:
    tensors, meta = load_checkpoint(path)
    state = {}
    dtype = next(model.parameters()).dtype
    for name, arr in tensors.items():
        t = torch.from_numpy(np.array(arr))
        if t.is_floating_point():
            t = t.to(dtype)
        state[name] = t
    model.load_state_dict(state)
    return meta
