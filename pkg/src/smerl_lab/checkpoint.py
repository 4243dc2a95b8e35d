"""Deterministic binary checkpoints.

Layout: 8-byte magic, little-endian uint32 format version, uint64 header
length, a UTF-8 JSON header (sorted keys) describing every array, then the
raw little-endian array bytes in header order. Identical inputs always give
identical files, and arrays round-trip bit for bit.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Any

import numpy as np

MAGIC = b"SMRLCKPT"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


def dumps(arrays: dict[str, np.ndarray], meta: dict[str, Any] | None = None) -> bytes:
    entries, blobs, offset = [], [], 0
    for name in sorted(arrays):
        a = np.asarray(arrays[name])
        if a.dtype.kind not in "biuf":
            raise CheckpointError(f"array {name!r} has unsupported dtype {a.dtype}")
        le = np.ascontiguousarray(a, dtype=a.dtype.newbyteorder("<"))
        raw = le.tobytes()
        entries.append({"name": name, "dtype": le.dtype.str, "shape": list(a.shape),
                        "offset": offset, "nbytes": len(raw)})
        blobs.append(raw)
        offset += len(raw)
    header = json.dumps({"arrays": entries, "meta": meta or {}}, sort_keys=True,
                        separators=(",", ":")).encode()
    return MAGIC + struct.pack("<IQ", FORMAT_VERSION, len(header)) + header + b"".join(blobs)


def loads(data: bytes) -> tuple[dict[str, np.ndarray], dict[str, Any]]:
    if data[:8] != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic)")
    version, hlen = struct.unpack("<IQ", data[8:20])
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    header = json.loads(data[20:20 + hlen])
    body = memoryview(data)[20 + hlen:]
    arrays = {}
    for e in header["arrays"]:
        if e["offset"] + e["nbytes"] > len(body):
            raise CheckpointError(f"truncated checkpoint: array {e['name']!r}")
        chunk = body[e["offset"]:e["offset"] + e["nbytes"]]
        a = np.frombuffer(chunk, dtype=np.dtype(e["dtype"])).reshape(e["shape"])
        arrays[e["name"]] = a.astype(a.dtype.newbyteorder("="))
    return arrays, header["meta"]


def save_checkpoint(path, arrays: dict[str, np.ndarray], meta: dict[str, Any] | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(dumps(arrays, meta))
    return path


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict[str, Any]]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    return loads(path.read_bytes())


def load_policy(path):
    """LatentPolicy stored by a training run."""
    from .policy import LatentPolicy

    arrays, _ = load_checkpoint(path)
    return LatentPolicy.from_arrays(arrays)
