"""Binary parameter checkpoints with a versioned header.

Layout (all integers little-endian):

    magic   b"CSCK"
    version u32
    meta    u32 length + UTF-8 JSON blob (model metadata)
    count   u32 number of parameter records
    record  u16 name length + name UTF-8
            u8  ndim, then ndim * u32 dims
            raw little-endian float64 values, row-major

Round trips are bit-exact: values are written untouched from the float64
buffers and read back with frombuffer.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Mapping

import numpy as np

MAGIC = b"CSCK"
VERSION = 1


def save_checkpoint(path, arrays: Mapping[str, np.ndarray], meta: dict | None = None) -> None:
    blob = json.dumps(meta or {}, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(struct.pack("<I", len(arrays)))
        for name, arr in arrays.items():
            a = np.ascontiguousarray(arr, dtype="<f8")
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<B", a.ndim))
            for dim in a.shape:
                fh.write(struct.pack("<I", dim))
            fh.write(a.tobytes())


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict]:
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise ValueError(f"{path}: not a parameter checkpoint (bad magic)")
    offset = 4
    (version,) = struct.unpack_from("<I", raw, offset)
    offset += 4
    if version != VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    (meta_len,) = struct.unpack_from("<I", raw, offset)
    offset += 4
    meta = json.loads(raw[offset : offset + meta_len].decode("utf-8"))
    offset += meta_len
    (count,) = struct.unpack_from("<I", raw, offset)
    offset += 4
    arrays: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", raw, offset)
        offset += 2
        name = raw[offset : offset + name_len].decode("utf-8")
        offset += name_len
        (ndim,) = struct.unpack_from("<B", raw, offset)
        offset += 1
        dims = struct.unpack_from(f"<{ndim}I", raw, offset) if ndim else ()
        offset += 4 * ndim
        size = int(np.prod(dims)) if dims else 1
        values = np.frombuffer(raw, dtype="<f8", count=size, offset=offset).copy()
        offset += 8 * size
        arrays[name] = values.reshape(dims)
    if offset != len(raw):
        raise ValueError(f"{path}: {len(raw) - offset} trailing bytes after last record")
    return arrays, meta
