"""Versioned binary container for model parameters.

Layout (little endian)::

    magic      8 bytes
    version    uint32
    meta_len   uint32
    meta       meta_len bytes of UTF-8 JSON; includes "arrays": [[name, shape], ...]
    payload    float64 arrays in the order listed in meta

"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Mapping

import numpy as np

_HEADER = struct.Struct("<8sII")


class FormatError(ValueError):
    pass


def dump_blob(path, magic: bytes, version: int, meta: Mapping, arrays: Mapping[str, np.ndarray]) -> None:
    if len(magic) != 8:
        raise ValueError("magic must be exactly 8 bytes")
    meta = dict(meta)
    meta["arrays"] = [[name, list(np.shape(a))] for name, a in arrays.items()]
    meta_bytes = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode()
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(magic, version, len(meta_bytes)))
        fh.write(meta_bytes)
        for a in arrays.values():
            fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def load_blob(path, magic: bytes, max_version: int) -> tuple[int, dict, dict[str, np.ndarray]]:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    got_magic, version, meta_len = _HEADER.unpack_from(raw)
    if got_magic != magic:
        raise FormatError(f"{path}: bad magic {got_magic!r}, expected {magic!r}")
    if version > max_version:
        raise FormatError(f"{path}: unsupported version {version}")
    off = _HEADER.size
    meta = json.loads(raw[off:off + meta_len].decode())
    off += meta_len
    arrays = {}
    for name, shape in meta["arrays"]:
        n = int(np.prod(shape)) if shape else 1
        nbytes = 8 * n
        if off + nbytes > len(raw):
            raise FormatError(f"{path}: truncated payload at array {name!r}")
        arrays[name] = np.frombuffer(raw, dtype="<f8", count=n, offset=off).reshape(shape).astype(float)
        off += nbytes
    if off != len(raw):
        raise FormatError(f"{path}: {len(raw) - off} trailing bytes")
    return version, meta, arrays
