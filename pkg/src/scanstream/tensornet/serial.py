"""Bit-exact binary weights format.

Layout (little-endian):
  magic "PSNW" | u32 version=1 | u32 tensor count
  per tensor: u32 name length | UTF-8 name | u8 dtype (0 = f32)
              | u8 rank | u32 dims[rank] | raw f32 data, row-major
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .params import ParamStore

MAGIC = b"PSNW"
VERSION = 1
_DTYPE_F32 = 0


class WeightsFormatError(Exception):
    pass


class BadMagicError(WeightsFormatError):
    pass


class VersionError(WeightsFormatError):
    pass


class TruncatedFileError(WeightsFormatError):
    pass


def save_weights(store: ParamStore, path) -> None:
    chunks = [MAGIC, struct.pack("<II", VERSION, len(store))]
    for name, tensor in store.items():
        data = np.ascontiguousarray(tensor, dtype="<f4")
        nb = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(nb)))
        chunks.append(nb)
        chunks.append(struct.pack("<BB", _DTYPE_F32, data.ndim))
        chunks.append(struct.pack(f"<{data.ndim}I", *data.shape))
        chunks.append(data.tobytes())
    Path(path).write_bytes(b"".join(chunks))


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise TruncatedFileError(
                f"weights file truncated at byte {self.pos} (needed {n} more)")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out


def load_weights(path) -> ParamStore:
    r = _Reader(Path(path).read_bytes())
    if r.take(4) != MAGIC:
        raise BadMagicError(f"not a PSNW weights file: {path}")
    version, count = struct.unpack("<II", r.take(8))
    if version != VERSION:
        raise VersionError(f"unsupported weights version {version}")
    store = ParamStore()
    for _ in range(count):
        (name_len,) = struct.unpack("<I", r.take(4))
        name = r.take(name_len).decode("utf-8")
        dtype_code, rank = struct.unpack("<BB", r.take(2))
        if dtype_code != _DTYPE_F32:
            raise WeightsFormatError(f"unknown dtype code {dtype_code} for {name}")
        dims = struct.unpack(f"<{rank}I", r.take(4 * rank))
        n_bytes = 4 * int(np.prod(dims, dtype=np.int64))
        data = np.frombuffer(r.take(n_bytes), dtype="<f4").reshape(dims).copy()
        if not np.all(np.isfinite(data)):
            raise WeightsFormatError(f"non-finite values in tensor {name}")
        store.add(name, data)
    return store
