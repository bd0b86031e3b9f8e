"""MFCK checkpoint files.

Layout (little-endian): magic ``MFCK``, u32 version, u32 entry count, then
per entry u16 name length, UTF-8 name, u8 rank, u32 dims, float64 values.
Every parameter ``name`` is followed by its Adam moments ``name.m`` and
``name.v``. A trailing u64 holds the optimizer step counter.
"""

import struct

import numpy as np

from ..errors import BadCheckpoint
from .params import ParamStore

MAGIC = b"MFCK"
VERSION = 1


def _write_entry(fh, name, arr):
    encoded = name.encode("utf-8")
    fh.write(struct.pack("<H", len(encoded)))
    fh.write(encoded)
    fh.write(struct.pack("<B", arr.ndim))
    fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
    fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def save_checkpoint(path, store):
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, 3 * len(store)))
        for name, p in store.items():
            _write_entry(fh, name, p.value)
            _write_entry(fh, name + ".m", p.m)
            _write_entry(fh, name + ".v", p.v)
        fh.write(struct.pack("<Q", store.step))


class _Reader:
    def __init__(self, raw, path):
        self.raw, self.pos, self.path = raw, 0, path

    def take(self, fmt):
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.raw):
            raise BadCheckpoint(f"{self.path}: truncated at byte {self.pos}")
        out = struct.unpack_from(fmt, self.raw, self.pos)
        self.pos += size
        return out

    def take_bytes(self, n):
        if self.pos + n > len(self.raw):
            raise BadCheckpoint(f"{self.path}: truncated at byte {self.pos}")
        out = self.raw[self.pos : self.pos + n]
        self.pos += n
        return out


def load_checkpoint(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != MAGIC:
        raise BadCheckpoint(f"{path}: bad magic {raw[:4]!r}")
    r = _Reader(raw, path)
    r.pos = 4
    version, count = r.take("<II")
    if version != VERSION:
        raise BadCheckpoint(f"{path}: unsupported version {version}")
    entries = {}
    order = []
    for _ in range(count):
        (name_len,) = r.take("<H")
        name = r.take_bytes(name_len).decode("utf-8")
        (rank,) = r.take("<B")
        dims = r.take(f"<{rank}I") if rank else ()
        n = int(np.prod(dims)) if rank else 1
        values = np.frombuffer(r.take_bytes(8 * n), dtype="<f8").reshape(dims)
        entries[name] = values.astype(np.float64)
        order.append(name)
    (step,) = r.take("<Q")
    if r.pos != len(raw):
        raise BadCheckpoint(f"{path}: {len(raw) - r.pos} trailing bytes")

    store = ParamStore()
    for name in order:
        if name.endswith(".m") or name.endswith(".v"):
            if name[:-2] in entries:
                continue
        store.add(name, entries[name])
        p = store.param(name)
        try:
            p.m[...] = entries[name + ".m"]
            p.v[...] = entries[name + ".v"]
        except KeyError as exc:
            raise BadCheckpoint(f"{path}: missing Adam state for {name}") from exc
    store.step = step
    return store
