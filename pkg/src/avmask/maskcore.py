"""Ideal binary mask, local SNR, thresholding and the TFMK mask file format."""

import struct
from dataclasses import dataclass

import numpy as np

from .errors import BadMaskFile, BadThreshold, ShapeError

EPS = 1e-12
MASK_MAGIC = b"TFMK"


@dataclass(frozen=True)
class MaskCriterion:
    lc_db: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.lc_db):
            raise ValueError(f"local criterion must be finite, got {self.lc_db}")


@dataclass(frozen=True)
class BinaryMask:
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 2:
            raise ShapeError(f"mask must be 2-D, got shape {data.shape}")
        if not np.all((data == 0) | (data == 1)):
            raise ValueError("binary mask entries must be 0 or 1")
        object.__setattr__(self, "data", data.astype(np.uint8))

    @property
    def shape(self):
        return self.data.shape


@dataclass(frozen=True)
class SoftMask:
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise ShapeError(f"mask must be 2-D, got shape {data.shape}")
        if not np.all(np.isfinite(data)) or np.any(data < 0) or np.any(data > 1):
            raise ValueError("soft mask entries must be finite and within [0, 1]")
        object.__setattr__(self, "data", data)

    @property
    def shape(self):
        return self.data.shape


def _power(x):
    return np.asarray(getattr(x, "data", x), dtype=np.float64)


def local_snr_db(speech, noise):
    s, n = _power(speech), _power(noise)
    if s.shape != n.shape:
        raise ShapeError(f"speech shape {s.shape} != noise shape {n.shape}")
    return 10.0 * np.log10((s + EPS) / (n + EPS))


def ideal_binary_mask(speech, noise, criterion=MaskCriterion()):
    """1 where the local SNR strictly exceeds ``criterion.lc_db``, else 0."""
    snr = local_snr_db(speech, noise)
    return BinaryMask((snr > criterion.lc_db).astype(np.uint8))


def threshold_mask(m, theta=0.5):
    if not 0.0 <= theta <= 1.0:
        raise BadThreshold(f"threshold must lie in [0, 1], got {theta}")
    data = np.asarray(getattr(m, "data", m), dtype=np.float64)
    return BinaryMask((data > theta).astype(np.uint8))


def save_mask(path, mask):
    """Write ``mask`` as TFMK: magic, u32 T, u32 F, u8 kind, float32 payload."""
    kind = 0 if isinstance(mask, BinaryMask) else 1
    data = np.ascontiguousarray(mask.data, dtype="<f4")
    n_rows, n_cols = data.shape
    with open(path, "wb") as fh:
        fh.write(MASK_MAGIC)
        fh.write(struct.pack("<IIB", n_rows, n_cols, kind))
        fh.write(data.tobytes())


def load_mask(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    header = len(MASK_MAGIC) + struct.calcsize("<IIB")
    if len(raw) < header or raw[:4] != MASK_MAGIC:
        raise BadMaskFile(f"{path}: not a TFMK mask file")
    n_rows, n_cols, kind = struct.unpack_from("<IIB", raw, 4)
    payload = raw[header:]
    if len(payload) != 4 * n_rows * n_cols or kind not in (0, 1):
        raise BadMaskFile(f"{path}: header ({n_rows}x{n_cols}, kind {kind}) does not match payload")
    data = np.frombuffer(payload, dtype="<f4").reshape(n_rows, n_cols).astype(np.float64)
    return BinaryMask(data) if kind == 0 else SoftMask(data)
