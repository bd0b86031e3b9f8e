"""Lip-region video sequences: LIPV file format and frame-rate alignment."""

import struct
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..errors import BadVideoFile, DownsampleUnsupported, ShapeError

MAGIC = b"LIPV"
VERSION = 1
_HEADER = struct.Struct("<IIIIf")


@dataclass(frozen=True)
class VideoSequence:
    frames: np.ndarray  # T x H x W, grayscale in [0, 1]
    fps: float

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 3:
            raise ShapeError(f"video frames must be T x H x W, got shape {frames.shape}")
        if not float(self.fps) > 0:
            raise ValueError(f"fps must be positive, got {self.fps}")
        object.__setattr__(self, "frames", frames)

    def __len__(self):
        return self.frames.shape[0]


def as_rate(value):
    """Exact rational view of a frame rate given as int, float or Fraction."""
    if isinstance(value, Fraction):
        return value
    return Fraction(value).limit_denominator(1_000_000)


def align_indices(n_frames, fps, target_fps):
    """Source frame index for every output frame when resampling to ``target_fps``.

    Output frame ``j`` shows source frame ``floor(j * fps / target_fps)``.
    """
    src, dst = as_rate(fps), as_rate(target_fps)
    if dst < src:
        raise DownsampleUnsupported(f"cannot align {float(src)} fps video down to {float(dst)} fps")
    ratio = src / dst
    n_out = -((-n_frames * dst.numerator * src.denominator) // (dst.denominator * src.numerator))
    j = np.arange(n_out, dtype=np.int64)
    return (j * ratio.numerator) // ratio.denominator


def align_video(v, target_fps):
    """Upsample ``v`` to ``target_fps`` by nearest-previous frame repetition."""
    idx = align_indices(len(v), v.fps, target_fps)
    return VideoSequence(v.frames[idx], float(target_fps))


def save_video_tensor(path, v):
    T, H, W = v.frames.shape
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_HEADER.pack(VERSION, T, H, W, float(v.fps)))
        fh.write(np.ascontiguousarray(v.frames, dtype="<f4").tobytes())


def load_video_tensor(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != MAGIC:
        raise BadVideoFile(f"{path}: bad magic {raw[:4]!r}")
    if len(raw) < 4 + _HEADER.size:
        raise BadVideoFile(f"{path}: truncated header")
    version, T, H, W, fps = _HEADER.unpack_from(raw, 4)
    if version != VERSION:
        raise BadVideoFile(f"{path}: unsupported version {version}")
    payload = raw[4 + _HEADER.size :]
    if min(H, W) < 1 or len(payload) != 4 * T * H * W:
        raise BadVideoFile(
            f"{path}: header says {T}x{H}x{W} but payload has {len(payload)} bytes"
        )
    if not fps > 0:
        raise BadVideoFile(f"{path}: bad fps {fps}")
    frames = np.frombuffer(payload, dtype="<f4").reshape(T, H, W).astype(np.float64)
    return VideoSequence(frames, float(fps))
