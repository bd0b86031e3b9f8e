"""16-bit PCM mono WAV reading and writing."""

import wave

import numpy as np

from ..dsp import Waveform
from ..errors import UnsupportedWav

FULL_SCALE = 32767


def quantize(samples):
    """Clamp to [-1, 1] and round half away from zero onto the int16 grid."""
    x = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0) * FULL_SCALE
    return (np.sign(x) * np.floor(np.abs(x) + 0.5)).astype("<i2")


def save_wav(path, w):
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(2)
        fh.setframerate(w.sample_rate)
        fh.writeframes(quantize(w.samples).tobytes())


def load_wav(path):
    try:
        with wave.open(str(path), "rb") as fh:
            channels, width, rate, n_frames = (
                fh.getnchannels(), fh.getsampwidth(), fh.getframerate(), fh.getnframes()
            )
            if fh.getcomptype() != "NONE":
                raise UnsupportedWav(f"{path}: compressed WAV ({fh.getcomptype()}) is not supported")
            if channels != 1:
                raise UnsupportedWav(f"{path}: expected mono, got {channels} channels")
            if width != 2:
                raise UnsupportedWav(f"{path}: expected 16-bit PCM, got {8 * width}-bit samples")
            if rate <= 0:
                raise UnsupportedWav(f"{path}: bad sample rate {rate}")
            raw = fh.readframes(n_frames)
    except (wave.Error, EOFError, ValueError) as exc:
        if isinstance(exc, UnsupportedWav):
            raise
        raise UnsupportedWav(f"{path}: {exc}") from exc
    if len(raw) != 2 * n_frames:
        raise UnsupportedWav(
            f"{path}: header declares {n_frames} frames but data holds {len(raw) // 2}"
        )
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / FULL_SCALE
    return Waveform(samples, rate)
