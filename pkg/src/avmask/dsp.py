"""Short-time spectral analysis and synthesis.

Everything here is a pure function of its inputs and works in float64 /
complex128. Frames are rows: a spectrogram has shape ``(T, F)`` with
``F = fft_size // 2 + 1``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, EmptyWindow, InputTooShort, ShapeError

WINDOWS = ("hamming", "hann", "rect")


@dataclass(frozen=True)
class Waveform:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ShapeError(f"waveform must be 1-D, got shape {samples.shape}")
        if int(self.sample_rate) <= 0:
            raise ConfigError(f"sample_rate must be positive, got {self.sample_rate}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("waveform contains NaN or Inf")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self):
        return self.samples.shape[0]

    @property
    def duration(self):
        return len(self) / self.sample_rate


@dataclass(frozen=True)
class FrameSpec:
    """Framing parameters.

    The defaults reproduce the 1200-sample / 300-hop analysis with a
    1242-point FFT, which gives 622 frequency bins.
    """

    frame_len: int = 1200
    hop: int = 300
    window: str = "hamming"
    fft_size: int = 1242

    def __post_init__(self):
        if self.window not in WINDOWS:
            raise ConfigError(f"unknown window {self.window!r}; expected one of {WINDOWS}")
        if not 0 < self.hop <= self.frame_len <= self.fft_size:
            raise ConfigError(
                "need 0 < hop <= frame_len <= fft_size, got "
                f"hop={self.hop} frame_len={self.frame_len} fft_size={self.fft_size}"
            )
        if self.fft_size % 2:
            raise ConfigError(f"fft_size must be even, got {self.fft_size}")

    @property
    def bin_count(self):
        return self.fft_size // 2 + 1

    def n_frames(self, n_samples):
        if n_samples < self.frame_len:
            return 0
        return (n_samples - self.frame_len) // self.hop + 1

    def frame_rate(self, sample_rate):
        return sample_rate / self.hop


FULL_FRAME_SPEC = FrameSpec()
# 64-point analysis -> 33 bins; used by the desk-scale models.
DESK_FRAME_SPEC = FrameSpec(frame_len=64, hop=16, window="hamming", fft_size=64)


@dataclass(frozen=True)
class Spectrogram:
    data: np.ndarray
    spec: FrameSpec
    sample_rate: int

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.complex128)
        if data.ndim != 2 or data.shape[1] != self.spec.bin_count:
            raise ShapeError(
                f"spectrogram must be (T, {self.spec.bin_count}), got {data.shape}"
            )
        object.__setattr__(self, "data", data)

    @property
    def shape(self):
        return self.data.shape


@dataclass(frozen=True)
class PowerSpectrum:
    data: np.ndarray
    spec: FrameSpec = field(default=FULL_FRAME_SPEC)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise ShapeError(f"power spectrum must be 2-D, got shape {data.shape}")
        if np.any(data < 0) or not np.all(np.isfinite(data)):
            raise ValueError("power spectrum entries must be finite and non-negative")
        object.__setattr__(self, "data", data)

    @property
    def shape(self):
        return self.data.shape


def window_coeffs(kind, n):
    """Symmetric window of length ``n``.

    >>> window_coeffs("hamming", 3).round(2).tolist()
    [0.08, 1.0, 0.08]
    """
    if n < 1:
        raise EmptyWindow(f"window length must be >= 1, got {n}")
    if kind == "rect":
        return np.ones(n)
    if kind not in WINDOWS:
        raise ConfigError(f"unknown window {kind!r}")
    if n == 1:
        return np.ones(1)
    phase = 2.0 * np.pi * np.arange(n) / (n - 1)
    if kind == "hamming":
        return 0.54 - 0.46 * np.cos(phase)
    return 0.5 - 0.5 * np.cos(phase)


def frame_signal(w, spec):
    """Slice ``w`` into rows of ``spec.frame_len`` samples, dropping the tail."""
    n = len(w)
    if n < spec.frame_len:
        raise InputTooShort(
            f"signal has {n} samples but one frame needs {spec.frame_len}"
        )
    n_frames = spec.n_frames(n)
    idx = np.arange(spec.frame_len)[None, :] + spec.hop * np.arange(n_frames)[:, None]
    return w.samples[idx]


def stft(w, spec):
    frames = frame_signal(w, spec) * window_coeffs(spec.window, spec.frame_len)
    data = np.fft.rfft(frames, n=spec.fft_size, axis=1)
    return Spectrogram(data, spec, w.sample_rate)


def power_spectrum(s):
    data = s.data.real ** 2 + s.data.imag ** 2
    return PowerSpectrum(data, s.spec)


def apply_mask(s, m):
    """Scale every T-F unit of ``s`` by the matching mask entry, keeping phase."""
    mask = getattr(m, "data", m)
    mask = np.asarray(mask, dtype=np.float64)
    if mask.shape != s.shape:
        raise ShapeError(f"mask shape {mask.shape} != spectrogram shape {s.shape}")
    return Spectrogram(s.data * mask, s.spec, s.sample_rate)


def istft(s):
    """Weighted overlap-add inverse of :func:`stft`.

    Output length is ``(T - 1) * hop + frame_len``. Samples where the
    squared-window envelope is below 1e-10 are left undivided.
    """
    spec = s.spec
    n_frames = s.shape[0]
    frames = np.fft.irfft(s.data, n=spec.fft_size, axis=1)[:, : spec.frame_len]
    win = window_coeffs(spec.window, spec.frame_len)
    frames = frames * win

    length = (n_frames - 1) * spec.hop + spec.frame_len if n_frames else 0
    out = np.zeros(length)
    envelope = np.zeros(length)
    win_sq = win ** 2
    for t in range(n_frames):
        start = t * spec.hop
        out[start : start + spec.frame_len] += frames[t]
        envelope[start : start + spec.frame_len] += win_sq
    ok = envelope >= 1e-10
    out[ok] /= envelope[ok]
    if not np.all(np.isfinite(out)):
        raise ValueError("istft produced non-finite samples")
    return Waveform(out, s.sample_rate)
