"""Mixing clean speech with noise at a prescribed global SNR."""

from dataclasses import dataclass, field

import numpy as np

from ..dsp import Waveform
from ..errors import DegenerateSignal, ShapeError

SNR_GRID = (-12.0, -6.0, 0.0, 6.0)


@dataclass(frozen=True)
class MixtureTriple:
    clean: Waveform
    noise_scaled: Waveform
    mixture: Waveform
    snr_db: float
    meta: dict = field(default_factory=dict)


def mean_power(x):
    return float(np.mean(np.square(x)))


def measured_snr_db(clean, noise):
    return 10.0 * np.log10(mean_power(clean.samples) / mean_power(noise.samples))


def mix_at_snr(clean, noise, snr_db, rng=None):
    """Scale a crop of ``noise`` so that clean-to-noise power equals ``snr_db``.

    The crop has the clean length and starts at a uniformly drawn offset when
    ``rng`` is given (offset 0 otherwise). Powers are mean squares over the
    clean extent. The mixture is not renormalised; ``meta["clipped"]`` flags
    samples beyond +-1.
    """
    if clean.sample_rate != noise.sample_rate:
        raise ShapeError(
            f"sample rates differ: clean {clean.sample_rate} Hz, noise {noise.sample_rate} Hz"
        )
    n = len(clean)
    if len(noise) < n:
        raise ShapeError(f"noise ({len(noise)} samples) is shorter than clean ({n} samples)")
    offset = 0
    if rng is not None and len(noise) > n:
        offset = int(rng.integers(0, len(noise) - n + 1))
    crop = noise.samples[offset : offset + n]
    p_clean, p_noise = mean_power(clean.samples), mean_power(crop)
    if p_clean == 0.0 or p_noise == 0.0:
        raise DegenerateSignal(
            f"cannot mix at a fixed SNR with zero power (clean {p_clean}, noise {p_noise})"
        )
    gain = np.sqrt(p_clean / (p_noise * 10.0 ** (snr_db / 10.0)))
    scaled = gain * crop
    mixture = clean.samples + scaled
    meta = {"offset": offset, "gain": float(gain), "clipped": bool(np.any(np.abs(mixture) > 1.0))}
    return MixtureTriple(
        clean,
        Waveform(scaled, clean.sample_rate),
        Waveform(mixture, clean.sample_rate),
        float(snr_db),
        meta,
    )
