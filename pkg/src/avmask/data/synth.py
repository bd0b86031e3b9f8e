"""Synthetic audio-visual corpus for desk-scale experiments.

Each utterance is a harmonic "voice" gated by a syllabic on/off envelope,
paired with a lip video whose mouth opening follows that envelope. Noise
is steep low-pass coloured noise, slowly amplitude modulated, plus bursts
of harmonic "hum" in the voice's own frequency range: from the audio alone
a hum burst resembles voicing, while the lips tell the two apart. Every
value is derived from ``(seed, utterance index)`` so regeneration is
byte-identical.
"""

import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from ..config import write_kv
from ..dsp import Waveform
from ..errors import ConfigError
from ..nn.rng import make_rng
from .manifest import ManifestRow, SplitSpec, format_snr, split, write_manifest
from .mixing import SNR_GRID, mix_at_snr
from .video import VideoSequence, save_video_tensor
from .wavio import save_wav

SPEECH_RMS = 0.03
NOISE_RMS = 0.1


@dataclass(frozen=True)
class SynthConfig:
    n_utts: int = 50
    utt_seconds: float = 1.0
    sample_rate: int = 4000
    seed: int = 0
    snr_grid: tuple = SNR_GRID
    video_h: int = 16
    video_w: int = 24
    video_fps: float = 25.0
    train_frac: float = 0.8
    val_frac: float = 0.1
    test_frac: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "snr_grid", tuple(float(s) for s in self.snr_grid))
        if self.n_utts < 1:
            raise ConfigError(f"n_utts must be >= 1, got {self.n_utts}")
        if self.utt_seconds <= 0 or self.sample_rate <= 0 or not self.snr_grid:
            raise ConfigError(f"invalid synthesis settings: {self}")

    @property
    def n_samples(self):
        return int(round(self.utt_seconds * self.sample_rate))

    @property
    def n_video_frames(self):
        return math.ceil(self.n_samples * self.video_fps / self.sample_rate)


def syllable_envelope(rng, n, sr):
    """Piecewise-constant syllable gains with 15 ms raised-cosine edges."""
    rate = rng.uniform(4.0, 8.0)
    period = sr / rate
    env = np.zeros(n)
    start = rng.uniform(0.0, 0.1) * sr
    while start < n:
        on = rng.uniform(0.45, 0.75) * period
        if rng.random() >= 0.2:
            a, b = int(start), min(n, int(start + on))
            env[a:b] = rng.uniform(0.5, 1.0)
        start += period * rng.uniform(0.85, 1.15)
    if not env.any():
        # short clips can draw only silent syllables; keep one voiced
        first = int(min(n - 1, rng.uniform(0.0, 0.1) * sr))
        env[first : first + max(1, int(0.6 * period))] = rng.uniform(0.5, 1.0)
    ramp = max(1, int(0.015 * sr))
    kernel = np.hanning(2 * ramp + 1)
    kernel /= kernel.sum()
    return np.convolve(env, kernel, mode="same")


def synth_speech(rng, n, sr):
    t = np.arange(n) / sr
    f0 = rng.uniform(195.0, 210.0)
    vib_rate, vib_phase = rng.uniform(2.0, 5.0), rng.uniform(0, 2 * np.pi)
    inst_f0 = f0 * (1.0 + 0.01 * np.sin(2 * np.pi * vib_rate * t + vib_phase))
    phase = 2 * np.pi * np.cumsum(inst_f0) / sr
    voiced = np.zeros(n)
    for h in range(1, int(rng.integers(2, 5)) + 1):
        voiced += rng.uniform(0.85, 1.0) / np.sqrt(h) * np.sin(h * phase + rng.uniform(0, 2 * np.pi))
    env = syllable_envelope(rng, n, sr)
    breath = np.diff(rng.standard_normal(n + 1))
    speech = env * (voiced + 0.01 * breath)
    scale = SPEECH_RMS / np.sqrt(np.mean(speech ** 2))
    return speech * scale, env


def _slow_modulation(rng, n, sr):
    rate = rng.uniform(1.0, 4.0)
    n_knots = int(np.ceil(n / sr * rate)) + 2
    knots = rng.uniform(-1.0, 1.0, size=n_knots)
    return np.interp(np.arange(n) / sr * rate, np.arange(n_knots), knots)


def lowpass_noise(rng, n, sr):
    """Second-order low-pass noise over a white floor, slowly amplitude modulated."""
    pole = rng.uniform(0.9, 0.97)
    colored = rng.standard_normal(n)
    for _ in range(2):
        colored = lfilter([1.0], [1.0, -pole], colored)
    colored /= colored.std()
    noise = colored + rng.uniform(0.1, 0.2) * rng.standard_normal(n)
    mod = _slow_modulation(rng, n, sr)
    noise *= 1.0 + rng.uniform(0.6, 0.95) * mod
    return noise / np.sqrt(np.mean(noise ** 2))


def hum_bursts(rng, n, sr):
    """Noise through narrow resonators at four harmonics of a voice-range
    fundamental, switched on in bursts of random level (-18..-6 dB)."""
    f0 = rng.uniform(195.0, 210.0)
    r = 0.995
    hum = np.zeros(n)
    for h in range(1, 5):
        w = 2 * np.pi * h * f0 / sr
        band = lfilter([1.0], [1.0, -2 * r * np.cos(w), r * r], rng.standard_normal(n))
        hum += band / band.std() / np.sqrt(h)
    hum /= hum.std()
    gate = np.zeros(n)
    period = sr / rng.uniform(2.0, 6.0)
    start = rng.uniform(0.0, 0.2) * sr
    while start < n:
        on = rng.uniform(0.3, 0.7) * period
        gate[int(start) : min(n, int(start + on))] = 10 ** (rng.uniform(-18.0, -6.0) / 20)
        start += period * rng.uniform(0.7, 1.3)
    kernel = np.hanning(2 * int(0.015 * sr) + 1)
    return np.convolve(gate, kernel / kernel.sum(), mode="same") * hum


def synth_noise(rng, n, sr):
    noise = lowpass_noise(rng, n, sr) + hum_bursts(rng, n, sr)
    return noise * (NOISE_RMS / np.sqrt(np.mean(noise ** 2)))


def synth_lips(rng, env, cfg):
    """Mouth ellipse whose vertical opening follows the mean envelope per frame."""
    H, W, sr = cfg.video_h, cfg.video_w, cfg.sample_rate
    n_frames = cfg.n_video_frames
    edges = np.minimum(np.round(np.arange(n_frames + 1) * sr / cfg.video_fps).astype(int), len(env))
    level = np.array([env[a:b].mean() if b > a else 0.0 for a, b in zip(edges[:-1], edges[1:])])
    aperture = 0.8 + (0.4 * H - 0.8) * level
    cy = H / 2 + rng.uniform(-1.0, 1.0)
    cx = W / 2 + rng.uniform(-1.5, 1.5)
    half_width = rng.uniform(0.3, 0.38) * W
    skin, mouth = rng.uniform(0.55, 0.8), rng.uniform(0.05, 0.2)
    yy, xx = np.mgrid[0:H, 0:W] + 0.5
    frames = np.empty((n_frames, H, W))
    for v in range(n_frames):
        r = np.sqrt(((yy - cy) / aperture[v]) ** 2 + ((xx - cx) / half_width) ** 2)
        inside = 1.0 / (1.0 + np.exp((r - 1.0) * 8.0))
        frames[v] = skin + (mouth - skin) * inside
    frames += 0.03 * rng.standard_normal(frames.shape)
    return VideoSequence(np.clip(frames, 0.0, 1.0), cfg.video_fps), aperture


def synth_utterance(cfg, index):
    """Clean speech, long noise, lip video and the aperture series for one utterance."""
    n, sr = cfg.n_samples, cfg.sample_rate
    speech, env = synth_speech(make_rng(cfg.seed, index, 0), n, sr)
    noise = synth_noise(make_rng(cfg.seed, index, 1), int(np.ceil(1.5 * n)), sr)
    video, aperture = synth_lips(make_rng(cfg.seed, index, 2), env, cfg)
    return Waveform(speech, sr), Waveform(noise, sr), video, aperture


def synth_toy_dataset(cfg, out_dir):
    """Write the corpus under ``out_dir`` and return its manifest rows."""
    root = Path(out_dir)
    for sub in ("clean", "noise", "mix", "video"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    rows = []
    for i in range(cfg.n_utts):
        utt = f"utt{i:04d}"
        clean, noise, video, _ = synth_utterance(cfg, i)
        clean_rel, video_rel = f"clean/{utt}.wav", f"video/{utt}.lipv"
        try:
            save_wav(root / clean_rel, clean)
            save_video_tensor(root / video_rel, video)
            for j, snr in enumerate(cfg.snr_grid):
                mix = mix_at_snr(clean, noise, snr, rng=make_rng(cfg.seed, i, 3, j))
                tag = f"{utt}_snr{format_snr(snr)}"
                noise_rel, mix_rel = f"noise/{tag}.wav", f"mix/{tag}.wav"
                save_wav(root / noise_rel, mix.noise_scaled)
                save_wav(root / mix_rel, mix.mixture)
                rows.append(ManifestRow(utt, clean_rel, noise_rel, mix_rel, video_rel, snr))
        except OSError as exc:
            raise OSError(f"writing utterance {utt} under {root}: {exc}") from exc
    spec = SplitSpec(cfg.train_frac, cfg.val_frac, cfg.test_frac, cfg.seed)
    train, val, test = split(rows, spec)
    order = {(r.utt_id, r.snr_db): r for r in train + val + test}
    rows = [order[(r.utt_id, r.snr_db)] for r in rows]
    write_manifest(root / "manifest.tsv", rows)
    write_kv(root / "synth.cfg", asdict(cfg))
    return rows
