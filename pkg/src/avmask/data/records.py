"""Aligned audio/video feature arrays and context-window records."""

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .. import dsp
from ..errors import AlignmentError
from ..maskcore import MaskCriterion, ideal_binary_mask
from .video import VideoSequence, align_video


@dataclass(frozen=True)
class SampleRecord:
    audio_ctx: np.ndarray  # T_ctx x F mixture power, frames k-depth .. k
    video_ctx: np.ndarray  # T_ctx x 1 x H x W
    target: np.ndarray  # F, IBM row of frame k
    meta: dict = field(default_factory=dict)


@dataclass
class UtteranceFeatures:
    """Per-frame arrays for one mixture, all with the same frame count T."""

    mix_power: np.ndarray  # T x F
    ibm: np.ndarray  # T x F, uint8
    video: np.ndarray | None  # T x H x W, aligned to the audio frame rate
    utt_id: str = ""
    snr_db: float = 0.0

    @property
    def n_frames(self):
        return self.mix_power.shape[0]


def audio_frame_rate(sample_rate, spec):
    return Fraction(int(sample_rate), spec.hop)


def utterance_features(mix, video, spec, criterion=MaskCriterion(), utt_id=""):
    """Spectra, IBM and rate-aligned video frames for one mixture.

    ``video`` may be None for audio-only use.
    """
    mix_power = dsp.power_spectrum(dsp.stft(mix.mixture, spec))
    clean_power = dsp.power_spectrum(dsp.stft(mix.clean, spec))
    noise_power = dsp.power_spectrum(dsp.stft(mix.noise_scaled, spec))
    ibm = ideal_binary_mask(clean_power, noise_power, criterion).data
    T = mix_power.shape[0]
    frames = None
    if video is not None:
        frames = aligned_frames(video, mix.mixture.sample_rate, spec, T)
    return UtteranceFeatures(mix_power.data, ibm, frames, utt_id, mix.snr_db)


def aligned_frames(video, sample_rate, spec, n_audio_frames):
    aligned = align_video(video, audio_frame_rate(sample_rate, spec))
    if len(aligned) < n_audio_frames:
        raise AlignmentError(
            f"video covers {len(aligned)} aligned frames but audio has {n_audio_frames}"
        )
    return aligned.frames[:n_audio_frames]


def assemble_records(mix, video, spec, criterion=MaskCriterion(), depth=5, stride=1, utt_id=""):
    """One record per frame ``k`` in ``[depth, T-1]`` (every ``stride``-th)."""
    if not isinstance(video, VideoSequence):
        raise TypeError("assemble_records needs a VideoSequence")
    feats = utterance_features(mix, video, spec, criterion, utt_id)
    records = []
    for k in range(depth, feats.n_frames, stride):
        lo = k - depth
        records.append(
            SampleRecord(
                audio_ctx=feats.mix_power[lo : k + 1],
                video_ctx=feats.video[lo : k + 1, None],
                target=feats.ibm[k],
                meta={"utt_id": utt_id, "frame": k, "snr_db": mix.snr_db},
            )
        )
    return records
