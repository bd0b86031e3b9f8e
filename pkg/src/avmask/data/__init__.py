"""Ingestion, mixing, alignment, records and the synthetic corpus."""

from .manifest import ManifestRow, SplitSpec, read_manifest, split, write_manifest
from .mixing import SNR_GRID, MixtureTriple, measured_snr_db, mix_at_snr
from .records import (
    SampleRecord,
    UtteranceFeatures,
    assemble_records,
    audio_frame_rate,
    utterance_features,
)
from .synth import SynthConfig, synth_toy_dataset, synth_utterance
from .video import (
    VideoSequence,
    align_indices,
    align_video,
    load_video_tensor,
    save_video_tensor,
)
from .wavio import load_wav, save_wav

__all__ = [
    "SNR_GRID",
    "ManifestRow",
    "MixtureTriple",
    "SampleRecord",
    "SplitSpec",
    "SynthConfig",
    "UtteranceFeatures",
    "VideoSequence",
    "align_indices",
    "align_video",
    "assemble_records",
    "audio_frame_rate",
    "load_video_tensor",
    "load_wav",
    "measured_snr_db",
    "mix_at_snr",
    "read_manifest",
    "save_video_tensor",
    "save_wav",
    "split",
    "synth_toy_dataset",
    "synth_utterance",
    "utterance_features",
    "write_manifest",
]
