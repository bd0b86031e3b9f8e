"""Tab-separated dataset manifests and utterance-level splitting."""

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ..errors import ConfigError, EmptyDataset
from ..nn.rng import make_rng

COLUMNS = ("utt_id", "clean", "noise", "mixture", "video", "snr_db", "split")
HEADER = "#" + "\t".join(COLUMNS)


@dataclass(frozen=True)
class ManifestRow:
    utt_id: str
    clean: str
    noise: str
    mixture: str
    video: str
    snr_db: float
    split: str = "-"

    def to_line(self):
        return "\t".join(
            [self.utt_id, self.clean, self.noise, self.mixture, self.video,
             format_snr(self.snr_db), self.split]
        )

    def resolve(self, root):
        """Absolute paths for the clean, noise, mixture and video files."""
        root = Path(root)
        return tuple(root / p if p else None for p in (self.clean, self.noise, self.mixture, self.video))


def format_snr(snr_db):
    return f"{float(snr_db):g}"


def write_manifest(path, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(HEADER + "\n")
        for row in rows:
            fh.write(row.to_line() + "\n")


def read_manifest(path):
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != len(COLUMNS):
                raise ValueError(f"{path}:{lineno}: expected {len(COLUMNS)} fields, got {len(parts)}")
            rows.append(ManifestRow(*parts[:5], snr_db=float(parts[5]), split=parts[6]))
    return rows


@dataclass(frozen=True)
class SplitSpec:
    train_frac: float = 0.8
    val_frac: float = 0.2
    test_frac: float = 0.0
    seed: int = 0

    def __post_init__(self):
        fracs = (self.train_frac, self.val_frac, self.test_frac)
        if any(not 0.0 <= f <= 1.0 for f in fracs) or abs(sum(fracs) - 1.0) > 1e-9:
            raise ConfigError(f"split fractions must lie in [0, 1] and sum to 1, got {fracs}")


def split(rows, spec):
    """Partition ``rows`` into (train, val, test) by utterance id.

    Utterances are shuffled with ``spec.seed``; all rows of one utterance
    (every SNR condition) land in the same partition.
    """
    if not rows:
        raise EmptyDataset("cannot split an empty manifest")
    utts = sorted({r.utt_id for r in rows})
    order = make_rng(spec.seed, 0x5B11).permutation(len(utts))
    n = len(utts)
    n_train = min(n, int(round(spec.train_frac * n)))
    n_val = min(n - n_train, int(round(spec.val_frac * n)))
    if spec.test_frac == 0.0:
        n_val = n - n_train
    tag = {}
    for rank, i in enumerate(order):
        tag[utts[i]] = "train" if rank < n_train else "val" if rank < n_train + n_val else "test"
    parts = {"train": [], "val": [], "test": []}
    for r in rows:
        parts[tag[r.utt_id]].append(replace(r, split=tag[r.utt_id]))
    return parts["train"], parts["val"], parts["test"]


def unique_utterances(rows):
    return len({r.utt_id for r in rows})


def snr_grid_of(rows):
    return sorted({r.snr_db for r in rows})


def select(rows, split_tag=None, snr_db=None):
    out = rows
    if split_tag is not None:
        out = [r for r in out if r.split == split_tag]
    if snr_db is not None:
        out = [r for r in out if np.isclose(r.snr_db, snr_db)]
    return out
