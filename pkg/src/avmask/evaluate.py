"""Mask classification and waveform quality metrics, and report aggregation."""

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSignal, ShapeError, UndefinedRate

SI_SDR_CAP = 100.0
REPORT_COLUMNS = (
    "snr_db", "variant", "tf_acc", "hit", "fa", "hit_fa", "si_sdr", "seg_snr", "n_frames", "n_utts",
)


def _masks(est, ibm):
    e = np.asarray(getattr(est, "data", est))
    i = np.asarray(getattr(ibm, "data", ibm))
    if e.shape != i.shape:
        raise ShapeError(f"estimate shape {e.shape} != reference shape {i.shape}")
    return e.astype(bool), i.astype(bool)


def confusion(est, ibm):
    """(TP, TN, FP, FN) counts of ``est`` against ``ibm``."""
    e, i = _masks(est, ibm)
    tp = int(np.count_nonzero(e & i))
    tn = int(np.count_nonzero(~e & ~i))
    fp = int(np.count_nonzero(e & ~i))
    fn = int(np.count_nonzero(~e & i))
    return tp, tn, fp, fn


def tf_accuracy(est, ibm):
    e, i = _masks(est, ibm)
    return float(np.count_nonzero(e == i)) / e.size


def hit_fa(est, ibm):
    """Hit rate over IBM ones and false-alarm rate over IBM zeros."""
    tp, tn, fp, fn = confusion(est, ibm)
    if tp + fn == 0:
        raise UndefinedRate("hit rate is undefined: reference mask has no 1 entries")
    if tn + fp == 0:
        raise UndefinedRate("false-alarm rate is undefined: reference mask has no 0 entries")
    return tp / (tp + fn), fp / (tn + fp)


def _samples(w):
    return np.asarray(getattr(w, "samples", w), dtype=np.float64)


def _cropped(est, ref):
    e, r = _samples(est), _samples(ref)
    n = min(len(e), len(r))
    return e[:n], r[:n]


def si_sdr(est, ref):
    """Scale-invariant SDR in dB, limited to +-100 dB."""
    e, r = _cropped(est, ref)
    ref_energy = float(np.dot(r, r))
    if ref_energy == 0.0:
        raise DegenerateSignal("SI-SDR needs a non-silent reference")
    alpha = float(np.dot(e, r)) / ref_energy
    target = alpha * r
    resid = e - target
    t_energy, n_energy = float(np.dot(target, target)), float(np.dot(resid, resid))
    if n_energy == 0.0:
        return SI_SDR_CAP
    if t_energy == 0.0:
        return -SI_SDR_CAP
    return float(np.clip(10.0 * np.log10(t_energy / n_energy), -SI_SDR_CAP, SI_SDR_CAP))


def seg_snr(est, ref, sample_rate, frame_ms=32.0, floor=-10.0, ceil=35.0):
    """Mean of per-frame SNRs clamped to ``[floor, ceil]`` over non-silent frames."""
    e, r = _cropped(est, ref)
    frame = max(1, int(round(frame_ms * sample_rate / 1000.0)))
    n_frames = len(r) // frame
    if n_frames == 0:
        raise DegenerateSignal("signal is shorter than one segmental-SNR frame")
    r = r[: n_frames * frame].reshape(n_frames, frame)
    e = e[: n_frames * frame].reshape(n_frames, frame)
    sig = np.sum(r * r, axis=1)
    err = np.sum((r - e) ** 2, axis=1)
    voiced = sig >= 1e-10
    if not np.any(voiced):
        raise DegenerateSignal("every segmental-SNR frame of the reference is silent")
    sig, err = sig[voiced], err[voiced]
    with np.errstate(divide="ignore"):
        snr = np.where(err > 0, 10.0 * np.log10(sig / np.where(err > 0, err, 1.0)), np.inf)
    return float(np.mean(np.clip(snr, floor, ceil)))


@dataclass
class UttMetrics:
    utt_id: str
    snr_db: float
    variant: str
    n_frames: int
    tf_acc: float
    hit: float = math.nan
    fa: float = math.nan
    si_sdr: float = math.nan
    seg_snr: float = math.nan


def mask_metrics(est, ibm):
    """Accuracy plus hit/fa rates (NaN where a rate is undefined)."""
    acc = tf_accuracy(est, ibm)
    try:
        hit, fa = hit_fa(est, ibm)
    except UndefinedRate:
        tp, tn, fp, fn = confusion(est, ibm)
        hit = tp / (tp + fn) if tp + fn else math.nan
        fa = fp / (tn + fp) if tn + fp else math.nan
    return acc, hit, fa


@dataclass
class ReportRow:
    snr_db: float
    variant: str
    tf_acc: float
    hit: float
    fa: float
    si_sdr: float
    seg_snr: float
    n_frames: int
    n_utts: int

    @property
    def hit_fa(self):
        return self.hit - self.fa


@dataclass
class EvalReport:
    rows: list = field(default_factory=list)
    skipped: int = 0

    def row(self, snr_db, variant):
        for r in self.rows:
            if r.variant == variant and np.isclose(r.snr_db, snr_db):
                return r
        raise KeyError((snr_db, variant))

    def to_tsv(self):
        lines = ["\t".join(REPORT_COLUMNS)]
        for r in self.rows:
            lines.append("\t".join([
                f"{r.snr_db:g}", r.variant,
                *(f"{v:.6f}" for v in (r.tf_acc, r.hit, r.fa, r.hit_fa, r.si_sdr, r.seg_snr)),
                str(r.n_frames), str(r.n_utts),
            ]))
        lines.append(f"# skipped\t{self.skipped}")
        return "\n".join(lines) + "\n"


def _weighted_mean(values, weights):
    pairs = [(v, w) for v, w in zip(values, weights) if not math.isnan(v)]
    total = sum(w for _, w in pairs)
    if not pairs or total == 0:
        return math.nan
    return sum(v * w for v, w in pairs) / total


def _mean(values):
    vals = [v for v in values if not math.isnan(v)]
    return sum(vals) / len(vals) if vals else math.nan


def aggregate(records, skipped=0):
    """Group per-utterance metrics by (snr, variant).

    Mask metrics are frame-weighted means; waveform metrics are plain
    utterance means. Rows are sorted by SNR then variant name.
    """
    groups = defaultdict(list)
    for rec in records:
        groups[(float(rec.snr_db), rec.variant)].append(rec)
    rows = []
    for (snr, variant) in sorted(groups):
        # fixed order keeps the float sums independent of input order
        recs = sorted(groups[(snr, variant)], key=lambda r: r.utt_id)
        w = [r.n_frames for r in recs]
        rows.append(ReportRow(
            snr_db=snr,
            variant=variant,
            tf_acc=_weighted_mean([r.tf_acc for r in recs], w),
            hit=_weighted_mean([r.hit for r in recs], w),
            fa=_weighted_mean([r.fa for r in recs], w),
            si_sdr=_mean([r.si_sdr for r in recs]),
            seg_snr=_mean([r.seg_snr for r in recs]),
            n_frames=sum(w),
            n_utts=len(recs),
        ))
    return EvalReport(rows, skipped)
