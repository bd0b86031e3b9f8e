"""Dataset loading, training loop, inference, enhancement and evaluation."""

import logging
import math
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import dsp, models
from .data.manifest import select
from .data.mixing import MixtureTriple
from .data.records import aligned_frames, utterance_features
from .data.video import load_video_tensor
from .data.wavio import load_wav
from .errors import AvmaskError, ShapeError
from .evaluate import UttMetrics, mask_metrics, seg_snr, si_sdr
from .maskcore import ideal_binary_mask, threshold_mask
from .nn.rng import make_rng

log = logging.getLogger(__name__)


class Diverged(AvmaskError, ArithmeticError):
    pass


def load_mixture(row, root):
    clean_p, noise_p, mix_p, _ = row.resolve(root)
    clean, noise, mixture = load_wav(clean_p), load_wav(noise_p), load_wav(mix_p)
    if not (len(clean) == len(noise) == len(mixture)):
        raise ShapeError(f"{row.utt_id}: clean/noise/mixture lengths differ")
    return MixtureTriple(clean, noise, mixture, row.snr_db)


def load_features(row, root, spec, criterion, with_video=True):
    mix = load_mixture(row, root)
    video = load_video_tensor(row.resolve(root)[3]) if with_video else None
    return utterance_features(mix, video, spec, criterion, utt_id=row.utt_id)


class ContextDataset:
    """Context windows over a list of :class:`UtteranceFeatures`.

    Item ``n`` is ``(utterance, frame k)``; its audio context is power rows
    ``k-depth .. k`` and its target is IBM row ``k``.
    """

    def __init__(self, feats, depth, stride=1):
        self.feats = feats
        self.depth = depth
        index = []
        for u, f in enumerate(feats):
            for k in range(depth, f.n_frames, stride):
                index.append((u, k))
        self.index = np.array(index, dtype=np.int64).reshape(-1, 2)

    def __len__(self):
        return len(self.index)

    def batch(self, items, with_audio=True, with_video=True):
        sel = self.index[items]
        offsets = np.arange(-self.depth, 1)
        audio = video = None
        if with_audio:
            audio = np.stack([self.feats[u].mix_power[k + offsets] for u, k in sel])
        if with_video:
            video = np.stack([self.feats[u].video[k + offsets] for u, k in sel])[:, :, None]
        targets = np.stack([self.feats[u].ibm[k] for u, k in sel]).astype(np.float64)
        return audio, video, targets

    def log_power_stats(self):
        """Mean and std of log power over every frame of every utterance."""
        frames = np.concatenate([f.mix_power for f in self.feats])
        x = np.log(frames + models.LOG_FLOOR)
        return float(x.mean()), float(x.std())


def load_split(rows, root, run_cfg, split_tag, stride=1):
    cfg = run_cfg.model
    chosen = select(rows, split_tag)
    feats = [load_features(r, root, run_cfg.frame, run_cfg.criterion, cfg.uses_video) for r in chosen]
    return ContextDataset(feats, cfg.context_depth, stride)


def predict_rows(model, dataset, batch_size=256):
    """Soft mask rows for every item of ``dataset`` (inference mode)."""
    cfg = model.config
    out = []
    for start in range(0, len(dataset), batch_size):
        items = np.arange(start, min(start + batch_size, len(dataset)))
        audio, video, _ = dataset.batch(items, cfg.uses_audio, cfg.uses_video)
        out.append(models.forward(model, audio, video, training=False))
    if not out:
        return np.zeros((0, cfg.audio_bins))
    return np.concatenate(out)


def validate(model, dataset, batch_size=256):
    """(mean BCE, T-F accuracy at 0.5) over ``dataset``."""
    from .nn.layers import bce_loss

    cfg = model.config
    total_loss, correct, cells = 0.0, 0, 0
    for start in range(0, len(dataset), batch_size):
        items = np.arange(start, min(start + batch_size, len(dataset)))
        audio, video, targets = dataset.batch(items, cfg.uses_audio, cfg.uses_video)
        pred = models.forward(model, audio, video, training=False)
        loss, _ = bce_loss(pred, targets)
        total_loss += loss * targets.size
        correct += int(np.count_nonzero((pred > 0.5) == (targets > 0.5)))
        cells += targets.size
    if cells == 0:
        return math.nan, math.nan
    return total_loss / cells, correct / cells


LOG_HEADER = "epoch\ttrain_loss\tval_loss\tval_tf_acc\tbest_val_loss"


def train(run_cfg, train_set, val_set, on_epoch=None, on_best=None):
    """Train a freshly built model; returns (best model, log lines).

    ``on_best(model)`` is called whenever validation loss improves (e.g. to
    save a checkpoint); an empty validation set falls back to the training
    loss. Raises :class:`Diverged` on a non-finite loss.
    """
    tc = run_cfg.train
    mean, std = train_set.log_power_stats()
    model_cfg = run_cfg.model
    if model_cfg.log_power:
        model_cfg = replace(model_cfg, feat_mean=mean, feat_std=max(std, 1e-6))
    model = models.build(model_cfg, make_rng(tc.seed, 1))
    lines = [LOG_HEADER]
    best = math.inf
    best_params = None
    use_a, use_v = model_cfg.uses_audio, model_cfg.uses_video
    for epoch in range(1, tc.epochs + 1):
        order = make_rng(tc.seed, 2, epoch).permutation(len(train_set))
        drop_rng = make_rng(tc.seed, 3, epoch)
        losses = []
        for start in range(0, len(order), tc.batch_size):
            items = order[start : start + tc.batch_size]
            audio, video, targets = train_set.batch(items, use_a, use_v)
            loss = models.train_step(model, audio, video, targets, rng=drop_rng, lr=tc.lr)
            if not math.isfinite(loss):
                raise Diverged(f"non-finite training loss at epoch {epoch}")
            losses.append(loss * len(items))
        train_loss = sum(losses) / max(1, len(order))
        val_loss, val_acc = validate(model, val_set)
        if not math.isfinite(val_loss) and len(val_set):
            raise Diverged(f"non-finite validation loss at epoch {epoch}")
        # without validation data, select on the training loss
        score = val_loss if len(val_set) else train_loss
        if score < best or best_params is None:
            best = score
            best_params = {k: (p.value.copy(), p.m.copy(), p.v.copy()) for k, p in model.params.items()}
            best_step = model.params.step
            if on_best is not None:
                on_best(model)
        line = f"{epoch}\t{train_loss:.6f}\t{val_loss:.6f}\t{val_acc:.6f}\t{best:.6f}"
        lines.append(line)
        log.info(line)
        if on_epoch is not None:
            on_epoch(line)
    if best_params is not None:
        for k, (v, m, s) in best_params.items():
            p = model.params.param(k)
            p.value[...], p.m[...], p.v[...] = v, m, s
        model.params.step = best_step
    return model, lines


# -- inference on whole utterances -------------------------------------------------

def soft_mask(model, mix_power, video_frames=None):
    """Full T x F soft mask; the first ``depth`` frames pass through (ones)."""
    cfg = model.config
    T = mix_power.shape[0]
    mask = np.ones((T, cfg.audio_bins))
    if T > cfg.context_depth:
        from .data.records import UtteranceFeatures

        feats = UtteranceFeatures(mix_power, np.zeros(mix_power.shape, np.uint8), video_frames)
        ds = ContextDataset([feats], cfg.context_depth)
        mask[cfg.context_depth :] = predict_rows(model, ds)
    return mask


def enhance(model, mixture, spec, video=None):
    """Masked resynthesis of ``mixture``; returns (enhanced Waveform, soft mask)."""
    spectrogram = dsp.stft(mixture, spec)
    power = dsp.power_spectrum(spectrogram).data
    frames = None
    if model.config.uses_video:
        frames = aligned_frames(video, mixture.sample_rate, spec, power.shape[0])
    mask = soft_mask(model, power, frames)
    return dsp.istft(dsp.apply_mask(spectrogram, mask)), mask


def enhance_with_mask(mixture, spec, mask):
    return dsp.istft(dsp.apply_mask(dsp.stft(mixture, spec), mask))


def _utt_metrics(row, variant, est_mask, ibm, depth, enhanced, clean, sr):
    acc, hit, fa = mask_metrics(est_mask[depth:], ibm[depth:])
    return UttMetrics(
        utt_id=row.utt_id, snr_db=row.snr_db, variant=variant,
        n_frames=ibm.shape[0] - depth, tf_acc=acc, hit=hit, fa=fa,
        si_sdr=si_sdr(enhanced, clean), seg_snr=seg_snr(enhanced, clean, sr),
    )


def evaluate_rows(model_list, rows, root, run_cfg, baselines=True):
    """Per-utterance metrics for each model plus the IBM and noisy baselines.

    Rows whose files are missing are skipped with a warning; returns
    ``(metrics, skipped_count)``.
    """
    spec, crit = run_cfg.frame, run_cfg.criterion
    depth = run_cfg.model.context_depth
    metrics, skipped = [], 0
    for row in rows:
        try:
            mix = load_mixture(row, root)
            video = None
            if any(m.config.uses_video for m in model_list):
                video = load_video_tensor(row.resolve(root)[3])
        except (OSError, AvmaskError) as exc:
            log.warning("skipping %s (snr %g): %s", row.utt_id, row.snr_db, exc)
            skipped += 1
            continue
        sr = mix.mixture.sample_rate
        clean_p = dsp.power_spectrum(dsp.stft(mix.clean, spec))
        noise_p = dsp.power_spectrum(dsp.stft(mix.noise_scaled, spec))
        ibm = ideal_binary_mask(clean_p, noise_p, crit).data
        for model in model_list:
            enhanced, soft = enhance(model, mix.mixture, spec, video)
            est = threshold_mask(soft, 0.5).data
            metrics.append(_utt_metrics(row, model.config.variant, est, ibm,
                                        model.config.context_depth, enhanced, mix.clean.samples, sr))
        if baselines:
            enhanced = enhance_with_mask(mix.mixture, spec, ibm)
            metrics.append(_utt_metrics(row, "ibm", ibm, ibm, depth, enhanced, mix.clean.samples, sr))
            ones = np.ones_like(ibm)
            metrics.append(_utt_metrics(row, "noisy", ones, ibm, depth, mix.mixture.samples,
                                        mix.clean.samples, sr))
    return metrics, skipped


def majority_baseline(dataset):
    """Accuracy of always predicting the most frequent target class."""
    ones = sum(int(f.ibm[dataset.depth :].sum()) for f in dataset.feats)
    cells = sum(f.ibm[dataset.depth :].size for f in dataset.feats)
    return max(ones, cells - ones) / cells if cells else math.nan


def resolve_root(manifest_path):
    return Path(manifest_path).resolve().parent


# -- checkpoints with their run configuration --------------------------------------

def sidecar_path(checkpoint):
    return Path(str(checkpoint) + ".cfg")


def save_model(path, model, run_cfg):
    """Write the parameters to ``path`` and the run config to ``path.cfg``."""
    from .nn.checkpoint import save_checkpoint

    save_checkpoint(path, model.params)
    replace(run_cfg, model=model.config).save(sidecar_path(path))


def load_model(path):
    """(MaskModel, RunConfig) from a checkpoint and its config sidecar."""
    from .config import RunConfig
    from .errors import BadCheckpoint
    from .nn.checkpoint import load_checkpoint

    side = sidecar_path(path)
    if not side.exists():
        raise BadCheckpoint(f"{path}: missing config sidecar {side}")
    run_cfg = RunConfig.load(side)
    store = load_checkpoint(path)
    expected = models.build(run_cfg.model, make_rng(0)).params
    for name in expected:
        if name not in store or store[name].shape != expected[name].shape:
            raise BadCheckpoint(f"{path}: parameter {name!r} missing or misshapen for {run_cfg.model.variant}")
    return models.MaskModel(run_cfg.model, store), run_cfg
