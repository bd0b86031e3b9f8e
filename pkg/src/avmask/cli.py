"""Command-line entry point: ``avmask <command> [options]``.

Exit codes: 0 success, 1 failed check, 2 usage or input error, 3 diverged.
"""

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import dsp, pipeline
from .checks import COMPONENTS, run_gradcheck
from .config import read_kv, resolve
from .data import SynthConfig, mix_at_snr, read_manifest, synth_toy_dataset
from .data.manifest import select
from .data.video import load_video_tensor
from .data.wavio import load_wav, save_wav
from .errors import AvmaskError
from .evaluate import aggregate, si_sdr
from .maskcore import MaskCriterion, ideal_binary_mask, save_mask
from .models import VARIANTS
from .nn.rng import make_rng

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_DIVERGED = 0, 1, 2, 3

log = logging.getLogger("avmask")


class UsageError(Exception):
    pass


def _snr_list(text):
    try:
        return tuple(float(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _existing(path):
    p = Path(path)
    if not p.exists():
        raise UsageError(f"no such file: {p}")
    return p


def _parent_ready(path):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return Path(path)


# -- synth ------------------------------------------------------------------------

def cmd_synth(args):
    values = read_kv(args.config) if args.config else {}
    base = SynthConfig()
    fields = {
        "n_utts": args.utts, "seed": args.seed, "snr_grid": args.snr,
        "utt_seconds": args.seconds, "sample_rate": args.sample_rate,
    }
    merged = {}
    for key, default in vars(base).items():
        raw = fields.get(key)
        if raw is None and key in values:
            raw = values[key]
            if isinstance(default, tuple):
                raw = _snr_list(raw)
            else:
                raw = type(default)(raw)
        if raw is not None:
            merged[key] = raw
    cfg = replace(base, **merged)
    out = Path(args.out or "synth_data")
    rows = synth_toy_dataset(cfg, out)
    print(f"wrote {len(rows)} mixtures of {cfg.n_utts} utterances to {out}")
    return EXIT_OK


# -- mix --------------------------------------------------------------------------

def cmd_mix(args):
    clean, noise = load_wav(_existing(args.clean)), load_wav(_existing(args.noise))
    rng = make_rng(args.seed if args.seed is not None else 0, 3)
    mix = mix_at_snr(clean, noise, args.snr, rng=rng)
    out = _parent_ready(args.out or "mixture.wav")
    save_wav(out, mix.mixture)
    noise_out = out.with_name(out.stem + "_noise" + out.suffix)
    save_wav(noise_out, mix.noise_scaled)
    flag = " (clipped)" if mix.meta["clipped"] else ""
    print(f"mixed at {args.snr:g} dB, gain {mix.meta['gain']:.6g}, offset {mix.meta['offset']}{flag}")
    print(f"wrote {out} and {noise_out}")
    return EXIT_OK


# -- ibm --------------------------------------------------------------------------

def _frame_spec(args):
    return resolve(args.config).frame


def cmd_ibm(args):
    clean, noise = load_wav(_existing(args.clean)), load_wav(_existing(args.noise))
    if len(clean) != len(noise) or clean.sample_rate != noise.sample_rate:
        raise UsageError(
            f"clean ({len(clean)} samples @ {clean.sample_rate} Hz) and noise "
            f"({len(noise)} samples @ {noise.sample_rate} Hz) must be parallel"
        )
    spec = _frame_spec(args)
    S = dsp.power_spectrum(dsp.stft(clean, spec))
    N = dsp.power_spectrum(dsp.stft(noise, spec))
    mask = ideal_binary_mask(S, N, MaskCriterion(args.lc))
    out = _parent_ready(args.out or "mask.tfmk")
    save_mask(out, mask)
    print(f"wrote {mask.data.shape[0]}x{mask.data.shape[1]} mask to {out} "
          f"({mask.data.mean():.4f} ones)")
    return EXIT_OK


# -- train ------------------------------------------------------------------------

def _train_overrides(args):
    return {
        "variant": args.variant, "epochs": args.epochs, "batch_size": args.batch_size,
        "lr": args.lr, "seed": args.seed, "record_stride": args.record_stride,
        "lc_db": args.lc,
    }


def cmd_train(args):
    manifest = _existing(args.data if args.data.endswith(".tsv") else Path(args.data) / "manifest.tsv")
    run_cfg = resolve(args.config, _train_overrides(args))
    rows = read_manifest(manifest)
    root = pipeline.resolve_root(manifest)
    train_set = pipeline.load_split(rows, root, run_cfg, "train", run_cfg.train.record_stride)
    val_set = pipeline.load_split(rows, root, run_cfg, "val", run_cfg.train.val_stride)
    if len(train_set) == 0:
        raise UsageError(f"{manifest}: no training records")
    out = Path(args.out or "run")
    out.mkdir(parents=True, exist_ok=True)
    run_cfg.save(out / "run.cfg")
    ckpt = out / "model.mfck"
    print(pipeline.LOG_HEADER)

    def on_best(model):
        pipeline.save_model(ckpt, model, run_cfg)

    model, lines = pipeline.train(run_cfg, train_set, val_set, on_epoch=print, on_best=on_best)
    pipeline.save_model(ckpt, model, run_cfg)
    (out / "train.log").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"# checkpoint {ckpt}")
    return EXIT_OK


# -- enhance ----------------------------------------------------------------------

def cmd_enhance(args):
    mixture = load_wav(_existing(args.mixture))
    if args.oracle_ibm:
        clean_p, noise_p = args.oracle_ibm
        clean, noise = load_wav(_existing(clean_p)), load_wav(_existing(noise_p))
        if not (len(clean) == len(noise) == len(mixture)):
            raise UsageError("oracle clean/noise must be parallel to the mixture")
        run_cfg = resolve(args.config)
        spec = run_cfg.frame
        S = dsp.power_spectrum(dsp.stft(clean, spec))
        N = dsp.power_spectrum(dsp.stft(noise, spec))
        mask = ideal_binary_mask(S, N, run_cfg.criterion).data
        enhanced = pipeline.enhance_with_mask(mixture, spec, mask)
    else:
        if not args.checkpoint:
            raise UsageError("enhance needs --checkpoint or --oracle-ibm")
        model, run_cfg = pipeline.load_model(_existing(args.checkpoint))
        video = None
        if model.config.uses_video:
            if not args.video:
                raise UsageError(f"the {model.config.variant} checkpoint needs --video")
            video = load_video_tensor(_existing(args.video))
        enhanced, _ = pipeline.enhance(model, mixture, run_cfg.frame, video)
    out = _parent_ready(args.out or "enhanced.wav")
    save_wav(out, enhanced)
    print(f"wrote {len(enhanced)} samples to {out}")
    if args.ref:
        ref = load_wav(_existing(args.ref))
        print(f"si_sdr_mixture\t{si_sdr(mixture, ref):.6f}")
        print(f"si_sdr_enhanced\t{si_sdr(enhanced, ref):.6f}")
    return EXIT_OK


# -- eval -------------------------------------------------------------------------

PER_UTT_COLUMNS = ("utt_id", "snr_db", "variant", "n_frames", "tf_acc", "hit", "fa", "si_sdr", "seg_snr")


def per_utt_tsv(metrics):
    lines = ["\t".join(PER_UTT_COLUMNS)]
    for m in metrics:
        lines.append("\t".join([
            m.utt_id, f"{m.snr_db:g}", m.variant, str(m.n_frames),
            *(f"{v:.6f}" for v in (m.tf_acc, m.hit, m.fa, m.si_sdr, m.seg_snr)),
        ]))
    return "\n".join(lines) + "\n"


def cmd_eval(args):
    manifest = _existing(args.manifest)
    rows = read_manifest(manifest)
    if args.split != "all":
        rows = select(rows, args.split)
    if not rows:
        raise UsageError(f"{manifest}: no rows in split {args.split!r}")
    loaded = [pipeline.load_model(_existing(p)) for p in args.checkpoint or []]
    model_list = [m for m, _ in loaded]
    run_cfg = loaded[0][1] if loaded else resolve(args.config)
    for _, cfg in loaded[1:]:
        if cfg.frame != run_cfg.frame:
            raise UsageError("all checkpoints must share one frame spec")
    metrics, skipped = pipeline.evaluate_rows(model_list, rows, pipeline.resolve_root(manifest), run_cfg)
    report = aggregate(metrics, skipped)
    text = report.to_tsv()
    out = _parent_ready(args.out or "report.tsv")
    out.write_text(text, encoding="utf-8")
    out.with_name(out.stem + "_utts.tsv").write_text(per_utt_tsv(metrics), encoding="utf-8")
    run_cfg.save(out.with_name(out.stem + "_run.cfg"))
    sys.stdout.write(text)
    if skipped:
        log.warning("%d manifest rows skipped", skipped)
    return EXIT_OK


# -- gradcheck --------------------------------------------------------------------

def cmd_gradcheck(args):
    if args.scale != "desk":
        raise UsageError("only --scale desk is supported")
    seed = args.seed if args.seed is not None else 0
    results = run_gradcheck(seed=seed, corrupt=args.corrupt)
    lines = ["component\tmax_rel_error\ttolerance\tstatus"] + [r.line() for r in results]
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.out:
        _parent_ready(args.out).write_text(text, encoding="utf-8")
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK


# -- parser -----------------------------------------------------------------------

def build_parser():
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="flat 'key = value' config file")
    shared.add_argument("--seed", type=int, help="random seed (unsigned 64-bit)")
    shared.add_argument("--out", help="output path")
    shared.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="avmask", description="Audio-visual binary-mask speech enhancement.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[shared], help="write a synthetic audio-visual dataset")
    p.add_argument("--utts", type=_positive_int)
    p.add_argument("--snr", type=_snr_list, help="comma-separated SNR grid in dB")
    p.add_argument("--seconds", type=float)
    p.add_argument("--sample-rate", type=_positive_int)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("mix", parents=[shared], help="mix clean speech with noise at an SNR")
    p.add_argument("clean")
    p.add_argument("noise")
    p.add_argument("--snr", type=float, required=True)
    p.set_defaults(func=cmd_mix)

    p = sub.add_parser("ibm", parents=[shared], help="ideal binary mask from parallel clean and noise")
    p.add_argument("clean")
    p.add_argument("noise")
    p.add_argument("--lc", type=float, default=0.0, help="local criterion in dB")
    p.set_defaults(func=cmd_ibm)

    p = sub.add_parser("train", parents=[shared], help="train a mask estimation model")
    p.add_argument("data", help="dataset directory or manifest.tsv")
    p.add_argument("--variant", choices=VARIANTS)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=_positive_int)
    p.add_argument("--lr", type=float)
    p.add_argument("--record-stride", type=_positive_int)
    p.add_argument("--lc", type=float)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("enhance", parents=[shared], help="mask and resynthesise a mixture")
    p.add_argument("mixture")
    p.add_argument("--checkpoint")
    p.add_argument("--video")
    p.add_argument("--oracle-ibm", nargs=2, metavar=("CLEAN", "NOISE"))
    p.add_argument("--ref", help="clean reference; prints SI-SDR before and after")
    p.set_defaults(func=cmd_enhance)

    p = sub.add_parser("eval", parents=[shared], help="evaluate checkpoints against IBM and noisy baselines")
    p.add_argument("manifest")
    p.add_argument("--checkpoint", action="append", help="may be repeated")
    p.add_argument("--split", default="test", help="train, val, test or all")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", parents=[shared], help="finite-difference gradient checks")
    p.add_argument("--scale", default="desk")
    p.add_argument("--corrupt", choices=COMPONENTS, help="deliberately break one component")
    p.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except pipeline.Diverged as exc:
        print(f"avmask: diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (UsageError, AvmaskError, OSError, ValueError) as exc:
        print(f"avmask {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
