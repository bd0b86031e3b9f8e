import math

import numpy as np
import pytest

from avmask import evaluate
from avmask.errors import DegenerateSignal, ShapeError, UndefinedRate
from avmask.evaluate import UttMetrics


def loop_accuracy(est, ibm):
    hits = 0
    for a, b in zip(est.ravel(), ibm.ravel()):
        hits += int(bool(a) == bool(b))
    return hits / est.size


def loop_hit_fa(est, ibm):
    tp = fn = fp = tn = 0
    for a, b in zip(est.ravel(), ibm.ravel()):
        if b:
            tp, fn = tp + (a == 1), fn + (a == 0)
        else:
            fp, tn = fp + (a == 1), tn + (a == 0)
    return tp / (tp + fn), fp / (fp + tn)


def loop_si_sdr(est, ref):
    n = min(len(est), len(ref))
    dot = sum(float(est[i]) * float(ref[i]) for i in range(n))
    rr = sum(float(ref[i]) ** 2 for i in range(n))
    alpha = dot / rr
    t = [alpha * float(ref[i]) for i in range(n)]
    num = sum(v * v for v in t)
    den = sum((float(est[i]) - t[i]) ** 2 for i in range(n))
    return 10.0 * math.log10(num / den)


def loop_seg_snr(est, ref, sr, frame_ms=32.0, lo=-10.0, hi=35.0):
    frame = int(round(frame_ms * sr / 1000.0))
    vals = []
    for k in range(min(len(est), len(ref)) // frame):
        sig = err = 0.0
        for i in range(k * frame, (k + 1) * frame):
            sig += ref[i] ** 2
            err += (ref[i] - est[i]) ** 2
        if sig < 1e-10:
            continue
        vals.append(hi if err == 0 else min(hi, max(lo, 10.0 * math.log10(sig / err))))
    return sum(vals) / len(vals)


def random_masks(rng):
    shape = tuple(rng.integers(2, 12, size=2))
    est = (rng.random(shape) > rng.uniform(0.2, 0.8)).astype(np.uint8)
    ibm = (rng.random(shape) > rng.uniform(0.2, 0.8)).astype(np.uint8)
    ibm.flat[0], ibm.flat[1] = 1, 0
    return est, ibm


class TestMaskMetrics:
    def test_accuracy_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            est, ibm = random_masks(rng)
            assert abs(evaluate.tf_accuracy(est, ibm) - loop_accuracy(est, ibm)) <= 1e-12

    def test_hit_fa_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            est, ibm = random_masks(rng)
            got, want = evaluate.hit_fa(est, ibm), loop_hit_fa(est, ibm)
            assert abs(got[0] - want[0]) <= 1e-12 and abs(got[1] - want[1]) <= 1e-12

    def test_perfect_and_inverted(self):
        ibm = np.array([[1, 0], [0, 1]])
        assert evaluate.tf_accuracy(ibm, ibm) == 1.0
        assert evaluate.hit_fa(ibm, ibm) == (1.0, 0.0)
        assert evaluate.tf_accuracy(1 - ibm, ibm) == 0.0
        assert evaluate.hit_fa(1 - ibm, ibm) == (0.0, 1.0)

    def test_undefined_rates(self):
        with pytest.raises(UndefinedRate):
            evaluate.hit_fa(np.ones((2, 2)), np.zeros((2, 2)))
        acc, hit, fa = evaluate.mask_metrics(np.ones((2, 2)), np.ones((2, 2)))
        assert acc == 1.0 and hit == 1.0 and math.isnan(fa)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            evaluate.tf_accuracy(np.ones((2, 3)), np.ones((3, 2)))


class TestWaveformMetrics:
    def test_si_sdr_oracle(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            n = int(rng.integers(50, 400))
            ref = rng.standard_normal(n)
            est = rng.uniform(0.2, 3.0) * ref + rng.uniform(0.01, 2.0) * rng.standard_normal(n)
            est = np.concatenate([est, rng.standard_normal(int(rng.integers(0, 5)))])
            assert abs(evaluate.si_sdr(est, ref) - loop_si_sdr(est, ref)) <= 1e-12

    def test_seg_snr_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            sr = 1000
            n = int(rng.integers(100, 600))
            ref = rng.standard_normal(n)
            ref[: 32 * int(rng.integers(0, 3))] = 0.0
            ref[-5:] = 0.0
            est = ref + rng.uniform(1e-3, 3.0) * rng.standard_normal(n)
            assert abs(evaluate.seg_snr(est, ref, sr) - loop_seg_snr(est, ref, sr)) <= 1e-12

    def test_si_sdr_scale_invariance_and_cap(self):
        rng = np.random.default_rng(4)
        ref, noise = rng.standard_normal(300), rng.standard_normal(300)
        est = ref + 0.3 * noise
        assert evaluate.si_sdr(5.0 * est, ref) == pytest.approx(evaluate.si_sdr(est, ref), abs=1e-10)
        assert evaluate.si_sdr(2.0 * ref, ref) == evaluate.SI_SDR_CAP

    def test_seg_snr_clamps(self):
        ref = np.ones(64)
        assert evaluate.seg_snr(ref, ref, 1000) == 35.0
        assert evaluate.seg_snr(-10 * ref, ref, 1000) == -10.0

    def test_degenerate(self):
        with pytest.raises(DegenerateSignal):
            evaluate.si_sdr(np.ones(10), np.zeros(10))
        with pytest.raises(DegenerateSignal):
            evaluate.seg_snr(np.ones(64), np.zeros(64), 1000)


def utt(uid, snr, variant, n, acc, si=1.0):
    return UttMetrics(uid, snr, variant, n, acc, 0.5, 0.1, si, 2.0)


class TestAggregate:
    def test_frame_weighted_means(self):
        report = evaluate.aggregate([utt("a", -6, "av", 10, 1.0, si=4.0), utt("b", -6, "av", 30, 0.5, si=2.0)])
        row = report.row(-6, "av")
        assert row.tf_acc == pytest.approx((10 * 1.0 + 30 * 0.5) / 40, abs=1e-15)
        assert row.si_sdr == 3.0
        assert (row.n_frames, row.n_utts) == (40, 2)
        assert row.hit_fa == pytest.approx(0.4)

    def test_input_order_irrelevant(self):
        rng = np.random.default_rng(5)
        recs = [utt(f"u{i}", float(rng.choice([-12, 0])), str(rng.choice(["a", "av"])), int(rng.integers(1, 50)),
                    float(rng.random()), float(rng.normal())) for i in range(30)]
        a = evaluate.aggregate(recs).to_tsv()
        b = evaluate.aggregate(recs[::-1]).to_tsv()
        assert a == b

    def test_nan_rates_skipped(self):
        recs = [utt("a", 0, "v", 10, 1.0), UttMetrics("b", 0, "v", 10, 0.0, math.nan, math.nan)]
        row = evaluate.aggregate(recs).row(0, "v")
        assert row.hit == 0.5 and row.tf_acc == 0.5

    def test_tsv_layout(self):
        tsv = evaluate.aggregate([utt("a", 6, "av", 5, 0.75)], skipped=2).to_tsv()
        lines = tsv.splitlines()
        assert lines[0].split("\t") == list(evaluate.REPORT_COLUMNS)
        assert lines[1].split("\t")[:3] == ["6", "av", "0.750000"]
        assert lines[-1] == "# skipped\t2"
