import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from avmask import dsp
from avmask.dsp import FrameSpec, Waveform
from avmask.errors import ConfigError, EmptyWindow, InputTooShort, ShapeError


def wave(x, sr=16000):
    return Waveform(np.asarray(x, dtype=float), sr)


class TestFrameSpec:
    def test_full_scale_defaults_give_622_bins(self):
        assert dsp.FULL_FRAME_SPEC.bin_count == 622
        assert (dsp.FULL_FRAME_SPEC.frame_len, dsp.FULL_FRAME_SPEC.hop) == (1200, 300)

    def test_desk_bins(self):
        assert dsp.DESK_FRAME_SPEC.bin_count == 33

    @pytest.mark.parametrize(
        "kwargs",
        [dict(hop=0), dict(hop=1300), dict(fft_size=1000), dict(fft_size=1243), dict(window="kaiser")],
    )
    def test_rejects_bad_specs(self, kwargs):
        with pytest.raises(ConfigError):
            FrameSpec(**kwargs)

    def test_waveform_rejects_nan(self):
        with pytest.raises(ValueError):
            wave([0.0, np.nan])


class TestFraming:
    def test_exact_tiling(self):
        x = np.arange(12.0)
        frames = dsp.frame_signal(wave(x), FrameSpec(4, 4, "rect", 4))
        assert frames.shape == (3, 4)
        np.testing.assert_array_equal(frames[0], x[0:4])
        np.testing.assert_array_equal(frames[2], x[8:12])

    def test_one_second_full_scale_framing(self):
        # floor((16000 - 1200) / 300) + 1
        frames = dsp.frame_signal(wave(np.zeros(16000)), FrameSpec(1200, 300, "hamming", 1242))
        assert frames.shape == (50, 1200)

    def test_tail_dropped(self):
        frames = dsp.frame_signal(wave(np.arange(10.0)), FrameSpec(4, 3, "rect", 4))
        assert frames.shape == (3, 4)
        assert frames[-1, -1] == 9.0

    def test_too_short(self):
        with pytest.raises(InputTooShort):
            dsp.frame_signal(wave(np.zeros(5)), FrameSpec(8, 2, "rect", 8))


class TestWindows:
    def test_hamming_3(self):
        np.testing.assert_allclose(dsp.window_coeffs("hamming", 3), [0.08, 1.0, 0.08], atol=1e-15)

    def test_rect(self):
        np.testing.assert_array_equal(dsp.window_coeffs("rect", 4), np.ones(4))

    def test_hann_5(self):
        np.testing.assert_allclose(dsp.window_coeffs("hann", 5), [0, 0.5, 1.0, 0.5, 0], atol=1e-15)

    def test_symmetric(self):
        for kind in ("hann", "hamming"):
            w = dsp.window_coeffs(kind, 37)
            np.testing.assert_allclose(w, w[::-1], atol=1e-15)

    def test_empty(self):
        with pytest.raises(EmptyWindow):
            dsp.window_coeffs("hann", 0)


class TestStft:
    def test_dc_signal(self):
        s = dsp.stft(wave(np.ones(8)), FrameSpec(8, 8, "rect", 8))
        np.testing.assert_allclose(s.data[:, 0], 8.0)
        np.testing.assert_allclose(s.data[:, 1:], 0.0, atol=1e-12)

    def test_cosine_at_bin_two(self):
        k = np.arange(8)
        s = dsp.stft(wave(np.cos(2 * np.pi * 2 * k / 8)), FrameSpec(8, 8, "rect", 8))
        mags = np.abs(s.data[0])
        assert mags[2] == pytest.approx(4.0, abs=1e-12)
        np.testing.assert_allclose(np.delete(mags, 2), 0.0, atol=1e-12)

    def test_silence(self):
        s = dsp.stft(wave(np.zeros(100)), FrameSpec(16, 4, "hann", 16))
        assert not np.any(s.data)

    def test_matches_naive_dft(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal(40)
        spec = FrameSpec(10, 5, "hamming", 12)
        s = dsp.stft(wave(x), spec)
        win = dsp.window_coeffs("hamming", 10)
        for t in range(s.shape[0]):
            frame = np.zeros(12)
            frame[:10] = x[t * 5 : t * 5 + 10] * win
            naive = [sum(frame[n] * np.exp(-2j * np.pi * f * n / 12) for n in range(12)) for f in range(7)]
            np.testing.assert_allclose(s.data[t], naive, atol=1e-12)

    def test_linearity(self):
        rng = np.random.default_rng(4)
        x, y = rng.standard_normal(500), rng.standard_normal(500)
        spec = dsp.DESK_FRAME_SPEC
        lhs = dsp.stft(wave(2.5 * x - 0.7 * y), spec).data
        rhs = 2.5 * dsp.stft(wave(x), spec).data - 0.7 * dsp.stft(wave(y), spec).data
        assert np.max(np.abs(lhs - rhs)) < 1e-10

    def test_parseval(self):
        rng = np.random.default_rng(5)
        spec = FrameSpec(60, 15, "hann", 64)
        x = rng.standard_normal(400)
        power = dsp.power_spectrum(dsp.stft(wave(x), spec)).data
        frames = dsp.frame_signal(wave(x), spec) * dsp.window_coeffs("hann", 60)
        folded = power[:, 0] + 2 * power[:, 1:-1].sum(axis=1) + power[:, -1]
        np.testing.assert_allclose(folded / spec.fft_size, (frames ** 2).sum(axis=1), rtol=1e-6)


class TestPowerAndMask:
    def spec_from(self, data, fft_size=4):
        return dsp.Spectrogram(np.asarray(data, dtype=complex), FrameSpec(fft_size, fft_size, "rect", fft_size), 8000)

    def test_power_of_3_4i(self):
        s = self.spec_from([[3 + 4j, 0, 0]])
        assert dsp.power_spectrum(s).data[0, 0] == 25.0

    def test_power_brute_force(self):
        rng = np.random.default_rng(6)
        data = rng.standard_normal((5, 3)) + 1j * rng.standard_normal((5, 3))
        power = dsp.power_spectrum(self.spec_from(data)).data
        for t in range(5):
            for f in range(3):
                z = data[t, f]
                assert power[t, f] == pytest.approx(z.real * z.real + z.imag * z.imag, rel=1e-15)

    def test_zero_power(self):
        assert not np.any(dsp.power_spectrum(self.spec_from(np.zeros((2, 3)))).data)

    def test_mask_identity_and_zero(self):
        rng = np.random.default_rng(7)
        s = self.spec_from(rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3)))
        np.testing.assert_array_equal(dsp.apply_mask(s, np.ones((4, 3))).data, s.data)
        assert not np.any(dsp.apply_mask(s, np.zeros((4, 3))).data)

    def test_mask_half(self):
        s = self.spec_from([[2 + 2j, 0, 0]])
        out = dsp.apply_mask(s, np.array([[0.5, 1.0, 1.0]]))
        assert out.data[0, 0] == 1 + 1j

    def test_mask_shape_error(self):
        with pytest.raises(ShapeError):
            dsp.apply_mask(self.spec_from(np.zeros((2, 3))), np.ones((3, 3)))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_mask_is_contractive(self, seed):
        rng = np.random.default_rng(seed)
        s = self.spec_from(rng.standard_normal((6, 3)) + 1j * rng.standard_normal((6, 3)))
        m = rng.uniform(0, 1, size=(6, 3))
        assert np.all(np.abs(dsp.apply_mask(s, m).data) <= np.abs(s.data))


class TestIstft:
    @pytest.mark.parametrize("window", ["hann", "hamming"])
    @pytest.mark.parametrize("frame_len", [64, 256])
    def test_round_trip_interior(self, window, frame_len):
        rng = np.random.default_rng(8)
        spec = FrameSpec(frame_len, frame_len // 4, window, frame_len)
        x = rng.standard_normal(frame_len * 10)
        y = dsp.istft(dsp.stft(wave(x), spec)).samples
        interior = slice(frame_len, len(y) - frame_len)
        assert np.max(np.abs(y[interior] - x[interior])) < 1e-8

    def test_output_length(self):
        spec = FrameSpec(64, 16, "hann", 64)
        s = dsp.stft(wave(np.zeros(1000)), spec)
        assert len(dsp.istft(s)) == (s.shape[0] - 1) * 16 + 64

    def test_single_rect_frame_is_inverse_fft(self):
        rng = np.random.default_rng(9)
        data = rng.standard_normal((1, 5)) + 1j * rng.standard_normal((1, 5))
        data[0, 0] = data[0, 0].real
        data[0, -1] = data[0, -1].real
        s = dsp.Spectrogram(data, FrameSpec(8, 8, "rect", 8), 8000)
        np.testing.assert_allclose(dsp.istft(s).samples, np.fft.irfft(data[0], n=8), atol=1e-14)

    def test_identity_mask_round_trip(self):
        rng = np.random.default_rng(10)
        s = dsp.stft(wave(rng.standard_normal(2000)), dsp.DESK_FRAME_SPEC)
        a = dsp.istft(dsp.apply_mask(s, np.ones(s.shape))).samples
        b = dsp.istft(s).samples
        np.testing.assert_array_equal(a, b)

    def test_zero_padded_fft(self):
        rng = np.random.default_rng(11)
        spec = FrameSpec(1200, 300, "hamming", 1242)
        x = rng.standard_normal(16000)
        y = dsp.istft(dsp.stft(wave(x), spec)).samples
        assert np.max(np.abs(y[1200:-1200] - x[1200 : len(y) - 1200])) < 1e-8
