import numpy as np
import pytest

from avmask import models, nn
from avmask.errors import ConfigError, ModalityError, ShapeError
from avmask.models import ModelConfig


def batch(cfg, B=3, seed=0):
    rng = np.random.default_rng(seed)
    audio = rng.exponential(size=(B, cfg.context_len, cfg.audio_bins)) if cfg.uses_audio else None
    video = rng.random((B, cfg.context_len, 1, cfg.video_h, cfg.video_w)) if cfg.uses_video else None
    return audio, video


def plain_visual_forward(model, video):
    P = model.params
    B, T = video.shape[:2]
    z = video.reshape(B * T, *video.shape[2:])
    for k in range(1, 5):
        z = nn.conv2d_forward(z, P[f"visual.conv{k}.K"], P[f"visual.conv{k}.b"])[0]
        z = nn.maxpool2_forward(np.maximum(z, 0.0))[0]
    hv = nn.lstm_forward(z.reshape(B, T, -1), P["visual.lstm.Wx"], P["visual.lstm.Wh"], P["visual.lstm.b"])[0]
    h = np.maximum(hv[:, -1] @ P["head.dense1.W"] + P["head.dense1.b"], 0.0)
    return nn.sigmoid(h @ P["head.dense2.W"] + P["head.dense2.b"])


def build(variant="audio_visual", seed=0, **kw):
    return models.build(ModelConfig.desk(variant, **kw), nn.make_rng(seed, 1))


class TestConfig:
    def test_full_scale_widths(self):
        cfg = ModelConfig.full()
        assert cfg.fusion_width == 2048
        assert cfg.audio_bins == 622
        assert cfg.visual_grid() == (3, 5)
        assert cfg.visual_flat == 3 * 5 * 128

    def test_desk_widths(self):
        cfg = ModelConfig.desk()
        assert cfg.fusion_width == 64
        assert cfg.visual_grid() == (1, 1)
        assert cfg.visual_flat == 16

    def test_single_branch_width(self):
        assert ModelConfig.desk("audio_only").fusion_width == 32

    @pytest.mark.parametrize("kw", [dict(variant="both"), dict(conv_maps=(4, 8, 8)),
                                    dict(dropout_p=1.0), dict(video_h=8)])
    def test_invalid(self, kw):
        with pytest.raises(ConfigError):
            ModelConfig.desk(**kw)


class TestBuild:
    def test_visual_only_has_no_audio_params(self):
        names = list(build("visual_only").params)
        assert not any(n.startswith("audio.") for n in names)
        assert "visual.conv1.K" in names

    def test_audio_only_has_no_visual_params(self):
        assert not any(n.startswith("visual.") for n in build("audio_only").params)

    def test_full_scale_shapes(self):
        cfg = ModelConfig.full()
        store = models.build(cfg, nn.make_rng(0)).params
        assert store["head.dense1.W"].shape == (2048, 1024)
        assert store["head.dense2.W"].shape == (1024, 622)
        assert store["audio.lstm1.Wx"].shape == (622, 4096)
        assert store["visual.lstm.Wx"].shape == (1920, 4096)
        assert store["visual.conv4.K"].shape == (128, 64, 3, 3)

    def test_forget_bias_and_init_ranges(self):
        P = build().params
        H = 32
        b = P["audio.lstm1.b"]
        assert np.all(b[H : 2 * H] > 1.0 - 1.0 / np.sqrt(H) - 1e-12)
        assert np.abs(P["audio.lstm1.Wh"]).max() <= 1.0 / np.sqrt(H)
        assert np.all(P["head.dense1.b"] == 0.0)

    def test_same_seed_same_weights(self):
        a, b = build(seed=3).params, build(seed=3).params
        for name in a:
            np.testing.assert_array_equal(a[name], b[name])


class TestForward:
    @pytest.mark.parametrize("variant", models.VARIANTS)
    def test_output_shape_and_range(self, variant):
        model = build(variant)
        out = models.forward(model, *batch(model.config))
        assert out.shape == (3, 33)
        assert np.all((out > 0) & (out < 1))

    def test_zero_params_give_half(self):
        model = build()
        for _, p in model.params.items():
            p.value[...] = 0.0
        np.testing.assert_array_equal(models.forward(model, *batch(model.config)), 0.5)

    def test_identical_samples_identical_rows(self):
        model = build()
        audio, video = batch(model.config, B=1)
        out = models.forward(model, np.repeat(audio, 4, 0), np.repeat(video, 4, 0))
        for row in out[1:]:
            np.testing.assert_array_equal(row, out[0])

    def test_batch_order_invariance(self):
        model = build()
        audio, video = batch(model.config, B=5)
        perm = np.array([3, 0, 4, 1, 2])
        a = models.forward(model, audio, video)
        b = models.forward(model, audio[perm], video[perm])
        np.testing.assert_allclose(a[perm], b, rtol=0, atol=1e-12)

    def test_repeated_frames_match_plain_forward(self):
        # upsampled video repeats frames; the shortcut must match a frame-by-frame pass
        model = build("visual_only", dropout_p=0.0)
        _, video = batch(model.config, B=2)
        video[:, 1] = video[:, 0]
        video[:, 3:] = video[:, 2:3]
        np.testing.assert_allclose(models.forward(model, None, video), plain_visual_forward(model, video),
                                   rtol=0, atol=1e-14)

    def test_repeated_frames_gradients(self):
        model = build("visual_only", lstm_cells=4, fusion_hidden=5, conv_maps=(2, 2, 3, 3))
        for _, p in model.params.items():
            p.value += 0.05 * np.random.default_rng(7).standard_normal(p.value.shape)
        _, video = batch(model.config, B=2)
        video[:, 2] = video[:, 1]
        targets = (np.random.default_rng(8).random((2, 33)) > 0.5).astype(float)
        err = nn.grad_check(lambda: models.loss_and_grads(model, None, video, targets),
                            model.params.values(), max_entries=5, rng=np.random.default_rng(9), min_grad=1e-7)
        assert err < 1e-4

    def test_variant_symmetry(self):
        av, ao = build("audio_visual", seed=5), build("audio_only", seed=6)
        for name in ao.params:
            if name.startswith("audio."):
                av.params[name][...] = ao.params[name]
        av.params["head.dense1.W"][:32] = ao.params["head.dense1.W"]
        av.params["head.dense1.W"][32:] = 0.0
        for name in ("head.dense1.b", "head.dense2.W", "head.dense2.b"):
            av.params[name][...] = ao.params[name]
        audio, video = batch(av.config)
        np.testing.assert_allclose(models.forward(av, audio, video), models.forward(ao, audio), rtol=0, atol=1e-15)

    def test_missing_modality(self):
        model = build()
        audio, _ = batch(model.config)
        with pytest.raises(ModalityError):
            models.forward(model, audio, None)

    def test_wrong_context_length(self):
        model = build("audio_only")
        with pytest.raises(ShapeError):
            models.forward(model, np.ones((2, 4, 33)))

    def test_dropout_changes_training_output_only(self):
        model = build()
        audio, video = batch(model.config)
        a = models.forward(model, audio, video, training=True, rng=nn.make_rng(1))
        b = models.forward(model, audio, video, training=True, rng=nn.make_rng(2))
        assert not np.array_equal(a, b)
        np.testing.assert_array_equal(models.forward(model, audio, video), models.forward(model, audio, video))


class TestTraining:
    def test_initial_loss_near_ln2(self):
        model = build()
        audio, video = batch(model.config, B=8)
        targets = (np.random.default_rng(1).random((8, 33)) > 0.5).astype(float)
        loss, _ = models.loss_and_grads(model, audio, video, targets)
        assert abs(loss - np.log(2)) < 0.1

    def test_lr_zero_changes_nothing(self):
        model = build()
        before = {k: v.copy() for k, v in model.params.values().items()}
        audio, video = batch(model.config)
        targets = np.ones((3, 33))
        losses = [models.train_step(model, audio, video, targets, rng=nn.make_rng(0), lr=0.0) for _ in range(3)]
        for k, v in model.params.values().items():
            np.testing.assert_array_equal(v, before[k])
        assert model.params.step == 3
        assert losses[0] == losses[1] == losses[2]

    def test_loss_decreases_on_fixed_batch(self):
        model = build(dropout_p=0.0)
        audio, video = batch(model.config, B=4, seed=2)
        targets = (np.random.default_rng(3).random((4, 33)) > 0.5).astype(float)
        losses = [models.train_step(model, audio, video, targets, lr=1e-3) for _ in range(50)]
        assert all(b < a for a, b in zip(losses, losses[1:]))

    def test_memorises_twenty_samples(self):
        model = build(seed=0)
        audio, video = batch(model.config, B=20, seed=4)
        targets = (np.random.default_rng(5).random((20, 33)) > 0.5).astype(float)
        rng = nn.make_rng(0, 3)
        acc = 0.0
        for step in range(500):
            models.train_step(model, audio, video, targets, rng=rng, lr=1e-2)
            if step % 50 == 49:
                acc = np.mean((models.forward(model, audio, video) > 0.5) == targets)
                if acc > 0.95:
                    break
        assert acc > 0.95
