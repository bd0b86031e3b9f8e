"""Audio-only, visual-only and audio-visual mask estimation networks.

The audio branch is two stacked LSTMs over the context window of power
spectrum frames; the visual branch is a per-frame CNN (four 3x3 conv + ReLU
+ 2x2 max-pool blocks) feeding one LSTM. The last time step of each branch
is concatenated (audio first) and mapped through a ReLU hidden layer to one
sigmoid output per frequency bin: the soft mask row for the newest frame.
"""

from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from . import nn
from .errors import ConfigError, ModalityError, ShapeError

VARIANTS = ("audio_only", "visual_only", "audio_visual")
LOG_FLOOR = 1e-12


@dataclass(frozen=True)
class ModelConfig:
    variant: str = "audio_visual"
    context_depth: int = 5
    audio_bins: int = 622
    lstm_cells: int = 1024
    conv_maps: tuple = (32, 64, 64, 128)
    fusion_hidden: int = 1024
    dropout_p: float = 0.2
    video_h: int = 50
    video_w: int = 92
    # audio feature conditioning: log power (or raw power) then (x - mean) / std
    log_power: bool = True
    feat_mean: float = 0.0
    feat_std: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "conv_maps", tuple(int(c) for c in self.conv_maps))
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if len(self.conv_maps) != 4:
            raise ConfigError(f"conv_maps needs 4 entries, got {len(self.conv_maps)}")
        dims = (self.context_depth + 1, self.audio_bins, self.lstm_cells,
                self.fusion_hidden, self.video_h, self.video_w) + self.conv_maps
        if min(dims) < 1 or self.context_depth < 0:
            raise ConfigError(f"all model dimensions must be >= 1: {self}")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ConfigError(f"dropout_p must lie in [0, 1), got {self.dropout_p}")
        if not self.feat_std > 0:
            raise ConfigError(f"feat_std must be positive, got {self.feat_std}")
        if self.uses_video and self.visual_grid() is None:
            raise ConfigError(
                f"video {self.video_h}x{self.video_w} is too small for four 2x2 poolings"
            )

    @property
    def uses_audio(self):
        return self.variant in ("audio_only", "audio_visual")

    @property
    def uses_video(self):
        return self.variant in ("visual_only", "audio_visual")

    @property
    def context_len(self):
        return self.context_depth + 1

    def visual_grid(self):
        """Spatial size after the four pooling stages, or None if it collapses."""
        h, w = self.video_h, self.video_w
        for _ in range(4):
            if h < 2 or w < 2:
                return None
            h, w = h // 2, w // 2
        return h, w

    @property
    def visual_flat(self):
        h, w = self.visual_grid()
        return h * w * self.conv_maps[-1]

    @property
    def fusion_width(self):
        return self.lstm_cells * (int(self.uses_audio) + int(self.uses_video))

    @classmethod
    def full(cls, variant="audio_visual"):
        return cls(variant=variant)

    @classmethod
    def desk(cls, variant="audio_visual", **overrides):
        base = cls(
            variant=variant, audio_bins=33, lstm_cells=32, conv_maps=(4, 8, 8, 16),
            fusion_hidden=32, dropout_p=0.2, video_h=16, video_w=24,
        )
        return replace(base, **overrides)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


class MaskModel:
    """A configured network plus its parameters."""

    def __init__(self, config, params):
        self.config = config
        self.params = params

    def __repr__(self):
        return f"MaskModel({self.config.variant}, {self.params.n_values()} weights)"


def _add_lstm(store, prefix, n_in, n_hidden, rng):
    s = 1.0 / np.sqrt(n_hidden)
    store.add(prefix + "Wx", rng.uniform(-s, s, size=(n_in, 4 * n_hidden)))
    store.add(prefix + "Wh", rng.uniform(-s, s, size=(n_hidden, 4 * n_hidden)))
    b = rng.uniform(-s, s, size=4 * n_hidden)
    b[n_hidden : 2 * n_hidden] += 1.0
    store.add(prefix + "b", b)


def _add_dense(store, prefix, n_in, n_out, rng):
    store.add(prefix + "W", nn.glorot_uniform(rng, (n_in, n_out), n_in, n_out))
    store.add(prefix + "b", np.zeros(n_out))


def build(config, rng):
    """Create a :class:`MaskModel` with freshly initialised parameters."""
    store = nn.ParamStore()
    H = config.lstm_cells
    if config.uses_audio:
        _add_lstm(store, "audio.lstm1.", config.audio_bins, H, rng)
        _add_lstm(store, "audio.lstm2.", H, H, rng)
    if config.uses_video:
        c_in = 1
        for k, c_out in enumerate(config.conv_maps, start=1):
            fan_in, fan_out = 9 * c_in, 9 * c_out
            store.add(f"visual.conv{k}.K", nn.glorot_uniform(rng, (c_out, c_in, 3, 3), fan_in, fan_out))
            store.add(f"visual.conv{k}.b", np.zeros(c_out))
            c_in = c_out
        _add_lstm(store, "visual.lstm.", config.visual_flat, H, rng)
    _add_dense(store, "head.dense1.", config.fusion_width, config.fusion_hidden, rng)
    _add_dense(store, "head.dense2.", config.fusion_hidden, config.audio_bins, rng)
    return MaskModel(config, store)


def audio_features(config, power):
    x = np.log(power + LOG_FLOOR) if config.log_power else power
    return (x - config.feat_mean) / config.feat_std


def _check_inputs(model, audio, video):
    cfg = model.config
    batch = None
    if cfg.uses_audio:
        if audio is None:
            raise ModalityError(f"{cfg.variant} model needs audio input")
        audio = np.asarray(audio, dtype=np.float64)
        if audio.shape[1:] != (cfg.context_len, cfg.audio_bins):
            raise ShapeError(
                f"audio batch must be [B, {cfg.context_len}, {cfg.audio_bins}], got {audio.shape}"
            )
        batch = audio.shape[0]
    if cfg.uses_video:
        if video is None:
            raise ModalityError(f"{cfg.variant} model needs video input")
        video = np.asarray(video, dtype=np.float64)
        if video.shape[1:] != (cfg.context_len, 1, cfg.video_h, cfg.video_w):
            raise ShapeError(
                f"video batch must be [B, {cfg.context_len}, 1, {cfg.video_h}, {cfg.video_w}], "
                f"got {video.shape}"
            )
        if batch is not None and video.shape[0] != batch:
            raise ShapeError(f"audio batch {batch} != video batch {video.shape[0]}")
    return audio, video


def _forward(model, audio, video, training, rng):
    cfg, P = model.config, model.params
    audio, video = _check_inputs(model, audio, video)
    if training and cfg.dropout_p > 0 and rng is None:
        raise ValueError("training-mode forward with dropout needs an rng")
    cache = {}
    feats = []
    p = cfg.dropout_p

    if cfg.uses_audio:
        x = audio_features(cfg, audio)
        h1, cache["a1"] = nn.lstm_forward(x, P["audio.lstm1.Wx"], P["audio.lstm1.Wh"], P["audio.lstm1.b"])
        h1, cache["a1_drop"] = nn.dropout_forward(h1, p, rng, training)
        h2, cache["a2"] = nn.lstm_forward(h1, P["audio.lstm2.Wx"], P["audio.lstm2.Wh"], P["audio.lstm2.b"])
        a_last, cache["a2_drop"] = nn.dropout_forward(h2[:, -1], p, rng, training)
        feats.append(a_last)

    if cfg.uses_video:
        B, T = video.shape[:2]
        # upsampled video repeats frames; run the CNN once per run of equal frames
        fresh = np.ones((B, T), dtype=bool)
        fresh[:, 1:] = np.any(video[:, 1:] != video[:, :-1], axis=(2, 3, 4))
        fresh = fresh.reshape(-1)
        starts = np.flatnonzero(fresh)
        cache["frame_runs"] = (starts, np.cumsum(fresh) - 1)
        z = video.reshape((B * T,) + video.shape[2:])[starts]
        for k in range(1, 5):
            z, cache[f"conv{k}"] = nn.conv2d_forward(z, P[f"visual.conv{k}.K"], P[f"visual.conv{k}.b"])
            z, cache[f"relu{k}"] = nn.relu_forward(z)
            z, cache[f"pool{k}"] = nn.maxpool2_forward(z)
        cache["pool_shape"] = z.shape
        z = z.reshape(len(starts), -1)[cache["frame_runs"][1]].reshape(B, T, -1)
        hv, cache["vl"] = nn.lstm_forward(z, P["visual.lstm.Wx"], P["visual.lstm.Wh"], P["visual.lstm.b"])
        v_last, cache["vl_drop"] = nn.dropout_forward(hv[:, -1], p, rng, training)
        feats.append(v_last)

    fused = feats[0] if len(feats) == 1 else np.concatenate(feats, axis=1)
    y, cache["d1"] = nn.dense_forward(fused, P["head.dense1.W"], P["head.dense1.b"])
    y, cache["r1"] = nn.relu_forward(y)
    y, cache["d2"] = nn.dense_forward(y, P["head.dense2.W"], P["head.dense2.b"])
    out, cache["s2"] = nn.sigmoid_forward(y)
    return out, cache


def _backward(model, cache, dout):
    """Gradients of every parameter given ``dout = dL/d(output)``."""
    cfg = model.config
    grads = {}

    def put(prefix, g):
        for k, v in g.items():
            grads[prefix + k] = v

    d, _ = nn.sigmoid_backward(cache["s2"], dout)
    d, g = nn.dense_backward(cache["d2"], d)
    put("head.dense2.", g)
    d, _ = nn.relu_backward(cache["r1"], d)
    dfused, g = nn.dense_backward(cache["d1"], d)
    put("head.dense1.", g)

    H = cfg.lstm_cells
    offset = 0
    if cfg.uses_audio:
        da_last, _ = nn.dropout_backward(cache["a2_drop"], dfused[:, offset : offset + H])
        offset += H
        x2 = cache["a2"][0]
        dh2 = np.zeros(x2.shape[:2] + (H,))
        dh2[:, -1] = da_last
        dh1, g = nn.lstm_backward(cache["a2"], dh2)
        put("audio.lstm2.", g)
        dh1, _ = nn.dropout_backward(cache["a1_drop"], dh1)
        _, g = nn.lstm_backward(cache["a1"], dh1)
        put("audio.lstm1.", g)

    if cfg.uses_video:
        dv_last, _ = nn.dropout_backward(cache["vl_drop"], dfused[:, offset : offset + H])
        z = cache["vl"][0]
        dhv = np.zeros(z.shape[:2] + (H,))
        dhv[:, -1] = dv_last
        dz, g = nn.lstm_backward(cache["vl"], dhv)
        put("visual.lstm.", g)
        starts, _ = cache["frame_runs"]
        dz = np.add.reduceat(dz.reshape(-1, dz.shape[-1]), starts, axis=0)
        dz = dz.reshape(cache["pool_shape"])
        for k in range(4, 0, -1):
            dz, _ = nn.maxpool2_backward(cache[f"pool{k}"], dz)
            dz, _ = nn.relu_backward(cache[f"relu{k}"], dz)
            dz, g = nn.conv2d_backward(cache[f"conv{k}"], dz)
            put(f"visual.conv{k}.", g)
    return grads


def forward(model, batch_audio=None, batch_video=None, training=False, rng=None):
    """Soft mask rows ``[B, audio_bins]`` for the newest frame of each context."""
    out, _ = _forward(model, batch_audio, batch_video, training, rng)
    return out


def loss_and_grads(model, batch_audio, batch_video, targets, training=False, rng=None):
    out, cache = _forward(model, batch_audio, batch_video, training, rng)
    loss, dout = nn.bce_loss(out, targets)
    return loss, _backward(model, cache, dout)


def train_step(model, batch_audio, batch_video, targets, rng=None, lr=1e-3,
               beta1=0.9, beta2=0.999, eps=1e-8):
    """One forward/backward pass and Adam update; returns the pre-update loss."""
    targets = np.asarray(targets, dtype=np.float64)
    loss, grads = loss_and_grads(model, batch_audio, batch_video, targets, training=True, rng=rng)
    store = model.params
    store.zero_grad()
    store.accumulate(grads)
    nn.adam_step(store, lr=lr, beta1=beta1, beta2=beta2, eps=eps)
    return loss
