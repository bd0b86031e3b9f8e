"""Finite-difference checks of every layer and of a whole desk-scale model."""

from dataclasses import dataclass

import numpy as np

from . import models, nn
from .nn import layers

SIMPLE_TOL = 1e-6
RECURRENT_TOL = 1e-5
END_TO_END_TOL = 1e-4
# skip end-to-end entries whose gradient is at rounding level
END_TO_END_MIN_GRAD = 1e-7

COMPONENTS = ("dense", "relu", "sigmoid", "tanh", "conv2d", "maxpool2", "lstm", "bce", "end_to_end")


@dataclass
class CheckResult:
    component: str
    max_rel_error: float
    tolerance: float

    @property
    def passed(self):
        return self.max_rel_error < self.tolerance

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{self.component}\t{self.max_rel_error:.3e}\t{self.tolerance:.0e}\t{status}"


def _corrupted(backward, on):
    if not on:
        return backward

    def wrong(cache, dy):
        dx, grads = backward(cache, dy)
        return dx * 1.01, {k: g * 1.01 for k, g in grads.items()}

    return wrong


def _layer_check(forward, backward, inputs, param_names, rng, h=1e-5):
    """Check ``sum(R * forward(*inputs))`` w.r.t. every input array."""
    out, _ = forward(*inputs)
    R = rng.standard_normal(out.shape)

    def loss_and_grads():
        y, cache = forward(*inputs)
        dx, grads = backward(cache, R)
        return float(np.sum(R * y)), {"x": dx, **grads}

    params = dict(zip(["x", *param_names], inputs))
    return nn.grad_check(loss_and_grads, params, h=h)


def _setups(rng):
    x2 = rng.standard_normal((3, 5))
    xc = rng.standard_normal((2, 2, 6, 5))
    return {
        "dense": (layers.dense_forward, layers.dense_backward,
                  [x2, rng.standard_normal((5, 4)), rng.standard_normal(4)], ["W", "b"]),
        "relu": (layers.relu_forward, layers.relu_backward, [x2.copy()], []),
        "sigmoid": (layers.sigmoid_forward, layers.sigmoid_backward, [x2 * 3.0], []),
        "tanh": (layers.tanh_forward, layers.tanh_backward, [x2.copy()], []),
        "conv2d": (layers.conv2d_forward, layers.conv2d_backward,
                   [xc, rng.standard_normal((3, 2, 3, 3)), rng.standard_normal(3)], ["K", "b"]),
        "maxpool2": (layers.maxpool2_forward, layers.maxpool2_backward, [xc.copy()], []),
        "lstm": (layers.lstm_forward, layers.lstm_backward,
                 [rng.standard_normal((2, 4, 3)), 0.5 * rng.standard_normal((3, 16)),
                  0.5 * rng.standard_normal((4, 16)), 0.5 * rng.standard_normal(16)],
                 ["Wx", "Wh", "b"]),
    }


def _bce_check(rng, corrupt):
    pred = rng.uniform(0.05, 0.95, size=(3, 4))
    target = (rng.random((3, 4)) > 0.5).astype(float)

    def loss_and_grads():
        loss, g = layers.bce_loss(pred, target)
        return loss, {"pred": g * 1.01 if corrupt else g}

    return nn.grad_check(loss_and_grads, {"pred": pred})


def _end_to_end_check(rng, corrupt, variant="audio_visual"):
    cfg = models.ModelConfig.desk(variant, lstm_cells=6, fusion_hidden=8, conv_maps=(2, 3, 3, 4))
    model = models.build(cfg, nn.make_rng(0, 0xC4EC))
    # move off the initial point: zero biases put ReLU inputs exactly on the kink
    for p in model.params.values().values():
        p += 0.05 * rng.standard_normal(p.shape)
    B, T = 2, cfg.context_len
    audio = rng.exponential(size=(B, T, cfg.audio_bins))
    video = rng.random((B, T, 1, cfg.video_h, cfg.video_w))
    targets = (rng.random((B, cfg.audio_bins)) > 0.5).astype(float)

    def loss_and_grads():
        loss, grads = models.loss_and_grads(model, audio, video, targets)
        if corrupt:
            grads = {k: g * 1.01 for k, g in grads.items()}
        return loss, grads

    return nn.grad_check(loss_and_grads, model.params.values(), max_entries=6,
                         rng=rng, min_grad=END_TO_END_MIN_GRAD)


def run_gradcheck(seed=0, corrupt=None, components=COMPONENTS):
    """One :class:`CheckResult` per component; ``corrupt`` names a component to break."""
    if corrupt is not None and corrupt not in COMPONENTS:
        raise ValueError(f"unknown component {corrupt!r}; choose from {', '.join(COMPONENTS)}")
    results = []
    for name in components:
        rng = nn.make_rng(seed, 0x6C, COMPONENTS.index(name))
        if name == "bce":
            err, tol = _bce_check(rng, corrupt == name), SIMPLE_TOL
        elif name == "end_to_end":
            err, tol = _end_to_end_check(rng, corrupt == name), END_TO_END_TOL
        else:
            fwd, bwd, inputs, names = _setups(rng)[name]
            err = _layer_check(fwd, _corrupted(bwd, corrupt == name), inputs, names, rng)
            tol = RECURRENT_TOL if name == "lstm" else SIMPLE_TOL
        results.append(CheckResult(name, err, tol))
    return results
