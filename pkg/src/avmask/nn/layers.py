"""Forward/backward pairs for every layer the mask networks use.

Each ``*_forward`` returns ``(output, cache)`` and the matching
``*_backward(cache, grad_out)`` returns ``(grad_in, param_grads)`` where
``param_grads`` is a dict keyed like the layer's parameters. Arrays are
float64 numpy arrays; batch is always the leading axis.
"""

import numpy as np

from ..errors import BadProbability, ShapeError


def sigmoid(x):
    """Logistic function, evaluated without overflow for large ``|x|``."""
    x = np.asarray(x, dtype=np.float64)
    z = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + z), z / (1.0 + z))


# -- dense -----------------------------------------------------------------

def dense_forward(x, W, b):
    if x.ndim != 2 or W.ndim != 2 or x.shape[1] != W.shape[0] or b.shape != (W.shape[1],):
        raise ShapeError(f"dense: x{x.shape} W{W.shape} b{b.shape} do not agree")
    return x @ W + b, (x, W)


def dense_backward(cache, dy):
    x, W = cache
    return dy @ W.T, {"W": x.T @ dy, "b": dy.sum(axis=0)}


# -- activations -------------------------------------------------------------

def relu_forward(x):
    y = np.maximum(x, 0.0)
    return y, x > 0


def relu_backward(cache, dy):
    return dy * cache, {}


def sigmoid_forward(x):
    y = sigmoid(x)
    return y, y


def sigmoid_backward(cache, dy):
    y = cache
    return dy * y * (1.0 - y), {}


def tanh_forward(x):
    y = np.tanh(x)
    return y, y


def tanh_backward(cache, dy):
    return dy * (1.0 - cache ** 2), {}


# -- conv2d (3x3, zero same-padding) -----------------------------------------

_OFFSETS = [(i, j) for i in range(3) for j in range(3)]


def conv2d_forward(x, K, b):
    """Cross-correlation with a 3x3 kernel and one pixel of zero padding."""
    if x.ndim != 4 or K.ndim != 4 or K.shape[2:] != (3, 3):
        raise ShapeError(f"conv2d expects x[B,C,H,W] and K[Co,C,3,3], got {x.shape}, {K.shape}")
    if x.shape[1] != K.shape[1] or b.shape != (K.shape[0],):
        raise ShapeError(f"conv2d channel mismatch: x{x.shape} K{K.shape} b{b.shape}")
    B, C, H, W = x.shape
    Co = K.shape[0]
    # im2col, channel-major: cols[offset, c, b, h, w]
    xp = np.zeros((C, B, H + 2, W + 2))
    xp[:, :, 1:-1, 1:-1] = x.transpose(1, 0, 2, 3)
    cols = np.empty((9, C, B, H, W))
    for n, (i, j) in enumerate(_OFFSETS):
        cols[n] = xp[:, :, i : i + H, j : j + W]
    cols = cols.reshape(9 * C, B * H * W)
    kmat = K.transpose(0, 2, 3, 1).reshape(Co, 9 * C)
    y = (kmat @ cols).reshape(Co, B, H, W) + b[:, None, None, None]
    return np.ascontiguousarray(y.transpose(1, 0, 2, 3)), (x.shape, cols, kmat, K.shape)


def conv2d_backward(cache, dy):
    (B, C, H, W), cols, kmat, kshape = cache
    Co = kshape[0]
    dy2 = dy.transpose(1, 0, 2, 3).reshape(Co, B * H * W)
    dK = (dy2 @ cols.T).reshape(Co, 3, 3, C).transpose(0, 3, 1, 2)
    db = dy2.sum(axis=1)
    dcols = (kmat.T @ dy2).reshape(9, C, B, H, W)
    dxp = np.zeros((C, B, H + 2, W + 2))
    for n, (i, j) in enumerate(_OFFSETS):
        dxp[:, :, i : i + H, j : j + W] += dcols[n]
    dx = dxp[:, :, 1:-1, 1:-1].transpose(1, 0, 2, 3)
    return np.ascontiguousarray(dx), {"K": np.ascontiguousarray(dK), "b": db}


# -- 2x2 max pooling ------------------------------------------------------------

def maxpool2_forward(x):
    """Non-overlapping 2x2 max; an odd trailing row or column is dropped."""
    B, C, H, W = x.shape
    if H < 2 or W < 2:
        raise ShapeError(f"maxpool2 needs H, W >= 2, got {H}x{W}")
    H2, W2 = H // 2, W // 2
    # window members in row-major order: (0,0), (0,1), (1,0), (1,1)
    parts = [x[:, :, a : 2 * H2 : 2, c : 2 * W2 : 2] for a in (0, 1) for c in (0, 1)]
    y = np.maximum(np.maximum(parts[0], parts[1]), np.maximum(parts[2], parts[3]))
    # first occurrence wins ties
    arg = np.full(y.shape, 3, dtype=np.int8)
    for n in (2, 1, 0):
        arg[parts[n] == y] = n
    return y, (x.shape, arg)


def maxpool2_backward(cache, dy):
    shape, arg = cache
    H2, W2 = arg.shape[2], arg.shape[3]
    dx = np.zeros(shape)
    n = 0
    for a in (0, 1):
        for c in (0, 1):
            dx[:, :, a : 2 * H2 : 2, c : 2 * W2 : 2] = np.where(arg == n, dy, 0.0)
            n += 1
    return dx, {}


# -- LSTM ------------------------------------------------------------------------

def lstm_forward(x, Wx, Wh, b):
    """Run an LSTM over ``x[B,T,In]`` from a zero state.

    Gate columns are ordered (input, forget, candidate, output). Returns
    the full hidden sequence ``[B,T,H]``; the last step is ``out[:, -1]``.
    """
    if x.ndim != 3 or x.shape[1] < 1:
        raise ShapeError(f"lstm expects x[B,T,In] with T >= 1, got {x.shape}")
    n_in, four_h = Wx.shape
    H = four_h // 4
    if x.shape[2] != n_in or Wh.shape != (H, 4 * H) or b.shape != (4 * H,) or four_h != 4 * H:
        raise ShapeError(f"lstm: x{x.shape} Wx{Wx.shape} Wh{Wh.shape} b{b.shape} do not agree")
    B, T, _ = x.shape
    hs = np.zeros((B, T, H))
    cs = np.zeros((B, T, H))
    gates = np.zeros((B, T, 4 * H))
    xw = x @ Wx + b
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    for t in range(T):
        a = xw[:, t] + h @ Wh
        g = np.empty_like(a)
        g[:, : 2 * H] = sigmoid(a[:, : 2 * H])
        g[:, 2 * H : 3 * H] = np.tanh(a[:, 2 * H : 3 * H])
        g[:, 3 * H :] = sigmoid(a[:, 3 * H :])
        c = g[:, H : 2 * H] * c + g[:, :H] * g[:, 2 * H : 3 * H]
        h = g[:, 3 * H :] * np.tanh(c)
        gates[:, t], cs[:, t], hs[:, t] = g, c, h
    return hs, (x, Wx, Wh, gates, cs, hs)


def lstm_backward(cache, dhs):
    x, Wx, Wh, gates, cs, hs = cache
    B, T, H = hs.shape
    dWx = np.zeros_like(Wx)
    dWh = np.zeros_like(Wh)
    db = np.zeros(4 * H)
    dx = np.zeros_like(x)
    dh_next = np.zeros((B, H))
    dc_next = np.zeros((B, H))
    for t in reversed(range(T)):
        g = gates[:, t]
        i, f, gg, o = g[:, :H], g[:, H : 2 * H], g[:, 2 * H : 3 * H], g[:, 3 * H :]
        c = cs[:, t]
        c_prev = cs[:, t - 1] if t > 0 else np.zeros((B, H))
        h_prev = hs[:, t - 1] if t > 0 else np.zeros((B, H))
        tc = np.tanh(c)
        dh = dhs[:, t] + dh_next
        dc = dc_next + dh * o * (1.0 - tc ** 2)
        da = np.empty((B, 4 * H))
        da[:, :H] = dc * gg * i * (1.0 - i)
        da[:, H : 2 * H] = dc * c_prev * f * (1.0 - f)
        da[:, 2 * H : 3 * H] = dc * i * (1.0 - gg ** 2)
        da[:, 3 * H :] = dh * tc * o * (1.0 - o)
        dWx += x[:, t].T @ da
        dWh += h_prev.T @ da
        db += da.sum(axis=0)
        dx[:, t] = da @ Wx.T
        dh_next = da @ Wh.T
        dc_next = dc * f
    return dx, {"Wx": dWx, "Wh": dWh, "b": db}


# -- dropout -----------------------------------------------------------------

def dropout_forward(x, p, rng, training):
    """Inverted dropout; identity when not training or ``p == 0``."""
    if not 0.0 <= p < 1.0:
        raise BadProbability(f"dropout probability must lie in [0, 1), got {p}")
    if not training or p == 0.0:
        return x, None
    keep = (rng.random(x.shape) >= p) / (1.0 - p)
    return x * keep, keep


def dropout_backward(cache, dy):
    return (dy if cache is None else dy * cache), {}


# -- loss --------------------------------------------------------------------

PROB_CLAMP = 1e-7


def bce_loss(pred, target):
    """Mean binary cross-entropy and its gradient with respect to ``pred``."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ShapeError(f"bce: pred {pred.shape} != target {target.shape}")
    p = np.clip(pred, PROB_CLAMP, 1.0 - PROB_CLAMP)
    n = p.size
    loss = -np.sum(target * np.log(p) + (1.0 - target) * np.log1p(-p)) / n
    grad = (p - target) / (p * (1.0 - p)) / n
    grad[(pred < PROB_CLAMP) | (pred > 1.0 - PROB_CLAMP)] = 0.0
    return float(loss), grad
