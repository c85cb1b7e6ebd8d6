"""Forward and backward primitives for the landmark classifier networks.

Every operation is a pure function over numpy arrays and preserves the
dtype it is given (the production path runs float32; gradient checks run
the same code in float64). The probability head is the one exception:
``softmax`` always computes and returns float64 so that returned
probabilities sum to 1 at 1e-9 precision.

Sequence tensors are channel-first, ``(channels, length)``, optionally
with a leading batch axis.
"""

from __future__ import annotations

from typing import Literal, Optional, Tuple

import numpy as np

Mode = Literal["train", "infer"]

_LOG_CLAMP = 1e-12


def require_finite(label: str, x: np.ndarray) -> None:
    """Reject arrays containing NaN/Inf, naming the first bad flat index."""
    if not np.isfinite(x).all():
        bad = int(np.flatnonzero(~np.isfinite(np.ravel(x)))[0])
        raise ValueError(f"{label}: non-finite value at flat index {bad}")


def _as_batched(x: np.ndarray, rank: int) -> Tuple[np.ndarray, bool]:
    """Promote a single sample to a batch of one. Returns (array, had_batch)."""
    x = np.asarray(x)
    if x.ndim == rank:
        return x[None, ...], False
    if x.ndim == rank + 1:
        return x, True
    raise ValueError(f"expected a rank-{rank} sample or rank-{rank + 1} batch, got shape {x.shape}")


def leaky_relu(x: np.ndarray, alpha: float) -> np.ndarray:
    """y = x if x > 0 else alpha * x, elementwise."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"leaky_relu alpha must be in (0, 1), got {alpha}")
    x = np.asarray(x)
    require_finite("leaky_relu input", x)
    return np.where(x > 0, x, x * alpha)


def leaky_relu_backward(x: np.ndarray, grad: np.ndarray, alpha: float) -> np.ndarray:
    slope = np.where(x > 0, x.dtype.type(1.0), x.dtype.type(alpha))
    return grad * slope


def conv1d_forward(
    x: np.ndarray,
    weight: np.ndarray,
    bias: np.ndarray,
    stride: int = 1,
    padding: int = 0,
) -> np.ndarray:
    """Cross-correlation over the length axis.

    x: (C_in, L) or (B, C_in, L); weight: (C_out, C_in, K); bias: (C_out,).
    Output length is floor((L + 2*padding - K) / stride) + 1.
    """
    x3, batched = _as_batched(x, 2)
    out_ch, in_ch, kernel = weight.shape
    if x3.shape[1] != in_ch:
        raise ValueError(
            f"conv1d: input has {x3.shape[1]} channels but weight {weight.shape} expects {in_ch}"
        )
    length = x3.shape[2]
    if length + 2 * padding < kernel:
        raise ValueError(
            f"conv1d: padded length {length + 2 * padding} shorter than kernel {kernel}"
        )
    if padding:
        x3 = np.pad(x3, ((0, 0), (0, 0), (padding, padding)))
    win = np.lib.stride_tricks.sliding_window_view(x3, kernel, axis=2)[:, :, ::stride, :]
    b, _, t, _ = win.shape
    cols = win.transpose(0, 2, 1, 3).reshape(b * t, in_ch * kernel)
    y = cols @ weight.reshape(out_ch, in_ch * kernel).T + bias
    y = y.reshape(b, t, out_ch).transpose(0, 2, 1)
    return y if batched else y[0]


def conv1d_backward(
    x: np.ndarray,
    weight: np.ndarray,
    grad: np.ndarray,
    stride: int = 1,
    padding: int = 0,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of conv1d_forward. Returns (d_input, d_weight, d_bias)."""
    x3, batched = _as_batched(x, 2)
    g3, _ = _as_batched(grad, 2)
    out_ch, in_ch, kernel = weight.shape
    b, _, t = g3.shape
    padded_len = x3.shape[2] + 2 * padding

    xp = np.pad(x3, ((0, 0), (0, 0), (padding, padding))) if padding else x3
    win = np.lib.stride_tricks.sliding_window_view(xp, kernel, axis=2)[:, :, ::stride, :]
    cols = win.transpose(0, 2, 1, 3).reshape(b * t, in_ch * kernel)
    g2 = g3.transpose(0, 2, 1).reshape(b * t, out_ch)
    d_weight = (g2.T @ cols).reshape(out_ch, in_ch, kernel)
    d_bias = g3.sum(axis=(0, 2))

    # d_input: dilate the output grad by the stride, then full-correlate
    # with the kernel flipped along its tap axis.
    dilated_len = (t - 1) * stride + 1
    gd = np.zeros((b, out_ch, dilated_len), dtype=g3.dtype)
    gd[:, :, ::stride] = g3
    gdp = np.pad(gd, ((0, 0), (0, 0), (kernel - 1, kernel - 1)))
    gwin = np.lib.stride_tricks.sliding_window_view(gdp, kernel, axis=2)
    u = gwin.shape[2]  # == dilated_len + kernel - 1
    gcols = gwin.transpose(0, 2, 1, 3).reshape(b * u, out_ch * kernel)
    wflip = weight[:, :, ::-1].transpose(1, 0, 2).reshape(in_ch, out_ch * kernel)
    dxp_head = (gcols @ wflip.T).reshape(b, u, in_ch).transpose(0, 2, 1)
    dxp = np.zeros((b, in_ch, padded_len), dtype=g3.dtype)
    dxp[:, :, :u] = dxp_head
    d_input = dxp[:, :, padding:padded_len - padding] if padding else dxp
    if not batched:
        d_input = d_input[0]
    return d_input, d_weight, d_bias


def dense_forward(x: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """y = W x + b. x: (n,) or (B, n); weight: (m, n); bias: (m,)."""
    x = np.asarray(x)
    if x.shape[-1] != weight.shape[1]:
        raise ValueError(
            f"dense: expected {weight.shape[1]} input features, got {x.shape[-1]}"
        )
    return x @ weight.T + bias


def dense_backward(
    x: np.ndarray, weight: np.ndarray, grad: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    x2, batched = _as_batched(x, 1)
    g2, _ = _as_batched(grad, 1)
    d_weight = g2.T @ x2
    d_bias = g2.sum(axis=0)
    d_input = grad @ weight
    return d_input, d_weight, d_bias


def maxpool1d_forward(
    x: np.ndarray, window: int, stride: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Max over sliding windows; ties go to the lowest index.

    Returns (pooled, argmax) where argmax holds absolute positions along
    the input length axis, saved for the backward pass.
    """
    x3, batched = _as_batched(x, 2)
    length = x3.shape[2]
    if window > length:
        raise ValueError(f"maxpool1d: window {window} exceeds input length {length}")
    win = np.lib.stride_tricks.sliding_window_view(x3, window, axis=2)[:, :, ::stride, :]
    rel = win.argmax(axis=3)
    y = np.take_along_axis(win, rel[..., None], axis=3)[..., 0]
    t = win.shape[2]
    idx = rel + stride * np.arange(t, dtype=rel.dtype)[None, None, :]
    if not batched:
        return y[0], idx[0]
    return y, idx


def maxpool1d_backward(
    input_shape: Tuple[int, ...], argmax: np.ndarray, grad: np.ndarray
) -> np.ndarray:
    """Route pooled gradients back to the recorded argmax positions."""
    g3, batched = _as_batched(grad, 2)
    i3, _ = _as_batched(argmax, 2)
    b, c, _ = g3.shape
    dx = np.zeros((b, c, input_shape[-1]), dtype=g3.dtype)
    bi = np.arange(b)[:, None, None]
    ci = np.arange(c)[None, :, None]
    np.add.at(dx, (bi, ci, i3), g3)
    return dx if batched else dx[0]


def dropout_apply(
    x: np.ndarray,
    rate: float,
    mode: Mode,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Inverted dropout. Identity in infer mode.

    In train mode each element is zeroed with probability ``rate`` and
    survivors are scaled by 1/(1-rate); the boolean mask is returned for
    the backward pass.
    """
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    x = np.asarray(x)
    if mode == "infer":
        return x, None
    if mode != "train":
        raise ValueError(f"dropout mode must be 'train' or 'infer', got {mode!r}")
    if rng is None:
        raise ValueError("train-mode dropout needs a seeded generator")
    mask = rng.random(x.shape) >= rate
    scale = mask.astype(x.dtype) * x.dtype.type(1.0 / (1.0 - rate))
    return x * scale, mask


def dropout_backward(mask: np.ndarray, rate: float, grad: np.ndarray) -> np.ndarray:
    scale = mask.astype(grad.dtype) * grad.dtype.type(1.0 / (1.0 - rate))
    return grad * scale


def softmax(x: np.ndarray) -> np.ndarray:
    """Max-shifted softmax over the last axis; always returns float64."""
    x64 = np.asarray(x, dtype=np.float64)
    if x64.shape[-1] < 1:
        raise ValueError("softmax needs at least one logit")
    require_finite("softmax input", x64)
    shifted = x64 - x64.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_backward(probs: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """Jacobian-vector product of softmax: p * (g - <g, p>)."""
    inner = (grad * probs).sum(axis=-1, keepdims=True)
    return probs * (grad - inner)


def _pick(pred: np.ndarray, labels: np.ndarray) -> np.ndarray:
    return np.take_along_axis(pred, labels[..., None], axis=-1)[..., 0]


def cross_entropy(pred: np.ndarray, label: int) -> float:
    """-ln(pred[label]) with pred clamped to >= 1e-12 before the log."""
    p = np.asarray(pred, dtype=np.float64)
    n = p.shape[-1]
    if not 0 <= int(label) < n:
        raise ValueError(f"cross_entropy: label {label} outside [0, {n})")
    return float(-np.log(max(float(p[int(label)]), _LOG_CLAMP)))


def cross_entropy_batch(pred: np.ndarray, labels: np.ndarray) -> float:
    """Mean cross-entropy over a batch of probability rows."""
    p = np.asarray(pred, dtype=np.float64)
    labels = np.asarray(labels)
    if labels.min() < 0 or labels.max() >= p.shape[-1]:
        raise ValueError("cross_entropy: label outside class range")
    picked = np.clip(_pick(p, labels), _LOG_CLAMP, None)
    return float(-np.log(picked).mean())


def cross_entropy_grad(pred: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Gradient of the mean clamped cross-entropy w.r.t. the predictions.

    Where the clamp is active (pred[label] < 1e-12) the derivative of the
    clamped loss is exactly zero, and the gradient reflects that.
    """
    p = np.asarray(pred, dtype=np.float64)
    labels = np.asarray(labels)
    batched = p.ndim == 2
    p2 = p if batched else p[None, :]
    l2 = labels.reshape(-1)
    b = p2.shape[0]
    picked = _pick(p2, l2)
    slope = np.where(picked >= _LOG_CLAMP, -1.0 / np.clip(picked, _LOG_CLAMP, None), 0.0)
    out = np.zeros_like(p2)
    np.put_along_axis(out, l2[:, None], (slope / b)[:, None], axis=-1)
    return out if batched else out[0]
