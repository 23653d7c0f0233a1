"""Forward/backward kernels for the CNN layers, operating on NCHW arrays.

Each ``*_forward`` returns ``(out, cache)``; the matching ``*_backward``
consumes that cache. All kernels preserve the input dtype, so the same code
runs at float32 for training and float64 for gradient checking.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, ShapeError


def _im2col3x3(x):
    # (B, C, H, W) -> (B, H, W, C*9), same padding, stride 1
    xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    win = np.lib.stride_tricks.sliding_window_view(xp, (3, 3), axis=(2, 3))
    B, C, H, W = x.shape
    return win.transpose(0, 2, 3, 1, 4, 5).reshape(B, H, W, C * 9)


def conv2d_forward(x, weights, bias):
    """3x3 cross-correlation, stride 1, one pixel of zero padding per side."""
    if x.ndim != 4 or weights.ndim != 4 or weights.shape[2:] != (3, 3):
        raise ShapeError(f"conv2d expects x[B,C,H,W], w[F,C,3,3]; got {x.shape}, {weights.shape}")
    if x.shape[1] != weights.shape[1]:
        raise ShapeError(f"input has {x.shape[1]} channels, weights expect {weights.shape[1]}")
    if bias.shape != (weights.shape[0],):
        raise ShapeError(f"bias shape {bias.shape} does not match {weights.shape[0]} filters")
    F = weights.shape[0]
    cols = _im2col3x3(x)
    out = cols @ weights.reshape(F, -1).T + bias
    return out.transpose(0, 3, 1, 2), (x.shape, cols, weights)


def conv2d_backward(grad_out, cache):
    x_shape, cols, weights = cache
    B, C, H, W = x_shape
    F = weights.shape[0]
    if grad_out.shape != (B, F, H, W):
        raise ShapeError(f"grad shape {grad_out.shape} != forward output {(B, F, H, W)}")
    g = grad_out.transpose(0, 2, 3, 1).reshape(-1, F)
    grad_w = (g.T @ cols.reshape(-1, C * 9)).reshape(weights.shape)
    grad_b = g.sum(axis=0)
    gcols = (g @ weights.reshape(F, -1)).reshape(B, H, W, C, 3, 3)
    gxp = np.zeros((B, C, H + 2, W + 2), dtype=grad_out.dtype)
    for i in range(3):
        for j in range(3):
            gxp[:, :, i:i + H, j:j + W] += gcols[..., i, j].transpose(0, 3, 1, 2)
    return gxp[:, :, 1:-1, 1:-1], grad_w, grad_b


def relu_forward(x):
    return np.maximum(x, 0), x


def relu_backward(grad_out, cache):
    return np.where(cache > 0, grad_out, 0).astype(grad_out.dtype, copy=False)


def maxpool2d_forward(x):
    """2x2 max pool, stride 2; an odd trailing row/column is dropped."""
    B, C, H, W = x.shape
    H2, W2 = H // 2, W // 2
    blocks = x[:, :, :H2 * 2, :W2 * 2].reshape(B, C, H2, 2, W2, 2)
    blocks = blocks.transpose(0, 1, 2, 4, 3, 5).reshape(B, C, H2, W2, 4)
    arg = blocks.argmax(axis=-1)  # first maximum wins ties
    out = np.take_along_axis(blocks, arg[..., None], axis=-1)[..., 0]
    return out, (x.shape, arg)


def maxpool2d_backward(grad_out, cache):
    (B, C, H, W), arg = cache
    H2, W2 = grad_out.shape[2:]
    routed = np.zeros((B, C, H2, W2, 4), dtype=grad_out.dtype)
    np.put_along_axis(routed, arg[..., None], grad_out[..., None], axis=-1)
    routed = routed.reshape(B, C, H2, W2, 2, 2).transpose(0, 1, 2, 4, 3, 5)
    grad_x = np.zeros((B, C, H, W), dtype=grad_out.dtype)
    grad_x[:, :, :H2 * 2, :W2 * 2] = routed.reshape(B, C, H2 * 2, W2 * 2)
    return grad_x


def dropout_forward(x, rate, train, rng=None):
    """Inverted dropout; identity outside training."""
    if not 0 <= rate < 1:
        raise ConfigError(f"dropout rate must lie in [0, 1), got {rate}")
    if not train or rate == 0:
        return x, None
    if rng is None:
        raise ConfigError("training-mode dropout needs a random generator")
    mask = (rng.random(x.shape) >= rate).astype(x.dtype) / x.dtype.type(1 - rate)
    return x * mask, mask


def dropout_backward(grad_out, cache):
    return grad_out if cache is None else grad_out * cache


def dense_forward(x, weights, bias):
    """``y = W x + b`` for a batch of row vectors; ``weights`` is (out, in)."""
    if x.ndim != 2 or x.shape[1] != weights.shape[1]:
        raise ShapeError(f"dense expects x[B,{weights.shape[1]}], got {x.shape}")
    return x @ weights.T + bias, (x, weights)


def dense_backward(grad_out, cache):
    x, weights = cache
    return grad_out @ weights, grad_out.T @ x, grad_out.sum(axis=0)


def batchnorm_forward(x, gamma, beta, running_mean, running_var, train,
                      momentum=0.9, eps=1e-5):
    """Per-channel batch norm over (batch, H, W) for NCHW input.

    In training mode the running statistics are updated in place:
    ``running = momentum * running + (1 - momentum) * batch_stat`` (the batch
    variance is the biased one used for normalization).
    """
    axes = (0, 2, 3)
    shape = (1, -1, 1, 1)
    if train:
        mean = x.mean(axis=axes)
        var = x.var(axis=axes)
        running_mean *= momentum
        running_mean += (1 - momentum) * mean.astype(running_mean.dtype)
        running_var *= momentum
        running_var += (1 - momentum) * var.astype(running_var.dtype)
    else:
        mean, var = running_mean.astype(x.dtype), running_var.astype(x.dtype)
    inv_std = 1.0 / np.sqrt(var + x.dtype.type(eps))
    xhat = (x - mean.reshape(shape)) * inv_std.reshape(shape)
    out = gamma.reshape(shape) * xhat + beta.reshape(shape)
    return out, (xhat, inv_std, gamma, train)


def batchnorm_backward(grad_out, cache):
    xhat, inv_std, gamma, train = cache
    axes = (0, 2, 3)
    shape = (1, -1, 1, 1)
    grad_gamma = (grad_out * xhat).sum(axis=axes)
    grad_beta = grad_out.sum(axis=axes)
    gxhat = grad_out * gamma.reshape(shape)
    if not train:
        return gxhat * inv_std.reshape(shape), grad_gamma, grad_beta
    n = grad_out.size // grad_out.shape[1]
    grad_x = (inv_std.reshape(shape) / n) * (
        n * gxhat
        - gxhat.sum(axis=axes).reshape(shape)
        - xhat * (gxhat * xhat).sum(axis=axes).reshape(shape))
    return grad_x, grad_gamma, grad_beta


def softmax(logits):
    """Row-wise softmax with max subtraction."""
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(probs, labels, floor=1e-12):
    """Mean negative log-likelihood and its gradient with respect to the logits.

    The gradient ``(p - onehot) / B`` assumes ``probs`` came from
    :func:`softmax` of those logits.
    """
    labels = np.asarray(labels)
    B, K = probs.shape
    if labels.shape != (B,):
        raise ShapeError(f"expected {B} labels, got shape {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= K):
        raise ValueError(f"label out of range [0, {K})")
    picked = probs[np.arange(B), labels]
    loss = float(-np.mean(np.log(np.maximum(picked, floor))))
    grad = probs.copy()
    grad[np.arange(B), labels] -= 1
    return loss, grad / B
