"""Differentiable operations used by the CAPMix network."""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..series import InvalidInputError
from .tensor import Tensor

CLAMP_EPS = 1e-7

# branch decisions of piecewise ops (relu masks, pool argmax, clamps), collected
# while a gradient check probes a function so kink crossings can be detected
_branch_log: list | None = None


@contextmanager
def record_branches():
    """Collect the branch decisions taken by piecewise ops inside the block."""
    global _branch_log
    previous, _branch_log = _branch_log, []
    try:
        yield _branch_log
    finally:
        _branch_log = previous


def _log(decision: np.ndarray) -> None:
    if _branch_log is not None:
        _branch_log.append(decision)


def conv1d(x: Tensor, weight: Tensor, bias: Tensor | None = None, stride: int = 1, padding: int = 0) -> Tensor:
    """Cross-correlation of ``(B, C_in, L)`` input with ``(C_out, C_in, K)`` weights."""
    B, C, L = x.shape
    O, C_w, K = weight.shape
    if C != C_w:
        raise InvalidInputError(f"conv1d channel mismatch: input {C}, weight {C_w}")
    if K > L + 2 * padding:
        raise InvalidInputError(f"kernel {K} longer than padded input {L + 2 * padding}")
    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding)))
    cols = sliding_window_view(xp, K, axis=2)[:, :, ::stride, :]  # B, C, L', K
    L_out = cols.shape[2]
    cols2 = cols.transpose(0, 2, 1, 3).reshape(B * L_out, C * K)
    wmat = weight.data.reshape(O, C * K)
    out = (cols2 @ wmat.T).reshape(B, L_out, O).transpose(0, 2, 1)
    if bias is not None:
        out = out + bias.data[None, :, None]

    def backward(g):
        g2 = g.transpose(0, 2, 1).reshape(B * L_out, O)
        dw = (g2.T @ cols2).reshape(O, C, K)
        dcols = (g2 @ wmat).reshape(B, L_out, C, K)
        dxp = np.zeros_like(xp)
        span = stride * (L_out - 1) + 1
        for k in range(K):
            dxp[:, :, k : k + span : stride] += dcols[:, :, :, k].transpose(0, 2, 1)
        dx = dxp[:, :, padding : padding + L]
        db = g.sum(axis=(0, 2)) if bias is not None else None
        return dx, dw, db

    parents = (x, weight) if bias is None else (x, weight, bias)
    fn = backward if bias is not None else (lambda g: backward(g)[:2])
    return Tensor(out, parents=parents, backward_fn=fn, op="conv1d")


def batchnorm1d(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    training: bool,
    momentum: float = 0.1,
    eps: float = 1e-5,
) -> Tensor:
    """Batch normalisation over ``(B, C)`` or ``(B, C, L)`` inputs.

    Training mode normalises with biased batch statistics and updates the
    running buffers in place (the running variance uses the unbiased estimate).
    """
    axes = (0,) if x.data.ndim == 2 else (0, 2)
    shape = (1, -1) if x.data.ndim == 2 else (1, -1, 1)
    if training:
        if x.shape[0] < 2:
            raise InvalidInputError("batchnorm in train mode needs a batch of at least 2")
        n = x.data.size // x.shape[1]
        mean = x.data.mean(axis=axes)
        var = x.data.var(axis=axes)
        running_mean *= 1 - momentum
        running_mean += momentum * mean
        running_var *= 1 - momentum
        running_var += momentum * var * n / (n - 1)
    else:
        mean, var = running_mean.copy(), running_var.copy()
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mean.reshape(shape)) * inv_std.reshape(shape)
    out = gamma.data.reshape(shape) * xhat + beta.data.reshape(shape)

    def backward(g):
        dgamma = (g * xhat).sum(axis=axes)
        dbeta = g.sum(axis=axes)
        dxhat = g * gamma.data.reshape(shape)
        if training:
            n = x.data.size // x.shape[1]
            dx = (inv_std.reshape(shape) / n) * (
                n * dxhat
                - dxhat.sum(axis=axes, keepdims=True)
                - xhat * (dxhat * xhat).sum(axis=axes, keepdims=True)
            )
        else:
            dx = dxhat * inv_std.reshape(shape)
        return dx, dgamma, dbeta

    return Tensor(out, parents=(x, gamma, beta), backward_fn=backward, op="batchnorm1d")


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    _log(mask)
    return Tensor(x.data * mask, parents=(x,), backward_fn=lambda g: (g * mask,), op="relu")


def maxpool1d(x: Tensor, kernel: int, stride: int | None = None, padding: int = 0) -> Tensor:
    """Max pooling along the last axis; ties route the gradient to the first maximum."""
    stride = kernel if stride is None else stride
    B, C, L = x.shape
    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding)), constant_values=-np.inf)
    if kernel > xp.shape[2]:
        raise InvalidInputError("pool kernel longer than padded input")
    win = sliding_window_view(xp, kernel, axis=2)[:, :, ::stride, :]
    arg = win.argmax(axis=-1)
    _log(arg)
    out = np.take_along_axis(win, arg[..., None], axis=-1)[..., 0]
    pos = arg + stride * np.arange(out.shape[2])[None, None, :]

    def backward(g):
        dxp = np.zeros_like(xp)
        if kernel <= stride:
            np.put_along_axis(dxp, pos, g, axis=2)
        else:
            bi, ci = np.indices(pos.shape)[:2]
            np.add.at(dxp, (bi, ci, pos), g)
        return (dxp[:, :, padding : padding + L],)

    return Tensor(out, parents=(x,), backward_fn=backward, op="maxpool1d")


def dropout(x: Tensor, rate: float, training: bool, rng: np.random.Generator | None = None) -> Tensor:
    """Inverted dropout; identity in eval mode or at rate 0."""
    if not 0 <= rate < 1:
        raise InvalidInputError(f"dropout rate must lie in [0, 1), got {rate}")
    if not training or rate == 0:
        return x
    if rng is None:
        raise InvalidInputError("train-mode dropout needs a random generator")
    mask = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return Tensor(x.data * mask, parents=(x,), backward_fn=lambda g: (g * mask,), op="dropout")


def linear(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """``x @ weight.T + bias`` with ``weight`` shaped ``(out, in)``."""
    if x.shape[-1] != weight.shape[1]:
        raise InvalidInputError(f"linear expects {weight.shape[1]} features, got {x.shape[-1]}")
    out = x.data @ weight.data.T
    if bias is not None:
        out = out + bias.data

    def backward(g):
        dx = g @ weight.data
        dw = g.T @ x.data
        return (dx, dw) if bias is None else (dx, dw, g.sum(axis=0))

    parents = (x, weight) if bias is None else (x, weight, bias)
    return Tensor(out, parents=parents, backward_fn=backward, op="linear")


def flatten(x: Tensor) -> Tensor:
    shape = x.shape
    return Tensor(x.data.reshape(shape[0], -1), parents=(x,),
                  backward_fn=lambda g: (g.reshape(shape),), op="flatten")


def softmax2(q: Tensor) -> Tensor:
    """Row-wise softmax over a ``(B, 2)`` projection, stabilised by max subtraction."""
    z = q.data - q.data.max(axis=1, keepdims=True)
    e = np.exp(z)
    s = e / e.sum(axis=1, keepdims=True)

    def backward(g):
        return (s * (g - (g * s).sum(axis=1, keepdims=True)),)

    return Tensor(s, parents=(q,), backward_fn=backward, op="softmax")


def bce_loss(p: Tensor, y) -> Tensor:
    """Mean binary cross-entropy; ``p`` is clamped to ``[1e-7, 1 - 1e-7]`` and ``y`` may be soft."""
    y = np.asarray(y, dtype=np.float64)
    if p.shape != y.shape:
        raise InvalidInputError(f"prediction shape {p.shape} does not match targets {y.shape}")
    pc = np.clip(p.data, CLAMP_EPS, 1 - CLAMP_EPS)
    n = y.size
    loss = -np.mean(y * np.log(pc) + (1 - y) * np.log(1 - pc))
    inside = (p.data >= CLAMP_EPS) & (p.data <= 1 - CLAMP_EPS)
    _log(inside)

    def backward(g):
        return (g * inside * (-(y / pc) + (1 - y) / (1 - pc)) / n,)

    return Tensor(loss, parents=(p,), backward_fn=backward, op="bce")
