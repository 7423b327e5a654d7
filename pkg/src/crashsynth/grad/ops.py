"""Primitive differentiable operations.

Every primitive computes its forward value eagerly, and when a tape is active
and some input requires a gradient, records a closure with the hand-derived
backward rule. Shape mixing is deliberately restricted: the only implicit
broadcast is bias addition (array + trailing row vector) and the internal
gain/bias broadcast of layer_norm. Everything else must match exactly, which
keeps the backward rules short enough to audit.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from crashsynth.grad.tensor import Tensor, active_tape

_CLAMP_EPS = 1e-7


def _as_tensor(x) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(x)


def _emit(data: np.ndarray, inputs: Sequence[Tensor], backward) -> Tensor:
    tape = active_tape()
    needs = tape is not None and any(t.requires_grad for t in inputs)
    out = Tensor._wrap(np.ascontiguousarray(data, dtype=np.float64), needs)
    if needs:
        tape.record(out, inputs, backward)
    return out


def _sum_to_bias(g: np.ndarray) -> np.ndarray:
    # Gradient of a trailing row-vector bias: sum over every leading axis.
    return g.sum(axis=tuple(range(g.ndim - 1)))


# ---------------------------------------------------------------------------
# arithmetic


def add(a, b) -> Tensor:
    """Elementwise addition; also accepts a trailing bias vector for b."""
    a, b = _as_tensor(a), _as_tensor(b)
    if a.shape == b.shape:
        return _emit(a.data + b.data, (a, b), lambda g: (g, g))
    if b.data.ndim == 1 and a.data.ndim >= 2 and a.shape[-1] == b.shape[0]:
        return _emit(a.data + b.data, (a, b), lambda g: (g, _sum_to_bias(g)))
    raise ValueError(f"add: incompatible shapes {a.shape} and {b.shape}")


def sub(a, b) -> Tensor:
    return add(a, scale(b, -1.0))


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.shape != b.shape:
        raise ValueError(f"mul: incompatible shapes {a.shape} and {b.shape}")
    ad, bd = a.data, b.data
    return _emit(ad * bd, (a, b), lambda g: (g * bd, g * ad))


def scale(a, c: float) -> Tensor:
    a = _as_tensor(a)
    c = float(c)
    return _emit(a.data * c, (a,), lambda g: (g * c,))


def shift(a, c: float) -> Tensor:
    a = _as_tensor(a)
    return _emit(a.data + float(c), (a,), lambda g: (g,))


def mask_mul(a, mask: np.ndarray) -> Tensor:
    """Elementwise product with a constant (non-differentiated) mask."""
    a = _as_tensor(a)
    m = np.asarray(mask, dtype=np.float64)
    if m.shape != a.shape:
        raise ValueError(f"mask_mul: mask shape {m.shape} != tensor shape {a.shape}")
    return _emit(a.data * m, (a,), lambda g: (g * m,))


def matmul(a, b) -> Tensor:
    """Matrix product. Either both operands share identical batch dims, or b
    is a plain matrix applied to the last axis of a (the linear-layer case)."""
    a, b = _as_tensor(a), _as_tensor(b)
    ad, bd = a.data, b.data
    if ad.ndim < 2 or bd.ndim < 2 or ad.shape[-1] != bd.shape[-2]:
        raise ValueError(f"matmul: incompatible shapes {ad.shape} and {bd.shape}")
    if bd.ndim == 2:

        def backward(g):
            ga = g @ bd.T
            gb = ad.reshape(-1, ad.shape[-1]).T @ g.reshape(-1, g.shape[-1])
            return ga, gb

        return _emit(ad @ bd, (a, b), backward)
    if ad.shape[:-2] != bd.shape[:-2]:
        raise ValueError(f"matmul: batch dims differ: {ad.shape} vs {bd.shape}")

    def backward_batched(g):
        return g @ bd.swapaxes(-1, -2), ad.swapaxes(-1, -2) @ g

    return _emit(ad @ bd, (a, b), backward_batched)


# ---------------------------------------------------------------------------
# nonlinearities


def _sigmoid_values(xd: np.ndarray) -> np.ndarray:
    # Stable in both tails: never exponentiates a large positive argument.
    y = np.empty_like(xd)
    pos = xd >= 0
    y[pos] = 1.0 / (1.0 + np.exp(-xd[pos]))
    ex = np.exp(xd[~pos])
    y[~pos] = ex / (1.0 + ex)
    return y


def sigmoid(x) -> Tensor:
    x = _as_tensor(x)
    y = _sigmoid_values(x.data)
    return _emit(y, (x,), lambda g: (g * y * (1.0 - y),))


def tanh(x) -> Tensor:
    x = _as_tensor(x)
    y = np.tanh(x.data)
    return _emit(y, (x,), lambda g: (g * (1.0 - y * y),))


def softplus(x) -> Tensor:
    x = _as_tensor(x)
    y = np.logaddexp(0.0, x.data)
    sig = _sigmoid_values(x.data)
    return _emit(y, (x,), lambda g: (g * sig,))


def log(x) -> Tensor:
    x = _as_tensor(x)
    if np.any(x.data <= 0.0):
        raise ValueError("log: inputs must be strictly positive (clip first)")
    xd = x.data
    return _emit(np.log(xd), (x,), lambda g: (g / xd,))


def clip(x, lo: float, hi: float) -> Tensor:
    """Clamp values to [lo, hi]; gradient passes only through the interior."""
    x = _as_tensor(x)
    xd = x.data
    inside = ((xd > lo) & (xd < hi)).astype(np.float64)
    return _emit(np.clip(xd, lo, hi), (x,), lambda g: (g * inside,))


def softmax(x) -> Tensor:
    """Softmax along the last axis."""
    x = _as_tensor(x)
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=-1, keepdims=True)

    def backward(g):
        dot = (g * y).sum(axis=-1, keepdims=True)
        return (y * (g - dot),)

    return _emit(y, (x,), backward)


# ---------------------------------------------------------------------------
# shape manipulation


def concat(parts: Sequence, axis: int) -> Tensor:
    tensors = [_as_tensor(p) for p in parts]
    if not tensors:
        raise ValueError("concat: need at least one input")
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.ascontiguousarray(piece) for piece in np.split(g, splits, axis=axis))

    return _emit(data, tensors, backward)


def slice_axis(x, axis: int, start: int, stop: int) -> Tensor:
    x = _as_tensor(x)
    nd = x.data.ndim
    axis = axis % nd
    if not (0 <= start < stop <= x.data.shape[axis]):
        raise ValueError(
            f"slice_axis: [{start}:{stop}) out of range for axis {axis} of shape {x.shape}"
        )
    index = tuple(slice(None) if i != axis else slice(start, stop) for i in range(nd))

    def backward(g):
        full = np.zeros_like(x.data)
        full[index] = g
        return (full,)

    return _emit(x.data[index].copy(), (x,), backward)


def reshape(x, shape: Sequence[int]) -> Tensor:
    x = _as_tensor(x)
    shape = tuple(int(s) for s in shape)
    old = x.data.shape
    return _emit(x.data.reshape(shape), (x,), lambda g: (g.reshape(old),))


def transpose(x, axes: Sequence[int]) -> Tensor:
    x = _as_tensor(x)
    axes = tuple(int(a) for a in axes)
    inverse = tuple(np.argsort(axes))
    return _emit(
        np.ascontiguousarray(x.data.transpose(axes)),
        (x,),
        lambda g: (np.ascontiguousarray(g.transpose(inverse)),),
    )


# ---------------------------------------------------------------------------
# reductions


def reduce_sum(x, axis: int | None = None, keepdims: bool = False) -> Tensor:
    x = _as_tensor(x)
    xd = x.data

    if axis is None:
        return _emit(
            np.asarray([xd.sum()]),
            (x,),
            lambda g: (np.full_like(xd, float(g.reshape(-1)[0])),),
        )

    ax = axis % xd.ndim

    def backward_axis(g):
        gg = g if keepdims else np.expand_dims(g, ax)
        return (np.broadcast_to(gg, xd.shape).copy(),)

    return _emit(xd.sum(axis=ax, keepdims=keepdims), (x,), backward_axis)


def reduce_mean(x, axis: int | None = None, keepdims: bool = False) -> Tensor:
    x = _as_tensor(x)
    n = x.data.size if axis is None else x.data.shape[axis % x.data.ndim]
    return scale(reduce_sum(x, axis=axis, keepdims=keepdims), 1.0 / n)


# ---------------------------------------------------------------------------
# fused losses and normalization


def layer_norm(x, gain, bias, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis to zero mean / unit variance, then apply an
    elementwise affine with trailing-vector gain and bias."""
    x, gain, bias = _as_tensor(x), _as_tensor(gain), _as_tensor(bias)
    d = x.shape[-1]
    if gain.shape != (d,) or bias.shape != (d,):
        raise ValueError(
            f"layer_norm: gain/bias must have shape ({d},), got {gain.shape} and {bias.shape}"
        )
    xd = x.data
    mu = xd.mean(axis=-1, keepdims=True)
    var = ((xd - mu) ** 2).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (xd - mu) * inv
    y = xhat * gain.data + bias.data

    def backward(g):
        dgain = (g * xhat).sum(axis=tuple(range(g.ndim - 1)))
        dbias = _sum_to_bias(g)
        w = g * gain.data
        dx = (
            w - w.mean(axis=-1, keepdims=True) - xhat * (w * xhat).mean(axis=-1, keepdims=True)
        ) * inv
        return dx, dgain, dbias

    return _emit(y, (x, gain, bias), backward)


def binary_cross_entropy(pred, target) -> Tensor:
    """Mean BCE over all elements; predictions are clamped away from {0,1}
    before the logs so saturated probabilities stay finite."""
    pred, target = _as_tensor(pred), _as_tensor(target)
    if pred.shape != target.shape:
        raise ValueError(f"bce: shapes differ: {pred.shape} vs {target.shape}")
    p = np.clip(pred.data, _CLAMP_EPS, 1.0 - _CLAMP_EPS)
    t = target.data
    n = p.size
    val = -(t * np.log(p) + (1.0 - t) * np.log1p(-p)).sum() / n
    inside = ((pred.data > _CLAMP_EPS) & (pred.data < 1.0 - _CLAMP_EPS)).astype(np.float64)

    def backward(g):
        coeff = float(g.reshape(-1)[0]) / n
        return (coeff * inside * (p - t) / (p * (1.0 - p)), None)

    return _emit(np.asarray([val]), (pred, target), backward)


def squared_error(pred, target) -> Tensor:
    """Mean squared error over all elements."""
    pred, target = _as_tensor(pred), _as_tensor(target)
    if pred.shape != target.shape:
        raise ValueError(f"squared_error: shapes differ: {pred.shape} vs {target.shape}")
    diff = pred.data - target.data
    n = diff.size
    val = float((diff * diff).sum() / n)

    def backward(g):
        coeff = float(g.reshape(-1)[0]) * 2.0 / n
        return coeff * diff, -coeff * diff

    return _emit(np.asarray([val]), (pred, target), backward)
