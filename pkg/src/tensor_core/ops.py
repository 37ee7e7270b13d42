"""Differentiable ops. Each forward returns a Tensor and registers its local gradient rule.

Convolution is cross-correlation (the kernel is not flipped), the usual CNN convention;
`src.transforms.apply_blur` and `src.verification.naive_conv` use the same convention.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from src.my_util.errors import ShapeError
from src.tensor_core.tensor import Tensor, as_tensor, make_result

CE_EPSILON = 1e-12


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shape(a: Tensor, b: Tensor, op: str) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: cannot broadcast {a.shape} with {b.shape}") from None


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "add")
    return make_result(
        "add",
        a.data + b.data,
        (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)),
    )


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "sub")
    return make_result(
        "sub",
        a.data - b.data,
        (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)),
    )


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "mul")
    return make_result(
        "mul",
        a.data * b.data,
        (a, b),
        lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)),
    )


def neg(a: Tensor) -> Tensor:
    return make_result("neg", -a.data, (a,), lambda g: (-g,))


def scale(a: Tensor, factor: float) -> Tensor:
    return make_result("scale", a.data * factor, (a,), lambda g: (g * factor,))


def sum(a: Tensor) -> Tensor:
    return make_result("sum", np.array(a.data.sum()), (a,), lambda g: (np.full(a.shape, float(g)),))


def mean(a: Tensor) -> Tensor:
    n = a.size
    return make_result("mean", np.array(a.data.mean()), (a,), lambda g: (np.full(a.shape, float(g) / n),))


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    try:
        data = a.data.reshape(shape)
    except ValueError:
        raise ShapeError(f"reshape: cannot view {a.shape} as {shape}") from None
    return make_result("reshape", data, (a,), lambda g: (g.reshape(a.shape),))


def transpose(a: Tensor) -> Tensor:
    if a.ndim != 2:
        raise ShapeError(f"transpose expects a matrix, got {a.shape}")
    return make_result("transpose", a.data.T.copy(), (a,), lambda g: (g.T,))


def concat(tensors: list[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    try:
        data = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as e:
        raise ShapeError(f"concat: {[t.shape for t in tensors]}: {e}") from None
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]
    return make_result("concat", data, tuple(tensors), lambda g: tuple(np.split(g, bounds, axis=axis)))


def log(a: Tensor) -> Tensor:
    return make_result("log", np.log(a.data), (a,), lambda g: (g / a.data,))


def clip(a: Tensor, lo: float, hi: float) -> Tensor:
    """Clamp to [lo, hi]; no gradient flows through clamped entries."""
    inside = (a.data >= lo) & (a.data <= hi)
    return make_result("clip", np.clip(a.data, lo, hi), (a,), lambda g: (g * inside,))


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: inner extents of {a.shape} and {b.shape} do not match")
    return make_result(
        "matmul",
        a.data @ b.data,
        (a, b),
        lambda g: (g @ b.data.T, a.data.T @ g),
    )


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    return make_result("relu", np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,))


def softmax(logits: Tensor) -> Tensor:
    """Softmax over the last axis with max-subtraction."""
    if logits.shape[-1] < 1:
        raise ShapeError("softmax over an empty axis")
    shifted = logits.data - logits.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    p = e / e.sum(axis=-1, keepdims=True)

    def backward(g):
        return (p * (g - (g * p).sum(axis=-1, keepdims=True)),)

    return make_result("softmax", p, (logits,), backward)


def cross_entropy(probs: Tensor, label) -> Tensor:
    """-log(p[label] + eps); a batch of rows with a label vector yields the batch mean."""
    batched = probs.ndim == 2
    labels = np.atleast_1d(np.asarray(label, dtype=np.int64))
    rows = probs.data if batched else probs.data[None, :]
    n_classes = rows.shape[1]
    if labels.shape[0] != rows.shape[0]:
        raise ShapeError(f"cross_entropy: {rows.shape[0]} rows but {labels.shape[0]} labels")
    if np.any(labels < 0) or np.any(labels >= n_classes):
        raise IndexError(f"label out of range for {n_classes} classes: {labels[(labels < 0) | (labels >= n_classes)][0]}")
    idx = np.arange(rows.shape[0])
    picked = rows[idx, labels] + CE_EPSILON
    loss = -np.log(picked).mean()

    def backward(g):
        grad = np.zeros_like(rows)
        grad[idx, labels] = -float(g) / (picked * rows.shape[0])
        return (grad if batched else grad[0],)

    return make_result("cross_entropy", np.array(loss), (probs,), backward)


def _as_batch(x: np.ndarray) -> tuple[np.ndarray, bool]:
    if x.ndim == 3:
        return x[None], False
    if x.ndim == 4:
        return x, True
    raise ShapeError(f"expected C×H×W or N×C×H×W, got {x.shape}")


def conv2d(input: Tensor, kernels: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    x, batched = _as_batch(input.data)
    k = kernels.data
    if k.ndim != 4:
        raise ShapeError(f"conv2d kernels must be C_out×C_in×kh×kw, got {k.shape}")
    c_out, c_in, kh, kw = k.shape
    n, c, h, w = x.shape
    if kh % 2 == 0 or kw % 2 == 0:
        raise ShapeError(f"conv2d needs odd kernel extents, got {kh}×{kw}")
    if c != c_in:
        raise ShapeError(f"conv2d: input {input.shape} has {c} channels, kernels {k.shape} expect {c_in}")
    span_h, span_w = h + 2 * padding - kh, w + 2 * padding - kw
    if span_h < 0 or span_w < 0 or span_h % stride or span_w % stride:
        raise ShapeError(
            f"conv2d: input {input.shape}, kernel {kh}×{kw}, stride {stride}, padding {padding} "
            "gives a non-integral output extent"
        )
    h_out, w_out = span_h // stride + 1, span_w // stride + 1

    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding))) if padding else x
    windows = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
    # windows: N×C×H'×W'×kh×kw
    out = np.tensordot(windows, k, axes=([1, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2)

    def backward(g):
        g = g if batched else g[None]
        grad_k = np.tensordot(g, windows, axes=([0, 2, 3], [0, 2, 3]))
        grad_xp = np.zeros_like(xp)
        for i in range(kh):
            for j in range(kw):
                contrib = np.tensordot(g, k[:, :, i, j], axes=([1], [0])).transpose(0, 3, 1, 2)
                grad_xp[:, :, i : i + stride * h_out : stride, j : j + stride * w_out : stride] += contrib
        grad_x = grad_xp[:, :, padding : padding + h, padding : padding + w]
        return (grad_x if batched else grad_x[0], grad_k)

    return make_result("conv2d", np.ascontiguousarray(out if batched else out[0]), (input, kernels), backward)


def maxpool2d(input: Tensor, window: int) -> Tensor:
    """Non-overlapping max pooling; ties route the gradient to the first row-major element."""
    x, batched = _as_batch(input.data)
    n, c, h, w = x.shape
    if h % window or w % window:
        raise ShapeError(f"maxpool2d: window {window} does not divide {h}×{w}")
    ho, wo = h // window, w // window
    blocks = x.reshape(n, c, ho, window, wo, window).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, ho, wo, window * window)
    arg = blocks.argmax(axis=-1)
    out = np.take_along_axis(blocks, arg[..., None], axis=-1)[..., 0]

    def backward(g):
        g = g if batched else g[None]
        grad_blocks = np.zeros_like(blocks)
        np.put_along_axis(grad_blocks, arg[..., None], g[..., None], axis=-1)
        grad = grad_blocks.reshape(n, c, ho, wo, window, window).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h, w)
        return (grad if batched else grad[0],)

    return make_result("maxpool2d", out if batched else out[0], (input,), backward)


def dense(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    out = matmul(x, weight)
    return out if bias is None else add(out, bias)
