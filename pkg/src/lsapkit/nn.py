"""Minimal neural network stack: dense and conv2d layers with hand-derived
gradients, ReLU, squared-error loss, Adam, and a finite-difference checker.

There is no autodiff graph; each layer exposes a cached forward pass and a
backward pass returning input and parameter gradients. Forward-only calls never
mutate layer state, so finished models are safe to share across threads; the
cached/backward pair is for a training loop that owns the model exclusively.

Weights default to float32 (the training precision); gradient checking runs a
float64 copy of the model. Convolution uses cross-correlation semantics (no
kernel flip).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


def relu(x: np.ndarray) -> np.ndarray:
    """Elementwise max(0, x)."""
    return np.maximum(x, 0)


def relu_mask(x: np.ndarray) -> np.ndarray:
    """Gradient mask of relu: 1 where x > 0, else 0 (the kink goes to 0)."""
    return (x > 0).astype(x.dtype)


def kaiming_uniform(rng: np.random.Generator, shape, fan_in: int, dtype) -> np.ndarray:
    """Fan-in scaled uniform init, the standard choice under ReLU stacks."""
    bound = math.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class Dense:
    """Affine map y = x W^T + b for batched row vectors x of shape (B, in_dim)."""

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator, dtype=np.float32):
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.weight = kaiming_uniform(rng, (out_dim, in_dim), in_dim, dtype)
        self.bias = np.zeros(out_dim, dtype=dtype)

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.shape[-1] != self.in_dim:
            raise ValueError(f"dense expects inputs of width {self.in_dim}, got {x.shape}")
        return x @ self.weight.T + self.bias

    def forward_cached(self, x: np.ndarray):
        return self.forward(x), x

    def backward(self, grad_y: np.ndarray, cache):
        x = cache
        grad_w = grad_y.T @ x
        grad_b = grad_y.sum(axis=0)
        grad_x = grad_y @ self.weight
        return grad_x, [grad_w, grad_b]

    def params(self):
        return [self.weight, self.bias]

    def astype(self, dtype) -> "Dense":
        clone = object.__new__(Dense)
        clone.in_dim, clone.out_dim = self.in_dim, self.out_dim
        clone.weight = self.weight.astype(dtype)
        clone.bias = self.bias.astype(dtype)
        return clone


def _pad_spec(size: int, k: int, stride: int, padding: str) -> tuple[int, int, int]:
    """(pad_before, pad_after, out_size) along one spatial axis."""
    if padding == "valid":
        out = (size - k) // stride + 1
        return 0, 0, out
    if padding == "same":
        out = -(-size // stride)  # ceil
        total = max((out - 1) * stride + k - size, 0)
        return total // 2, total - total // 2, out
    raise ValueError(f"padding must be 'valid' or 'same', got {padding!r}")


class Conv2D:
    """2-D cross-correlation over (B, C, H, W) inputs via im2col + matmul."""

    def __init__(self, in_channels: int, out_channels: int, kernel: tuple[int, int],
                 rng: np.random.Generator, stride: int = 1, padding: str = "valid",
                 dtype=np.float32):
        kh, kw = kernel
        if kh < 1 or kw < 1:
            raise ValueError("kernel dims must be >= 1")
        if padding not in ("valid", "same"):
            raise ValueError(f"padding must be 'valid' or 'same', got {padding!r}")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel = (kh, kw)
        self.stride = stride
        self.padding = padding
        fan_in = in_channels * kh * kw
        self.filters = kaiming_uniform(rng, (out_channels, in_channels, kh, kw), fan_in, dtype)
        self.bias = np.zeros(out_channels, dtype=dtype)

    def output_hw(self, h: int, w: int) -> tuple[int, int]:
        kh, kw = self.kernel
        _, _, ho = _pad_spec(h, kh, self.stride, self.padding)
        _, _, wo = _pad_spec(w, kw, self.stride, self.padding)
        if ho < 1 or wo < 1:
            raise ValueError(
                f"conv output would be {ho}x{wo} for input {h}x{w} with kernel {kh}x{kw}"
            )
        return ho, wo

    def _cols(self, x: np.ndarray):
        b, c, h, w = x.shape
        kh, kw = self.kernel
        s = self.stride
        pt, pb, ho = _pad_spec(h, kh, s, self.padding)
        pl, pr, wo = _pad_spec(w, kw, s, self.padding)
        if ho < 1 or wo < 1:
            raise ValueError(
                f"conv output would be {ho}x{wo} for input {h}x{w} with kernel {kh}x{kw}"
            )
        if pt or pb or pl or pr:
            x = np.pad(x, ((0, 0), (0, 0), (pt, pb), (pl, pr)))
        cols = np.empty((b, c, kh, kw, ho, wo), dtype=x.dtype)
        for i in range(kh):
            for j in range(kw):
                cols[:, :, i, j] = x[:, :, i:i + s * ho:s, j:j + s * wo:s]
        return cols.reshape(b, c * kh * kw, ho * wo), (x.shape, (pt, pb, pl, pr), ho, wo)

    def forward(self, x: np.ndarray) -> np.ndarray:
        return self.forward_cached(x)[0]

    def forward_cached(self, x: np.ndarray):
        if x.ndim != 4 or x.shape[1] != self.in_channels:
            raise ValueError(
                f"conv expects (B, {self.in_channels}, H, W) inputs, got {x.shape}"
            )
        b = x.shape[0]
        cols, geom = self._cols(x)
        ho, wo = geom[2], geom[3]
        w2 = self.filters.reshape(self.out_channels, -1)
        y = np.matmul(w2, cols) + self.bias[:, None]
        return y.reshape(b, self.out_channels, ho, wo), (cols, geom, x.shape)

    def backward(self, grad_y: np.ndarray, cache):
        cols, geom, x_shape = cache
        padded_shape, (pt, pb, pl, pr), ho, wo = geom
        b = grad_y.shape[0]
        g = grad_y.reshape(b, self.out_channels, ho * wo)
        w2 = self.filters.reshape(self.out_channels, -1)
        grad_filters = np.tensordot(g, cols, axes=([0, 2], [0, 2])).reshape(self.filters.shape)
        grad_bias = g.sum(axis=(0, 2))
        dcols = np.matmul(w2.T, g)  # (B, C*kh*kw, L)

        kh, kw = self.kernel
        s = self.stride
        c = self.in_channels
        dcols = dcols.reshape(b, c, kh, kw, ho, wo)
        dx_pad = np.zeros(padded_shape, dtype=grad_y.dtype)
        for i in range(kh):
            for j in range(kw):
                dx_pad[:, :, i:i + s * ho:s, j:j + s * wo:s] += dcols[:, :, i, j]
        h, w = x_shape[2], x_shape[3]
        dx = dx_pad[:, :, pt:pt + h, pl:pl + w]
        return dx, [grad_filters, grad_bias]

    def params(self):
        return [self.filters, self.bias]

    def astype(self, dtype) -> "Conv2D":
        clone = object.__new__(Conv2D)
        clone.in_channels = self.in_channels
        clone.out_channels = self.out_channels
        clone.kernel = self.kernel
        clone.stride = self.stride
        clone.padding = self.padding
        clone.filters = self.filters.astype(dtype)
        clone.bias = self.bias.astype(dtype)
        return clone


def l2_loss(pred: np.ndarray, target: np.ndarray):
    """Half squared error 0.5*||pred - target||^2 and its gradient w.r.t. pred.

    The scalar is accumulated in float64 regardless of the input precision.
    """
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    diff = pred - target
    loss = 0.5 * float(np.sum(diff.astype(np.float64) ** 2))
    return loss, diff


@dataclass
class AdamState:
    """Adam moments for one parameter tensor (bias-corrected update rule)."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_param(cls, param: np.ndarray, **hyper) -> "AdamState":
        return cls(m=np.zeros_like(param), v=np.zeros_like(param), **hyper)


def adam_step(state: AdamState, param: np.ndarray, grad: np.ndarray) -> None:
    """One in-place Adam update: p -= lr * m_hat / (sqrt(v_hat) + eps)."""
    if param.shape != grad.shape:
        raise ValueError(f"param/grad shape mismatch: {param.shape} vs {grad.shape}")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    state.m *= b1
    state.m += (1 - b1) * grad
    state.v *= b2
    state.v += (1 - b2) * (grad * grad)
    m_hat = state.m / (1 - b1 ** state.t)
    v_hat = state.v / (1 - b2 ** state.t)
    param -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)


class Adam:
    """Adam over an ordered list of parameter tensors."""

    def __init__(self, params, lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.states = [
            AdamState.for_param(p, lr=lr, beta1=beta1, beta2=beta2, eps=eps) for p in params
        ]

    def step(self, params, grads) -> None:
        if not (len(params) == len(grads) == len(self.states)):
            raise ValueError("params/grads/state length mismatch")
        for state, p, g in zip(self.states, params, grads):
            adam_step(state, p, g)


@dataclass
class GradCheckReport:
    max_rel_error: float
    checked: int
    skipped_kinks: int
    worst_coordinate: tuple[int, int] = field(default=(-1, -1))


def grad_check(loss_and_grad, params, n_coords: int = 256, step: float = 1e-5,
               seed: int = 0) -> GradCheckReport:
    """Central finite differences on a random subset of parameter coordinates.

    ``loss_and_grad()`` evaluates the model at the current parameters and
    returns ``(loss, grads, signature)`` where ``grads`` aligns with ``params``
    and ``signature`` fingerprints the active ReLU pattern (``None`` if there
    is none). Coordinates whose +/-step evaluations disagree on the signature
    straddle a kink, where the two-sided difference is meaningless, and are
    skipped. At least 200 coordinates are recommended; fewer exist on tiny
    models and all of them are used.
    """
    _, grads, _ = loss_and_grad()
    sizes = [p.size for p in params]
    total = sum(sizes)
    n_coords = min(n_coords, total)
    rng = np.random.default_rng(seed)
    flat_ids = rng.choice(total, size=n_coords, replace=False)

    bounds = np.cumsum([0] + sizes)
    worst = 0.0
    worst_coord = (-1, -1)
    skipped = 0
    checked = 0
    for fid in flat_ids:
        t = int(np.searchsorted(bounds, fid, side="right") - 1)
        off = int(fid - bounds[t])
        p = params[t]
        orig = p.flat[off]

        p.flat[off] = orig + step
        loss_p, _, sig_p = loss_and_grad()
        p.flat[off] = orig - step
        loss_m, _, sig_m = loss_and_grad()
        p.flat[off] = orig

        if sig_p != sig_m:
            skipped += 1
            continue
        numeric = (loss_p - loss_m) / (2 * step)
        analytic = float(grads[t].flat[off])
        rel = abs(numeric - analytic) / max(abs(numeric), abs(analytic), 1e-12)
        checked += 1
        if rel > worst:
            worst = rel
            worst_coord = (t, off)
    return GradCheckReport(max_rel_error=worst, checked=checked,
                           skipped_kinks=skipped, worst_coordinate=worst_coord)
