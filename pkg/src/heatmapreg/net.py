"""A small convolutional regressor with hand-written forward/backward passes.

The network is deliberately tiny: 3x3 convolutions with ReLU, one 2x2
average-pool downsample, one nearest-neighbor upsample, and a final 3x3
projection to the output channels. Spatial dimensions are preserved
end-to-end (inputs must have even height and width), so a (Cin, H, W) input
maps to a (Cout, H, W) heatmap stack.

Convolutions are evaluated as im2col matrix products; the input gradient is
the correlation of the output gradient with the flipped, transposed kernel,
which reuses the same im2col path. All state lives in plain numpy arrays
(float32 by default for training throughput, float64 available for
finite-difference verification) and every pass is deterministic for a fixed
parameter state and input.
"""

from __future__ import annotations

import numpy as np

from .exceptions import ShapeError

__all__ = ["Conv3x3", "ReLU", "AvgPool2", "Upsample2", "TinyNet"]


def _im2col3(x: np.ndarray) -> np.ndarray:
    """(B, C, H, W) -> (B, 9C, H*W): a block of C rows per 3x3 tap offset."""
    b, c, h, w = x.shape
    padded = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    cols = np.empty((b, 9 * c, h * w), dtype=x.dtype)
    view = cols.reshape(b, 9 * c, h, w)
    k = 0
    for dy in range(3):
        for dx in range(3):
            view[:, k : k + c] = padded[:, :, dy : dy + h, dx : dx + w]
            k += c
    return cols


def _taps_matrix(weight: np.ndarray) -> np.ndarray:
    """(Cout, Cin, 3, 3) -> (Cout, 9*Cin) rows matching the _im2col3 layout."""
    return np.ascontiguousarray(weight.transpose(0, 2, 3, 1)).reshape(len(weight), -1)


class Conv3x3:
    """3x3 convolution, stride 1, zero padding 1 (same spatial size)."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        rng: np.random.Generator,
        dtype=np.float32,
    ):
        std = np.sqrt(2.0 / (in_channels * 9))
        self.weight = rng.normal(0.0, std, size=(out_channels, in_channels, 3, 3)).astype(dtype)
        self.bias = np.zeros(out_channels, dtype=dtype)
        self.grad_weight = np.zeros_like(self.weight)
        self.grad_bias = np.zeros_like(self.bias)
        self._cols = None
        self._in_shape = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        b, c, h, w = x.shape
        self._cols = _im2col3(x)
        self._in_shape = x.shape
        out = np.matmul(_taps_matrix(self.weight), self._cols)
        out += self.bias[:, np.newaxis]
        return out.reshape(b, -1, h, w)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        b, c, h, w = self._in_shape
        cout = len(self.weight)
        g = np.ascontiguousarray(grad_out).reshape(b, cout, h * w)
        dw_taps = np.matmul(g, self._cols.transpose(0, 2, 1)).sum(axis=0)
        self.grad_weight += dw_taps.reshape(cout, 3, 3, c).transpose(0, 3, 1, 2)
        self.grad_bias += g.sum(axis=(0, 2))
        self._cols = None
        # input gradient: correlate grad_out with the flipped, transposed kernel
        w_flip = self.weight.transpose(1, 0, 2, 3)[:, :, ::-1, ::-1]
        gcols = _im2col3(g.reshape(b, cout, h, w))
        return np.matmul(_taps_matrix(w_flip), gcols).reshape(b, c, h, w)

    def parameters(self):
        return [self.weight, self.bias]

    def gradients(self):
        return [self.grad_weight, self.grad_bias]


class ReLU:
    def __init__(self):
        self._mask = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        np.maximum(x, 0.0, out=x)
        self._mask = x > 0
        return x

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        grad_out *= self._mask
        self._mask = None
        return grad_out

    def parameters(self):
        return []

    def gradients(self):
        return []


class AvgPool2:
    """2x2 average pooling; requires even spatial dimensions."""

    def __init__(self):
        self._in_shape = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        b, c, h, w = x.shape
        if h % 2 or w % 2:
            raise ShapeError(f"pooling requires even spatial dims, got {h}x{w}")
        self._in_shape = x.shape
        return x.reshape(b, c, h // 2, 2, w // 2, 2).mean(axis=(3, 5))

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        b, c, h, w = self._in_shape
        g = grad_out[:, :, :, np.newaxis, :, np.newaxis] / 4.0
        out = np.broadcast_to(g, (b, c, h // 2, 2, w // 2, 2)).reshape(b, c, h, w)
        return out.astype(grad_out.dtype, copy=False)

    def parameters(self):
        return []

    def gradients(self):
        return []


class Upsample2:
    """Nearest-neighbor 2x upsampling."""

    def forward(self, x: np.ndarray) -> np.ndarray:
        return np.repeat(np.repeat(x, 2, axis=2), 2, axis=3)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        b, c, h, w = grad_out.shape
        return grad_out.reshape(b, c, h // 2, 2, w // 2, 2).sum(axis=(3, 5))

    def parameters(self):
        return []

    def gradients(self):
        return []


class TinyNet:
    """conv-relu-pool-conv-relu-upsample-conv heatmap regressor."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        hidden: int = 8,
        rng: np.random.Generator | None = None,
        dtype=np.float32,
    ):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.hidden = hidden
        self.dtype = np.dtype(dtype)
        self.layers = [
            Conv3x3(in_channels, hidden, rng, dtype),
            ReLU(),
            AvgPool2(),
            Conv3x3(hidden, hidden, rng, dtype),
            ReLU(),
            Upsample2(),
            Conv3x3(hidden, out_channels, rng, dtype),
        ]

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.ndim != 4 or x.shape[1] != self.in_channels:
            raise ShapeError(
                f"expected (B, {self.in_channels}, H, W) input, got {x.shape}"
            )
        x = np.asarray(x, dtype=self.dtype)
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        grad_out = np.asarray(grad_out, dtype=self.dtype)
        for layer in reversed(self.layers):
            grad_out = layer.backward(grad_out)
        return grad_out

    def parameters(self) -> list[np.ndarray]:
        return [p for layer in self.layers for p in layer.parameters()]

    def gradients(self) -> list[np.ndarray]:
        return [g for layer in self.layers for g in layer.gradients()]

    def zero_gradients(self) -> None:
        for g in self.gradients():
            g[...] = 0.0

    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters())

    def load_parameters(self, tensors) -> None:
        params = self.parameters()
        if len(tensors) != len(params):
            raise ShapeError(
                f"expected {len(params)} parameter tensors, got {len(tensors)}"
            )
        for p, t in zip(params, tensors):
            t = np.asarray(t)
            if t.shape != p.shape:
                raise ShapeError(f"parameter shape {t.shape} != expected {p.shape}")
            p[...] = t.astype(p.dtype)
