"""Small residual convolutional denoiser with hand-written backprop.

The network is a plain conv/ReLU stack that estimates the noise field; in
residual mode the denoised output is input minus that estimate, so a
zero-initialized network is exactly the identity map.

Layout conventions: feature tensors are (channels, height, width) float64,
kernels are (out_ch, in_ch, k, k). Convolution is cross-correlation with
zero same-padding, implemented as an im2col matrix product; the backward
pass is the exact transpose of the same linear map.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import InvalidInputError
from .image import Image
from .rng import DOMAIN_INIT, normal, stream


@dataclass
class ConvLayer:
    """One convolution: kernels (out_ch, in_ch, k, k) and per-channel bias."""

    kernels: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        self.kernels = np.asarray(self.kernels, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.kernels.ndim != 4 or self.kernels.shape[2] != self.kernels.shape[3]:
            raise InvalidInputError(f"kernels must be (out, in, k, k), got {self.kernels.shape}")
        if self.k % 2 == 0:
            raise InvalidInputError(f"kernel size must be odd, got {self.k}")
        if self.bias.shape != (self.out_ch,):
            raise InvalidInputError(f"bias shape {self.bias.shape} != ({self.out_ch},)")
        if not (np.all(np.isfinite(self.kernels)) and np.all(np.isfinite(self.bias))):
            raise InvalidInputError("layer parameters must be finite")

    @property
    def out_ch(self) -> int:
        return self.kernels.shape[0]

    @property
    def in_ch(self) -> int:
        return self.kernels.shape[1]

    @property
    def k(self) -> int:
        return self.kernels.shape[2]


@dataclass
class TinyNet:
    """Conv/ReLU stack (ReLU after every layer but the last), 3 channels in and out."""

    layers: list[ConvLayer]
    residual_mode: bool = True

    def __post_init__(self):
        if not self.layers:
            raise InvalidInputError("network needs at least one layer")
        if self.layers[0].in_ch != 3 or self.layers[-1].out_ch != 3:
            raise InvalidInputError("first layer must take 3 channels and last layer emit 3")
        for a, b in zip(self.layers, self.layers[1:]):
            if a.out_ch != b.in_ch:
                raise InvalidInputError(f"channel mismatch between layers: {a.out_ch} -> {b.in_ch}")

    def parameters(self) -> list[np.ndarray]:
        """Flat parameter list [kernels0, bias0, kernels1, bias1, ...]."""
        return [arr for layer in self.layers for arr in (layer.kernels, layer.bias)]

    def parameter_names(self) -> list[str]:
        return [f"layer{i}.{n}" for i in range(len(self.layers)) for n in ("kernels", "bias")]


def build_tinynet(
    seed: int,
    hidden_channels: int = 16,
    hidden_depth: int = 3,
    kernel_size: int = 3,
    residual_mode: bool = True,
) -> TinyNet:
    """Seeded network: 3 -> hidden (x hidden_depth) -> 3, He-initialized.

    The final layer starts near zero (scale 1e-3) so the residual network
    begins close to the identity map, which stabilizes early training.
    """
    rng = stream(seed, DOMAIN_INIT)
    dims = [3] + [hidden_channels] * (hidden_depth + 1) + [3]
    layers = []
    for i, (cin, cout) in enumerate(zip(dims, dims[1:])):
        shape = (cout, cin, kernel_size, kernel_size)
        if i == len(dims) - 2:
            scale = 1e-3
        else:
            scale = np.sqrt(2.0 / (cin * kernel_size * kernel_size))
        layers.append(ConvLayer(normal(rng, shape, scale), np.zeros(cout)))
    return TinyNet(layers, residual_mode=residual_mode)


@dataclass
class ConvCache:
    cols: np.ndarray  # (in_ch*k*k, H*W) im2col matrix of the padded input
    x_shape: tuple
    layer: ConvLayer


def conv_forward(x: np.ndarray, layer: ConvLayer) -> tuple[np.ndarray, ConvCache]:
    """Same-padded cross-correlation of (C, H, W) input with the layer."""
    if x.ndim != 3 or x.shape[0] != layer.in_ch:
        raise InvalidInputError(f"input shape {x.shape} does not match layer in_ch {layer.in_ch}")
    _, h, w = x.shape
    k = layer.k
    p = k // 2
    xp = np.pad(x, ((0, 0), (p, p), (p, p)))
    wins = sliding_window_view(xp, (k, k), axis=(1, 2))  # (C, H, W, k, k)
    cols = wins.transpose(0, 3, 4, 1, 2).reshape(layer.in_ch * k * k, h * w)
    out = (layer.kernels.reshape(layer.out_ch, -1) @ cols + layer.bias[:, None]).reshape(
        layer.out_ch, h, w
    )
    return out, ConvCache(cols, x.shape, layer)


def conv_backward(grad_out: np.ndarray, cache: ConvCache) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of conv_forward: (d/d input, d/d kernels, d/d bias)."""
    layer = cache.layer
    c, h, w = cache.x_shape
    k = layer.k
    p = k // 2
    if grad_out.shape != (layer.out_ch, h, w):
        raise InvalidInputError(f"grad shape {grad_out.shape} != output shape {(layer.out_ch, h, w)}")
    gmat = grad_out.reshape(layer.out_ch, h * w)
    grad_bias = grad_out.sum(axis=(1, 2))
    grad_kernels = (gmat @ cache.cols.T).reshape(layer.kernels.shape)
    gcols = (layer.kernels.reshape(layer.out_ch, -1).T @ gmat).reshape(c, k, k, h, w)
    # col2im: scatter each (dy, dx) tap back onto the padded input
    gxp = np.zeros((c, h + 2 * p, w + 2 * p))
    for dy in range(k):
        for dx in range(k):
            gxp[:, dy : dy + h, dx : dx + w] += gcols[:, dy, dx]
    return gxp[:, p : p + h, p : p + w], grad_kernels, grad_bias


def relu_forward(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Elementwise max(0, x); the cache is the positive mask."""
    mask = x > 0
    return np.where(mask, x, 0.0), mask


def relu_backward(grad_out: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Mask the gradient; the gradient at exactly 0 is 0."""
    return grad_out * mask


@dataclass
class NetCache:
    conv: list[ConvCache]
    masks: list[np.ndarray]
    residual: bool
    hw: tuple


@dataclass
class GradTape:
    """Parameter gradients (shapes mirror the layers) plus the input gradient."""

    kernel_grads: list[np.ndarray] = field(default_factory=list)
    bias_grads: list[np.ndarray] = field(default_factory=list)
    input_grad: Image | None = None

    def parameter_grads(self) -> list[np.ndarray]:
        """Flat list matching TinyNet.parameters() ordering."""
        return [arr for pair in zip(self.kernel_grads, self.bias_grads) for arr in pair]


def _stack_forward(net: TinyNet, x: np.ndarray) -> tuple[np.ndarray, list[ConvCache], list[np.ndarray]]:
    caches, masks = [], []
    t = x
    for i, layer in enumerate(net.layers):
        t, cache = conv_forward(t, layer)
        caches.append(cache)
        if i < len(net.layers) - 1:
            t, mask = relu_forward(t)
            masks.append(mask)
    return t, caches, masks


def net_forward(net: TinyNet, noisy: Image) -> tuple[Image, NetCache]:
    """Denoise one image; returns the output and the cache for backward.

    In residual mode the stack output is treated as a noise estimate and
    subtracted from the input; otherwise the stack output is returned
    directly. No clamping happens here.
    """
    if noisy.channels != 3:
        raise InvalidInputError(f"network input must have 3 channels, got {noisy.channels}")
    x = noisy.data.transpose(2, 0, 1)
    est, caches, masks = _stack_forward(net, x)
    out = x - est if net.residual_mode else est
    return Image(out.transpose(1, 2, 0)), NetCache(caches, masks, net.residual_mode, x.shape[1:])


def net_backward(net: TinyNet, cache: NetCache, grad_out: Image) -> GradTape:
    """Exact gradients of the forward map for every parameter and the input."""
    if len(cache.conv) != len(net.layers) or cache.residual != net.residual_mode:
        raise RuntimeError("forward cache does not match this network")
    g = grad_out.data.transpose(2, 0, 1)
    if g.shape[1:] != cache.hw:
        raise RuntimeError(f"gradient spatial shape {g.shape[1:]} does not match cache {cache.hw}")
    # residual mode: output = input - stack(input), so the stack sees -g
    s = -g if net.residual_mode else g
    n = len(net.layers)
    kernel_grads: list[np.ndarray] = [np.empty(0)] * n
    bias_grads: list[np.ndarray] = [np.empty(0)] * n
    for i in range(n - 1, -1, -1):
        if i < n - 1:
            s = relu_backward(s, cache.masks[i])
        s, gk, gb = conv_backward(s, cache.conv[i])
        kernel_grads[i] = gk
        bias_grads[i] = gb
    gin = g + s if net.residual_mode else s
    return GradTape(kernel_grads, bias_grads, Image(gin.transpose(1, 2, 0)))
