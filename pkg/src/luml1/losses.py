"""Differentiable training losses, each returning value and analytic gradient.

Four losses are provided:

* ``l1_loss`` / ``l2_loss`` -- plain pixel losses, mean over all elements.
* ``luminance_term`` -- L1 distance between the luminance projections of
  prediction and target, mean over pixels.
* ``luminance_l1_loss`` -- a pixel loss (L1 by default, L2 selectable)
  plus ``lam`` times the luminance term.

All gradients are with respect to the prediction. Both mean normalizations
use the term's own element count (3*H*W for pixel terms, H*W for the
luminance term), which keeps the meaning of ``lam`` independent of image
resolution.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .image import (
    DEFAULT_WEIGHTS,
    Image,
    LuminanceWeights,
    grayscale_backward,
    require_same_shape,
    to_grayscale,
)

LOSS_KINDS = ("l1", "l2", "luml1")
PIXEL_BASES = ("l1", "l2")


@dataclass(frozen=True)
class LossOutput:
    """Scalar loss value plus d(value)/d(prediction), shaped like the prediction."""

    value: float
    grad: Image


@dataclass(frozen=True)
class LossSpec:
    """Which loss to evaluate and with what weighting.

    ``lam`` and ``pixel_base`` only matter for kind ``luml1``: the combined
    value is pixel_base + lam * luminance_term. With ``lam == 0`` the
    combined loss behaves exactly (bit-for-bit) like its pixel base.
    """

    kind: str = "l1"
    lam: float = 1.0
    pixel_base: str = "l1"
    weights: LuminanceWeights = field(default_factory=LuminanceWeights)

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise InvalidInputError(f"unknown loss kind {self.kind!r}, expected one of {LOSS_KINDS}")
        if self.pixel_base not in PIXEL_BASES:
            raise InvalidInputError(f"unknown pixel base {self.pixel_base!r}, expected one of {PIXEL_BASES}")
        if not (self.lam >= 0.0):
            raise InvalidInputError(f"lam must be nonnegative, got {self.lam}")

    def label(self) -> str:
        """Short name used in CSV column headers and CLI output."""
        if self.kind == "luml1" and self.lam != 1.0:
            return f"luml1-{self.lam:g}"
        return self.kind


def l1_loss(pred: Image, target: Image) -> LossOutput:
    """Mean absolute error; subgradient sign(0) = 0."""
    require_same_shape(pred, target, "compare")
    d = pred.data - target.data
    value = float(np.mean(np.abs(d)))
    grad = np.sign(d) / d.size
    return LossOutput(value, Image(grad))


def l2_loss(pred: Image, target: Image) -> LossOutput:
    """Mean squared error with gradient 2*(pred - target)/N."""
    require_same_shape(pred, target, "compare")
    d = pred.data - target.data
    value = float(np.mean(d * d))
    grad = 2.0 * d / d.size
    return LossOutput(value, Image(grad))


def luminance_term(pred: Image, target: Image, weights: LuminanceWeights = DEFAULT_WEIGHTS) -> LossOutput:
    """L1 distance between the luminance projections, mean over pixels.

    The gradient is back-projected through the transpose of the projection,
    so perturbations inside its null space (color changes that preserve the
    weighted sum) leave both value and gradient at zero.
    """
    require_same_shape(pred, target, "compare")
    if pred.channels != 3:
        raise InvalidInputError(f"luminance term needs 3-channel images, got {pred.channels} channels")
    d = to_grayscale(pred, weights).data - to_grayscale(target, weights).data
    m = d.size  # H*W: one luminance sample per pixel
    value = float(np.mean(np.abs(d)))
    grad1 = Image(np.sign(d) / m)
    return LossOutput(value, grayscale_backward(grad1, weights))


def luminance_l1_loss(pred: Image, target: Image, spec: LossSpec) -> LossOutput:
    """Pixel loss plus ``spec.lam`` times the luminance term."""
    if spec.kind != "luml1":
        raise InvalidInputError(f"luminance_l1_loss needs a 'luml1' spec, got {spec.kind!r}")
    base_fn = l1_loss if spec.pixel_base == "l1" else l2_loss
    base = base_fn(pred, target)
    if spec.lam == 0.0:
        return base  # contract: lam == 0 is bit-identical to the pixel base
    lum = luminance_term(pred, target, spec.weights)
    value = base.value + spec.lam * lum.value
    grad = base.grad.data + spec.lam * lum.grad.data
    return LossOutput(value, Image(grad))


def eval_loss(spec: LossSpec, pred: Image, target: Image) -> LossOutput:
    """Dispatch to the loss selected by ``spec.kind``."""
    if spec.kind == "l1":
        return l1_loss(pred, target)
    if spec.kind == "l2":
        return l2_loss(pred, target)
    return luminance_l1_loss(pred, target, spec)
