"""Deterministic training: Adam, the blind training loop, and direct pixel
optimization.

A run is fully determined by its config: the seed fixes the clean corpus,
the patch/noise stream, and (by convention, via build_tinynet) the network
initialization, so identical configs produce bit-identical parameters. The
corpus comes from the training seed domain; periodic validation images come
from the evaluation domain and never overlap it.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .dataset import BlindTrainSpec, NoiseSpec, add_noise, gen_clean, make_blind_batches
from .errors import InvalidInputError, NumericalError
from .image import Image, clamp01
from .losses import LossSpec, eval_loss
from .metrics import psnr, ssim
from .net import TinyNet, net_backward, net_forward
from .checkpoint import save_checkpoint
from .rng import eval_seed, train_seed


@dataclass(frozen=True)
class TrainConfig:
    loss: LossSpec = field(default_factory=LossSpec)
    steps: int = 500
    batch_size: int = 8
    lr: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    sigma_max_255: float = 25.0
    patch_size: int = 32
    corpus_count: int = 64
    corpus_h: int = 40
    corpus_w: int = 40
    checkpoint_every: int = 0  # 0: only the final checkpoint is written

    def __post_init__(self):
        if self.steps < 0 or self.batch_size < 1:
            raise InvalidInputError("steps must be >= 0 and batch_size >= 1")
        if not (0.0 < self.adam_beta1 < 1.0 and 0.0 < self.adam_beta2 < 1.0):
            raise InvalidInputError("Adam betas must lie strictly between 0 and 1")
        if self.adam_eps <= 0 or self.lr <= 0:
            raise InvalidInputError("lr and adam_eps must be positive")

    def blind_spec(self) -> BlindTrainSpec:
        return BlindTrainSpec(
            sigma_max_255=self.sigma_max_255,
            patch_size=self.patch_size,
            count=self.steps * self.batch_size,
            seed=train_seed(self.seed),
        )


@dataclass
class TrainLog:
    """Per-step loss curve plus periodic validation metrics."""

    steps: list[tuple[int, float, float]] = field(default_factory=list)  # (step, loss, ms)
    validations: list[tuple[int, float, float]] = field(default_factory=list)  # (step, psnr, ssim)

    def to_csv(self) -> str:
        val = {s: (p, q) for s, p, q in self.validations}
        lines = ["step,loss,ms,val_psnr,val_ssim"]
        for s, loss, ms in self.steps:
            p, q = val.get(s, (None, None))
            tail = f",{p:.4f},{q:.4f}" if p is not None else ",,"
            lines.append(f"{s},{loss:.8f},{ms:.3f}" + tail)
        return "\n".join(lines) + "\n"


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def for_params(cls, params: list[np.ndarray]) -> "AdamState":
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params])


def adam_step(
    params: list[np.ndarray],
    grads: list[np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    names: list[str] | None = None,
) -> None:
    """One in-place Adam update with bias-corrected moments."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise InvalidInputError("params, grads, and state must have matching lengths")
    state.t += 1
    c1 = 1.0 - beta1**state.t
    c2 = 1.0 - beta2**state.t
    for i, (p, g) in enumerate(zip(params, grads)):
        if g.shape != p.shape:
            raise InvalidInputError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        if not np.all(np.isfinite(g)):
            label = names[i] if names else f"parameter {i}"
            raise NumericalError(f"non-finite gradient for {label}")
        m, v = state.m[i], state.v[i]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)


def _validation_set(cfg: TrainConfig, count: int = 4) -> list[tuple[Image, Image]]:
    sigma = cfg.sigma_max_255 / 2.0
    clean = gen_clean(eval_seed(cfg.seed), count, cfg.corpus_h, cfg.corpus_w)
    return [(add_noise(im, NoiseSpec(sigma, eval_seed(cfg.seed) + i)), im) for i, im in enumerate(clean)]


# parameters beyond float32 range cannot be checkpointed; treat as divergence
_PARAM_LIMIT = float(np.finfo(np.float32).max)


def train(net: TinyNet, cfg: TrainConfig, ckpt_path=None) -> tuple[TinyNet, TrainLog]:
    """Run the blind training loop, mutating ``net`` in place.

    Each step draws ``batch_size`` (noisy, clean) patch pairs, accumulates
    gradients of ``cfg.loss`` between network output and clean patch in item
    order, and applies one Adam update. A NaN or runaway value anywhere
    aborts with NumericalError; the last periodic checkpoint stays on disk.
    """
    log = TrainLog()
    if cfg.steps == 0:
        return net, log
    clean = gen_clean(train_seed(cfg.seed), cfg.corpus_count, cfg.corpus_h, cfg.corpus_w)
    batches = make_blind_batches(clean, cfg.blind_spec())
    params = net.parameters()
    names = net.parameter_names()
    state = AdamState.for_params(params)
    val_set = None
    for step in range(1, cfg.steps + 1):
        t0 = time.perf_counter()
        accum = [np.zeros_like(p) for p in params]
        total = 0.0
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                for _ in range(cfg.batch_size):
                    noisy, target = next(batches)
                    out, cache = net_forward(net, noisy)
                    result = eval_loss(cfg.loss, out, target)
                    tape = net_backward(net, cache, result.grad)
                    for acc, g in zip(accum, tape.parameter_grads()):
                        acc += g
                    total += result.value
        except InvalidInputError as exc:
            # non-finite activations surface as construction errors mid-forward
            raise NumericalError(f"aborted at step {step}: {exc}") from exc
        loss_value = total / cfg.batch_size
        if not np.isfinite(loss_value):
            raise NumericalError(f"aborted at step {step}: loss is not finite")
        for acc in accum:
            acc /= cfg.batch_size
        adam_step(params, accum, state, cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, names)
        for name, p in zip(names, params):
            if not np.all(np.isfinite(p)) or np.abs(p).max() > _PARAM_LIMIT:
                raise NumericalError(f"aborted at step {step}: runaway values in {name}")
        log.steps.append((step, loss_value, (time.perf_counter() - t0) * 1e3))
        if cfg.checkpoint_every > 0 and step % cfg.checkpoint_every == 0:
            if ckpt_path is not None:
                save_checkpoint(net, ckpt_path)
            if val_set is None:
                val_set = _validation_set(cfg)
            if min(cfg.corpus_h, cfg.corpus_w) >= 11:
                try:
                    with np.errstate(over="ignore", invalid="ignore"):
                        outs = [(clamp01(net_forward(net, n)[0]), c) for n, c in val_set]
                        log.validations.append(
                            (
                                step,
                                float(np.mean([psnr(o, c) for o, c in outs])),
                                float(np.mean([ssim(o, c) for o, c in outs])),
                            )
                        )
                except InvalidInputError as exc:
                    raise NumericalError(f"aborted at step {step}: {exc}") from exc
    if ckpt_path is not None:
        save_checkpoint(net, ckpt_path)
    return net, log


def optimize_pixels(init: Image, target: Image, loss: LossSpec, steps: int, lr: float) -> Image:
    """Plain gradient descent on a copy of ``init``'s pixels against ``target``.

    Isolates the behavior of a loss gradient from any network: the only
    moving parts are the pixels themselves.
    """
    from .image import require_same_shape

    require_same_shape(init, target, "optimize")
    x = init.data.copy()
    for _ in range(steps):
        out = eval_loss(loss, Image(x), target)
        x = x - lr * out.grad.data
    return Image(x)
