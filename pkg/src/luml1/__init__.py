"""Luminance-aware L1 training loss with a desk-scale blind-denoising benchmark.

The package provides:

* a combined loss (pixel L1 plus a weighted L1 penalty on the luminance
  projections of prediction and target) with analytic gradients,
* plain L1/L2 losses and MSE/PSNR/SSIM metrics,
* a tiny residual convolutional denoiser with hand-written backprop,
* a deterministic Adam training loop over synthetic blind-noise data, and
* a benchmark harness that compares losses across noise levels and emits
  CSV tables.
"""

from .bench import (
    BenchPlan,
    BenchReport,
    denoise_file,
    fast_plan,
    format_plan,
    full_plan,
    load_plan,
    parse_plan,
    parse_report_csv,
    report_to_csv,
    run_bench,
)
from .checkpoint import load_checkpoint, save_checkpoint
from .dataset import BlindTrainSpec, NoiseSpec, add_noise, gen_clean, make_blind_batches
from .errors import (
    CorruptCheckpointError,
    FormatError,
    InvalidInputError,
    LumL1Error,
    NumericalError,
)
from .image import (
    DEFAULT_WEIGHTS,
    Image,
    LuminanceWeights,
    clamp01,
    grayscale_backward,
    to_grayscale,
)
from .losses import (
    LossOutput,
    LossSpec,
    eval_loss,
    l1_loss,
    l2_loss,
    luminance_l1_loss,
    luminance_term,
)
from .metrics import SsimParams, mse, psnr, ssim
from .net import (
    ConvLayer,
    GradTape,
    TinyNet,
    build_tinynet,
    conv_backward,
    conv_forward,
    net_backward,
    net_forward,
    relu_backward,
    relu_forward,
)
from .pnm import load_image, save_image
from .trainer import AdamState, TrainConfig, TrainLog, adam_step, optimize_pixels, train

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "BenchPlan",
    "BenchReport",
    "BlindTrainSpec",
    "ConvLayer",
    "CorruptCheckpointError",
    "DEFAULT_WEIGHTS",
    "FormatError",
    "GradTape",
    "Image",
    "InvalidInputError",
    "LossOutput",
    "LossSpec",
    "LumL1Error",
    "LuminanceWeights",
    "NoiseSpec",
    "NumericalError",
    "SsimParams",
    "TinyNet",
    "TrainConfig",
    "TrainLog",
    "adam_step",
    "add_noise",
    "build_tinynet",
    "clamp01",
    "conv_backward",
    "conv_forward",
    "denoise_file",
    "eval_loss",
    "fast_plan",
    "format_plan",
    "full_plan",
    "gen_clean",
    "grayscale_backward",
    "l1_loss",
    "l2_loss",
    "load_checkpoint",
    "load_image",
    "load_plan",
    "luminance_l1_loss",
    "luminance_term",
    "make_blind_batches",
    "mse",
    "net_backward",
    "net_forward",
    "optimize_pixels",
    "parse_plan",
    "parse_report_csv",
    "psnr",
    "relu_backward",
    "relu_forward",
    "report_to_csv",
    "run_bench",
    "save_checkpoint",
    "save_image",
    "ssim",
    "to_grayscale",
    "train",
]
