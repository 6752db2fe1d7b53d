"""Benchmark harness: train one model per (loss, sigma_max) cell, evaluate
PSNR/SSIM across a grid of noise levels, and emit a comparison CSV.

Fairness and reproducibility rules:

* every cell trains from the same run seed, so initialization, clean
  corpus, patch crops, and noise realizations are identical across losses
  -- the loss is the only varying factor;
* evaluation images and noise come from the evaluation seed domain (low
  bit set), disjoint from all training streams (low bit cleared);
* trained parameters are rounded through checkpoint (float32) precision
  before evaluation, so a saved checkpoint reproduces the reported numbers
  exactly;
* the CSV contains no timestamps, so identical plans give byte-identical
  files. Wall-clock lives only on the in-memory report.

CSV layout: comment lines (config hash, seed, per-sigma noisy-input
baselines), a header ``sigma,<loss>_<sigmamax>_psnr,<loss>_<sigmamax>_ssim,
...`` followed by per-loss delta columns, one row per noise level with
fixed 4-decimal formatting, and a final ``mean`` row. Delta columns are
always recomputed from the table's own cells, never stored. The ssim
columns are an extension beyond plain PSNR tables.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .checkpoint import load_checkpoint, save_checkpoint
from .dataset import gen_clean
from .errors import InvalidInputError
from .fnv import fnv1a64
from .image import Image, clamp01
from .losses import LossSpec
from .metrics import psnr, ssim
from .net import TinyNet, build_tinynet, net_forward
from .pnm import load_image, save_image
from .rng import DOMAIN_EVAL_NOISE, eval_seed, normal, stream, train_seed
from .trainer import TrainConfig, train

DEFAULT_EVAL_SIGMAS = tuple(float(s) for s in range(5, 80, 5))


@dataclass(frozen=True)
class BenchPlan:
    """Everything a benchmark run depends on."""

    sigma_max_list: tuple[float, ...] = (55.0, 75.0)
    eval_sigmas: tuple[float, ...] = DEFAULT_EVAL_SIGMAS
    losses: tuple[LossSpec, ...] = (LossSpec("l1"), LossSpec("luml1", lam=1.0))
    steps: int = 500
    batch_size: int = 8
    lr: float = 1e-3
    patch_size: int = 32
    corpus_count: int = 64
    corpus_h: int = 40
    corpus_w: int = 40
    eval_count: int = 64
    eval_h: int = 40
    eval_w: int = 40
    hidden_channels: int = 16
    hidden_depth: int = 3
    seed: int = 909

    def __post_init__(self):
        if not self.eval_sigmas:
            raise InvalidInputError("eval_sigmas must not be empty")
        if any(b <= a for a, b in zip(self.eval_sigmas, self.eval_sigmas[1:])):
            raise InvalidInputError("eval_sigmas must be strictly increasing")
        if not self.losses or not self.sigma_max_list:
            raise InvalidInputError("need at least one loss and one sigma_max")
        labels = [s.label() for s in self.losses]
        if len(set(labels)) != len(labels):
            raise InvalidInputError(f"loss labels collide: {labels}")

    def train_config(self, loss: LossSpec, sigma_max: float) -> TrainConfig:
        return TrainConfig(
            loss=loss,
            steps=self.steps,
            batch_size=self.batch_size,
            lr=self.lr,
            seed=self.seed,
            sigma_max_255=sigma_max,
            patch_size=self.patch_size,
            corpus_count=self.corpus_count,
            corpus_h=self.corpus_h,
            corpus_w=self.corpus_w,
        )


def fast_plan() -> BenchPlan:
    """Desk-scale preset: one sigma_max, a couple of minutes on one core."""
    return BenchPlan(sigma_max_list=(25.0,))


def full_plan() -> BenchPlan:
    """The two training noise ceilings of the reference table layout."""
    return BenchPlan(sigma_max_list=(55.0, 75.0), steps=1500)


@dataclass
class BenchReport:
    plan: BenchPlan
    columns: list[tuple[str, float]]  # (loss label, sigma_max), plan order
    psnr_cells: dict  # (label, sigma_max, sigma) -> mean PSNR
    ssim_cells: dict
    noisy_psnr: dict  # sigma -> mean PSNR of the clamped noisy input
    noisy_ssim: dict
    config_hash: int = 0
    wall_clock_s: float = 0.0  # not serialized: reports must be byte-stable

    def delta(self, label: str, sigma_max: float, sigma: float, table: str = "psnr") -> float:
        """Cell minus the base (first) loss at the same sigma_max and sigma."""
        cells = self.psnr_cells if table == "psnr" else self.ssim_cells
        base = self.plan.losses[0].label()
        return cells[(label, sigma_max, sigma)] - cells[(base, sigma_max, sigma)]


def _eval_noisy_sets(plan: BenchPlan) -> tuple[list[Image], dict]:
    """Fixed eval images plus, per sigma, their noisy (unclamped) versions."""
    es = eval_seed(plan.seed)
    clean = gen_clean(es, plan.eval_count, plan.eval_h, plan.eval_w)
    noisy = {}
    for si, sigma in enumerate(plan.eval_sigmas):
        noisy[sigma] = [
            Image(im.data + normal(stream(es, DOMAIN_EVAL_NOISE, si, j), im.shape, sigma / 255.0))
            for j, im in enumerate(clean)
        ]
    return clean, noisy


def _round_through_checkpoint(net: TinyNet) -> None:
    """Snap parameters to float32 checkpoint precision, in place."""
    for layer in net.layers:
        layer.kernels = layer.kernels.astype("<f4").astype(np.float64)
        layer.bias = layer.bias.astype("<f4").astype(np.float64)


def _mean_scores(net: TinyNet, noisy: list[Image], clean: list[Image]) -> tuple[float, float]:
    ps, ss = [], []
    for n, c in zip(noisy, clean):
        out = clamp01(net_forward(net, n)[0])
        ps.append(psnr(out, c))
        ss.append(ssim(out, c))
    return float(np.mean(ps)), float(np.mean(ss))


def run_bench(plan: BenchPlan, ckpt_dir=None) -> BenchReport:
    """Train and evaluate every (loss, sigma_max) cell of the plan."""
    t_start = time.perf_counter()
    clean, noisy_sets = _eval_noisy_sets(plan)
    noisy_psnr, noisy_ssim = {}, {}
    for sigma in plan.eval_sigmas:
        ps = [psnr(clamp01(n), c) for n, c in zip(noisy_sets[sigma], clean)]
        ss = [ssim(clamp01(n), c) for n, c in zip(noisy_sets[sigma], clean)]
        noisy_psnr[sigma] = float(np.mean(ps))
        noisy_ssim[sigma] = float(np.mean(ss))
    columns = [(loss.label(), sm) for sm in plan.sigma_max_list for loss in plan.losses]
    psnr_cells, ssim_cells = {}, {}
    for sigma_max in plan.sigma_max_list:
        for loss in plan.losses:
            net = build_tinynet(
                train_seed(plan.seed),
                hidden_channels=plan.hidden_channels,
                hidden_depth=plan.hidden_depth,
            )
            train(net, plan.train_config(loss, sigma_max))
            _round_through_checkpoint(net)
            if ckpt_dir is not None:
                save_checkpoint(net, f"{ckpt_dir}/{loss.label()}_{_fmt_sigma(sigma_max)}.ckpt")
            for sigma in plan.eval_sigmas:
                p, s = _mean_scores(net, noisy_sets[sigma], clean)
                psnr_cells[(loss.label(), sigma_max, sigma)] = p
                ssim_cells[(loss.label(), sigma_max, sigma)] = s
    return BenchReport(
        plan=plan,
        columns=columns,
        psnr_cells=psnr_cells,
        ssim_cells=ssim_cells,
        noisy_psnr=noisy_psnr,
        noisy_ssim=noisy_ssim,
        config_hash=fnv1a64(format_plan(plan).encode()),
        wall_clock_s=time.perf_counter() - t_start,
    )


def _fmt_sigma(s: float) -> str:
    return f"{s:g}"


def _fmt_val(v: float) -> str:
    if math.isinf(v):
        return "inf"
    return f"{v:.4f}"


def report_to_csv(report: BenchReport) -> str:
    """Serialize the report; identical reports give identical bytes."""
    plan = report.plan
    base = plan.losses[0].label()
    lines = [
        "# mean reconstruction quality per noise level (std dev, 0-255 scale); "
        "ssim columns extend the plain psnr table; delta columns are computed "
        f"as each loss minus the base loss '{base}' at the same sigma_max",
        f"# seed={plan.seed} config=fnv64:{report.config_hash:016x}",
    ]
    for sigma in plan.eval_sigmas:
        lines.append(
            f"# noisy_baseline sigma={_fmt_sigma(sigma)} "
            f"psnr={_fmt_val(report.noisy_psnr[sigma])} ssim={_fmt_val(report.noisy_ssim[sigma])}"
        )
    header = ["sigma"]
    for label, sm in report.columns:
        header += [f"{label}_{_fmt_sigma(sm)}_psnr", f"{label}_{_fmt_sigma(sm)}_ssim"]
    delta_cols = [
        (label, sm)
        for sm in plan.sigma_max_list
        for label in [s.label() for s in plan.losses[1:]]
    ]
    for label, sm in delta_cols:
        header += [f"delta-{label}_{_fmt_sigma(sm)}_psnr", f"delta-{label}_{_fmt_sigma(sm)}_ssim"]
    lines.append(",".join(header))

    def row_values(sigma: float) -> list[float]:
        vals = []
        for label, sm in report.columns:
            vals += [report.psnr_cells[(label, sm, sigma)], report.ssim_cells[(label, sm, sigma)]]
        for label, sm in delta_cols:
            vals += [
                report.delta(label, sm, sigma, "psnr"),
                report.delta(label, sm, sigma, "ssim"),
            ]
        return vals

    rows = [row_values(sigma) for sigma in plan.eval_sigmas]
    for sigma, vals in zip(plan.eval_sigmas, rows):
        lines.append(",".join([_fmt_sigma(sigma)] + [_fmt_val(v) for v in vals]))
    means = [float(np.mean(col)) for col in zip(*rows)]
    lines.append(",".join(["mean"] + [_fmt_val(v) for v in means]))
    return "\n".join(lines) + "\n"


def parse_report_csv(text: str) -> dict:
    """Parse a report CSV back into its values.

    Returns a dict with ``columns`` (header names after ``sigma``), ``rows``
    mapping sigma -> list of floats, ``mean`` (list of floats), and
    ``noisy`` mapping sigma -> (psnr, ssim) from the baseline comments.
    """
    noisy = {}
    header = None
    rows = {}
    mean = None
    for line in text.splitlines():
        if line.startswith("#"):
            if "noisy_baseline" in line:
                parts = dict(p.split("=") for p in line.split() if "=" in p)
                noisy[float(parts["sigma"])] = (float(parts["psnr"]), float(parts["ssim"]))
            continue
        if not line.strip():
            continue
        cells = line.split(",")
        if header is None:
            header = cells
            continue
        if cells[0] == "mean":
            mean = [float(c) for c in cells[1:]]
        else:
            rows[float(cells[0])] = [float(c) for c in cells[1:]]
    if header is None:
        raise InvalidInputError("CSV has no header row")
    return {"columns": header[1:], "rows": rows, "mean": mean, "noisy": noisy}


def denoise_file(ckpt_path, in_path, out_path) -> None:
    """Run a checkpointed model over one image file and save the clamped result."""
    net = load_checkpoint(ckpt_path)
    img = load_image(in_path)
    out, _ = net_forward(net, img)
    save_image(clamp01(out), out_path)


# ---------------------------------------------------------------------------
# plan files: plain key=value lines


_PLAN_DEFAULT = BenchPlan()


def format_plan(plan: BenchPlan) -> str:
    """Canonical key=value serialization (also the config-hash input)."""
    lum_specs = [s for s in plan.losses if s.kind == "luml1"]
    lam = lum_specs[0].lam if lum_specs else 1.0
    pixel_base = lum_specs[0].pixel_base if lum_specs else "l1"
    loss_tokens = []
    for spec in plan.losses:
        if spec.kind == "luml1" and spec.lam != lam:
            loss_tokens.append(f"luml1:{spec.lam:g}")
        else:
            loss_tokens.append(spec.kind)
    lines = [
        f"sigma_max={','.join(_fmt_sigma(s) for s in plan.sigma_max_list)}",
        f"eval_sigmas={','.join(_fmt_sigma(s) for s in plan.eval_sigmas)}",
        f"losses={','.join(loss_tokens)}",
        f"lambda={lam:g}",
        f"pixel_base={pixel_base}",
        f"steps={plan.steps}",
        f"batch_size={plan.batch_size}",
        f"lr={plan.lr:g}",
        f"patch_size={plan.patch_size}",
        f"corpus_count={plan.corpus_count}",
        f"corpus_size={plan.corpus_h}x{plan.corpus_w}",
        f"eval_count={plan.eval_count}",
        f"eval_size={plan.eval_h}x{plan.eval_w}",
        f"hidden_channels={plan.hidden_channels}",
        f"hidden_depth={plan.hidden_depth}",
        f"seed={plan.seed}",
    ]
    return "\n".join(lines) + "\n"


def parse_kv(text: str) -> dict[str, str]:
    """Parse key=value lines; '#' starts a comment, blank lines are ignored."""
    out = {}
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidInputError(f"line {ln}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def parse_size(token: str) -> tuple[int, int]:
    try:
        h, w = token.lower().split("x")
        return int(h), int(w)
    except ValueError:
        raise InvalidInputError(f"expected HxW size, got {token!r}") from None


def parse_plan(text: str) -> BenchPlan:
    kv = parse_kv(text)
    known = {
        "sigma_max", "eval_sigmas", "losses", "lambda", "pixel_base", "steps",
        "batch_size", "lr", "patch_size", "corpus_count", "corpus_size",
        "eval_count", "eval_size", "hidden_channels", "hidden_depth", "seed",
    }
    for key in kv:
        if key not in known:
            raise InvalidInputError(f"unknown plan key {key!r}")
    d = _PLAN_DEFAULT
    lam = float(kv.get("lambda", "1.0"))
    pixel_base = kv.get("pixel_base", "l1")

    def loss_from(token: str) -> LossSpec:
        kind, _, suffix = token.partition(":")
        spec_lam = float(suffix) if suffix else lam
        if kind == "luml1":
            return LossSpec("luml1", lam=spec_lam, pixel_base=pixel_base)
        return LossSpec(kind)

    losses = tuple(loss_from(t) for t in kv["losses"].split(",")) if "losses" in kv else d.losses
    corpus_h, corpus_w = parse_size(kv["corpus_size"]) if "corpus_size" in kv else (d.corpus_h, d.corpus_w)
    eval_h, eval_w = parse_size(kv["eval_size"]) if "eval_size" in kv else (d.eval_h, d.eval_w)
    return BenchPlan(
        sigma_max_list=tuple(float(s) for s in kv["sigma_max"].split(",")) if "sigma_max" in kv else d.sigma_max_list,
        eval_sigmas=tuple(float(s) for s in kv["eval_sigmas"].split(",")) if "eval_sigmas" in kv else d.eval_sigmas,
        losses=losses,
        steps=int(kv.get("steps", d.steps)),
        batch_size=int(kv.get("batch_size", d.batch_size)),
        lr=float(kv.get("lr", d.lr)),
        patch_size=int(kv.get("patch_size", d.patch_size)),
        corpus_count=int(kv.get("corpus_count", d.corpus_count)),
        corpus_h=corpus_h,
        corpus_w=corpus_w,
        eval_count=int(kv.get("eval_count", d.eval_count)),
        eval_h=eval_h,
        eval_w=eval_w,
        hidden_channels=int(kv.get("hidden_channels", d.hidden_channels)),
        hidden_depth=int(kv.get("hidden_depth", d.hidden_depth)),
        seed=int(kv.get("seed", d.seed)),
    )


def load_plan(path) -> BenchPlan:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_plan(fh.read())
