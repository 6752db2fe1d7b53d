"""Command-line interface.

Exit codes: 0 success, 1 invalid input, 2 numerical failure, 3 I/O or
file-format error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .bench import load_plan, parse_kv, parse_size, report_to_csv, run_bench, denoise_file
from .checkpoint import load_checkpoint
from .dataset import NoiseSpec, add_noise, gen_clean
from .errors import FormatError, InvalidInputError, NumericalError
from .gradcheck import run_gradcheck
from .image import Image, clamp01
from .losses import LossSpec, eval_loss, luminance_l1_loss
from .metrics import psnr, ssim
from .net import build_tinynet, net_forward
from .pnm import load_image, save_image
from .rng import DOMAIN_EVAL_NOISE, eval_seed, normal, stream, train_seed
from .trainer import TrainConfig, optimize_pixels, train


class _Parser(argparse.ArgumentParser):
    # usage errors are invalid input (exit 1), not argparse's default exit 2
    def error(self, message):
        raise InvalidInputError(message)


def _loss_spec(kind: str, lam: float, pixel_base: str) -> LossSpec:
    if kind == "luml1":
        return LossSpec("luml1", lam=lam, pixel_base=pixel_base)
    return LossSpec(kind)


def _train_config(args) -> TrainConfig:
    kv = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            kv = parse_kv(fh.read())
    known = {
        "loss", "lambda", "pixel_base", "steps", "batch_size", "lr", "adam_beta1",
        "adam_beta2", "adam_eps", "seed", "sigma_max", "patch_size", "corpus_count",
        "corpus_size", "checkpoint_every",
    }
    for key in kv:
        if key not in known:
            raise InvalidInputError(f"unknown config key {key!r}")
    kind = args.loss or kv.get("loss", "l1")
    lam = args.lam if args.lam is not None else float(kv.get("lambda", "1.0"))
    base = TrainConfig()
    corpus_h, corpus_w = parse_size(kv["corpus_size"]) if "corpus_size" in kv else (base.corpus_h, base.corpus_w)
    return TrainConfig(
        loss=_loss_spec(kind, lam, kv.get("pixel_base", "l1")),
        steps=int(kv.get("steps", base.steps)),
        batch_size=int(kv.get("batch_size", base.batch_size)),
        lr=float(kv.get("lr", base.lr)),
        adam_beta1=float(kv.get("adam_beta1", base.adam_beta1)),
        adam_beta2=float(kv.get("adam_beta2", base.adam_beta2)),
        adam_eps=float(kv.get("adam_eps", base.adam_eps)),
        seed=args.seed if args.seed is not None else int(kv.get("seed", base.seed)),
        sigma_max_255=args.sigma_max if args.sigma_max is not None else float(kv.get("sigma_max", base.sigma_max_255)),
        patch_size=int(kv.get("patch_size", base.patch_size)),
        corpus_count=int(kv.get("corpus_count", base.corpus_count)),
        corpus_h=corpus_h,
        corpus_w=corpus_w,
        checkpoint_every=int(kv.get("checkpoint_every", base.checkpoint_every)),
    )


def cmd_gen(args) -> int:
    h, w = parse_size(args.size)
    os.makedirs(args.out, exist_ok=True)
    images = gen_clean(args.seed, args.count, h, w)
    manifest = []
    for i, img in enumerate(images):
        paths = {
            "clean_ppm": os.path.join(args.out, f"clean_{i:04d}.ppm"),
            "clean_lumf": os.path.join(args.out, f"clean_{i:04d}.lumf"),
            "noisy_ppm": os.path.join(args.out, f"noisy_{i:04d}.ppm"),
            "noisy_lumf": os.path.join(args.out, f"noisy_{i:04d}.lumf"),
        }
        noisy = add_noise(img, NoiseSpec(args.sigma, args.seed + i))
        save_image(img, paths["clean_ppm"])
        save_image(img, paths["clean_lumf"])
        save_image(clamp01(noisy), paths["noisy_ppm"])
        save_image(noisy, paths["noisy_lumf"])
        manifest.append(f"{i} {args.sigma:g} " + " ".join(paths.values()))
    with open(os.path.join(args.out, "manifest.txt"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(manifest) + "\n")
    print(f"wrote {len(images)} clean/noisy pairs to {args.out}")
    return 0


def cmd_train(args) -> int:
    cfg = _train_config(args)
    net = build_tinynet(train_seed(cfg.seed))
    net, log = train(net, cfg, ckpt_path=args.out)
    if log.steps:
        first, last = log.steps[0][1], log.steps[-1][1]
        print(f"trained {cfg.steps} steps ({cfg.loss.label()}): loss {first:.6f} -> {last:.6f}")
    if args.log:
        with open(args.log, "w", encoding="utf-8") as fh:
            fh.write(log.to_csv())
    print(f"checkpoint written to {args.out}")
    return 0


def cmd_eval(args) -> int:
    net = load_checkpoint(args.ckpt)
    names = sorted(
        n for n in os.listdir(args.data) if n.endswith(".ppm") or n.endswith(".lumf")
    )
    if not names:
        raise InvalidInputError(f"no .ppm or .lumf images in {args.data}")
    clean = [load_image(os.path.join(args.data, n)) for n in names]
    sigmas = [float(s) for s in args.sigmas.split(",")]
    lines = ["sigma,psnr,ssim,noisy_psnr,noisy_ssim"]
    for si, sigma in enumerate(sigmas):
        ps, ss, nps, nss = [], [], [], []
        for j, img in enumerate(clean):
            noise = normal(stream(eval_seed(args.seed), DOMAIN_EVAL_NOISE, si, j), img.shape, sigma / 255.0)
            noisy_raw = Image(img.data + noise)
            noisy = clamp01(noisy_raw)
            out = clamp01(net_forward(net, noisy_raw)[0])
            ps.append(psnr(out, img))
            ss.append(ssim(out, img))
            nps.append(psnr(noisy, img))
            nss.append(ssim(noisy, img))
        lines.append(
            f"{sigma:g},{np.mean(ps):.4f},{np.mean(ss):.4f},{np.mean(nps):.4f},{np.mean(nss):.4f}"
        )
    text = "\n".join(lines) + "\n"
    with open(args.csv, "w", encoding="utf-8") as fh:
        fh.write(text)
    print(text, end="")
    return 0


def cmd_bench(args) -> int:
    plan = load_plan(args.plan)
    if args.ckpt_dir:
        os.makedirs(args.ckpt_dir, exist_ok=True)
    report = run_bench(plan, ckpt_dir=args.ckpt_dir)
    csv = report_to_csv(report)
    with open(args.csv, "w", encoding="utf-8") as fh:
        fh.write(csv)
    print(f"benchmark finished in {report.wall_clock_s:.1f}s; table written to {args.csv}")
    return 0


def cmd_denoise(args) -> int:
    denoise_file(args.ckpt, args.infile, args.outfile)
    print(f"denoised {args.infile} -> {args.outfile}")
    return 0


def cmd_metric(args) -> int:
    a = load_image(args.a)
    b = load_image(args.b)
    want_any = args.psnr or args.ssim or args.luml1
    if args.psnr or not want_any:
        print(f"psnr {psnr(a, b):.6f}")
    if args.ssim or not want_any:
        print(f"ssim {ssim(a, b):.6f}")
    if args.luml1:
        spec = LossSpec("luml1", lam=args.lam if args.lam is not None else 1.0)
        print(f"luml1 {luminance_l1_loss(a, b, spec).value:.6f}")
    return 0


def cmd_gradcheck(args) -> int:
    ok, lines = run_gradcheck(args.seed)
    for line in lines:
        print(line)
    return 0 if ok else 2


def cmd_pixopt(args) -> int:
    init = load_image(args.init)
    target = load_image(args.target)
    spec = _loss_spec(args.loss, args.lam if args.lam is not None else 1.0, args.pixel_base)
    result = optimize_pixels(init, target, spec, args.steps, args.lr)
    save_image(result, args.out)
    final = eval_loss(spec, result, target).value
    print(f"pixel optimization done: final {spec.label()} loss {final:.8f}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="luml1", description="Luminance-aware L1 loss and blind-denoising benchmark")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic clean/noisy corpus")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--size", required=True, help="image size as HxW")
    p.add_argument("--sigma", type=float, default=25.0, help="noise std dev on the 0-255 scale")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train a denoiser")
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--loss", choices=["l1", "l2", "luml1"])
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--sigma-max", dest="sigma_max", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--log", help="write the training log CSV here")
    p.add_argument("--out", required=True, help="checkpoint path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint over a clean-image directory")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--sigmas", default="5,10,15,20,25,30,35,40,45,50,55,60,65,70,75")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--csv", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="run a full benchmark plan")
    p.add_argument("--plan", required=True)
    p.add_argument("--csv", required=True)
    p.add_argument("--ckpt-dir", dest="ckpt_dir", help="also save per-cell checkpoints here")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("denoise", help="denoise one image with a checkpoint")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", dest="outfile", required=True)
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser("metric", help="compare two images")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--psnr", action="store_true")
    p.add_argument("--ssim", action="store_true")
    p.add_argument("--luml1", action="store_true")
    p.add_argument("--lambda", dest="lam", type=float)
    p.set_defaults(func=cmd_metric)

    p = sub.add_parser("gradcheck", help="run the finite-difference gradient suite")
    p.add_argument("--seed", type=int, default=9)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("pixopt", help="gradient-descend pixels of an image toward a target")
    p.add_argument("--init", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--loss", choices=["l1", "l2", "luml1"], default="l2")
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--pixel-base", dest="pixel_base", choices=["l1", "l2"], default="l1")
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--lr", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pixopt)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
