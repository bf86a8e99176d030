"""Command-line surface.

Subcommands: synth (build a blur dataset), train, deblur (run the deblurrer
over a directory), motion (estimate and render motion maps), eval (metric
report between two image directories), gradcheck (finite-difference suite).
Heavy imports happen after argument parsing so --threads can cap the BLAS
thread pools before numpy loads.
"""

from __future__ import annotations

import argparse
import os
import sys


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="neurmap",
                                description="Unpaired motion deblurring toolkit")
    p.add_argument("--seed", type=int, default=None, help="override the command's seed")
    p.add_argument("--config", default=None, help="training config file")
    p.add_argument("--threads", type=int, default=None,
                   help="cap BLAS/OpenMP threads (set before numpy loads)")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("synth", help="synthesize a kernel-blurred dataset")
    sp.add_argument("--sharp-dir", required=True)
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--kernels-per-image", type=int, default=6)
    sp.add_argument("--alpha", type=float, default=40.0)
    sp.add_argument("--smoothness", type=float, default=0.5)
    sp.add_argument("--n-segments", type=int, default=3)
    sp.add_argument("--mean-magnitude", type=float, default=6.0)
    sp.add_argument("--n-steps", type=int, default=15)
    sp.add_argument("--zero-motion", action="store_true",
                    help="override all fields with zero motion")
    sp.add_argument("--generate-sharp", type=int, default=0, metavar="N",
                    help="first fill --sharp-dir with N procedural images")
    sp.add_argument("--size", type=int, default=64,
                    help="side length of generated sharp images")

    tp = sub.add_parser("train", help="run the training loop")
    tp.add_argument("--resume", default=None, help="checkpoint to continue from")

    dp = sub.add_parser("deblur", help="deblur every image in a directory")
    dp.add_argument("--ckpt", required=True)
    dp.add_argument("--in-dir", required=True)
    dp.add_argument("--out-dir", required=True)

    mp = sub.add_parser("motion", help="estimate motion maps for a directory")
    mp.add_argument("--ckpt", required=True)
    mp.add_argument("--in-dir", required=True)
    mp.add_argument("--out-dir", required=True)

    ep = sub.add_parser("eval", help="PSNR/SSIM (and motion MSE) report")
    ep.add_argument("--pred-dir", required=True)
    ep.add_argument("--gt-dir", required=True)
    ep.add_argument("--pred-mmap-dir", default=None)
    ep.add_argument("--gt-mmap-dir", default=None)
    ep.add_argument("--out-csv", default=None)

    gp = sub.add_parser("gradcheck", help="finite-difference gradient suite")
    gp.add_argument("--quiet", action="store_true")
    return p


def _cmd_synth(args) -> int:
    from ..blurcore.dataset import make_dataset, make_sharp_dir
    seed = args.seed if args.seed is not None else 0
    if args.generate_sharp:
        make_sharp_dir(args.sharp_dir, args.generate_sharp, args.size, seed + 9000)
    rows = make_dataset(args.sharp_dir, args.kernels_per_image, seed, args.out_dir,
                        alpha=args.alpha, smoothness=args.smoothness,
                        n_segments=args.n_segments, mean_magnitude=args.mean_magnitude,
                        n_steps=args.n_steps, zero_motion=args.zero_motion)
    train_n = sum(1 for r in rows if r.split == "train")
    print(f"wrote {len(rows)} samples ({train_n} train / {len(rows) - train_n} test) "
          f"to {args.out_dir}")
    return 0


def _cmd_train(args) -> int:
    from ..trainer import TrainConfig, train
    if args.resume:
        ckpt = train(resume_path=args.resume)
    else:
        if not args.config:
            raise SystemExit("train: --config is required unless resuming")
        cfg = TrainConfig.from_file(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
            cfg.text = cfg.to_text()
        ckpt = train(cfg)
    print(f"finished at step {ckpt.step}")
    return 0


def _load_nets(ckpt_path):
    from ..trainer import load_checkpoint
    return load_checkpoint(ckpt_path).nets


def _cmd_deblur(args) -> int:
    from pathlib import Path

    from ..blurcore.io import list_images, load_image, save_image
    from ..diffengine import Tensor
    from ..networks import deblur_forward
    nets = _load_nets(args.ckpt)
    d = nets.d.detached()
    paths = list_images(args.in_dir)
    if not paths:
        raise SystemExit(f"deblur: no images in {args.in_dir}")
    for p in paths:
        img = load_image(p)
        out = deblur_forward(d, Tensor(img[None])).data[0]
        save_image(out, Path(args.out_dir) / p.name)
    print(f"deblurred {len(paths)} images into {args.out_dir}")
    return 0


def _cmd_motion(args) -> int:
    from pathlib import Path

    from ..blurcore.io import list_images, load_image, save_image
    from ..blurcore.motion import MotionMap, save_motion_map
    from ..diffengine import Tensor
    from ..networks import motion_forward
    from .flow import flow_to_color
    nets = _load_nets(args.ckpt)
    m = nets.m.detached()
    paths = list_images(args.in_dir)
    if not paths:
        raise SystemExit(f"motion: no images in {args.in_dir}")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for p in paths:
        img = load_image(p)
        mm = motion_forward(m, Tensor(img[None]))
        single = MotionMap(Tensor(mm.data[0]), mm.alpha)
        save_motion_map(single, out / f"{p.stem}.mmap")
        save_image(flow_to_color(single), out / f"{p.stem}_flow.png")
    print(f"wrote motion maps for {len(paths)} images into {args.out_dir}")
    return 0


def _cmd_eval(args) -> int:
    from pathlib import Path

    from ..blurcore.io import list_images, load_image
    from ..blurcore.motion import load_motion_map
    from .metrics import MetricReport, motion_mse, psnr, ssim
    preds = {p.name: p for p in list_images(args.pred_dir)}
    gts = {p.name: p for p in list_images(args.gt_dir)}
    common = sorted(set(preds) & set(gts))
    if not common:
        raise SystemExit("eval: no common filenames between --pred-dir and --gt-dir")
    report = MetricReport()
    for name in common:
        a = load_image(preds[name])
        b = load_image(gts[name])
        mm = None
        if args.pred_mmap_dir and args.gt_mmap_dir:
            stem = Path(name).stem
            pm = Path(args.pred_mmap_dir) / f"{stem}.mmap"
            gm = Path(args.gt_mmap_dir) / f"{stem}.mmap"
            if pm.exists() and gm.exists():
                mm = motion_mse(load_motion_map(pm).data, load_motion_map(gm).data)
        report.add(name, psnr(a, b), ssim(a, b), mm)
    csv = report.to_csv()
    if args.out_csv:
        Path(args.out_csv).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out_csv).write_text(csv, encoding="utf-8")
    agg = report.aggregate()
    print(f"{'filename':<32s} {'psnr_db':>8s} {'ssim':>8s} {'motion_mse':>11s}")
    for r in sorted(report.rows, key=lambda r: r["filename"]):
        mm = "-" if r["motion_mse_px2"] is None else f"{r['motion_mse_px2']:.4f}"
        print(f"{r['filename']:<32.32s} {r['psnr_db']:>8.3f} {r['ssim']:>8.5f} {mm:>11s}")
    mm = "-" if agg.get("motion_mse_px2") is None else f"{agg['motion_mse_px2']:.4f}"
    print(f"{'MEAN of ' + str(agg['count']):<32s} "
          f"{agg['psnr_db']:>8.3f} {agg['ssim']:>8.5f} {mm:>11s}")
    return 0


def _cmd_gradcheck(args) -> int:
    from ..diffengine.gradcheck import run_suite
    results = run_suite(verbose=not args.quiet)
    failed = [(n, e, t) for n, e, t in results if e >= t]
    print(f"gradcheck: {len(results) - len(failed)}/{len(results)} checks passed")
    for n, e, t in failed:
        print(f"  FAILED {n}: max rel err {e:.3e} >= {t:.0e}")
    return 1 if failed else 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None and args.threads > 0:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)
    handlers = {"synth": _cmd_synth, "train": _cmd_train, "deblur": _cmd_deblur,
                "motion": _cmd_motion, "eval": _cmd_eval, "gradcheck": _cmd_gradcheck}
    try:
        return handlers[args.command](args)
    except SystemExit:
        raise
    except (ValueError, FileNotFoundError, OSError) as exc:
        print(f"neurmap {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
