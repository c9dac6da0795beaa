"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 input/format error,
4 numerical error.
"""

import argparse
import logging
import sys
from pathlib import Path

from .errors import AamsError, ConfigurationError
from .metrics import LossRecord, SaliencyScores, saliency_metrics
from .pipeline import STAGES, StylizeConfig, default_betas, reconstruct, stylize, sweep
from .weights import random_bundle, read_weights, write_weights

log = logging.getLogger("aams")


def _floats(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _report_line(report):
    stages = " ".join(f"{s}={report.durations[s]:.4f}" for s in STAGES)
    h, w = report.input_dims[-2:]
    return f"strokes={report.strokes} height={h} width={w} {stages} total={report.total:.4f}"


def cmd_stylize(args):
    from .imageio import load_image, save_attention_map, save_image

    betas = args.betas if args.betas is not None else default_betas(args.strokes)
    cfg = StylizeConfig(
        strokes=args.strokes,
        betas=betas,
        gamma=args.gamma,
        sigma=args.sigma,
        patch=args.patch,
        max_side=args.max_side,
        emit_attention=args.emit_attention,
        output_path=args.out,
        weight_path=args.weights,
    )
    bundle = read_weights(args.weights)
    content = load_image(args.content, cfg.max_side)
    style = load_image(args.style, cfg.max_side)
    image, report, amap = stylize(content, style, bundle, cfg)
    save_image(args.out, image)
    if cfg.emit_attention:
        save_attention_map(cfg.emit_attention, amap)
    print(_report_line(report))


def cmd_reconstruct(args):
    from .imageio import load_image, save_image

    bundle = read_weights(args.weights)
    image = load_image(args.input, args.max_side)
    out, losses = reconstruct(image, bundle)
    save_image(args.out, out)
    if args.losses:
        Path(args.losses).write_text(LossRecord.CSV_HEADER + "\n" + losses.csv_row() + "\n")
    print(f"content={losses.content:.6g} attention={losses.attention:.6g} tv={losses.tv:.6g} total={losses.total:.6g}")


def cmd_attention_map(args):
    from .attention import AttentionParams, attention_feature
    from .codec import encode
    from .fusion import attention_filter
    from .imageio import load_image, save_attention_map
    from .pipeline import check_convention

    if args.sigma < 0:
        raise ConfigurationError(f"sigma must be non-negative, got {args.sigma}")
    bundle = read_weights(args.weights)
    check_convention(bundle)
    image = load_image(args.input, args.max_side)
    f = encode(image, bundle).relu4_1
    amap = attention_filter(attention_feature(f, AttentionParams.from_bundle(bundle)), args.sigma)
    save_attention_map(args.out, amap)
    print(f"height={amap.shape[0]} width={amap.shape[1]}")


def cmd_sweep(args):
    from .imageio import load_image, save_image

    base = StylizeConfig(patch=args.patch, max_side=args.max_side)
    bundle = read_weights(args.weights)
    content = load_image(args.content, base.max_side)
    style = load_image(args.style, base.max_side)
    result = sweep(content, style, bundle, args.gammas, args.strokes_list, args.sigmas, base)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for i, cell in enumerate(result.cells):
        save_image(out / f"cell{i:02d}_k{cell.strokes}_g{cell.gamma:g}_s{cell.sigma:g}.png", cell.trace.image)
    save_image(out / "montage.png", result.montage)
    (out / "report.csv").write_text(result.csv())
    print(f"cells={len(result.cells)} montage={out / 'montage.png'} report={out / 'report.csv'}")


def cmd_saliency(args):
    from .imageio import read_gray

    content = read_gray(args.content_map)
    stylized = read_gray(args.stylized_map)
    fixations = read_gray(args.fixations) > 0 if args.fixations else None
    scores = saliency_metrics(content, stylized, fixations)
    print(scores.record())
    if args.csv:
        path = Path(args.csv)
        header = not path.exists() or path.stat().st_size == 0
        with path.open("a") as fh:
            if header:
                fh.write(SaliencyScores.CSV_HEADER + "\n")
            fh.write(scores.csv_row() + "\n")


def cmd_init_weights(args):
    write_weights(args.out, random_bundle(args.seed))
    print(f"wrote random weights to {args.out}")


def build_parser():
    p = argparse.ArgumentParser(prog="aams", description="Attention-aware multi-stroke style transfer")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("stylize", help="stylize a content image with a style image")
    s.add_argument("--content", required=True)
    s.add_argument("--style", required=True)
    s.add_argument("--weights", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--strokes", type=int, default=2, help="number of swapped strokes K (K+1 in total)")
    s.add_argument("--betas", type=_floats, default=None, help="comma-separated style scales, one per stroke")
    s.add_argument("--gamma", type=float, default=50.0)
    s.add_argument("--sigma", type=float, default=1.0)
    s.add_argument("--patch", type=int, default=3)
    s.add_argument("--max-side", type=int, default=512)
    s.add_argument("--emit-attention", default=None, metavar="PNG")
    s.set_defaults(func=cmd_stylize)

    r = sub.add_parser("reconstruct", help="autoencoder reconstruction with loss report")
    r.add_argument("--input", required=True)
    r.add_argument("--weights", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--losses", default=None, metavar="CSV")
    r.add_argument("--max-side", type=int, default=512)
    r.set_defaults(func=cmd_reconstruct)

    a = sub.add_parser("attention-map", help="write the normalized attention map as grayscale PNG")
    a.add_argument("--input", required=True)
    a.add_argument("--weights", required=True)
    a.add_argument("--out", required=True)
    a.add_argument("--sigma", type=float, default=1.0)
    a.add_argument("--max-side", type=int, default=512)
    a.set_defaults(func=cmd_attention_map)

    w = sub.add_parser("sweep", help="grid of stylizations over gamma / stroke count / sigma")
    w.add_argument("--content", required=True)
    w.add_argument("--style", required=True)
    w.add_argument("--weights", required=True)
    w.add_argument("--gammas", type=_floats, default=[50.0])
    w.add_argument("--strokes-list", type=_ints, default=[2])
    w.add_argument("--sigmas", type=_floats, default=[1.0])
    w.add_argument("--patch", type=int, default=3)
    w.add_argument("--max-side", type=int, default=512)
    w.add_argument("--out-dir", required=True)
    w.set_defaults(func=cmd_sweep)

    m = sub.add_parser("saliency", help="consistency metrics between two saliency maps")
    m.add_argument("--content-map", required=True)
    m.add_argument("--stylized-map", required=True)
    m.add_argument("--fixations", default=None, help="binary mask image; default is the content map's top decile")
    m.add_argument("--csv", default=None)
    m.set_defaults(func=cmd_saliency)

    i = sub.add_parser("init-weights", help="write a randomly initialised AAMS-W1 bundle")
    i.add_argument("--out", required=True)
    i.add_argument("--seed", type=int, default=0)
    i.set_defaults(func=cmd_init_weights)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except AamsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
