"""Command-line front end.

Subcommands wire the numerical modules together; no numerics live here.
Every output is CSV or one of the binary dump formats, written atomically
(write-then-rename), and every randomized command takes a --seed whose
default comes from the HEATMAPREG_SEED environment variable.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .boundary import FIVE_POINT_SCHEMA, BoundarySchema, boundary_channel
from .coords import COORD_CHANNEL_ORDER, make_xy_radius, mask_boundary_coords
from .exceptions import DomainError, HeatmapError, SchemaError
from .formats import (
    atomic_write_text,
    read_annotations,
    read_heatmap_dump,
    write_annotations,
    write_heatmap_dump,
    write_model_params,
)
from .heatmaps import GaussianSpec, decode_landmarks, render_heatmap
from .losses import LossKind, LossParams, loss_grid
from .metrics import NormalizationRule, compute_report, nme, pck
from .trainer import TrainConfig, ablation_run, sweep_nme, train_and_evaluate
from .weighting import DEFAULT_MASK_THRESHOLD, DEFAULT_WEIGHT, build_mask

SEED_ENV_VAR = "HEATMAPREG_SEED"


def _default_seed() -> int:
    return int(os.environ.get(SEED_ENV_VAR, "0"))


def _write_csv(path, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    atomic_write_text(path, buf.getvalue())


def _parse_grid(spec: str) -> np.ndarray:
    """Parse 'start:stop:count' (inclusive linspace) or a comma list."""
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise DomainError(f"grid spec must be start:stop:count, got {spec!r}")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise DomainError(f"grid count must be >= 1, got {count}")
        return np.linspace(start, stop, count)
    values = [float(v) for v in spec.split(",") if v]
    if not values:
        raise DomainError(f"empty grid spec {spec!r}")
    return np.asarray(values)


def _parse_norm(spec: str) -> NormalizationRule:
    kind, _, rest = spec.partition(":")
    try:
        if kind == "interocular":
            i, j = (int(v) for v in rest.split(","))
            return NormalizationRule.interocular(i, j)
        if kind == "torso":
            i, j = (int(v) for v in rest.split(","))
            return NormalizationRule.torso(i, j)
        if kind == "interpupil":
            left, right = rest.split(";")
            return NormalizationRule.interpupil(
                [int(v) for v in left.split(",")], [int(v) for v in right.split(",")]
            )
        if kind == "const":
            return NormalizationRule.constant(float(rest))
    except (ValueError, TypeError) as exc:
        raise DomainError(f"bad normalization spec {spec!r}") from exc
    raise DomainError(
        f"unknown normalization kind {kind!r} "
        "(expected interocular/interpupil/torso/const)"
    )


def _loss_params(args, kind: str) -> LossParams:
    return LossParams(
        omega=args.omega,
        epsilon=args.epsilon,
        theta=args.theta,
        alpha=args.alpha,
        kind=LossKind(kind),
    )


def _add_loss_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--omega", type=float, default=14.0)
    parser.add_argument("--epsilon", type=float, default=1.0)
    parser.add_argument("--theta", type=float, default=0.5)
    parser.add_argument("--alpha", type=float, default=2.1)


def _add_budget_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--train-count", type=int, default=None)
    parser.add_argument("--test-count", type=int, default=None)
    parser.add_argument("--epochs", type=int, default=None)
    parser.add_argument("--batch-size", type=int, default=None)
    parser.add_argument("--learning-rate", type=float, default=None)
    parser.add_argument("--hidden", type=int, default=None)


def _budget_overrides(args) -> dict:
    overrides = {}
    for key in ("epochs", "batch_size", "learning_rate", "hidden"):
        value = getattr(args, key)
        if value is not None:
            overrides[key] = value
    return overrides


def cmd_curves(args) -> int:
    kinds = [k for k in args.kinds.split(",") if k]
    ys = _parse_grid(args.y_grid)
    errors = _parse_grid(args.error_grid)
    rows = [["loss_kind", "y", "error", "value", "gradient"]]
    for kind in kinds:
        params = _loss_params(args, kind)
        for y in ys:
            values, grads = loss_grid(
                np.full_like(errors, y), np.full_like(errors, y) - errors, params
            )
            for e, v, g in zip(errors, values, grads):
                rows.append([kind, float(y), float(e), float(v), float(g)])
    _write_csv(args.out, rows)
    return 0


def cmd_render(args) -> int:
    records = read_annotations(args.annotations)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    kernel = GaussianSpec(sigma=args.sigma, size=args.kernel_size)
    for image_id, (w, h), landmarks in records:
        stack = render_heatmap(landmarks, (h, w), kernel, clamp=args.clamp)
        write_heatmap_dump(out_dir / f"{image_id}.hmap", stack)
    return 0


def cmd_decode(args) -> int:
    records = []
    for path in args.heatmaps:
        stack = read_heatmap_dump(path)
        decoded = decode_landmarks(stack)
        if decoded.degenerate.any():
            print(
                f"warning: {path}: degenerate (all-zero) channels "
                f"{np.flatnonzero(decoded.degenerate).tolist()}",
                file=sys.stderr,
            )
        h, w = stack.frame
        records.append((Path(path).stem, (w, h), decoded.landmarks))
    write_annotations(args.out, records)
    return 0


def cmd_mask(args) -> int:
    stack = read_heatmap_dump(args.heatmaps)
    mask = build_mask(stack, weight=args.weight, threshold=args.threshold)
    write_heatmap_dump(args.out, mask.mask.astype(np.float64))
    return 0


def cmd_boundary(args) -> int:
    schema = (
        BoundarySchema.parse(Path(args.schema).read_text("utf-8"))
        if args.schema
        else FIVE_POINT_SCHEMA
    )
    records = read_annotations(args.annotations)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for image_id, (w, h), landmarks in records:
        channel = boundary_channel(landmarks, schema, (h, w), sigma=args.sigma)
        write_heatmap_dump(out_dir / f"{image_id}.hmap", channel[np.newaxis])
    return 0


def cmd_coords(args) -> int:
    selection = tuple(s for s in args.select.split(",") if s)
    coords = make_xy_radius((args.height, args.width))
    if args.boundary_pred:
        pred = read_heatmap_dump(args.boundary_pred)
        coords = mask_boundary_coords(
            coords, pred.channels[args.channel_index], threshold=args.threshold
        )
    elif any(name in selection for name in ("bx", "by")):
        raise DomainError("bx/by need --boundary-pred")
    channels = np.stack([coords.get(name) for name in COORD_CHANNEL_ORDER if name in selection])
    write_heatmap_dump(args.out, channels)
    return 0


def cmd_evaluate(args) -> int:
    gt_records = read_annotations(args.gt)
    pred_records = read_annotations(args.pred)
    preds = {image_id: lm for image_id, _, lm in pred_records}
    missing = [image_id for image_id, _, _ in gt_records if image_id not in preds]
    if missing:
        raise SchemaError(f"predictions missing for image ids: {missing[:5]}")
    norm = _parse_norm(args.norm)
    ids, nmes, pcks = [], [], []
    for image_id, _, gt_lm in gt_records:
        pred_lm = preds[image_id]
        ids.append(image_id)
        nmes.append(nme(gt_lm, pred_lm, norm))
        if args.pck is not None:
            pcks.append(pck(gt_lm, pred_lm, norm, args.pck))
    report = compute_report(
        nmes,
        fr_threshold=args.fr_threshold,
        auc_threshold=args.auc_threshold,
        pck_value=float(np.mean(pcks)) if pcks else None,
    )
    rows = [
        ["metric", "value"],
        ["images", len(nmes)],
        ["mean_nme", report.mean_nme],
        ["fr", report.fr],
        ["fr_threshold", report.fr_threshold],
        ["auc", report.auc],
        ["auc_threshold", report.auc_threshold],
    ]
    if report.pck is not None:
        rows.append(["pck", report.pck])
        rows.append(["pck_fraction", args.pck])
    _write_csv(args.report, rows)
    _write_csv(args.ced, [["nme", "fraction"], *report.ced])
    if args.per_image:
        _write_csv(args.per_image, [["image_id", "nme"], *zip(ids, nmes)])
    return 0


def _load_train_config(args) -> TrainConfig:
    if args.config:
        config = TrainConfig.from_text(Path(args.config).read_text("utf-8"))
    else:
        config = TrainConfig(seed=_default_seed())
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    config = replace(config, **_budget_overrides(args))
    return config


def cmd_train(args) -> int:
    config = _load_train_config(args)
    train_count = args.train_count if args.train_count is not None else 200
    test_count = args.test_count if args.test_count is not None else 50
    result, mean_nme = train_and_evaluate(
        config, train_count, test_count, (args.frame_size, args.frame_size)
    )
    rows = [["epoch", "loss", "mse_all", "mse_fg"]]
    rows.extend([s.epoch, s.loss, s.mse_all, s.mse_fg] for s in result.trace)
    rows.append(["held_out_nme", mean_nme, "", ""])
    _write_csv(args.trace, rows)
    if args.model:
        write_model_params(args.model, result.net.parameters())
    print(f"held_out_nme={mean_nme!r}")
    return 0


def cmd_ablate(args) -> int:
    base = TrainConfig(seed=args.seed, **_budget_overrides(args))
    names = tuple(n for n in args.configs.split(",") if n) if args.configs else None
    rows = ablation_run(
        args.seed,
        base=base,
        train_count=args.train_count if args.train_count is not None else 500,
        test_count=args.test_count if args.test_count is not None else 100,
        frame=(args.frame_size, args.frame_size),
        names=names,
    )
    _write_csv(args.out, [["config", "nme"], *rows])
    for name, value in rows:
        print(f"{name}: nme={value:.4f}")
    return 0


def cmd_sweep(args) -> int:
    omegas = _parse_grid(args.omegas)
    epsilons = _parse_grid(args.epsilons)
    thetas = _parse_grid(args.thetas)
    base = TrainConfig(seed=args.seed, **_budget_overrides(args))
    rows = sweep_nme(
        omegas,
        epsilons,
        thetas,
        base=base,
        train_count=args.train_count if args.train_count is not None else 120,
        test_count=args.test_count if args.test_count is not None else 40,
        frame=(args.frame_size, args.frame_size),
    )
    if len(thetas) == 1 and (len(omegas) > 1 or len(epsilons) > 1):
        # omega columns x epsilon rows, like a printed parameter table
        by_cell = {(o, e): v for o, e, _, v in rows}
        out = [["epsilon\\omega", *[float(o) for o in omegas]]]
        for e in epsilons:
            out.append([float(e), *[by_cell[(float(o), float(e))] for o in omegas]])
        _write_csv(args.out, out)
    else:
        _write_csv(args.out, [["omega", "epsilon", "theta", "nme"], *rows])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heatmapreg",
        description="Heatmap-regression toolkit: losses, masks, codecs, metrics, trainer.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("curves", help="export loss value/gradient curves as CSV")
    p.add_argument("--kinds", default="mse,l1,wing,awing")
    p.add_argument("--y-grid", default="0:1:11")
    p.add_argument("--error-grid", default="-1:1:201")
    _add_loss_flags(p)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("render", help="render ground-truth heatmaps from annotations")
    p.add_argument("--annotations", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--kernel-size", type=int, default=7)
    p.add_argument("--clamp", action="store_true")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("decode", help="decode heatmap dumps to landmark annotations")
    p.add_argument("heatmaps", nargs="+")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("mask", help="build the weighted-loss-map mask from a gt dump")
    p.add_argument("--heatmaps", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--weight", type=float, default=DEFAULT_WEIGHT)
    p.add_argument("--threshold", type=float, default=DEFAULT_MASK_THRESHOLD)
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser("boundary", help="generate boundary channels from annotations")
    p.add_argument("--annotations", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--schema", default=None, help="segment file; built-in 5-point when omitted")
    p.add_argument("--sigma", type=float, default=1.0)
    p.set_defaults(func=cmd_boundary)

    p = sub.add_parser("coords", help="emit coordinate-encoding channels as a dump")
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--select", default="cx,cy,radius")
    p.add_argument("--boundary-pred", default=None)
    p.add_argument("--channel-index", type=int, default=0)
    p.add_argument("--threshold", type=float, default=0.05)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_coords)

    p = sub.add_parser("evaluate", help="score predictions against ground truth")
    p.add_argument("--gt", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--norm", required=True, help="interocular:i,j | interpupil:i,..;j,.. | torso:i,j | const:d")
    p.add_argument("--fr-threshold", type=float, default=0.10)
    p.add_argument("--auc-threshold", type=float, default=0.10)
    p.add_argument("--pck", type=float, default=None, help="also report PCK at this fraction")
    p.add_argument("--report", required=True)
    p.add_argument("--ced", required=True)
    p.add_argument("--per-image", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("train", help="train the tiny regressor on synthetic data")
    p.add_argument("--config", default=None, help="key=value config file")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    _add_budget_flags(p)
    p.add_argument("--frame-size", type=int, default=64)
    p.add_argument("--trace", required=True, help="per-epoch loss trace CSV")
    p.add_argument("--model", default=None, help="write trained parameters here")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("ablate", help="run the loss/weighting ablation table")
    p.add_argument("--seed", type=int, default=_default_seed())
    _add_budget_flags(p)
    p.add_argument("--frame-size", type=int, default=64)
    p.add_argument("--configs", default=None, help="comma list to restrict the variants")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("sweep", help="NME over a loss hyperparameter grid")
    p.add_argument("--omegas", default="10,12,14,16,18")
    p.add_argument("--epsilons", default="0.5,1,2")
    p.add_argument("--thetas", default="0.5")
    p.add_argument("--seed", type=int, default=_default_seed())
    _add_budget_flags(p)
    p.add_argument("--frame-size", type=int, default=64)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (HeatmapError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
