"""Batch command-line front end.

Subcommands mirror the pipeline stages so each is independently runnable
and cacheable: `features` builds the semantic field, `extract` the palette,
`edit` solves and applies strokes, `metrics` compares two images.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from . import editor, features, imgio, metrics, palette, weights
from .errors import DataError, NumericalError
from .superpixels import SuperpixelConfig


@dataclass
class RunConfig:
    wc: float = 1.0
    ws: float = 3.0
    threshold: float = 0.80
    superpixels: int = 800
    compactness: float = 10.0
    slic_iters: int = 10
    samples: int = 256
    kmeans_max_iters: int = 50
    kmeans_tol: float = 1e-5
    blur_sigma: float = 8.0

    def palette_config(self) -> palette.PaletteConfig:
        return palette.PaletteConfig(
            w_c=self.wc, w_s=self.ws, t=self.threshold,
            kmeans_max_iters=self.kmeans_max_iters, kmeans_tol=self.kmeans_tol,
        )

    def superpixel_config(self) -> SuperpixelConfig:
        return SuperpixelConfig(
            n_target=self.superpixels, compactness=self.compactness, iters=self.slic_iters
        )


def _merge_config(args: argparse.Namespace) -> RunConfig:
    """Config file values overridden by any explicitly passed flags."""
    cfg = RunConfig()
    if getattr(args, "config", None):
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read config file: {exc}")
        for key, value in doc.items():
            if not hasattr(cfg, key):
                raise DataError(f"unknown config key: {key}")
            setattr(cfg, key, type(getattr(cfg, key))(value))
    for key in vars(cfg):
        flag = getattr(args, key, None)
        if flag is not None:
            setattr(cfg, key, flag)
    return cfg


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--wc", type=float, help="color distance weight")
    p.add_argument("--ws", type=float, help="semantic distance weight")
    p.add_argument("--threshold", type=float, help="seed-selection stop threshold")
    p.add_argument("--superpixels", type=int, help="target superpixel count")
    p.add_argument("--compactness", type=float, help="superpixel compactness")
    p.add_argument("--samples", type=int, help="constraint sample count")
    p.add_argument("--config", help="JSON config file; flags win over it")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sempal")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("features", help="build the 3-channel semantic feature tensor")
    p.add_argument("image")
    p.add_argument("out")
    p.add_argument("--network-features", help="high-dimensional feature tensor file")
    _add_config_flags(p)

    p = sub.add_parser("extract", help="extract the semantic palette")
    p.add_argument("image")
    p.add_argument("features")
    p.add_argument("out")
    _add_config_flags(p)

    p = sub.add_parser("edit", help="solve strokes and write the recolored image")
    p.add_argument("image")
    p.add_argument("features")
    p.add_argument("palette")
    p.add_argument("strokes")
    p.add_argument("out")
    p.add_argument("--solution", help="solution JSON path (default: <out>.solution.json)")
    p.add_argument("--disable-propagation", action="store_true",
                   help="ablation: drop the propagation term")
    p.add_argument("--dump-weights", action="store_true",
                   help="write one grayscale weight map PNG per palette entry")
    _add_config_flags(p)

    p = sub.add_parser("metrics", help="print MSE / PSNR / SSIM for two images")
    p.add_argument("image_a")
    p.add_argument("image_b")
    return parser


def cmd_features(args: argparse.Namespace) -> int:
    cfg = _merge_config(args)
    img = imgio.load_image(args.image)
    if args.network_features:
        raw = imgio.load_feature_tensor(args.network_features)
        if (raw.width, raw.height) != (img.width, img.height):
            raise DataError("feature tensor dimensions do not match the image")
        field = features.prepare_field(raw)
    else:
        field = features.fallback_field(img, blur_sigma=cfg.blur_sigma)
    imgio.save_feature_tensor(
        imgio.RawFeatureTensor(
            width=field.width, height=field.height, dim=3,
            data=field.data.astype("float32"),
        ),
        args.out,
    )
    return 0


def cmd_extract(args: argparse.Namespace) -> int:
    cfg = _merge_config(args)
    img = imgio.load_image(args.image)
    field = _load_field(args.features, img)
    pal = palette.extract_palette(
        img, field, cfg.palette_config(), cfg.superpixel_config()
    )
    palette.save_palette(pal, args.out)
    print(pal.k)
    return 0


def cmd_edit(args: argparse.Namespace) -> int:
    cfg = _merge_config(args)
    img = imgio.load_image(args.image)
    field = _load_field(args.features, img)
    pal = palette.load_palette(args.palette)
    strokes = imgio.load_strokes(args.strokes)
    if (strokes.image_width, strokes.image_height) != (img.width, img.height):
        raise DataError("stroke document dimensions do not match the image")

    model = weights.fit_lambda(pal)
    wf = weights.weight_field(img, field, model)
    n_samples = 0 if args.disable_propagation else cfg.samples
    problem = editor.build_problem(
        img, field, model, wf, strokes, pal.config, constraint_samples=n_samples
    )
    solution = editor.solve_edit(problem)
    edited = editor.apply_edit(img, wf, solution)

    imgio.save_image(edited, args.out)
    solution_path = args.solution or f"{args.out}.solution.json"
    editor.save_solution(solution, solution_path)
    if args.dump_weights:
        stem = Path(args.out)
        for i in range(wf.k):
            imgio.save_gray_image(
                wf.data[:, :, i], str(stem.with_name(f"{stem.stem}_weight_{i}.png"))
            )
    print(json.dumps({
        "k": pal.k,
        "energy": solution.energy,
        "fidelity": solution.fidelity,
        "propagation": solution.propagation,
    }))
    return 0


def cmd_metrics(args: argparse.Namespace) -> int:
    a = imgio.load_image(args.image_a)
    b = imgio.load_image(args.image_b)
    rep = metrics.report(a, b)
    print(json.dumps({"mse": rep.mse, "psnr": rep.psnr, "ssim": rep.ssim}))
    return 0


def _load_field(path: str, img: imgio.ImageRGB) -> features.FeatureField:
    raw = imgio.load_feature_tensor(path)
    if (raw.width, raw.height) != (img.width, img.height):
        raise DataError("feature tensor dimensions do not match the image")
    return features.prepare_field(raw)


_COMMANDS = {
    "features": cmd_features,
    "extract": cmd_extract,
    "edit": cmd_edit,
    "metrics": cmd_metrics,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
