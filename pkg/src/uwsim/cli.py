"""Command-line entry point: ``uwsim generate|evaluate|fit|loss|presets``.

Exit codes: 0 success, 1 partial failure, 2 config or usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import imaging, losses
from .fit import DegenerateProblemError, FitProblem, fit
from .imaging import ImageIOError
from .optics import WaterProfile, jerlov_preset, load_presets
from .pipeline import ConfigError, EvalConventions, PipelineConfig, run_evaluate, run_generate

EXIT_OK, EXIT_PARTIAL, EXIT_CONFIG = 0, 1, 2

PAIR_LOSSES = ("l1", "ssim", "ssim_loss", "pair_fixed", "pair_weighted")
TOTALS = ("technique1", "technique2", "technique3", "variant2")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def cmd_generate(args) -> int:
    overrides = list(args.set or ())
    if args.sp_bipolar:
        overrides.append("turbidity.bipolar=true")
    cfg = PipelineConfig.load(args.config, overrides=overrides, seed=args.seed)
    if args.exact_scatter:
        cfg.exact_scatter = True
    records = run_generate(cfg, workers=args.workers)
    failed = [r for r in records if r.status != "success"]
    print(f"generated {len(records) - len(failed)}/{len(records)} samples into {cfg.output_dir}")
    for rec in failed:
        print(f"failed {rec.id}: {rec.error}", file=sys.stderr)
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_evaluate(args) -> int:
    conv = EvalConventions(
        pred_key=args.key,
        truth_key=args.truth_key,
        kind=args.kind,
        half_res=args.half_res,
        depth_cap=tuple(args.depth_cap) if args.depth_cap else None,
        depth_scale=args.depth_scale,
    )
    try:
        results, agg = run_evaluate(args.pred, args.truth, conv)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        for res in results:
            out.write(json.dumps(res, sort_keys=True) + "\n")
        out.write(json.dumps({"aggregate": agg}, sort_keys=True) + "\n")
    finally:
        if args.out:
            out.close()
    return EXIT_PARTIAL if agg["failed"] else EXIT_OK


def _fit_init(cfg: dict) -> WaterProfile:
    init = cfg.get("init", {})
    if "preset" in init:
        return jerlov_preset(init["preset"], veiling=init.get("veiling"))
    return WaterProfile(tuple(init.get("beta", (0.1, 0.1, 0.1))), tuple(init.get("veiling", (0.5, 0.5, 0.5))))


def cmd_fit(args) -> int:
    cfg = {}
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read fit config: {exc}") from exc
    depth_cfg = cfg.get("depth", {})
    clean = imaging.load_rgb(args.clean)
    depth = imaging.load_depth(
        args.depth,
        scale=float(depth_cfg.get("scale", imaging.DEFAULT_DEPTH_SCALE)),
        clip=tuple(depth_cfg.get("clip", imaging.DEFAULT_DEPTH_CLIP)),
        expected_shape=clean.shape[:2],
    )
    observed = (imaging.read_f32 if args.observed.lower().endswith(".f32") else imaging.load_rgb)(args.observed)
    problem = FitProblem(
        clean,
        depth,
        observed,
        _fit_init(cfg),
        beta_max=float(cfg.get("beta_max", 10.0)),
        tol=float(cfg.get("tol", 1e-10)),
        max_iters=int(cfg.get("max_iters", 5000)),
    )
    try:
        result = fit(problem)
    except DegenerateProblemError as exc:
        print(json.dumps({"error": "degenerate", "reason": str(exc)}))
        return EXIT_PARTIAL
    print(json.dumps(result.to_dict(), sort_keys=True))
    return EXIT_OK


def _load_loss_plane(path: str, args) -> np.ndarray:
    if path.lower().endswith(".f32"):
        return imaging.read_f32(path)
    try:
        return imaging.load_rgb(path)
    except ImageIOError:
        return imaging.load_depth(path, scale=args.depth_scale, clip=tuple(args.depth_clip))


def cmd_loss(args) -> int:
    name = args.name
    w = args.weights or []
    if name in TOTALS:
        comps = args.components
        if comps is None:
            raise ConfigError(f"{name} needs --components")
        if name == "variant2":
            value = losses.total_variant2(comps, w)
        else:
            value = {"technique1": losses.total_technique1, "technique2": losses.total_technique2,
                     "technique3": losses.total_technique3}[name](*comps)
        print(f"{name}={value!r}")
        return EXIT_OK
    if not (args.a and args.b):
        raise ConfigError(f"{name} needs --a and --b")
    a = _load_loss_plane(args.a, args)
    b = _load_loss_plane(args.b, args)
    if args.reciprocal is not None:
        a = losses.depth_transform(a, args.reciprocal)
        b = losses.depth_transform(b, args.reciprocal)
    if name == "l1":
        value = losses.l1_mean(a, b)
    elif name in ("ssim", "ssim_loss"):
        value = losses.ssim_loss(a, b)
    elif name == "pair_fixed":
        lam = w or [losses.DEFAULT_LAMBDA, losses.DEFAULT_LAMBDA]
        if len(lam) != 2:
            raise ConfigError("pair_fixed takes two weights: lambda1,lambda2")
        value = losses.pair_loss_fixed(a, b, *lam)
    else:
        if len(w) != 1:
            raise ConfigError("pair_weighted takes one weight")
        value = losses.pair_loss_weighted(a, b, w[0])
    print(f"{name}={value!r}")
    return EXIT_OK


def cmd_presets(args) -> int:
    for name, p in load_presets(args.file).items():
        beta = " ".join(f"{v:.3f}" for v in p.beta)
        veil = " ".join(f"{v:.4f}" for v in p.veiling)
        print(f"{name:<4} beta={beta} veiling={veil}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uwsim", description="Synthesize and evaluate degraded underwater images.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="render a dataset from an RGB-D manifest")
    g.add_argument("--config", required=True)
    g.add_argument("--seed", type=int)
    g.add_argument("--exact-scatter", action="store_true", help="use the exact scattering sum")
    g.add_argument("--sp-bipolar", action="store_true", help="add dark particles on a sp_col background")
    g.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a dotted config key")
    g.add_argument("--workers", type=int)
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("evaluate", help="compare prediction and truth manifests")
    e.add_argument("--pred", required=True)
    e.add_argument("--truth", required=True)
    e.add_argument("--key", default="degraded", help="manifest entry to compare (default: degraded)")
    e.add_argument("--truth-key", help="entry in the truth manifest, if different")
    e.add_argument("--kind", choices=("image", "depth"), default="image")
    e.add_argument("--half-res", action="store_true")
    e.add_argument("--depth-cap", nargs=2, type=float, metavar=("LO", "HI"))
    e.add_argument("--depth-scale", type=float, default=imaging.DEFAULT_DEPTH_SCALE)
    e.add_argument("--out")
    e.set_defaults(func=cmd_evaluate)

    f = sub.add_parser("fit", help="recover attenuation and veiling light")
    f.add_argument("--clean", required=True)
    f.add_argument("--depth", required=True)
    f.add_argument("--observed", required=True)
    f.add_argument("--config")
    f.set_defaults(func=cmd_fit)

    lo = sub.add_parser("loss", help="evaluate a loss term or total")
    lo.add_argument("name", choices=PAIR_LOSSES + TOTALS)
    lo.add_argument("--a")
    lo.add_argument("--b")
    lo.add_argument("--weights", type=_floats)
    lo.add_argument("--components", type=_floats)
    lo.add_argument("--reciprocal", type=float, metavar="M", help="apply m/y to both planes first")
    lo.add_argument("--depth-scale", type=float, default=imaging.DEFAULT_DEPTH_SCALE)
    lo.add_argument("--depth-clip", type=float, nargs=2, default=list(imaging.DEFAULT_DEPTH_CLIP))
    lo.set_defaults(func=cmd_loss)

    p = sub.add_parser("presets", help="water-type presets")
    p.add_argument("action", choices=("list",))
    p.add_argument("--file", help="alternate preset table")
    p.set_defaults(func=cmd_presets)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ImageIOError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
