"""Command-line entry point."""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io as _io
import json
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from . import assess, channel, config, io, mitigate, optics
from .metrics import reflection_similarity
from .mfsr import MfsrParams, reconstruct
from .simulate import synthesize_frames


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _region(text: str) -> tuple[int, int, int, int]:
    parts = [int(v) for v in text.split(",")]
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("region is top,left,bottom,right")
    return tuple(parts)  # type: ignore[return-value]


def _emit(args, payload: Any, rows: Optional[list[dict]] = None, name: str = "result") -> None:
    """Print JSON (or CSV rows) and mirror it under --out when given."""
    if args.format == "csv" and rows is not None:
        buf = _io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
        text, ext = buf.getvalue(), "csv"
    else:
        text, ext = json.dumps(payload, indent=2, sort_keys=True) + "\n", "json"
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{name}.{ext}").write_text(text)


def _cfg(args) -> config.Config:
    return config.load(args.config, args.seed)


def cmd_model(args) -> int:
    cfg = _cfg(args)
    sc = cfg.scene
    if args.cap_height_mm is not None:
        sc = dataclasses.replace(sc, cap_height_mm=args.cap_height_mm)
    h_o = sc.object_height()
    h_i, d_i = optics.convex_mirror_image(h_o, sc.geometry.glass_screen_distance, sc.glasses.focal_length)
    angles = {f"{m}_{a}": list(optics.viewing_angle_range(sc.geometry, sc.glasses, sc.screen, m, a))
              for m in ("all_page", "center") for a in ("horizontal", "vertical")}
    payload = {
        "cap_height_mm": h_o,
        "virtual_image_height_mm": h_i,
        "virtual_image_distance_mm": d_i,
        "reflection_pixel_size": sc.pixel_size(),
        "pixels_per_mm_motion": sc.pixels_per_mm(),
        "fw_ratio": sc.camera.fw,
        "viewing_angles_deg": angles,
    }
    rows = [{"quantity": k, "value": v} for k, v in payload.items() if not isinstance(v, dict)]
    _emit(args, payload, rows, "model")
    return 0


def cmd_simulate(args) -> int:
    cfg = _cfg(args)
    sc = cfg.scene
    if args.cap_height_mm is not None:
        sc = dataclasses.replace(sc, cap_height_mm=args.cap_height_mm)
    stack = synthesize_frames(sc, args.frames or cfg.mfsr.n_frames)
    if not args.out:
        raise SystemExit("simulate needs --out")
    io.save_stack(args.out, stack)
    _emit(args, {"frames": len(stack), "shape": list(stack.shape), "meta": io._jsonable(stack.meta)},
          name="simulate")
    return 0


def cmd_reconstruct(args) -> int:
    cfg = _cfg(args)
    stack = io.load_stack(args.stack)
    params = cfg.mfsr if args.method is None else dataclasses.replace(cfg.mfsr, method=args.method)
    rec = reconstruct(stack, params)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        io.save_image(Path(args.out) / "reconstruction.png", rec.image)
    _emit(args, {"method": params.method, "scale_factor": params.scale_factor,
                 "offsets": rec.registration.offsets.tolist(), "converged": rec.converged},
          name="reconstruct")
    return 0


def cmd_score(args) -> int:
    a = io.load_image(args.image)
    b = io.load_image(args.template)
    if a.shape != b.shape:
        raise SystemExit(f"shape mismatch: {a.shape} vs {b.shape}")
    s = reflection_similarity(a, b)
    _emit(args, {"cwssim": s}, [{"image": args.image, "template": args.template, "cwssim": s}], "score")
    return 0


def cmd_degrade(args) -> int:
    cfg = _cfg(args)
    stack = io.load_stack(args.stack)
    prof = channel.profile(args.bandwidth, cfg.channel_table, stack.frame_rate)
    out = channel.apply(stack, prof, cfg.channel_table)
    if args.out:
        io.save_stack(args.out, out)
    _emit(args, dataclasses.asdict(prof) | {"frames": len(out)}, name="degrade")
    return 0


def cmd_mitigate(args) -> int:
    cfg = _cfg(args)
    if args.image:
        img = io.load_image(args.image)
        region = args.region or (0, 0, *img.shape)
        out = mitigate.blur_region(img, mitigate.BlurConfig(region, args.sigma, args.feather))
        if not args.out:
            raise SystemExit("mitigate --image needs --out")
        Path(args.out).mkdir(parents=True, exist_ok=True)
        io.save_image(Path(args.out) / "mitigated.png", out)
        _emit(args, {"region": list(region), "sigma": args.sigma}, name="mitigate")
        return 0
    sigmas = args.sigmas or [0, 1, 2, 4, 8, 16]
    scores = mitigate.residual_leakage(cfg.scene if args.cap_height_mm is None else
                                       dataclasses.replace(cfg.scene, cap_height_mm=args.cap_height_mm),
                                       sigmas, cfg.mfsr, args.feather, args.region)
    rows = [{"sigma": s, "cwssim": v.value} for s, v in zip(sigmas, scores)]
    _emit(args, {"residual_leakage": rows}, rows, "mitigate")
    return 0


def cmd_assess(args) -> int:
    cfg = _cfg(args)
    report = assess.run_assessment(cfg.scene, cfg.assess, cfg.mfsr, cfg.channel_table, config.to_dict(cfg))
    rows = [dataclasses.asdict(s) for s in report.sizes]
    _emit(args, report.to_dict(), rows, "report")
    return 0


def cmd_sweep(args) -> int:
    cfg = _cfg(args)
    sc = cfg.scene
    if args.cap_height_mm is not None:
        sc = dataclasses.replace(sc, cap_height_mm=args.cap_height_mm)
    res = assess.factor_sweep(sc, args.factor, args.values, cfg.mfsr, cfg.assess.bandwidth, cfg.channel_table)
    rows = [{args.factor: v, "cwssim": s} for v, s in zip(res.values, res.scores)]
    _emit(args, res.to_dict(), rows, f"sweep_{args.factor}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration (default: reference preset)")
    common.add_argument("--seed", type=int, help="overrides assess.seed")
    common.add_argument("--out", help="output directory")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    p = argparse.ArgumentParser(prog="eyepeek", description="Screen-reflection leakage toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("model", parents=[common], help="optics quantities for the configured scene")
    s.add_argument("--cap-height-mm", type=float)
    s.set_defaults(func=cmd_model)

    s = sub.add_parser("simulate", parents=[common], help="write a synthetic frame stack")
    s.add_argument("--cap-height-mm", type=float)
    s.add_argument("--frames", type=int)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("reconstruct", parents=[common], help="multi-frame super resolution")
    s.add_argument("--stack", required=True)
    s.add_argument("--method", choices=("average", "spline", "robust_l1", "akr"))
    s.set_defaults(func=cmd_reconstruct)

    s = sub.add_parser("score", parents=[common], help="CWSSIM of an image against a template")
    s.add_argument("--image", required=True)
    s.add_argument("--template", required=True)
    s.set_defaults(func=cmd_score)

    s = sub.add_parser("degrade", parents=[common], help="pass a stack through the channel model")
    s.add_argument("--stack", required=True)
    s.add_argument("--bandwidth", type=float, required=True, help="kbps")
    s.set_defaults(func=cmd_degrade)

    s = sub.add_parser("mitigate", parents=[common], help="blur an image region or measure residual leakage")
    s.add_argument("--image")
    s.add_argument("--region", type=_region, help="top,left,bottom,right")
    s.add_argument("--sigma", type=float, default=4.0)
    s.add_argument("--sigmas", type=_floats)
    s.add_argument("--feather", type=float, default=3.0)
    s.add_argument("--cap-height-mm", type=float)
    s.set_defaults(func=cmd_mitigate)

    s = sub.add_parser("assess", parents=[common], help="full individual assessment report")
    s.set_defaults(func=cmd_assess)

    s = sub.add_parser("sweep", parents=[common], help="score a factor sweep")
    s.add_argument("--factor", required=True, choices=sorted(assess.FACTORS))
    s.add_argument("--values", type=_floats, required=True)
    s.add_argument("--cap-height-mm", type=float)
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (config.ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
