"""Reconstruction score versus upload bandwidth for each channel preset."""
import argparse

from eyepeek.assess import DEFAULT_TAU
from eyepeek.channel import PRESETS, profile
from eyepeek.config import reference_scene
from eyepeek.pipeline import evaluate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cap-height-mm", type=float, default=10.0)
    ap.add_argument("--bandwidths", type=float, nargs="+", default=[2000, 1200, 800, 400])
    args = ap.parse_args()
    sc = reference_scene(args.cap_height_mm)
    print(f"no channel: {evaluate(sc).score:.4f}  (tau {DEFAULT_TAU})")
    print("preset,kbps,resolution,fps,quality,cwssim")
    for name, table in PRESETS.items():
        for bw in args.bandwidths:
            p = profile(bw, table)
            s = evaluate(sc, bandwidth=bw, table=table).score
            print(f"{name},{bw:g},{p.output_resolution_height},{p.output_fps:g},{p.quality},{s:.4f}")


if __name__ == "__main__":
    main()
