"""Score the cap-height ladder on the reference scene over several seeds and place tau between rungs."""
import argparse

import numpy as np

from eyepeek.config import reference_scene
from eyepeek.pipeline import evaluate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=4)
    ap.add_argument("--heights", type=float, nargs="+", default=[20, 14, 10, 7, 5])
    ap.add_argument("--pass-height", type=float, default=10.0,
                    help="smallest height that should count as recognisable")
    args = ap.parse_args()
    means = {}
    print("cap_height_mm,mean,min,max")
    for h in args.heights:
        s = [evaluate(reference_scene(h, seed)).score for seed in range(args.seeds)]
        means[h] = float(np.mean(s))
        print(f"{h:g},{means[h]:.4f},{min(s):.4f},{max(s):.4f}")
    below = [h for h in args.heights if h < args.pass_height]
    if below and args.pass_height in means:
        nxt = max(below)
        print(f"tau midpoint between {args.pass_height:g} and {nxt:g} mm: "
              f"{(means[args.pass_height] + means[nxt]) / 2:.3f}")


if __name__ == "__main__":
    main()
