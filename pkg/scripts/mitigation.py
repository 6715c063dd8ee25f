"""Residual leakage after blurring the lens region, for low- and high-reflectance glasses."""
import argparse
import dataclasses

from eyepeek.config import reference_scene
from eyepeek.mitigate import crossing_sigma, residual_leakage


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cap-height-mm", type=float, default=20.0)
    ap.add_argument("--level", type=float, default=0.6)
    args = ap.parse_args()
    grid = [0, 0.5, 1, 1.5, 2, 2.5, 3, 4, 8, 16]
    print("reflectance,sigma,cwssim")
    for rho in (0.04, 0.08, 0.15):
        sc = reference_scene(args.cap_height_mm)
        sc = dataclasses.replace(sc, glasses=dataclasses.replace(sc.glasses, reflectance=rho))
        scores = [s.value for s in residual_leakage(sc, grid)]
        for g, s in zip(grid, scores):
            print(f"{rho},{g},{s:.4f}")
        print(f"# reflectance {rho}: score falls below {args.level} at sigma {crossing_sigma(grid, scores, args.level)}")


if __name__ == "__main__":
    main()
