"""Fit the head-to-lens distance and print viewing-angle ranges for the lab glasses."""
import argparse

from eyepeek import optics


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--distance", type=float, default=400.0, help="glass-screen distance, mm")
    args = ap.parse_args()
    cal = optics.calibrate_head_to_lens(args.distance)
    print(f"head_to_lens = {cal.head_to_lens:.0f} mm  (rms error {cal.rms_error:.2f} deg)")
    geom = optics.Geometry(glass_screen_distance=args.distance, head_to_lens=cal.head_to_lens)
    print("glasses,mode,axis,lower,upper,tabulated")
    for (name, mode, axis), target in optics.TABLE_VIEWING_ANGLES.items():
        lo, hi = optics.viewing_angle_range(geom, optics.LAB_GLASSES[name], optics.ScreenSpec(), mode, axis)
        print(f"{name},{mode},{axis},{lo:.1f},{hi:.1f},{target:g}")


if __name__ == "__main__":
    main()
