"""Run the standard factor sweeps on the reference scene and write one CSV per factor."""
import argparse
import dataclasses
from pathlib import Path

from eyepeek.assess import factor_sweep
from eyepeek.config import reference_scene

SWEEPS = {
    "contrast": [255, 128, 64, 16],
    "face_reflectance": [0.05, 0.1, 0.2, 0.4, 0.8],
    "env_illuminance": [0.003, 0.01, 0.03, 0.1, 0.3, 1.0],
    "f_g": [100, 1100, 2680],
    "rho_g": [0.02, 0.04, 0.08, 0.15],
    "d_o": [300, 400, 500, 600],
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cap-height-mm", type=float, default=20.0)
    ap.add_argument("--out", default="sweeps")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sc = reference_scene(args.cap_height_mm)
    manual = dataclasses.replace(sc, camera=dataclasses.replace(sc.camera, exposure_policy="manual"))
    runs = [(name, sc, vals) for name, vals in SWEEPS.items()]
    runs.append(("env_illuminance_manual", manual, SWEEPS["env_illuminance"]))
    for name, scene, vals in runs:
        factor = "env_illuminance" if name.startswith("env_illuminance") else name
        res = factor_sweep(scene, factor, vals)
        (out / f"{name}.csv").write_text(res.to_csv())
        print(f"{name}: r={res.pearson_r:+.3f} scores={[round(s, 3) for s in res.scores]}")


if __name__ == "__main__":
    main()
