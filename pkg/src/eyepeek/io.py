"""8-bit grayscale PNG images and PNG-sequence frame stacks with a JSON sidecar."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image

from .simulate import FrameStack

SIDECAR = "stack.json"
PathLike = Union[str, Path]


def to_uint8(img: np.ndarray) -> np.ndarray:
    return np.round(np.clip(np.asarray(img, dtype=float), 0.0, 1.0) * 255.0).astype(np.uint8)


def save_image(path: PathLike, img: np.ndarray) -> None:
    Image.fromarray(to_uint8(img), mode="L").save(path)


def load_image(path: PathLike) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("L"), dtype=float) / 255.0


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def save_stack(directory: PathLike, stack: FrameStack) -> list[Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    names = []
    for k, f in enumerate(stack.frames):
        p = d / f"frame_{k:03d}.png"
        save_image(p, f)
        names.append(p)
    sidecar = {
        "fps": stack.frame_rate,
        "seed": stack.seed,
        "frames": [p.name for p in names],
        "offsets": stack.offsets.tolist(),
        "meta": _jsonable(stack.meta),
    }
    (d / SIDECAR).write_text(json.dumps(sidecar, indent=2, sort_keys=True))
    return names


def load_stack(directory: PathLike) -> FrameStack:
    d = Path(directory)
    side = json.loads((d / SIDECAR).read_text())
    frames = np.stack([load_image(d / name) for name in side["frames"]])
    return FrameStack(frames, float(side["fps"]), np.asarray(side["offsets"], dtype=float),
                      int(side["seed"]), side.get("meta", {}))
