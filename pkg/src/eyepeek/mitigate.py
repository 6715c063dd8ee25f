"""Region-limited Gaussian blur and the leakage that survives it."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Optional, Sequence

import numpy as np
from scipy import ndimage

from .metrics import SimilarityScore
from .mfsr import MfsrParams
from .pipeline import evaluate
from .simulate import SceneConfig, synthesize_frames


@dataclass(frozen=True)
class BlurConfig:
    region: tuple[int, int, int, int]  # (top, left, bottom, right), bottom/right exclusive
    sigma: float = 0.0
    feather: float = 3.0
    shape: Literal["rectangle", "ellipse"] = "rectangle"

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if self.feather < 0:
            raise ValueError("feather must be non-negative")
        t, l, b, r = self.region
        if not (0 <= t < b and 0 <= l < r):
            raise ValueError(f"invalid region {self.region}")


def region_mask(shape: tuple[int, int], cfg: BlurConfig) -> np.ndarray:
    """Blend weights: 0 outside the region, ramping linearly to 1 over ``feather`` px inside."""
    t, l, b, r = cfg.region
    h, w = shape
    if b > h or r > w:
        raise ValueError(f"region {cfg.region} exceeds frame {shape}")
    yy, xx = np.mgrid[0:h, 0:w].astype(float)
    if cfg.shape == "rectangle":
        # distance inward from the nearest edge, in pixel-centre units
        depth = np.minimum.reduce([yy - t + 0.5, b - 0.5 - yy, xx - l + 0.5, r - 0.5 - xx])
    else:
        cy, cx = (t + b - 1) / 2.0, (l + r - 1) / 2.0
        ry, rx = (b - t) / 2.0, (r - l) / 2.0
        rho = np.hypot((yy - cy) / ry, (xx - cx) / rx)
        depth = (1.0 - rho) * min(ry, rx)
    if cfg.feather < 1e-9:
        return (depth > 0).astype(float)
    return np.clip(depth / cfg.feather, 0.0, 1.0) * (depth > 0)


def blur_region(frame: np.ndarray, cfg: BlurConfig) -> np.ndarray:
    """Gaussian blur inside the region only; pixels outside are returned untouched.

    The blur is a normalised convolution over region pixels, so outside
    content never leaks in and a very wide kernel flattens the region to its
    mean.
    """
    frame = np.asarray(frame, dtype=float)
    if cfg.sigma == 0:
        return frame.copy()
    m = region_mask(frame.shape, cfg)
    inside = (m > 0).astype(float)
    num = ndimage.gaussian_filter(frame * inside, cfg.sigma, mode="constant", truncate=4.0)
    den = ndimage.gaussian_filter(inside, cfg.sigma, mode="constant", truncate=4.0)
    blurred = np.divide(num, den, out=frame.copy(), where=den > 1e-12)
    out = frame.copy()
    sel = m > 0
    out[sel] = (1.0 - m[sel]) * frame[sel] + m[sel] * blurred[sel]
    return out


def residual_leakage(scene: SceneConfig, sigmas: Sequence[float], params: MfsrParams = MfsrParams(),
                     feather: float = 3.0, region: Optional[tuple[int, int, int, int]] = None
                     ) -> list[SimilarityScore]:
    """Reconstruction score after blurring every frame, for each sigma.

    ``region`` defaults to the whole simulated lens crop.
    """
    grid = [float(s) for s in sigmas]
    if not grid:
        raise ValueError("sigma grid is empty")
    if any(s < 0 for s in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("sigma grid must be non-negative and strictly increasing")
    if region is None:
        h, w = synthesize_frames(scene, 1).shape
        region = (0, 0, h, w)
    out = []
    for s in grid:
        cfg = BlurConfig(region, s, feather)
        res = evaluate(scene, params, frame_filter=None if s == 0 else (lambda f, c=cfg: blur_region(f, c)))
        out.append(SimilarityScore(res.score))
    return out


def crossing_sigma(sigmas: Sequence[float], scores: Sequence[float], level: float) -> Optional[float]:
    """Smallest sigma at which the score falls below ``level``, linearly interpolated.

    None when the grid never reaches the level.
    """
    s = [float(v) for v in sigmas]
    v = [float(x) for x in scores]
    if len(s) != len(v):
        raise ValueError("one score per sigma is required")
    for i, (sig, val) in enumerate(zip(s, v)):
        if val < level:
            if i == 0:
                return sig
            s0, v0 = s[i - 1], v[i - 1]
            return s0 + (v0 - level) / (v0 - val) * (sig - s0)
    return None
