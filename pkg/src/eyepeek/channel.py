"""Video-conferencing channel surrogate: bandwidth tiers and frame degradation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from PIL import Image
from scipy import fft

from .simulate import FrameStack

RESOLUTIONS = (1080, 720, 360, 180)

# JPEG luminance table; only its relative frequency weighting is used.
_JPEG_LUMA = np.array([
    [16, 11, 10, 16, 24, 40, 51, 61],
    [12, 12, 14, 19, 26, 58, 60, 55],
    [14, 13, 16, 24, 40, 57, 69, 56],
    [14, 17, 22, 29, 51, 87, 80, 62],
    [18, 22, 37, 56, 68, 109, 103, 77],
    [24, 35, 55, 64, 81, 104, 113, 92],
    [49, 64, 78, 87, 103, 121, 120, 101],
    [72, 92, 95, 98, 112, 100, 103, 99],
], dtype=float) / 255.0


@dataclass(frozen=True)
class ChannelProfile:
    upload_bandwidth: float  # kbps
    output_resolution_height: int
    output_fps: float
    quality: float

    def __post_init__(self):
        if self.upload_bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        if self.output_resolution_height not in RESOLUTIONS:
            raise ValueError(f"resolution must be one of {RESOLUTIONS}")
        if self.output_fps <= 0:
            raise ValueError("output_fps must be positive")
        if not 0.0 <= self.quality <= 1.0:
            raise ValueError("quality must lie in [0, 1]")


@dataclass(frozen=True)
class Tier:
    min_bandwidth: float  # kbps, inclusive lower bound
    resolution: int
    fps: float
    quality: float


@dataclass(frozen=True)
class ChannelTable:
    """Bandwidth tiers, highest first. The last tier catches everything below."""
    tiers: tuple[Tier, ...] = (
        Tier(1500, 720, 30, 0.9),
        Tier(1000, 360, 30, 0.7),
        Tier(500, 360, 15, 0.5),
        Tier(0, 180, 10, 0.3),
    )
    # quantisation step at quality 0, in units of the JPEG table
    step_scale: float = 3.0

    def __post_init__(self):
        bounds = [t.min_bandwidth for t in self.tiers]
        if not self.tiers or bounds != sorted(bounds, reverse=True) or bounds[-1] != 0:
            raise ValueError("tiers must be sorted by descending bandwidth and end at 0 kbps")


# Qualitative presets for other platforms; not measured values.
PRESETS: dict[str, ChannelTable] = {
    "zoom": ChannelTable(),
    "skype": ChannelTable(tiers=(
        Tier(1200, 720, 30, 0.9),
        Tier(700, 360, 30, 0.7),
        Tier(400, 360, 15, 0.5),
        Tier(0, 180, 10, 0.3),
    )),
    "meet": ChannelTable(tiers=(
        Tier(1500, 720, 30, 0.8),
        Tier(1000, 360, 30, 0.6),
        Tier(500, 360, 15, 0.4),
        Tier(0, 180, 10, 0.2),
    )),
}


def profile(bandwidth: float, table: ChannelTable = ChannelTable(), source_fps: float = 30.0) -> ChannelProfile:
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    for tier in table.tiers:
        if bandwidth >= tier.min_bandwidth:
            return ChannelProfile(bandwidth, tier.resolution, min(tier.fps, source_fps), tier.quality)
    raise AssertionError("unreachable: last tier starts at 0")


def subsample_factor(source_fps: float, output_fps: float) -> int:
    """Keep every k-th frame; k rounds the rate ratio to the nearest integer, at least 1."""
    return max(1, int(round(source_fps / output_fps)))


def frames_needed(n_out: int, source_fps: float, output_fps: float) -> int:
    """Source frames to synthesise so that ``n_out`` remain after subsampling."""
    return (n_out - 1) * subsample_factor(source_fps, output_fps) + 1


def _resize(img: np.ndarray, shape: tuple[int, int], resample) -> np.ndarray:
    pil = Image.fromarray(img.astype(np.float32), mode="F")
    return np.asarray(pil.resize((shape[1], shape[0]), resample=resample), dtype=float)


def _block_quantise(img: np.ndarray, step: float) -> np.ndarray:
    if step <= 0:
        return img
    h, w = img.shape
    H, W = 8 * math.ceil(h / 8), 8 * math.ceil(w / 8)
    padded = np.pad(img, ((0, H - h), (0, W - w)), mode="edge")
    blocks = padded.reshape(H // 8, 8, W // 8, 8).transpose(0, 2, 1, 3)
    coef = fft.dctn(blocks, axes=(-2, -1), norm="ortho")
    q = step * _JPEG_LUMA
    coef = np.round(coef / q) * q
    out = fft.idctn(coef, axes=(-2, -1), norm="ortho")
    return out.transpose(0, 2, 1, 3).reshape(H, W)[:h, :w]


def degrade_frame(frame: np.ndarray, scale: float, quality: float, step_scale: float = 3.0) -> np.ndarray:
    """Encode-decode one frame: downscale by ``scale``, block-quantise, upscale back."""
    h, w = frame.shape
    small = frame
    if scale < 1.0:
        small = _resize(frame, (max(1, round(h * scale)), max(1, round(w * scale))), Image.BOX)
    coded = _block_quantise(small, step_scale * (1.0 - quality))
    if coded.shape != frame.shape:
        coded = _resize(coded, (h, w), Image.BILINEAR)
    return np.round(np.clip(coded, 0.0, 1.0) * 255.0) / 255.0


def apply(stack: FrameStack, prof: ChannelProfile, table: ChannelTable = ChannelTable()) -> FrameStack:
    """Pass a FrameStack through the channel; deterministic.

    Frame count after subsampling is ``ceil(n / k)`` with ``k`` from
    :func:`subsample_factor`. Offsets stay in source pixel units since frames
    are returned at source size.
    """
    src_h = float(stack.meta.get("source_height", 720))
    k = subsample_factor(stack.frame_rate, min(prof.output_fps, stack.frame_rate))
    idx = np.arange(0, len(stack), k)
    scale = min(1.0, prof.output_resolution_height / src_h)
    frames = np.stack([degrade_frame(f, scale, prof.quality, table.step_scale) for f in stack.frames[idx]])
    meta = dict(stack.meta)
    meta["channel"] = {
        "upload_bandwidth": prof.upload_bandwidth,
        "output_resolution_height": prof.output_resolution_height,
        "output_fps": prof.output_fps,
        "quality": prof.quality,
    }
    return FrameStack(frames, stack.frame_rate / k, stack.offsets[idx], stack.seed, meta)
