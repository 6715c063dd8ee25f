"""Synthetic webcam frames of text reflected by an eyeglass lens.

Only the lens crop around the reflected text is simulated. A frame is built
at ``OVERSAMPLE`` times the camera resolution, moved by head tremor and
integrated over the exposure, averaged down to camera pixels, then passed
through a shot-noise / gain / read-noise sensor and 8-bit quantisation.
"""
from __future__ import annotations

import math
import string
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Optional

import numpy as np
from PIL import Image, ImageDraw, ImageFont
from scipy import ndimage, stats

from .optics import (CameraSpec, Geometry, GlassesSpec, ScreenSpec, TextSpec,
                     motion_blur_pixels, reflection_pixel_size)

OVERSAMPLE = 8
SUPPORTED_GLYPHS = frozenset(string.ascii_letters + string.digits + string.punctuation + " ")
# Exposure times are expressed relative to one frame period at this rate.
REFERENCE_FRAME_RATE = 30.0


class UnsupportedGlyph(ValueError):
    pass


@dataclass(frozen=True)
class Lighting:
    screen_luminance: float = 1.0
    env_illuminance: float = 0.1
    face_reflectance: float = 0.1
    text_gray: float = 0.0
    background_gray: float = 255.0
    # mean reflectance of the room/face the camera meters on
    scene_reflectance: float = 0.8
    # fraction of the metered frame area covered by the reflection crop
    metering_weight: float = 0.02
    # fraction of the metered frame area covered by the face
    face_weight: float = 0.5
    # 0 gives the flat uniform face; >0 adds a smooth static texture
    face_texture: float = 0.0

    def __post_init__(self):
        for name in ("text_gray", "background_gray"):
            if not 0 <= getattr(self, name) <= 255:
                raise ValueError(f"{name} must lie in [0, 255]")
        for name in ("face_reflectance", "metering_weight", "scene_reflectance", "face_weight"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.screen_luminance < 0 or self.env_illuminance < 0:
            raise ValueError("luminances must be non-negative")

    @property
    def contrast(self) -> float:
        return abs(self.text_gray - self.background_gray)


@dataclass(frozen=True)
class Tremor:
    amplitude: float = 2.0  # mm
    frequency: float = 5.0  # Hz


@dataclass(frozen=True)
class SceneConfig:
    screen: ScreenSpec = field(default_factory=ScreenSpec)
    text: TextSpec = field(default_factory=TextSpec)
    glasses: GlassesSpec = field(default_factory=GlassesSpec)
    camera: CameraSpec = field(default_factory=CameraSpec)
    geometry: Geometry = field(default_factory=Geometry)
    lighting: Lighting = field(default_factory=Lighting)
    tremor: Tremor = field(default_factory=Tremor)
    seed: int = 0
    # overrides the point-size route when set (mm)
    cap_height_mm: Optional[float] = None

    def object_height(self) -> float:
        from .optics import cap_height
        if self.cap_height_mm is not None:
            return float(self.cap_height_mm)
        return cap_height(self.text, self.screen)

    def pixel_size(self) -> float:
        return reflection_pixel_size(self.object_height(), self.geometry, self.glasses, self.camera)

    def pixels_per_mm(self) -> float:
        return motion_blur_pixels(1.0, self.geometry, self.glasses, self.camera)


@dataclass
class FrameStack:
    frames: np.ndarray  # (n, h, w) in [0, 1]
    frame_rate: float
    offsets: np.ndarray  # (n, 2) true (dy, dx) content displacement in pixels
    seed: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=float)
        self.offsets = np.asarray(self.offsets, dtype=float).reshape(-1, 2)
        if self.frames.ndim != 3 or len(self.frames) < 1:
            raise ValueError("a FrameStack needs at least one 2-D frame")
        if len(self.offsets) != len(self.frames):
            raise ValueError("one offset per frame is required")

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def shape(self) -> tuple[int, int]:
        return self.frames.shape[1:]

    def subset(self, idx) -> "FrameStack":
        return FrameStack(self.frames[idx], self.frame_rate, self.offsets[idx], self.seed, dict(self.meta))


# ---------------------------------------------------------------------------
# glyph rendering


@lru_cache(maxsize=None)
def _font(size: int) -> ImageFont.FreeTypeFont:
    return ImageFont.load_default(size=size)


@lru_cache(maxsize=None)
def _cap_fraction() -> float:
    """Ink height of a capital H per unit font size for the bundled font."""
    size = 400
    font = _font(size)
    left, top, right, bottom = font.getbbox("H", anchor="ls")
    return (bottom - top) / size


def _check_glyphs(content: str) -> None:
    bad = sorted(set(content) - SUPPORTED_GLYPHS)
    if bad:
        raise UnsupportedGlyph(f"unsupported glyph(s): {''.join(bad)!r}")
    if not content.strip():
        raise UnsupportedGlyph("text content has no visible glyphs")


def _coverage(content: str, cap_hr: float) -> tuple[np.ndarray, int]:
    """Ink coverage in [0, 1] for ``content`` with capital height ``cap_hr`` pixels.

    Returns the tight-ish canvas and the baseline row. Canvas width and height
    are padded to multiples of ``OVERSAMPLE``.
    """
    size = max(1, int(round(cap_hr / _cap_fraction())))
    font = _font(size)
    left, top, right, bottom = font.getbbox(content, anchor="ls")
    pad = OVERSAMPLE
    w = right - left + 2 * pad
    h = bottom - top + 2 * pad
    w += (-w) % OVERSAMPLE
    h += (-h) % OVERSAMPLE
    img = Image.new("L", (w, h), 0)
    ImageDraw.Draw(img).text((pad - left, pad - top), content, font=font, fill=255, anchor="ls")
    return np.asarray(img, dtype=float) / 255.0, pad - top


def _block_mean(img: np.ndarray, k: int) -> np.ndarray:
    h, w = img.shape
    return img[: h - h % k, : w - w % k].reshape(h // k, k, w // k, k).mean(axis=(1, 3))


def render_template(content: str, cap_height_px: float, *, ink: float = 0.0,
                    background: float = 1.0, margin: Optional[float] = None) -> np.ndarray:
    """Anti-aliased grayscale rendering of ``content`` at a capital height in pixels.

    Glyphs are drawn ``OVERSAMPLE`` times larger and box-averaged down. The
    canvas carries ``margin`` pixels (default half a cap height) around the
    ink box.
    """
    _check_glyphs(content)
    if cap_height_px < 3:
        raise ValueError(f"cap height must be at least 3 px, got {cap_height_px}")
    cov, _ = _coverage(content, cap_height_px * OVERSAMPLE)
    margin = 0.5 * cap_height_px if margin is None else margin
    m = int(math.ceil(margin)) * OVERSAMPLE
    cov = np.pad(cov, m)
    cov = _block_mean(cov, OVERSAMPLE)
    return background + (ink - background) * cov


def ink_bbox(img: np.ndarray, background: float = 1.0, tol: float = 0.5) -> Optional[tuple[int, int, int, int]]:
    """(y0, x0, y1, x1) of pixels differing from ``background`` by more than ``tol`` of full ink."""
    mask = np.abs(img - background) > tol * 1.0
    if not mask.any():
        return None
    ys, xs = np.nonzero(mask)
    return int(ys.min()), int(xs.min()), int(ys.max()) + 1, int(xs.max()) + 1


# ---------------------------------------------------------------------------
# scene layout


@dataclass(frozen=True)
class _Layout:
    coverage: np.ndarray  # HR coverage, crop-aligned with padding
    pad_hr: int
    crop_shape: tuple[int, int]
    cap_px: float
    px_per_mm: float
    text_box: tuple[int, int, int, int]  # LR bbox of the text at zero offset


def _layout(scene: SceneConfig) -> _Layout:
    cap_px = scene.pixel_size()
    px_per_mm = scene.pixels_per_mm()
    _check_glyphs(scene.text.content)
    draw_cap = max(cap_px, 0.5)
    cov, _ = _coverage(scene.text.content, draw_cap * OVERSAMPLE)
    ys, xs = np.nonzero(cov > 0)
    ink_h = (ys.max() - ys.min() + 1) / OVERSAMPLE
    ink_w = (xs.max() - xs.min() + 1) / OVERSAMPLE
    travel = scene.tremor.amplitude * px_per_mm
    margin = max(3.0, 0.5 * draw_cap) + travel
    H = max(16, int(math.ceil(ink_h + 2 * margin)))
    W = max(16, int(math.ceil(ink_w + 2 * margin)))
    pad = int(math.ceil(travel + 2)) * OVERSAMPLE
    canvas = np.zeros(((H * OVERSAMPLE) + 2 * pad, (W * OVERSAMPLE) + 2 * pad))
    # centre the ink box in the crop
    cy = pad + (H * OVERSAMPLE) / 2.0 - (ys.min() + ys.max() + 1) / 2.0
    cx = pad + (W * OVERSAMPLE) / 2.0 - (xs.min() + xs.max() + 1) / 2.0
    oy, ox = int(round(cy)), int(round(cx))
    canvas[oy: oy + cov.shape[0], ox: ox + cov.shape[1]] = cov
    y0 = (oy + ys.min() - pad) / OVERSAMPLE
    x0 = (ox + xs.min() - pad) / OVERSAMPLE
    box = (int(math.floor(y0)), int(math.floor(x0)),
           int(math.ceil(y0 + ink_h)), int(math.ceil(x0 + ink_w)))
    return _Layout(canvas, pad, (H, W), cap_px, px_per_mm, box)


def _tremor_offset(scene: SceneConfig, t: float, phase: float) -> tuple[float, float]:
    """(dy, dx) in camera pixels; horizontal and vertical move in quadrature."""
    a = scene.tremor.amplitude * scene.pixels_per_mm()
    w = 2 * math.pi * scene.tremor.frequency
    return a * math.sin(w * t + phase + math.pi / 2), a * math.sin(w * t + phase)


def _sample(layout: _Layout, dy: float, dx: float) -> np.ndarray:
    """Coverage at camera resolution for content displaced by (dy, dx) pixels."""
    shifted = ndimage.shift(layout.coverage, (dy * OVERSAMPLE, dx * OVERSAMPLE), order=1, mode="constant")
    p = layout.pad_hr
    H, W = layout.crop_shape
    return shifted[p: p + H * OVERSAMPLE, p: p + W * OVERSAMPLE]


def _exposure_coverage(scene: SceneConfig, layout: _Layout, t0: float, t_exp: float,
                       phase: float, substeps: int = 5) -> np.ndarray:
    acc = None
    for i in range(substeps):
        t = t0 + t_exp * (i + 0.5) / substeps
        dy, dx = _tremor_offset(scene, t, phase)
        cov = _sample(layout, dy, dx)
        acc = cov if acc is None else acc + cov
    return _block_mean(acc / substeps, OVERSAMPLE)


def _face_field(scene: SceneConfig, shape: tuple[int, int]) -> np.ndarray:
    lt = scene.lighting
    if lt.face_texture <= 0:
        return np.ones(shape)
    rng = np.random.default_rng([scene.seed, 0xFACE])
    tex = ndimage.gaussian_filter(rng.standard_normal(shape), 3.0, mode="wrap")
    tex /= tex.std() + 1e-12
    return np.clip(1.0 + lt.face_texture * tex, 0.0, None)


def irradiance(scene: SceneConfig, coverage: np.ndarray, face: Optional[np.ndarray] = None) -> np.ndarray:
    """Relative irradiance on the sensor for a coverage map.

    Screen light reflected by the lens carries the text; environment light
    reflected by the lens and by the face behind it forms a structureless
    floor. A worn coating scatters part of the specular reflection into a
    uniform veil.
    """
    lt, gl = scene.lighting, scene.glasses
    bg, fg = lt.background_gray / 255.0, lt.text_gray / 255.0
    field_ = bg + (fg - bg) * coverage
    haze = 0.5 * (1.0 - gl.coating_condition)
    specular = lt.screen_luminance * gl.reflectance
    signal = specular * ((1.0 - haze) * field_ + haze * field_.mean())
    face = np.ones_like(coverage) if face is None else face
    floor = lt.env_illuminance * (lt.face_reflectance * face + gl.reflectance)
    return signal + floor


@dataclass(frozen=True)
class Exposure:
    exposure_time: float
    gain: float
    saturated: bool = False

    @property
    def exposure_fraction(self) -> float:
        return self.exposure_time * REFERENCE_FRAME_RATE


def metered_irradiance(scene: SceneConfig) -> float:
    lt = scene.lighting
    layout = _layout(scene)
    cov = _block_mean(_sample(layout, 0.0, 0.0), OVERSAMPLE)
    crop_mean = float(irradiance(scene, cov, _face_field(scene, cov.shape)).mean())
    room = lt.env_illuminance * ((1.0 - lt.face_weight) * lt.scene_reflectance
                                 + lt.face_weight * lt.face_reflectance)
    return (1.0 - lt.metering_weight) * room + lt.metering_weight * crop_mean


def auto_exposure(scene: SceneConfig, target: Optional[float] = None) -> Exposure:
    """Pick exposure time then gain so the metered frame mean hits ``target``.

    Exposure time is raised first, up to one frame period; the remainder comes
    from gain. If the gain bounds cannot reach the target the boundary values
    are returned with ``saturated=True``.
    """
    cam = scene.camera
    target = cam.ae_target if target is None else target
    m = metered_irradiance(scene)
    t_max = 1.0 / cam.frame_rate
    if m <= 0:
        return Exposure(t_max, cam.gain_max, True)
    needed = max(target - cam.black_level, 0.0) / m  # exposure fraction * gain
    frac_max = t_max * REFERENCE_FRAME_RATE
    if needed <= frac_max * cam.gain_min:
        return Exposure(needed / cam.gain_min / REFERENCE_FRAME_RATE, cam.gain_min)
    gain = needed / frac_max
    if gain > cam.gain_max:
        return Exposure(t_max, cam.gain_max, True)
    return Exposure(t_max, gain)


def exposure_for(scene: SceneConfig) -> Exposure:
    cam = scene.camera
    if cam.exposure_policy == "auto":
        return auto_exposure(scene)
    return Exposure(cam.exposure_time, cam.iso_gain)


def photon_counts(irr: np.ndarray, exposure: Exposure, camera: CameraSpec, rng: np.random.Generator) -> np.ndarray:
    """Poisson counts with mean ``irr * exposure_fraction * photon_scale``."""
    # inverse-CDF sampling: identical uniforms give counts that never decrease
    # with irradiance, so scenes sharing a seed share their noise
    u = np.clip(rng.random(np.shape(irr)), 1e-12, 1.0 - 1e-12)
    return stats.poisson.ppf(u, np.asarray(irr) * exposure.exposure_fraction * camera.photon_scale)


def sense(irr: np.ndarray, exposure: Exposure, camera: CameraSpec, rng: np.random.Generator) -> np.ndarray:
    """Shot noise, gain, read noise, clipping and 8-bit quantisation."""
    photons = photon_counts(irr, exposure, camera, rng)
    value = camera.black_level + exposure.gain * photons / camera.photon_scale
    value = value + rng.normal(0.0, camera.read_noise * exposure.gain, size=irr.shape)
    return np.round(np.clip(value, 0.0, 1.0) * 255.0) / 255.0


def synthesize_frames(scene: SceneConfig, n_frames: int = 8, exposure: Optional[Exposure] = None) -> FrameStack:
    """Simulate ``n_frames`` consecutive webcam crops of the lens reflection."""
    if n_frames < 1:
        raise ValueError("n_frames must be >= 1")
    layout = _layout(scene)
    exposure = exposure or exposure_for(scene)
    rng = np.random.default_rng(scene.seed)
    phase = float(rng.uniform(0.0, 2 * math.pi))
    face = _face_field(scene, layout.crop_shape)
    fps = scene.camera.frame_rate
    frames, offsets = [], []
    for k in range(n_frames):
        t0 = k / fps
        cov = _exposure_coverage(scene, layout, t0, exposure.exposure_time, phase)
        frames.append(sense(irradiance(scene, cov, face), exposure, scene.camera, rng))
        offsets.append(_tremor_offset(scene, t0 + exposure.exposure_time / 2, phase))
    warnings = []
    if layout.cap_px < 1.0:
        warnings.append("reflection smaller than one pixel; content physically unresolvable")
    if exposure.saturated:
        warnings.append("auto exposure could not reach its target")
    meta = {
        "cap_height_px": layout.cap_px,
        "pixels_per_mm": layout.px_per_mm,
        "text_box": list(layout.text_box),
        "exposure_time": exposure.exposure_time,
        "gain": exposure.gain,
        "source_height": scene.camera.pixels_on_axis,
        "warnings": warnings,
    }
    return FrameStack(np.stack(frames), fps, np.array(offsets), scene.seed, meta)


def ideal_reflection(scene: SceneConfig, offset: tuple[float, float] = (0.0, 0.0), scale: int = 1) -> np.ndarray:
    """Noise-free, blur-free reflection field at ``scale`` times camera resolution.

    ``offset`` is the (dy, dx) content displacement in camera pixels; passing
    the reference frame's true offset yields the template a reconstruction
    should match.
    """
    layout = _layout(scene)
    cov = _sample(layout, *offset)
    if OVERSAMPLE % scale:
        raise ValueError(f"scale must divide {OVERSAMPLE}")
    cov = _block_mean(cov, OVERSAMPLE // scale)
    lt = scene.lighting
    bg, fg = lt.background_gray / 255.0, lt.text_gray / 255.0
    return bg + (fg - bg) * cov


def with_cap_height(scene: SceneConfig, h_mm: float) -> SceneConfig:
    return replace(scene, cap_height_mm=float(h_mm))
