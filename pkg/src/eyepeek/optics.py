"""Closed-form optics of screen reflections on eyeglass lenses.

All lengths are millimetres unless a name says otherwise. The lens outer
surface is treated as a convex spherical mirror of radius ``2 * f_g``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence

import numpy as np

# Flat (plano) lenses are represented by a very long focal length.
FLAT_FOCAL_LENGTH = 1e9


class OpticsDomainError(ValueError):
    """Raised when an optical quantity is requested outside its domain."""


def _positive(**values: float) -> None:
    for name, v in values.items():
        if not (v > 0) or not math.isfinite(v):
            raise OpticsDomainError(f"{name} must be a finite positive number, got {v!r}")


@dataclass(frozen=True)
class ScreenSpec:
    physical_height: float = 190.0
    os_resolution_height: float = 1080.0
    os_zoom: float = 1.0
    browser_zoom: float = 1.0
    # screen extent along the axis used by the viewing-angle model
    length_horizontal: float = 380.0
    length_vertical: float = 190.0

    def __post_init__(self):
        _positive(physical_height=self.physical_height,
                  os_resolution_height=self.os_resolution_height,
                  length_horizontal=self.length_horizontal,
                  length_vertical=self.length_vertical)
        for name in ("os_zoom", "browser_zoom"):
            v = getattr(self, name)
            if not 0 < v <= 10:
                raise OpticsDomainError(f"{name} must lie in (0, 10], got {v!r}")

    def length(self, axis: str) -> float:
        return self.length_horizontal if axis == "horizontal" else self.length_vertical


@dataclass(frozen=True)
class TextSpec:
    point_size: float = 12.0
    cap_ratio: float = 2.0 / 3.0
    content: str = "TEXT"

    def __post_init__(self):
        _positive(point_size=self.point_size)
        if not 0 < self.cap_ratio < 1:
            raise OpticsDomainError(f"cap_ratio must lie in (0, 1), got {self.cap_ratio!r}")


def fw_from_fov(vertical_fov: float) -> float:
    """Focal-length-to-sensor-height ratio for a vertical field of view in degrees."""
    if not 0 < vertical_fov < 180:
        raise OpticsDomainError(f"vertical FoV must lie in (0, 180) degrees, got {vertical_fov!r}")
    return 1.0 / (2.0 * math.tan(math.radians(vertical_fov) / 2.0))


def fov_from_fw(fw_ratio: float) -> float:
    _positive(fw_ratio=fw_ratio)
    return math.degrees(2.0 * math.atan(1.0 / (2.0 * fw_ratio)))


@dataclass(frozen=True)
class CameraSpec:
    """Webcam geometry and exposure settings.

    ``exposure_time`` and ``iso_gain`` are only honoured for the manual policy;
    the auto policy recomputes them per scene. Sensor constants
    (``photon_scale``, ``read_noise``) live here because they belong to the
    camera, not the scene.
    """

    pixels_on_axis: int = 720
    fw_ratio: Optional[float] = 1.2
    vertical_fov: Optional[float] = None
    frame_rate: float = 30.0
    exposure_time: float = 1.0 / 30.0
    iso_gain: float = 1.0
    exposure_policy: Literal["auto", "manual"] = "auto"
    photon_scale: float = 5000.0
    read_noise: float = 0.01
    # sensor pedestal so read noise is not truncated at zero
    black_level: float = 16.0 / 255.0
    # mean frame level the auto policy meters to
    ae_target: float = 0.5
    gain_min: float = 1.0
    gain_max: float = 32.0

    def __post_init__(self):
        if self.pixels_on_axis < 1:
            raise OpticsDomainError("pixels_on_axis must be >= 1")
        if self.fw_ratio is None and self.vertical_fov is None:
            raise OpticsDomainError("one of fw_ratio or vertical_fov is required")
        if self.fw_ratio is not None and self.vertical_fov is not None:
            if abs(fw_from_fov(self.vertical_fov) - self.fw_ratio) > 1e-9:
                raise OpticsDomainError("fw_ratio and vertical_fov disagree")
        if not 0.5 <= self.fw <= 5:
            raise OpticsDomainError(f"f/W ratio must lie in [0.5, 5], got {self.fw!r}")
        _positive(frame_rate=self.frame_rate, exposure_time=self.exposure_time,
                  iso_gain=self.iso_gain, photon_scale=self.photon_scale)
        if self.exposure_policy not in ("auto", "manual"):
            raise OpticsDomainError(f"unknown exposure policy {self.exposure_policy!r}")
        if not 0 < self.gain_min <= self.gain_max:
            raise OpticsDomainError("gain bounds must satisfy 0 < gain_min <= gain_max")

    @property
    def fw(self) -> float:
        if self.fw_ratio is not None:
            return float(self.fw_ratio)
        return fw_from_fov(self.vertical_fov)


@dataclass(frozen=True)
class GlassesSpec:
    focal_length: float = 500.0
    chord_horizontal: float = 60.0
    chord_vertical: float = 50.0
    reflectance: float = 0.1
    coating_condition: float = 1.0
    refractive_index: float = 1.5
    inner_radius: Optional[float] = None

    def __post_init__(self):
        _positive(focal_length=self.focal_length)
        for name in ("chord_horizontal", "chord_vertical"):
            c = getattr(self, name)
            if not 0 <= c < 4.0 * self.focal_length:
                raise OpticsDomainError(f"{name}={c!r} exceeds the lens sphere diameter")
        if not 0 < self.reflectance <= 1:
            raise OpticsDomainError("reflectance must lie in (0, 1]")
        if not 0 <= self.coating_condition <= 1:
            raise OpticsDomainError("coating_condition must lie in [0, 1]")

    @property
    def radius(self) -> float:
        return 2.0 * self.focal_length

    def chord(self, axis: str) -> float:
        return self.chord_horizontal if axis == "horizontal" else self.chord_vertical


@dataclass(frozen=True)
class Geometry:
    glass_screen_distance: float = 400.0
    head_to_lens: float = 102.0  # fitted to the lab viewing-angle table
    head_rotation: float = 0.0
    aligned: bool = True

    def __post_init__(self):
        _positive(glass_screen_distance=self.glass_screen_distance, head_to_lens=self.head_to_lens)
        if abs(self.head_rotation) >= 90:
            raise OpticsDomainError("head rotation must satisfy |theta| < 90 degrees")


# ---------------------------------------------------------------------------
# text size and reflection size


def cap_height(text: TextSpec, screen: ScreenSpec) -> float:
    """Physical cap height (mm) of text rendered at ``text.point_size``.

    Browsers draw 1 pt as 4/3 CSS pixels; each CSS pixel spans
    ``H_scr / N_os`` millimetres scaled by OS and browser zoom.
    """
    return (4.0 / 3.0 * text.point_size
            * (screen.physical_height / screen.os_resolution_height)
            * screen.os_zoom * screen.browser_zoom * text.cap_ratio)


def convex_mirror_image(h_o: float, d_o: float, f_g: float) -> tuple[float, float]:
    """Return ``(h_i, d_i)`` for the virtual image behind a convex mirror."""
    _positive(d_o=d_o, f_g=f_g)
    if h_o < 0:
        raise OpticsDomainError("object height must be non-negative")
    d_i = d_o * f_g / (d_o + f_g)
    return h_o * f_g / (d_o + f_g), d_i


def pinhole_pixel_size(h_i: float, distance: float, fw: float, n_pixels: float) -> float:
    """Pixel extent of an object of height ``h_i`` at ``distance`` from a pinhole camera."""
    return h_i / distance * fw * n_pixels


def _pixels_per_mm(geom: Geometry, glasses: GlassesSpec, cam: CameraSpec) -> float:
    d_o, f_g = geom.glass_screen_distance, glasses.focal_length
    return f_g / (d_o * d_o + 2.0 * d_o * f_g) * cam.fw * cam.pixels_on_axis


def reflection_pixel_size(h_o: float, geom: Geometry, glasses: GlassesSpec, cam: CameraSpec) -> float:
    """Camera-pixel height of the reflection of an on-screen object of height ``h_o``."""
    if h_o < 0:
        raise OpticsDomainError("object height must be non-negative")
    return h_o * _pixels_per_mm(geom, glasses, cam)


def motion_blur_pixels(displacement: float, geom: Geometry, glasses: GlassesSpec, cam: CameraSpec) -> float:
    """Blur length in pixels for a head displacement (mm) during one exposure."""
    if displacement < 0:
        raise OpticsDomainError("displacement must be non-negative")
    return displacement * _pixels_per_mm(geom, glasses, cam)


def tremor_displacement(amplitude: float, frequency: float, exposure_time: float) -> float:
    """Worst-case travel (mm) of a sinusoidal tremor within one exposure window.

    The steepest part of ``A sin(2 pi f t)`` is at the zero crossing, so the
    travel over a window ``t`` centred there is ``2 A sin(pi f t)``, capped at
    the peak-to-peak ``2 A``.
    """
    if amplitude < 0 or frequency < 0 or exposure_time < 0:
        raise OpticsDomainError("tremor parameters must be non-negative")
    phase = min(math.pi * frequency * exposure_time, math.pi / 2)
    return 2.0 * amplitude * math.sin(phase)


def lens_power(r_outer: float, r_inner: float, refractive_index: float = 1.5) -> float:
    """Lens Maker's power in dioptres; radii in millimetres."""
    if r_outer == 0 or r_inner == 0:
        raise OpticsDomainError("surface radii must be non-zero")
    return (refractive_index - 1.0) * (1000.0 / r_outer - 1000.0 / r_inner)


# ---------------------------------------------------------------------------
# viewing angle


Mode = Literal["all_page", "center"]
Axis = Literal["horizontal", "vertical"]


def _screen_hit(theta: float, chord_offset: float, s: float, d: float, f_g: float) -> float:
    """Screen coordinate hit by the ray reflected towards the camera.

    The lens point sits ``chord_offset`` from the lens axis. Head rotation
    ``theta`` (radians) is about the origin; the camera is at ``(s + d, 0)``
    and the screen is the line ``x = s + d``.
    """
    R = 2.0 * f_g
    half = abs(chord_offset)
    r = math.hypot(half, math.sqrt(R * R - half * half) - (R - s))
    alpha = math.asin(chord_offset / r) if r > 0 else 0.0
    x0, y0 = r * math.cos(alpha), r * math.sin(alpha)
    ct, st = math.cos(theta), math.sin(theta)
    # rotated sphere centre (C, D) and reflection point (A, B)
    C, D = (s - R) * ct, (s - R) * st
    A, B = x0 * ct - y0 * st, x0 * st + y0 * ct
    E = s + d
    b1 = (B - D) / (A - C)
    b2 = B / (A - E)
    b3 = (b2 - 2 * b1 - b1 * b1 * b2) / (b1 * b1 - 2 * b1 * b2 - 1)
    return B + b3 * (E - A)


def lens_footprint(theta_deg: float, s: float, d: float, f_g: float, chord: float,
                   samples: int = 65) -> tuple[float, float]:
    """Range of screen coordinates that reach the camera via the lens at ``theta``."""
    th = math.radians(theta_deg)
    hits = [_screen_hit(th, c, s, d, f_g) for c in np.linspace(-chord / 2, chord / 2, samples)]
    return min(hits), max(hits)


def _feasible(theta_deg: float, mode: Mode, s: float, d: float, f_g: float, chord: float,
              half_length: float) -> bool:
    lo, hi = lens_footprint(theta_deg, s, d, f_g, chord)
    if mode == "center":
        return lo <= 0.0 <= hi
    return hi >= -half_length and lo <= half_length


def viewing_angle_range(geom: Geometry, glasses: GlassesSpec, screen: ScreenSpec,
                        mode: Mode = "all_page", axis: Axis = "horizontal",
                        resolution: float = 0.1) -> tuple[float, float]:
    """Symmetric interval of head rotations (degrees) that still leak the screen.

    ``all_page`` succeeds when any screen point reaches the camera through the
    lens; ``center`` only when the screen centre does. The camera sits at the
    middle of the screen segment of length ``screen.length(axis)``. Returns
    ``(0.0, 0.0)`` when even the aligned pose is infeasible.
    """
    if mode not in ("all_page", "center"):
        raise ValueError(f"unknown mode {mode!r}")
    if axis not in ("horizontal", "vertical"):
        raise ValueError(f"unknown axis {axis!r}")
    s, d = geom.head_to_lens, geom.glass_screen_distance
    f_g, chord = glasses.focal_length, glasses.chord(axis)
    half = screen.length(axis) / 2.0
    if not _feasible(0.0, mode, s, d, f_g, chord, half):
        return (0.0, 0.0)
    limits = []
    step = 0.5
    for sign in (1.0, -1.0):
        # walk out to the first infeasible pose; feasibility is not monotone
        # near grazing rotations, so only the interval around 0 counts
        lo = 0.0
        while lo + step < 89.9 and _feasible(sign * (lo + step), mode, s, d, f_g, chord, half):
            lo += step
        hi = min(lo + step, 89.9)
        if _feasible(sign * hi, mode, s, d, f_g, chord, half):
            limits.append(hi)
            continue
        while hi - lo > resolution:
            mid = 0.5 * (lo + hi)
            if _feasible(sign * mid, mode, s, d, f_g, chord, half):
                lo = mid
            else:
                hi = mid
        limits.append(lo)
    theta = min(limits)
    return (-theta, theta)


# Predicted feasible ranges printed alongside the measured ones for the two lab
# lenses: (glasses, mode, axis) -> half-angle in degrees.
TABLE_VIEWING_ANGLES = {
    ("prescription", "all_page", "horizontal"): 15.0,
    ("prescription", "center", "horizontal"): 5.0,
    ("prescription", "all_page", "vertical"): 9.0,
    ("prescription", "center", "vertical"): 3.0,
    ("blb", "all_page", "horizontal"): 20.0,
    ("blb", "center", "horizontal"): 10.0,
    ("blb", "all_page", "vertical"): 14.0,
    ("blb", "center", "vertical"): 8.0,
}

LAB_GLASSES = {
    "prescription": GlassesSpec(focal_length=500.0, chord_horizontal=60.0, chord_vertical=50.0,
                                reflectance=0.08),
    "blb": GlassesSpec(focal_length=80.0, chord_horizontal=50.0, chord_vertical=40.0,
                       reflectance=0.15),
}


@dataclass
class Calibration:
    head_to_lens: float
    rms_error: float
    predictions: dict = field(default_factory=dict)


def calibrate_head_to_lens(distance: float = 400.0, screen: Optional[ScreenSpec] = None,
                           bounds: Sequence[float] = (60.0, 120.0), step: float = 1.0,
                           targets: Optional[dict] = None) -> Calibration:
    """Fit the head-centre-to-lens distance against tabulated viewing angles.

    Grid search over ``bounds`` at ``step`` mm minimising squared error. The
    returned value is an estimate, not a measured constant.
    """
    screen = screen or ScreenSpec()
    targets = targets or TABLE_VIEWING_ANGLES
    best = None
    for s in np.arange(bounds[0], bounds[1] + 1e-9, step):
        geom = Geometry(glass_screen_distance=distance, head_to_lens=float(s))
        preds = {key: viewing_angle_range(geom, LAB_GLASSES[key[0]], screen, key[1], key[2])[1]
                 for key in targets}
        err = sum((preds[k] - targets[k]) ** 2 for k in targets)
        if best is None or err < best[0]:
            best = (err, float(s), preds)
    err, s, preds = best
    return Calibration(head_to_lens=s, rms_error=math.sqrt(err / len(targets)), predictions=preds)
