"""Similarity and statistics used to score reflection recognisability."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

MIN_SIDE = 32


@dataclass(frozen=True)
class SimilarityScore:
    value: float
    levels: tuple[float, ...] = field(default=())

    def __float__(self) -> float:
        return self.value


@lru_cache(maxsize=32)
def _pyramid_filters(shape: tuple[int, int], levels: int, orientations: int) -> np.ndarray:
    """Frequency responses of an undecimated complex steerable pyramid.

    Radial windows are half-cosines on a log2 frequency axis, one octave
    apart, so adjacent bands are power complementary. The finest band peaks at
    ``pi / 2**1.5``; content above ``pi / sqrt(2)`` (the residual high-pass)
    is dropped. Angular windows are one-sided, which makes every band
    analytic and its coefficients complex.
    """
    h, w = shape
    fy = np.fft.fftfreq(h) * 2 * np.pi
    fx = np.fft.fftfreq(w) * 2 * np.pi
    FX, FY = np.meshgrid(fx, fy)
    radius = np.hypot(FX, FY)
    angle = np.arctan2(FY, FX)
    log_r = np.log2(np.where(radius > 0, radius, 1e-12) / np.pi)
    out = np.zeros((levels, orientations, h, w))
    for j in range(levels):
        x = log_r + (j + 1.5)
        radial = np.where(np.abs(x) < 1, np.cos(np.pi / 2 * x), 0.0)
        for k in range(orientations):
            d = np.angle(np.exp(1j * (angle - np.pi * k / orientations)))
            angular = np.where(np.abs(d) < np.pi / 2, np.cos(d) ** (orientations - 1), 0.0)
            out[j, k] = radial * angular
    out.setflags(write=False)
    return out


def _pad_reflect(img: np.ndarray, min_side: int) -> np.ndarray:
    h, w = img.shape
    ph, pw = max(0, min_side - h), max(0, min_side - w)
    if ph == 0 and pw == 0:
        return img
    # symmetric padding can need several passes when the image is tiny
    while img.shape[0] < h + ph or img.shape[1] < w + pw:
        need_h = min(h + ph - img.shape[0], img.shape[0])
        need_w = min(w + pw - img.shape[1], img.shape[1])
        img = np.pad(img, ((need_h // 2, need_h - need_h // 2), (need_w // 2, need_w - need_w // 2)),
                     mode="symmetric")
    return img


def complex_subbands(img: np.ndarray, levels: int = 4, orientations: int = 6) -> np.ndarray:
    """Complex coefficients with shape ``(levels, orientations, H, W)``."""
    spectrum = np.fft.fft2(img)
    filters = _pyramid_filters(img.shape, levels, orientations)
    return np.fft.ifft2(spectrum[None, None] * filters, axes=(-2, -1))


def cwssim(a: np.ndarray, b: np.ndarray, levels: int = 4, orientations: int = 6,
           k_ratio: float = 0.01) -> SimilarityScore:
    """Complex-wavelet structural similarity of two equally sized images.

    Each subband is one window: ``(2|sum ca*conj(cb)| + K) / (sum|ca|^2 +
    sum|cb|^2 + K)`` with ``K = k_ratio`` times the mean subband energy of the
    pair. Scores are averaged over orientations, then levels.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 2:
        raise ValueError(f"images must be 2-D with equal shapes, got {a.shape} and {b.shape}")
    a = _pad_reflect(a, MIN_SIDE)
    b = _pad_reflect(b, MIN_SIDE)
    ca = complex_subbands(a, levels, orientations)
    cb = complex_subbands(b, levels, orientations)
    cross = np.abs(np.sum(ca * np.conj(cb), axis=(-2, -1)))
    energy = np.sum(np.abs(ca) ** 2, axis=(-2, -1)) + np.sum(np.abs(cb) ** 2, axis=(-2, -1))
    K = k_ratio * energy / 2.0 + 1e-20
    band = (2.0 * cross + K) / (energy + K)
    per_level = band.mean(axis=1)
    value = float(np.clip(per_level.mean(), 0.0, 1.0))
    return SimilarityScore(value, tuple(float(v) for v in per_level))


def standardize(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img, dtype=float)
    sd = img.std()
    return (img - img.mean()) / sd if sd > 0 else img - img.mean()


def reflection_similarity(image: np.ndarray, template: np.ndarray) -> float:
    """CWSSIM after removing brightness and contrast differences.

    Reflections are far dimmer than their templates; only structure should
    count towards recognisability.
    """
    return cwssim(standardize(image), standardize(template)).value


def pixel_stats(img: np.ndarray) -> tuple[float, float]:
    """Mean and population standard deviation of the pixels."""
    arr = np.asarray(img, dtype=float)
    if arr.size == 0:
        raise ValueError("empty image")
    return float(arr.mean()), float(arr.std())


class UndefinedCorrelation(ValueError):
    pass


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("pearson needs two 1-D sequences of equal length")
    if len(x) < 3:
        raise ValueError("pearson needs at least 3 pairs")
    dx, dy = x - x.mean(), y - y.mean()
    sx, sy = np.sqrt(np.sum(dx * dx)), np.sqrt(np.sum(dy * dy))
    if sx == 0 or sy == 0:
        raise UndefinedCorrelation("correlation is undefined for a zero-variance input")
    return float(np.clip(np.sum(dx * dy) / (sx * sy), -1.0, 1.0))


def attack_score(accuracies: Sequence[float], w: float = 1.5) -> float:
    """Rectified weighted sum of per-size recognition accuracies.

    ``accuracies`` runs from S1 (smallest text) to S6 (largest). S1 carries
    weight ``w**6`` and S6 ``w**1`` so that reading small text counts most.
    """
    acc = np.asarray(accuracies, dtype=float)
    if acc.shape != (6,):
        raise ValueError(f"expected 6 accuracies (S1..S6), got {acc.shape[0] if acc.ndim else 0}")
    if w <= 0:
        raise ValueError("weight base w must be positive")
    weights = w ** np.arange(6, 0, -1, dtype=float)
    return float(max(0.0, np.dot(weights, acc)))
