"""Individual reflection assessment: ladder sweep, threshold, web-target mapping."""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Iterable, Mapping, Optional, Sequence

import numpy as np

from . import __version__
from .channel import ChannelTable
from .metrics import attack_score, pearson, pixel_stats
from .mfsr import MfsrParams
from .optics import viewing_angle_range
from .pipeline import evaluate
from .simulate import SceneConfig, with_cap_height

CAMERA_RESOLUTIONS = (720, 1080, 2160)
LADDER_MM = (20.0, 14.0, 10.0, 7.0)
DEFAULT_TAU = 0.94


@dataclass(frozen=True)
class Target:
    group: str
    label: str
    point_size: float
    cap_height: float  # mm
    size_tag: Optional[str] = None  # S1..S6 for the attack-score ladder

    @property
    def name(self) -> str:
        return f"{self.group} {self.label}"


@dataclass(frozen=True)
class TargetCatalog:
    entries: tuple[Target, ...]

    def __post_init__(self):
        for g in {e.group for e in self.entries}:
            caps = [e.cap_height for e in self.entries if e.group == g]
            if any(b <= a for a, b in zip(caps, caps[1:])):
                raise ValueError(f"cap heights must increase strictly within group {g}")

    def sized(self) -> list[Target]:
        """Entries carrying an S1..S6 tag, smallest first."""
        return sorted((e for e in self.entries if e.size_tag), key=lambda e: e.size_tag)

    def at_or_above(self, h: float) -> list[Target]:
        return [e for e in self.entries if e.cap_height >= h]


TARGET_CATALOG = TargetCatalog((
    Target("G1", "P", 12, 2.1),
    Target("G1", "H3", 14, 2.5),
    Target("G1", "H2", 18, 3.2),
    Target("G1", "H1", 24, 4.3),
    Target("G2", "P", 21, 3.7),
    Target("G2", "H3", 25, 4.3),
    Target("G2", "H2", 32, 5.6),
    Target("G2", "H1", 42, 7.4, "S1"),
    Target("G3", "0%", 56, 10.0, "S2"),
    Target("G3", "20%", 80, 14.0, "S3"),
    Target("G3", "40%", 102, 18.0, "S4"),
    Target("G3", "60%", 136, 24.0),
    Target("G3", "80%", 253, 35.0, "S5"),
    Target("G3", "95%", 340, 60.0, "S6"),
))


@dataclass(frozen=True)
class AssessConfig:
    tau: float = DEFAULT_TAU
    seed: int = 0
    ladder_mm: tuple[float, ...] = LADDER_MM
    include_s_sizes: bool = True
    resolutions: tuple[int, ...] = CAMERA_RESOLUTIONS
    # None leaves the channel out
    bandwidth: Optional[float] = None
    viewing_angles: bool = True


@dataclass
class SizeResult:
    label: str
    cap_height: float
    score: float
    recognizable: bool
    point_size: Optional[float] = None


@dataclass
class ThreatReport:
    tau: float
    camera_resolution: int
    sizes: list[SizeResult]
    min_recognizable_cap_height: dict[int, Optional[float]]
    susceptible: dict[int, dict[str, list[str]]]
    viewing_angles: dict[str, dict[str, list[float]]] = field(default_factory=dict)
    factors: dict[str, Any] = field(default_factory=dict)
    attack_score: Optional[float] = None
    config: dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    notes: list[str] = field(default_factory=list)

    def susceptible_groups(self, n: int) -> set[str]:
        return set(self.susceptible.get(n, {}))

    def to_dict(self) -> dict[str, Any]:
        return {
            "version": __version__,
            "tau": self.tau,
            "seed": self.seed,
            "camera_resolution": self.camera_resolution,
            "sizes": [dataclasses.asdict(s) for s in self.sizes],
            "min_recognizable_cap_height": {str(k): v for k, v in self.min_recognizable_cap_height.items()},
            "susceptible": {str(k): v for k, v in self.susceptible.items()},
            "viewing_angles": self.viewing_angles,
            "factors": self.factors,
            "attack_score": self.attack_score,
            "config": self.config,
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def extrapolate(h: float, n_cam: int, resolutions: Iterable[int] = CAMERA_RESOLUTIONS) -> dict[int, float]:
    """Minimum recognisable cap height for other camera resolutions (s_p grows linearly with N)."""
    return {int(n): h * n_cam / n for n in resolutions}


def susceptible_targets(h: Optional[float], catalog: TargetCatalog = TARGET_CATALOG) -> dict[str, list[str]]:
    if h is None:
        return {}
    out: dict[str, list[str]] = {}
    for e in catalog.at_or_above(h):
        out.setdefault(e.group, []).append(e.label)
    return out


def build_report(sizes: Sequence[SizeResult], tau: float, camera_resolution: int,
                 resolutions: Iterable[int] = CAMERA_RESOLUTIONS,
                 catalog: TargetCatalog = TARGET_CATALOG) -> ThreatReport:
    """Threshold decisions, extrapolation and target mapping for scored sizes."""
    resolutions = tuple(resolutions)
    passing = [s.cap_height for s in sizes if s.recognizable]
    h0 = min(passing) if passing else None
    if h0 is None:
        mins: dict[int, Optional[float]] = {n: None for n in resolutions}
    else:
        mins = dict(extrapolate(h0, camera_resolution, resolutions))
        for n in resolutions:
            assert math.isclose(mins[n] * n, h0 * camera_resolution, rel_tol=1e-9)
    report = ThreatReport(tau, camera_resolution, list(sizes), mins,
                          {n: susceptible_targets(mins[n], catalog) for n in resolutions})
    by_tag = {e.size_tag: e.cap_height for e in catalog.sized()}
    flags = {s.cap_height: s.recognizable for s in sizes}
    if all(by_tag[t] in flags for t in by_tag):
        acc = [1.0 if flags[by_tag[t]] else 0.0 for t in sorted(by_tag)]
        report.attack_score = attack_score(acc)
        report.notes.append("attack_score uses binary threshold decisions in place of recognition "
                            "accuracies; S1 carries weight w**6")
    report.notes.append("scores are CWSSIM values and threshold decisions, not human recognition rates")
    return report


def ladder(cfg: AssessConfig, catalog: TargetCatalog = TARGET_CATALOG) -> list[tuple[str, float, Optional[float]]]:
    """(label, cap height mm, point size) for every size to evaluate, largest first."""
    items: dict[float, tuple[str, float, Optional[float]]] = {}
    if cfg.include_s_sizes:
        for e in catalog.sized():
            items[e.cap_height] = (e.size_tag, e.cap_height, e.point_size)
    for h in cfg.ladder_mm:
        h = float(h)
        if h in items:
            tag, _, pt = items[h]
            items[h] = (f"{tag}/{h:g}mm", h, pt)
        else:
            items[h] = (f"{h:g}mm", h, None)
    return sorted(items.values(), key=lambda t: -t[1])


def score_size(scene: SceneConfig, h: float, params: MfsrParams, cfg: AssessConfig,
               table: ChannelTable) -> float:
    sc = replace(with_cap_height(scene, h), seed=cfg.seed)
    return evaluate(sc, params, cfg.bandwidth, table).score


def run_assessment(scene: SceneConfig, cfg: AssessConfig = AssessConfig(), params: MfsrParams = MfsrParams(),
                   table: ChannelTable = ChannelTable(), config_echo: Optional[dict] = None) -> ThreatReport:
    sizes = []
    for label, h, pt in ladder(cfg):
        s = score_size(scene, h, params, cfg, table)
        sizes.append(SizeResult(label, h, s, s >= cfg.tau, pt))
    report = build_report(sizes, cfg.tau, scene.camera.pixels_on_axis, cfg.resolutions)
    report.seed = cfg.seed
    report.config = config_echo if config_echo is not None else {}
    if cfg.viewing_angles:
        report.viewing_angles = {
            mode: {axis: list(viewing_angle_range(scene.geometry, scene.glasses, scene.screen, mode, axis))
                   for axis in ("horizontal", "vertical")}
            for mode in ("all_page", "center")
        }
    return report


# ---------------------------------------------------------------------------
# factor sweeps


def _set_contrast(sc: SceneConfig, v: float) -> SceneConfig:
    bg = sc.lighting.background_gray
    return replace(sc, lighting=replace(sc.lighting, text_gray=bg - v if bg >= v else bg + v))


def _nested(section: str, attr: str) -> Callable[[SceneConfig, float], SceneConfig]:
    def setter(sc: SceneConfig, v: float) -> SceneConfig:
        return replace(sc, **{section: replace(getattr(sc, section), **{attr: v})})
    return setter


FACTORS: dict[str, Optional[Callable[[SceneConfig, float], SceneConfig]]] = {
    "contrast": _set_contrast,
    "face_reflectance": _nested("lighting", "face_reflectance"),
    "env_illuminance": _nested("lighting", "env_illuminance"),
    "screen_luminance": _nested("lighting", "screen_luminance"),
    "bandwidth": None,  # handled by the channel
    "f_g": _nested("glasses", "focal_length"),
    "rho_g": _nested("glasses", "reflectance"),
    "coating": _nested("glasses", "coating_condition"),
    "d_o": _nested("geometry", "glass_screen_distance"),
}


class UnknownFactor(ValueError):
    pass


@dataclass
class SweepResult:
    factor: str
    values: list[float]
    scores: list[float]
    pearson_r: float

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def to_csv(self) -> str:
        rows = [f"{self.factor},cwssim"] + [f"{v!r},{s!r}" for v, s in zip(self.values, self.scores)]
        return "\n".join(rows) + "\n"


def factor_sweep(scene: SceneConfig, factor: str, values: Sequence[float], params: MfsrParams = MfsrParams(),
                 bandwidth: Optional[float] = None, table: ChannelTable = ChannelTable()) -> SweepResult:
    """Pipeline score per factor value and its Pearson correlation with the factor.

    Fewer than three values (or a constant series) raise from ``pearson``.
    """
    if factor not in FACTORS:
        raise UnknownFactor(f"unknown factor {factor!r}; valid: {', '.join(FACTORS)}")
    vals = [float(v) for v in values]
    scores = []
    for v in vals:
        if factor == "bandwidth":
            scores.append(evaluate(scene, params, v, table).score)
        else:
            scores.append(evaluate(FACTORS[factor](scene, v), params, bandwidth, table).score)
    return SweepResult(factor, vals, scores, pearson(vals, scores))


# ---------------------------------------------------------------------------
# website susceptibility


def website_susceptibility(images: Sequence[np.ndarray], easiness: Sequence[float]) -> tuple[float, float]:
    """Correlation of easiness with pixel mean and with pixel std.

    Larger ``easiness`` values mean the page was easier to read back.
    """
    if len(images) != len(easiness):
        raise ValueError("one easiness value per image is required")
    stats = [pixel_stats(img) for img in images]
    return (pearson(easiness, [m for m, _ in stats]), pearson(easiness, [s for _, s in stats]))


def summarize_scores(report: ThreatReport) -> Mapping[str, float]:
    return {s.label: s.score for s in report.sizes}
