"""JSON configuration: one document, fixed sections, unknown keys rejected."""
from __future__ import annotations

import copy
import dataclasses
import json
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Optional, Union

from . import channel as ch
from .assess import AssessConfig
from .mfsr import MfsrParams
from .optics import LAB_GLASSES, CameraSpec, Geometry, GlassesSpec, ScreenSpec, TextSpec
from .simulate import Lighting, SceneConfig, Tremor

SECTIONS = ("screen", "text", "glasses", "camera", "geometry", "lighting", "channel", "mfsr", "assess")


class ConfigError(ValueError):
    pass


def _names(cls) -> set[str]:
    return {f.name for f in fields(cls)}


def _build(cls, section: str, data: dict, extra: tuple[str, ...] = ()):
    if not isinstance(data, dict):
        raise ConfigError(f"section {section!r} must be an object")
    unknown = set(data) - _names(cls) - set(extra)
    if unknown:
        raise ConfigError(f"unknown keys in {section!r}: {sorted(unknown)}")
    kwargs = {k: (tuple(v) if isinstance(v, list) else v) for k, v in data.items() if k not in extra}
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {section!r}: {exc}") from exc


@dataclass
class Config:
    scene: SceneConfig
    channel_table: ch.ChannelTable
    mfsr: MfsrParams
    assess: AssessConfig
    document: dict

    def with_seed(self, seed: int) -> "Config":
        doc = copy.deepcopy(self.document)
        doc.setdefault("assess", {})["seed"] = int(seed)
        return from_dict(doc)


def from_dict(doc: dict) -> Config:
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = set(doc) - set(SECTIONS)
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}; valid: {list(SECTIONS)}")
    doc = copy.deepcopy(doc)
    g = dict(doc.get("glasses", {}))
    preset = g.pop("preset", None)
    if preset is not None:
        if preset not in LAB_GLASSES:
            raise ConfigError(f"unknown glasses preset {preset!r}; valid: {sorted(LAB_GLASSES)}")
        g = {**dataclasses.asdict(LAB_GLASSES[preset]), **g}
    glasses = _build(GlassesSpec, "glasses", g)

    geo = dict(doc.get("geometry", {}))
    tremor = Tremor(**{k[len("tremor_"):]: geo.pop(k) for k in ("tremor_amplitude", "tremor_frequency") if k in geo})
    geometry = _build(Geometry, "geometry", geo)

    text = dict(doc.get("text", {}))
    cap_mm = text.pop("cap_height_mm", None)
    a = _build(AssessConfig, "assess", doc.get("assess", {}))

    c = dict(doc.get("channel", {}))
    unknown = set(c) - {"preset", "tiers", "step_scale", "bandwidth"}
    if unknown:
        raise ConfigError(f"unknown keys in 'channel': {sorted(unknown)}")
    table = ch.PRESETS.get(c.get("preset", "zoom"))
    if table is None:
        raise ConfigError(f"unknown channel preset {c['preset']!r}; valid: {sorted(ch.PRESETS)}")
    try:
        if "tiers" in c:
            table = dataclasses.replace(table, tiers=tuple(ch.Tier(**t) for t in c["tiers"]))
        if "step_scale" in c:
            table = dataclasses.replace(table, step_scale=float(c["step_scale"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid 'channel': {exc}") from exc
    if c.get("bandwidth") is not None:
        a = dataclasses.replace(a, bandwidth=float(c["bandwidth"]))

    scene = SceneConfig(
        screen=_build(ScreenSpec, "screen", doc.get("screen", {})),
        text=_build(TextSpec, "text", text),
        glasses=glasses,
        camera=_build(CameraSpec, "camera", doc.get("camera", {})),
        geometry=geometry,
        lighting=_build(Lighting, "lighting", doc.get("lighting", {})),
        tremor=tremor,
        seed=a.seed,
        cap_height_mm=cap_mm,
    )
    return Config(scene, table, _build(MfsrParams, "mfsr", doc.get("mfsr", {})), a, doc)


def load(path: Union[str, Path, None] = None, seed: Optional[int] = None) -> Config:
    """Read a config file; ``None`` gives the reference preset."""
    if path is None:
        cfg = from_dict(preset("reference"))
    else:
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        cfg = from_dict(doc)
    return cfg.with_seed(seed) if seed is not None else cfg


_PRESETS: dict[str, dict[str, Any]] = {
    # prescription glasses at 40 cm in front of the screen, 720p webcam, lab lighting
    "reference": {
        "glasses": {"preset": "prescription"},
        "geometry": {"glass_screen_distance": 400.0, "head_to_lens": 102.0},
        "camera": {"pixels_on_axis": 720},
        "lighting": {"env_illuminance": 0.1, "face_reflectance": 0.1},
        "assess": {"seed": 0},
    },
    "blb": {
        "glasses": {"preset": "blb"},
        "geometry": {"glass_screen_distance": 400.0, "head_to_lens": 102.0},
        "camera": {"pixels_on_axis": 720},
        "assess": {"seed": 0},
    },
    "skype": {"glasses": {"preset": "prescription"}, "channel": {"preset": "skype", "bandwidth": 1200.0}},
    "meet": {"glasses": {"preset": "prescription"}, "channel": {"preset": "meet", "bandwidth": 1200.0}},
}
PRESET_NAMES = tuple(_PRESETS)


def preset(name: str) -> dict[str, Any]:
    if name not in _PRESETS:
        raise ConfigError(f"unknown preset {name!r}; valid: {list(_PRESETS)}")
    return copy.deepcopy(_PRESETS[name])


def reference_scene(cap_height_mm: Optional[float] = None, seed: int = 0) -> SceneConfig:
    scene = from_dict(preset("reference")).scene
    return dataclasses.replace(scene, cap_height_mm=cap_height_mm, seed=seed)


def to_dict(cfg: Config) -> dict[str, Any]:
    """Fully expanded document (every field explicit), suitable for report echo."""
    sc = cfg.scene
    geo = dataclasses.asdict(sc.geometry)
    geo.update(tremor_amplitude=sc.tremor.amplitude, tremor_frequency=sc.tremor.frequency)
    text = dataclasses.asdict(sc.text)
    text["cap_height_mm"] = sc.cap_height_mm
    assess = dataclasses.asdict(cfg.assess)
    return {
        "screen": dataclasses.asdict(sc.screen),
        "text": text,
        "glasses": dataclasses.asdict(sc.glasses),
        "camera": dataclasses.asdict(sc.camera),
        "geometry": geo,
        "lighting": dataclasses.asdict(sc.lighting),
        "channel": {"tiers": [dataclasses.asdict(t) for t in cfg.channel_table.tiers],
                    "step_scale": cfg.channel_table.step_scale,
                    "bandwidth": cfg.assess.bandwidth},
        "mfsr": dataclasses.asdict(cfg.mfsr),
        "assess": {k: (list(v) if isinstance(v, tuple) else v) for k, v in assess.items()},
    }
