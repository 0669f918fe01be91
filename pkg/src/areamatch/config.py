"""Pipeline configuration and TOML/JSON loading with strict key checking."""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

from .geometry import ImageDims, LevelThresholds
from .graph import GraphConfig
from .refine import EnergyParams

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

PROVIDERS = ("ground-truth", "ncc", "constant")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    graph: GraphConfig = field(default_factory=GraphConfig)
    energy: EnergyParams = field(default_factory=EnergyParams)
    lam: float = 0.1
    source_level: int = 1
    crop_aspect: tuple[float, float] = (1.0, 1.0)
    spread: float = 1.2
    provider: str = "ground-truth"
    t_as: float = 0.05
    prune: bool = True
    consistency_iou: float = 0.6

    def __post_init__(self):
        if not 0 <= self.source_level < self.graph.num_levels:
            raise ConfigError(f"source_level must lie in [0, {self.graph.num_levels - 1}]")
        if self.provider not in PROVIDERS:
            raise ConfigError(f"unknown provider {self.provider!r}; choose from {PROVIDERS}")
        if self.spread < 1:
            raise ConfigError("spread must be >= 1")


_GRAPH_KEYS = {"t_s", "t_r", "thresholds", "delta_l", "delta_h", "work_width",
               "work_height", "seed"}
_TOP_KEYS = {"graph", "energy", "lambda", "source_level", "crop_aspect", "spread",
             "provider", "t_as", "prune", "consistency_iou"}


def _check_keys(d: dict, allowed: set[str], where: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def config_from_dict(d: dict[str, Any], base: PipelineConfig | None = None) -> PipelineConfig:
    """Overlay a nested dict onto `base` (defaults when None); unknown keys raise."""
    base = base or PipelineConfig()
    _check_keys(d, _TOP_KEYS, "config")
    g = d.get("graph", {})
    _check_keys(g, _GRAPH_KEYS, "[graph]")
    bg = base.graph
    thresholds = LevelThresholds(tuple(g["thresholds"])) if "thresholds" in g else bg.thresholds
    try:
        graph = GraphConfig(
            t_s=g.get("t_s", thresholds.tl[0]),
            t_r=g.get("t_r", bg.t_r),
            thresholds=thresholds,
            delta_l=g.get("delta_l", bg.delta_l),
            delta_h=g.get("delta_h", bg.delta_h),
            work_dims=ImageDims(g.get("work_width", bg.work_dims.width),
                                g.get("work_height", bg.work_dims.height)),
            seed=g.get("seed", bg.seed),
        )
        e = d.get("energy", {})
        _check_keys(e, {f.name for f in fields(EnergyParams)}, "[energy]")
        energy = replace(base.energy, **e)
        top = {
            "lam": d.get("lambda", base.lam),
            "source_level": d.get("source_level", base.source_level),
            "crop_aspect": tuple(d.get("crop_aspect", base.crop_aspect)),
            "spread": d.get("spread", base.spread),
            "provider": d.get("provider", base.provider),
            "t_as": d.get("t_as", base.t_as),
            "prune": d.get("prune", base.prune),
            "consistency_iou": d.get("consistency_iou", base.consistency_iou),
        }
        return PipelineConfig(graph=graph, energy=energy, **top)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path | None) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    p = Path(path)
    text = p.read_text()
    try:
        data = tomllib.loads(text) if p.suffix == ".toml" else json.loads(text)
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot parse {p}: {exc}") from exc
    return config_from_dict(data)


def config_to_dict(cfg: PipelineConfig) -> dict[str, Any]:
    g = cfg.graph
    return {
        "graph": {"t_s": g.t_s, "t_r": g.t_r, "thresholds": list(g.thresholds.tl),
                  "delta_l": g.delta_l, "delta_h": g.delta_h,
                  "work_width": g.work_dims.width, "work_height": g.work_dims.height,
                  "seed": g.seed},
        "energy": {f.name: getattr(cfg.energy, f.name) for f in fields(EnergyParams)},
        "lambda": cfg.lam,
        "source_level": cfg.source_level,
        "crop_aspect": list(cfg.crop_aspect),
        "spread": cfg.spread,
        "provider": cfg.provider,
        "t_as": cfg.t_as,
        "prune": cfg.prune,
        "consistency_iou": cfg.consistency_iou,
    }
