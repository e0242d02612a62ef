"""Pipeline configuration: YAML in, validated dataclasses out.

Every validation failure raises ConfigError carrying the dotted field path
(e.g. "backbone.schedule"), so callers can report exactly which knob is
wrong. A packaged default config ships under configs/default.yaml; ablation
variants are plain edits of that file.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources

import yaml

from .backbone3d import SCHEDULE_KINDS, DEFAULT_GROUP_SIZES, GroupSchedule
from .bev import BEVConfig
from .head import HeadConfig
from .serializer import SerializationConfig
from .voxelizer import VoxelGridConfig

DEFAULT_CONFIG_RESOURCE = "configs/default.yaml"


class ConfigError(ValueError):
    """Invalid configuration; `field` is the dotted path of the bad knob."""

    def __init__(self, field_path: str, message: str):
        self.field = field_path
        super().__init__(f"config error in '{field_path}': {message}")


@dataclass(frozen=True)
class BackboneConfig:
    layers: int = 8
    kernel: int = 11
    feature_dim: int = 128
    schedule_kind: str = "increasing"
    schedule: tuple = DEFAULT_GROUP_SIZES

    def to_schedule(self) -> GroupSchedule:
        return GroupSchedule(kind=self.schedule_kind, base_sizes=tuple(self.schedule))


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 7
    voxel: VoxelGridConfig = field(
        default_factory=lambda: VoxelGridConfig(range=(-21.6, 21.6, -21.6, 21.6, -3.0, 5.0)))
    serializer: SerializationConfig = field(default_factory=SerializationConfig)
    backbone: BackboneConfig = field(default_factory=BackboneConfig)
    bev: BEVConfig = field(default_factory=BEVConfig)
    head: HeadConfig = field(default_factory=HeadConfig)

    def validate(self) -> "PipelineConfig":
        for name, sub in (("voxel", self.voxel), ("serializer", self.serializer),
                          ("bev", self.bev), ("head", self.head)):
            try:
                sub.validate()
            except ValueError as e:
                raise ConfigError(name, str(e)) from e
        bb = self.backbone
        if bb.layers < 1:
            raise ConfigError("backbone.layers", f"must be >= 1, got {bb.layers}")
        if bb.kernel < 1 or bb.kernel % 2 == 0:
            raise ConfigError("backbone.kernel", f"must be odd and >= 1, got {bb.kernel}")
        if bb.feature_dim != self.voxel.feature_dim:
            raise ConfigError("backbone.feature_dim",
                              f"{bb.feature_dim} does not match voxel.feature_dim "
                              f"{self.voxel.feature_dim}")
        if len(bb.schedule) != bb.layers:
            raise ConfigError("backbone.schedule",
                              f"schedule length {len(bb.schedule)} != layers {bb.layers}")
        try:
            bb.to_schedule()
        except ValueError as e:
            raise ConfigError("backbone.schedule", str(e)) from e
        w, h = self.voxel.dims
        if w % 4 or h % 4:
            raise ConfigError("voxel.range",
                              f"BEV grid {w}x{h} must be divisible by 4 in both dims")
        return self


_SECTION_FIELDS = {
    "voxel": ("range", "pillar_size", "max_points_per_pillar", "feature_dim"),
    "serializer": ("window", "axis_order"),
    "backbone": ("layers", "kernel", "feature_dim", "schedule_kind", "schedule"),
    "bev": ("stage_blocks", "base_channels", "fused_channels"),
    "head": ("num_classes", "score_thresh", "top_k"),
}


def _section(raw: dict, name: str) -> dict:
    sub = raw.get(name, {})
    if not isinstance(sub, dict):
        raise ConfigError(name, f"expected a mapping, got {type(sub).__name__}")
    for key in sub:
        if key not in _SECTION_FIELDS[name]:
            raise ConfigError(f"{name}.{key}", "unknown field")
    return sub


def _seq(sub: dict, name: str, key: str, n: int | None, default) -> tuple:
    if key not in sub:
        return tuple(default)
    val = sub[key]
    if not isinstance(val, (list, tuple)):
        raise ConfigError(f"{name}.{key}", f"expected a list, got {type(val).__name__}")
    if n is not None and len(val) != n:
        raise ConfigError(f"{name}.{key}", f"expected {n} entries, got {len(val)}")
    return tuple(val)


def config_from_dict(raw: dict) -> PipelineConfig:
    if not isinstance(raw, dict):
        raise ConfigError("<root>", f"expected a mapping, got {type(raw).__name__}")
    known_top = {"seed"} | set(_SECTION_FIELDS)
    for key in raw:
        if key not in known_top:
            raise ConfigError(key, "unknown field")

    dflt = PipelineConfig()
    v, s, b, bev, hd = (_section(raw, k) for k in
                        ("voxel", "serializer", "backbone", "bev", "head"))
    cfg = PipelineConfig(
        seed=int(raw.get("seed", dflt.seed)),
        voxel=VoxelGridConfig(
            range=_seq(v, "voxel", "range", 6, dflt.voxel.range),
            pillar_size=_seq(v, "voxel", "pillar_size", 3, dflt.voxel.pillar_size),
            max_points_per_pillar=int(v.get("max_points_per_pillar",
                                            dflt.voxel.max_points_per_pillar)),
            feature_dim=int(v.get("feature_dim", dflt.voxel.feature_dim)),
        ),
        serializer=SerializationConfig(
            window=_seq(s, "serializer", "window", 2, dflt.serializer.window),
            axis_order=str(s.get("axis_order", dflt.serializer.axis_order)),
        ),
        backbone=BackboneConfig(
            layers=int(b.get("layers", dflt.backbone.layers)),
            kernel=int(b.get("kernel", dflt.backbone.kernel)),
            feature_dim=int(b.get("feature_dim", dflt.backbone.feature_dim)),
            schedule_kind=str(b.get("schedule_kind", dflt.backbone.schedule_kind)),
            schedule=_seq(b, "backbone", "schedule", None, dflt.backbone.schedule),
        ),
        bev=BEVConfig(
            stage_blocks=_seq(bev, "bev", "stage_blocks", 3, dflt.bev.stage_blocks),
            base_channels=int(bev.get("base_channels", dflt.bev.base_channels)),
            fused_channels=int(bev.get("fused_channels", dflt.bev.fused_channels)),
        ),
        head=HeadConfig(
            num_classes=int(hd.get("num_classes", dflt.head.num_classes)),
            score_thresh=float(hd.get("score_thresh", dflt.head.score_thresh)),
            top_k=int(hd.get("top_k", dflt.head.top_k)),
        ),
    )
    return cfg.validate()


def load_config(path) -> PipelineConfig:
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError("<config>", f"invalid YAML in {path}: {e}") from e
    if raw is None:
        raw = {}
    return config_from_dict(raw)


def default_config() -> PipelineConfig:
    text = resources.files("pillarmix").joinpath(DEFAULT_CONFIG_RESOURCE).read_text()
    return config_from_dict(yaml.safe_load(text))
