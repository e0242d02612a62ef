"""End-to-end inference: points -> pillars -> serialized tokens -> mixer
backbone -> BEV grid -> 2D backbone -> head -> decoded boxes.

The serialization order is built exactly once per scene, before the mixer
stack; every layer reuses that ordering through the grouped views.
"""

from __future__ import annotations

from dataclasses import dataclass

from .backbone3d import backbone_flops, run_backbone
from .bev import bev_flops, bev_forward
from .config import PipelineConfig
from .head import decode, head_flops, head_forward
from .kernels import FlopsReport, count_flops
from .scene_io import PointCloud
from .serializer import apply_order, build_order, scatter_to_bev
from .voxelizer import AUGMENTED_DIM, assign_pillars, encode_pillars
from .weights import PipelineParams

STAGE_NAMES = ("encoder", "backbone", "bev", "head")


@dataclass
class InferenceResult:
    detections: list
    n_tokens: int  # occupied pillars
    n_padded: int  # backbone sequence length after padding
    flops: dict  # stage name -> FlopsReport

    def total_flops(self) -> FlopsReport:
        r = FlopsReport()
        for stage in self.flops.values():
            r.merge(stage)
        return r


def zero_flops() -> dict:
    return {name: FlopsReport() for name in STAGE_NAMES}


def run_inference(cfg: PipelineConfig, cloud: PointCloud,
                  params: PipelineParams) -> InferenceResult:
    pillars = assign_pillars(cloud, cfg.voxel)
    feats = encode_pillars(pillars, params.encoder, cfg.voxel)
    if feats.coords.shape[0] == 0:
        # nothing occupied: zero-token fast path, no dense work, no boxes
        return InferenceResult(detections=[], n_tokens=0, n_padded=0,
                               flops=zero_flops())

    order = build_order(feats.coords, cfg.serializer)  # once per scene
    seq = apply_order(feats, order)

    schedule = cfg.backbone.to_schedule()
    out_seq = run_backbone(seq, params.backbone, schedule)

    w, h = cfg.voxel.dims
    grid = scatter_to_bev(out_seq, (h, w))
    fused = bev_forward(grid, cfg.bev, params.bev)
    head_out = head_forward(fused, params.head)
    detections = decode(head_out, cfg.voxel, cfg.head)

    n = seq.valid_n
    m = schedule.pad_multiple()
    n_padded = ((n + m - 1) // m) * m
    return InferenceResult(detections=detections, n_tokens=n, n_padded=n_padded,
                           flops=pipeline_flops(cfg, n))


def pipeline_flops(cfg: PipelineConfig, n_tokens: int) -> dict:
    """Analytic per-stage cost at n_tokens occupied pillars. n_tokens = 0
    mirrors the zero-token fast path: every stage reports zero."""
    if n_tokens == 0:
        return zero_flops()
    d = cfg.voxel.feature_dim
    cap = cfg.voxel.max_points_per_pillar
    w, h = cfg.voxel.dims
    enc = FlopsReport()
    enc.merge(count_flops("linear", B=1, T=n_tokens * cap, Cin=AUGMENTED_DIM, Cout=d))
    enc.merge(count_flops("gelu", B=1, T=n_tokens * cap, C=d))
    return {
        "encoder": enc,
        "backbone": backbone_flops(n_tokens, cfg.backbone.to_schedule(), d,
                                   cfg.backbone.kernel),
        "bev": bev_flops(h, w, d, cfg.bev),
        "head": head_flops(h, w, cfg.bev.fused_channels, cfg.head),
    }
