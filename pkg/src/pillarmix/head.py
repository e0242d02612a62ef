"""Center-style detection head on the fused BEV map.

Two conv3x3 -> act -> conv1x1 branches: per-class sigmoid heatmap, and an
8-channel regression map (dx, dy, z, log l, log w, log h, sin yaw, cos yaw).
Decoding keeps cells that are strict local maxima of their class heatmap
over the in-grid 3x3 neighbourhood, so flat score plateaus (e.g. an empty
scene under constant bias) produce no detections.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bev import ConvParams, conv2d
from .kernels import FlopsReport, count_flops, gelu, sigmoid
from .scene_io import Detection
from .voxelizer import VoxelGridConfig

REG_CHANNELS = 8  # dx, dy, z, log l, log w, log h, sin yaw, cos yaw

# Fresh heatmap branches start biased toward "no object": sigmoid(-4.595)
# ~= 0.01, the usual focal-loss prior. Untrained weights then score every
# cell far below threshold, so empty scenes decode to zero boxes.
HEATMAP_PRIOR_LOGIT = math.log(0.01 / 0.99)


@dataclass(frozen=True)
class HeadConfig:
    num_classes: int = 3
    score_thresh: float = 0.3
    top_k: int = 100

    def validate(self):
        if self.num_classes < 1:
            raise ValueError(f"num_classes must be >= 1, got {self.num_classes}")
        if not 0.0 <= self.score_thresh <= 1.0:
            raise ValueError(f"score_thresh must be in [0, 1], got {self.score_thresh}")
        if self.top_k < 0:
            raise ValueError(f"top_k must be >= 0, got {self.top_k}")


@dataclass
class HeadParams:
    cls_conv: ConvParams  # 3x3, C -> C
    cls_out: ConvParams  # 1x1, C -> num_classes
    reg_conv: ConvParams  # 3x3, C -> C
    reg_out: ConvParams  # 1x1, C -> 8


@dataclass
class HeadOutput:
    heatmap: np.ndarray  # (H, W, num_classes), sigmoid scores
    reg: np.ndarray  # (H, W, 8), raw


def head_forward(fused: np.ndarray, params: HeadParams) -> HeadOutput:
    heatmap = sigmoid(conv2d(gelu(conv2d(fused, params.cls_conv)), params.cls_out))
    reg = conv2d(gelu(conv2d(fused, params.reg_conv)), params.reg_out)
    return HeadOutput(heatmap=heatmap, reg=reg)


def _strict_local_max(score: np.ndarray) -> np.ndarray:
    """(H, W) bool mask: cell strictly greater than every in-grid 3x3
    neighbour. Implemented by comparing against a -inf padded shift stack."""
    h, w = score.shape
    padded = np.full((h + 2, w + 2), -np.inf, dtype=score.dtype)
    padded[1:h + 1, 1:w + 1] = score
    mask = np.ones((h, w), dtype=bool)
    for dy in (0, 1, 2):
        for dx in (0, 1, 2):
            if dy == 1 and dx == 1:
                continue
            mask &= score > padded[dy:dy + h, dx:dx + w]
    return mask


def decode(out: HeadOutput, grid_cfg: VoxelGridConfig, head_cfg: HeadConfig) -> list:
    """Peak-pick the heatmap and convert regression channels to world-frame
    boxes, ordered by (-score, class_id, iy, ix) and truncated to top_k."""
    h, w, n_cls = out.heatmap.shape
    if n_cls != head_cfg.num_classes:
        raise ValueError(f"heatmap classes {n_cls} != config num_classes {head_cfg.num_classes}")
    cand = []  # (-score, class_id, iy, ix) sort keys
    for c in range(n_cls):
        score = out.heatmap[:, :, c]
        mask = _strict_local_max(score) & (score >= head_cfg.score_thresh)
        ys, xs = np.nonzero(mask)
        for iy, ix in zip(ys.tolist(), xs.tolist()):
            cand.append((-float(score[iy, ix]), c, iy, ix))
    cand.sort()
    x_min, y_min = grid_cfg.range[0], grid_cfg.range[2]
    sx, sy = grid_cfg.pillar_size[0], grid_cfg.pillar_size[1]
    dets = []
    for neg_score, c, iy, ix in cand[:head_cfg.top_k]:
        reg = out.reg[iy, ix].astype(np.float64)
        dx = min(max(reg[0], -1.0), 1.0)
        dy = min(max(reg[1], -1.0), 1.0)
        yaw = math.atan2(reg[6], reg[7])
        if yaw <= -math.pi:  # atan2 returns (-pi, pi]; fold -pi onto pi
            yaw += 2.0 * math.pi
        dets.append(Detection(
            class_id=c, score=-neg_score,
            x=x_min + (ix + 0.5 + dx) * sx,
            y=y_min + (iy + 0.5 + dy) * sy,
            z=float(reg[2]),
            l=math.exp(reg[3]), w=math.exp(reg[4]), h=math.exp(reg[5]),
            yaw=yaw,
        ))
    return dets


def head_flops(h: int, w: int, in_channels: int, cfg: HeadConfig) -> FlopsReport:
    """Analytic cost of head_forward on an (h, w, in_channels) map."""
    r = FlopsReport()
    t = h * w
    for cout in (cfg.num_classes, REG_CHANNELS):
        r.merge(count_flops("conv2d", H=h, W=w, Cin=in_channels, Cout=in_channels, KH=3, KW=3))
        r.merge(count_flops("gelu", B=1, T=t, C=in_channels))
        r.merge(count_flops("conv2d", H=h, W=w, Cin=in_channels, Cout=cout, KH=1, KW=1))
    # sigmoid on the class heatmap, counted like the other activations
    r.add("sigmoid", adds=t * cfg.num_classes)
    return r
