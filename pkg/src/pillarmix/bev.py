"""2D backbone over the scattered BEV grid.

Three stages at strides 1/2/4 (channel widths base, 2*base, 4*base), each
an entry conv3x3 followed by residual blocks; the two strided outputs are
nearest-upsampled back to full resolution, concatenated with stage 0, and
fused by a 1x1 conv. Activation is the same tanh-approximated GELU used
everywhere else.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernels import FlopsReport, count_flops, gelu

# (stage blocks, stride, channel multiple) for the three pyramid levels
STAGE_STRIDES = (1, 2, 2)  # stride of each stage's entry conv
STAGE_WIDTH_MULT = (1, 2, 4)
UPSAMPLE_FACTORS = (1, 2, 4)  # back to stage-0 resolution


@dataclass(frozen=True)
class BEVConfig:
    stage_blocks: tuple = (2, 3, 3)  # residual blocks per stage
    base_channels: int = 64
    fused_channels: int = 128

    def validate(self):
        if len(self.stage_blocks) != 3:
            raise ValueError(f"expected 3 stages, got {len(self.stage_blocks)}")
        if any(n < 0 for n in self.stage_blocks):
            raise ValueError(f"stage block counts must be >= 0, got {self.stage_blocks}")
        if self.base_channels < 1 or self.fused_channels < 1:
            raise ValueError("channel widths must be >= 1")

    def stage_channels(self) -> tuple:
        return tuple(self.base_channels * m for m in STAGE_WIDTH_MULT)


@dataclass
class ConvParams:
    weight: np.ndarray  # (KH, KW, Cin, Cout)
    bias: np.ndarray  # (Cout,)


@dataclass
class ResidualBlockParams:
    conv1: ConvParams
    conv2: ConvParams


@dataclass
class BEVStageParams:
    entry: ConvParams  # 3x3, stride per STAGE_STRIDES
    blocks: list = field(default_factory=list)  # ResidualBlockParams


@dataclass
class BEVParams:
    stages: list  # three BEVStageParams
    fuse: ConvParams  # 1x1 over the concatenated pyramid


def conv2d(x: np.ndarray, p: ConvParams, stride: int = 1) -> np.ndarray:
    """Same-padded 2D conv on an (H, W, Cin) map, as a sum of KH*KW shifted
    matmuls. H and W must be divisible by the stride."""
    kh, kw, cin, cout = p.weight.shape
    h, w, c = x.shape
    if c != cin:
        raise ValueError(f"input channels {c} != weight Cin {cin}")
    if h % stride or w % stride:
        raise ValueError(f"spatial dims ({h}, {w}) not divisible by stride {stride}")
    ph, pw = (kh - 1) // 2, (kw - 1) // 2
    xp = x
    if ph or pw:
        xp = np.zeros((h + 2 * ph, w + 2 * pw, cin), dtype=np.float32)
        xp[ph:ph + h, pw:pw + w] = x
    ho, wo = h // stride, w // stride
    y = np.zeros((ho * wo, cout), dtype=np.float32)
    for dy in range(kh):
        for dx in range(kw):
            patch = xp[dy:dy + h:stride, dx:dx + w:stride, :]  # (ho, wo, cin)
            y += patch.reshape(ho * wo, cin) @ p.weight[dy, dx]
    y += p.bias.astype(np.float32)
    return y.reshape(ho, wo, cout)


def residual_block(x: np.ndarray, p: ResidualBlockParams) -> np.ndarray:
    # y = act(x + conv2(act(conv1(x)))), both 3x3 stride 1, width-preserving
    return gelu(x + conv2d(gelu(conv2d(x, p.conv1)), p.conv2))


def upsample_nearest(x: np.ndarray, factor: int) -> np.ndarray:
    if factor == 1:
        return x
    return np.repeat(np.repeat(x, factor, axis=0), factor, axis=1)


def bev_forward(grid: np.ndarray, cfg: BEVConfig, params: BEVParams) -> np.ndarray:
    """(H, W, D) dense grid -> (H, W, fused_channels); H, W divisible by 4."""
    h, w, _ = grid.shape
    if h % 4 or w % 4:
        raise ValueError(f"BEV grid dims ({h}, {w}) must be divisible by 4")
    if len(params.stages) != 3:
        raise ValueError(f"expected 3 stage params, got {len(params.stages)}")
    outs = []
    x = grid
    for stage, stride in zip(params.stages, STAGE_STRIDES):
        x = gelu(conv2d(x, stage.entry, stride=stride))
        for blk in stage.blocks:
            x = residual_block(x, blk)
        outs.append(x)
    pyramid = [upsample_nearest(o, f) for o, f in zip(outs, UPSAMPLE_FACTORS)]
    return conv2d(np.concatenate(pyramid, axis=2), params.fuse)


def _conv_flops(r: FlopsReport, h_out: int, w_out: int, cin: int, cout: int, k: int):
    r.merge(count_flops("conv2d", H=h_out, W=w_out, Cin=cin, Cout=cout, KH=k, KW=k))


def bev_flops(h: int, w: int, in_channels: int, cfg: BEVConfig) -> FlopsReport:
    """Analytic cost of bev_forward on an (h, w, in_channels) grid."""
    r = FlopsReport()
    chans = cfg.stage_channels()
    cur_h, cur_w, cin = h, w, in_channels
    for n_blocks, cout, stride in zip(cfg.stage_blocks, chans, STAGE_STRIDES):
        cur_h, cur_w = cur_h // stride, cur_w // stride
        _conv_flops(r, cur_h, cur_w, cin, cout, 3)
        r.merge(count_flops("gelu", B=1, T=cur_h * cur_w, C=cout))
        for _ in range(n_blocks):
            for _ in range(2):  # conv1, conv2
                _conv_flops(r, cur_h, cur_w, cout, cout, 3)
            r.merge(count_flops("gelu", B=1, T=cur_h * cur_w, C=cout))  # inner act
            r.merge(count_flops("add", B=1, T=cur_h * cur_w, C=cout))  # residual
            r.merge(count_flops("gelu", B=1, T=cur_h * cur_w, C=cout))  # outer act
        cin = cout
    _conv_flops(r, h, w, sum(chans), cfg.fused_channels, 1)
    return r
