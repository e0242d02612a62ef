"""Weight naming, deterministic initialization, and binary serialization.

Every learnable tensor has a canonical dotted name (e.g.
``backbone.layer3.w_b``) and a fixed position in the enumeration order, so
random init is reproducible from a single counter-based seed: tensors are
drawn uniform in +-1/sqrt(fan_in) in enumeration order; norm gammas/betas
are deterministic ones/zeros and consume no draws, as does the heatmap
output bias (constant no-object prior logit).

File layout: 8-byte magic, u64 little-endian manifest length, JSON manifest
(tensor names, shapes, blob offsets, crc32 of the blob), then raw
little-endian float32 blobs back to back.
"""

from __future__ import annotations

import json
import math
import zlib
from dataclasses import dataclass

import numpy as np

from .backbone3d import FFN_EXPANSION, ConvDotMixParams
from .bev import BEVParams, BEVStageParams, ConvParams, ResidualBlockParams
from .head import HEATMAP_PRIOR_LOGIT, REG_CHANNELS, HeadParams
from .rng import SplitMix64
from .voxelizer import AUGMENTED_DIM, EncoderParams

MAGIC = b"PMXW0001"


@dataclass(frozen=True)
class TensorSpec:
    name: str
    shape: tuple
    fan_in: int | None  # None => norm affine param (ones/zeros, not drawn)


def _mixer_specs(prefix: str, d: int, k: int) -> list:
    f4 = FFN_EXPANSION * d
    return [
        TensorSpec(f"{prefix}.norm1_gamma", (d,), None),
        TensorSpec(f"{prefix}.norm1_beta", (d,), None),
        TensorSpec(f"{prefix}.w_a1", (d, d), d),
        TensorSpec(f"{prefix}.b_a1", (d,), d),
        TensorSpec(f"{prefix}.dw_kernel", (d, k), k),
        TensorSpec(f"{prefix}.dw_bias", (d,), k),
        TensorSpec(f"{prefix}.w_b", (d, d), d),
        TensorSpec(f"{prefix}.b_b", (d,), d),
        TensorSpec(f"{prefix}.w_out", (d, d), d),
        TensorSpec(f"{prefix}.b_out", (d,), d),
        TensorSpec(f"{prefix}.norm2_gamma", (d,), None),
        TensorSpec(f"{prefix}.norm2_beta", (d,), None),
        TensorSpec(f"{prefix}.w_ffn1", (d, f4), d),
        TensorSpec(f"{prefix}.b_ffn1", (f4,), d),
        TensorSpec(f"{prefix}.w_ffn2", (f4, d), f4),
        TensorSpec(f"{prefix}.b_ffn2", (d,), f4),
    ]


def _conv_specs(prefix: str, kh: int, kw: int, cin: int, cout: int) -> list:
    fan = kh * kw * cin
    return [TensorSpec(f"{prefix}.weight", (kh, kw, cin, cout), fan),
            TensorSpec(f"{prefix}.bias", (cout,), fan)]


def tensor_specs(cfg) -> list:
    """Canonical enumeration of every tensor the pipeline needs, in draw
    order. ``cfg`` is a PipelineConfig."""
    d = cfg.voxel.feature_dim
    specs = [TensorSpec("encoder.weight", (AUGMENTED_DIM, d), AUGMENTED_DIM),
             TensorSpec("encoder.bias", (d,), AUGMENTED_DIM)]
    for i in range(cfg.backbone.layers):
        specs += _mixer_specs(f"backbone.layer{i}", d, cfg.backbone.kernel)
    chans = cfg.bev.stage_channels()
    cin = d
    for s, (n_blocks, cout) in enumerate(zip(cfg.bev.stage_blocks, chans)):
        specs += _conv_specs(f"bev.stage{s}.entry", 3, 3, cin, cout)
        for j in range(n_blocks):
            specs += _conv_specs(f"bev.stage{s}.block{j}.conv1", 3, 3, cout, cout)
            specs += _conv_specs(f"bev.stage{s}.block{j}.conv2", 3, 3, cout, cout)
        cin = cout
    specs += _conv_specs("bev.fuse", 1, 1, sum(chans), cfg.bev.fused_channels)
    fc = cfg.bev.fused_channels
    specs += _conv_specs("head.cls_conv", 3, 3, fc, fc)
    specs += _conv_specs("head.cls_out", 1, 1, fc, cfg.head.num_classes)
    specs += _conv_specs("head.reg_conv", 3, 3, fc, fc)
    specs += _conv_specs("head.reg_out", 1, 1, fc, REG_CHANNELS)
    return specs


def _init_tensor(rng: SplitMix64, spec: TensorSpec) -> np.ndarray:
    if spec.name == "head.cls_out.bias":  # detection prior, see head module
        return np.full(spec.shape, HEATMAP_PRIOR_LOGIT, dtype=np.float32)
    if spec.fan_in is None:
        fill = np.ones if spec.name.endswith("gamma") else np.zeros
        return fill(spec.shape, dtype=np.float32)
    scale = 1.0 / math.sqrt(spec.fan_in)
    n = int(np.prod(spec.shape, dtype=np.int64)) if spec.shape else 1
    return rng.symmetric(scale, size=n).astype(np.float32).reshape(spec.shape)


def random_weights(cfg, seed: int) -> dict:
    """name -> float32 array, drawn in canonical order from one seed."""
    rng = SplitMix64(seed)
    return {s.name: _init_tensor(rng, s) for s in tensor_specs(cfg)}


def random_mixer_layer(rng: SplitMix64, d: int, k: int) -> ConvDotMixParams:
    """One standalone mixer layer with the same per-tensor init rule."""
    drawn = {s.name.split(".")[-1]: _init_tensor(rng, s)
             for s in _mixer_specs("layer", d, k)}
    return ConvDotMixParams(**drawn)


def save_weights(tensors: dict, path) -> None:
    blobs, entries, offset = [], [], 0
    for name, arr in tensors.items():
        raw = np.ascontiguousarray(arr, dtype="<f4").tobytes()
        entries.append({"name": name, "shape": list(arr.shape),
                        "offset": offset, "nbytes": len(raw)})
        blobs.append(raw)
        offset += len(raw)
    blob = b"".join(blobs)
    manifest = json.dumps({"tensors": entries, "crc32": zlib.crc32(blob)},
                          separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(len(manifest).to_bytes(8, "little"))
        f.write(manifest)
        f.write(blob)


def load_weights(path) -> dict:
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < len(MAGIC) + 8 or data[:len(MAGIC)] != MAGIC:
        raise ValueError(f"{path}: not a weight file (bad magic)")
    mlen = int.from_bytes(data[8:16], "little")
    if 16 + mlen > len(data):
        raise ValueError(f"{path}: truncated manifest")
    manifest = json.loads(data[16:16 + mlen].decode("utf-8"))
    blob = data[16 + mlen:]
    if zlib.crc32(blob) != manifest["crc32"]:
        raise ValueError(f"{path}: blob checksum mismatch")
    out = {}
    for e in manifest["tensors"]:
        shape = tuple(e["shape"])
        want = int(np.prod(shape, dtype=np.int64)) * 4 if shape else 4
        if e["nbytes"] != want:
            raise ValueError(f"{path}: tensor '{e['name']}' byte length "
                             f"{e['nbytes']} != shape {shape} * 4")
        if e["offset"] + e["nbytes"] > len(blob):
            raise ValueError(f"{path}: tensor '{e['name']}' overruns blob")
        flat = np.frombuffer(blob, dtype="<f4", count=want // 4, offset=e["offset"])
        out[e["name"]] = flat.reshape(shape).astype(np.float32)
    return out


@dataclass
class PipelineParams:
    encoder: EncoderParams
    backbone: list  # ConvDotMixParams per layer
    bev: BEVParams
    head: HeadParams


def build_params(cfg, tensors: dict) -> PipelineParams:
    """Assemble typed parameter structs, validating the tensor dict against
    the canonical enumeration (no missing, no extra, shapes exact)."""
    specs = tensor_specs(cfg)
    for s in specs:
        if s.name not in tensors:
            raise ValueError(f"missing tensor '{s.name}'")
        got = tuple(tensors[s.name].shape)
        if got != s.shape:
            raise ValueError(f"tensor '{s.name}': shape {got} != expected {s.shape}")
    extra = set(tensors) - {s.name for s in specs}
    if extra:
        raise ValueError(f"unexpected tensor '{sorted(extra)[0]}'")

    def conv(prefix: str) -> ConvParams:
        return ConvParams(weight=tensors[f"{prefix}.weight"], bias=tensors[f"{prefix}.bias"])

    encoder = EncoderParams(weight=tensors["encoder.weight"], bias=tensors["encoder.bias"])
    layers = []
    field_names = [s.name.split(".")[-1] for s in _mixer_specs("x", 1, 1)]
    for i in range(cfg.backbone.layers):
        layers.append(ConvDotMixParams(
            **{f: tensors[f"backbone.layer{i}.{f}"] for f in field_names}))
    stages = []
    for s, n_blocks in enumerate(cfg.bev.stage_blocks):
        blocks = [ResidualBlockParams(conv1=conv(f"bev.stage{s}.block{j}.conv1"),
                                      conv2=conv(f"bev.stage{s}.block{j}.conv2"))
                  for j in range(n_blocks)]
        stages.append(BEVStageParams(entry=conv(f"bev.stage{s}.entry"), blocks=blocks))
    bev = BEVParams(stages=stages, fuse=conv("bev.fuse"))
    head = HeadParams(cls_conv=conv("head.cls_conv"), cls_out=conv("head.cls_out"),
                      reg_conv=conv("head.reg_conv"), reg_out=conv("head.reg_out"))
    return PipelineParams(encoder=encoder, backbone=layers, bev=bev, head=head)
