"""Token-mixing 3D backbone over the serialized pillar sequence.

The sequence [1, N, D] is padded once to a multiple of every group size in
the schedule (their lcm), so moving between group sizes is a pure reshape
[N_pad/K, K, D] that never touches data. Each mixer layer combines a
depthwise large-kernel convolution along tokens (spatial branch) with a
channel-only linear branch via elementwise product, follows up with an FFN
sublayer, and keeps residual skips from the input; groups never interact,
and pad positions are re-zeroed after every layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernels import (FlopsReport, count_flops, dwconv1d, gelu, hadamard,
                      layer_norm, linear)
from .serializer import TokenSequence

SCHEDULE_KINDS = ("none", "constant", "increasing", "decreasing")

FFN_EXPANSION = 4


@dataclass(frozen=True)
class GroupSchedule:
    """Per-layer group sizes, derived from a non-decreasing base list.

    kind "increasing" uses the base list as given, "decreasing" reverses it,
    "constant" repeats its first entry, and "none" puts all tokens in a
    single group (no padding, group size = N).
    """

    kind: str
    base_sizes: tuple

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ValueError(f"schedule kind must be one of {SCHEDULE_KINDS}, got {self.kind!r}")
        if self.kind != "none":
            if not self.base_sizes:
                raise ValueError("schedule needs at least one group size")
            if any(k < 1 for k in self.base_sizes):
                raise ValueError(f"group sizes must be >= 1, got {self.base_sizes}")
            if list(self.base_sizes) != sorted(self.base_sizes):
                raise ValueError(f"base group sizes must be non-decreasing, got {self.base_sizes}")

    def num_layers(self) -> int:
        return len(self.base_sizes)

    def pad_multiple(self) -> int:
        """lcm of all group sizes; 1 for the single-group kind."""
        if self.kind == "none":
            return 1
        return math.lcm(*self.base_sizes)

    def concrete(self, n_tokens: int) -> list:
        """Per-layer group sizes for a sequence of n_tokens valid tokens."""
        if self.kind == "none":
            return [max(n_tokens, 1)] * len(self.base_sizes)
        if self.kind == "constant":
            return [self.base_sizes[0]] * len(self.base_sizes)
        if self.kind == "decreasing":
            return list(reversed(self.base_sizes))
        return list(self.base_sizes)


# group sizes for the 8 default mixer layers
DEFAULT_GROUP_SIZES = (128, 128, 256, 256, 512, 512, 1024, 1024)


@dataclass
class ConvDotMixParams:
    """Weights for one mixer layer (all float32, D channels, K odd taps)."""

    norm1_gamma: np.ndarray  # (D,)
    norm1_beta: np.ndarray  # (D,)
    w_a1: np.ndarray  # (D, D) spatial-branch entry linear
    b_a1: np.ndarray  # (D,)
    dw_kernel: np.ndarray  # (D, K) depthwise taps
    dw_bias: np.ndarray  # (D,)
    w_b: np.ndarray  # (D, D) channel-only branch
    b_b: np.ndarray  # (D,)
    w_out: np.ndarray  # (D, D) after the elementwise product
    b_out: np.ndarray  # (D,)
    norm2_gamma: np.ndarray  # (D,)
    norm2_beta: np.ndarray  # (D,)
    w_ffn1: np.ndarray  # (D, 4D)
    b_ffn1: np.ndarray  # (4D,)
    w_ffn2: np.ndarray  # (4D, D)
    b_ffn2: np.ndarray  # (D,)

    @property
    def feature_dim(self) -> int:
        return self.w_a1.shape[0]

    @property
    def kernel_size(self) -> int:
        return self.dw_kernel.shape[1]

    @staticmethod
    def zeros(d: int, k: int) -> "ConvDotMixParams":
        """All-zero weights/biases/betas (unit gammas): the layer reduces to
        the identity map through its residual skips."""
        z = lambda *shape: np.zeros(shape, dtype=np.float32)
        return ConvDotMixParams(
            norm1_gamma=np.ones(d, np.float32), norm1_beta=z(d),
            w_a1=z(d, d), b_a1=z(d), dw_kernel=z(d, k), dw_bias=z(d),
            w_b=z(d, d), b_b=z(d), w_out=z(d, d), b_out=z(d),
            norm2_gamma=np.ones(d, np.float32), norm2_beta=z(d),
            w_ffn1=z(d, FFN_EXPANSION * d), b_ffn1=z(FFN_EXPANSION * d),
            w_ffn2=z(FFN_EXPANSION * d, d), b_ffn2=z(d),
        )


@dataclass
class GroupedTokens:
    """[N_pad/K, K, D] view of the padded sequence; pads sit at the flat
    tail (indices >= valid_n) and are exactly zero between layers."""

    data: np.ndarray  # (G, K, D) float32
    valid_n: int
    coords: np.ndarray  # (valid_n, 2) int32

    @property
    def group_size(self) -> int:
        return self.data.shape[1]

    @property
    def n_padded(self) -> int:
        return self.data.shape[0] * self.data.shape[1]

    def flat(self) -> np.ndarray:
        return self.data.reshape(self.n_padded, self.data.shape[2])


def pad_and_group(seq: TokenSequence, k: int, pad_to: int | None = None) -> GroupedTokens:
    """Zero-pad the sequence to a multiple of ``pad_to`` (default k) and
    reshape to [N_pad/k, k, D], preserving flat order."""
    if k < 1:
        raise ValueError(f"group size must be >= 1, got {k}")
    m = pad_to if pad_to is not None else k
    n = seq.valid_n
    d = seq.features.shape[1]
    n_pad = ((n + m - 1) // m) * m
    if n_pad % k != 0:
        raise ValueError(f"group size {k} does not divide padded length {n_pad}")
    data = np.zeros((n_pad, d), dtype=np.float32)
    data[:n] = seq.features[:n]
    return GroupedTokens(data.reshape(n_pad // k, k, d), valid_n=n, coords=seq.coords)


def regroup(g: GroupedTokens, k_new: int) -> GroupedTokens:
    """Pure reshape to a new group size; identity (same object) when the
    size is unchanged."""
    if k_new == g.group_size:
        return g
    if k_new < 1 or g.n_padded % k_new != 0:
        raise ValueError(f"group size {k_new} does not divide padded length {g.n_padded}")
    d = g.data.shape[2]
    return GroupedTokens(g.data.reshape(g.n_padded // k_new, k_new, d),
                         valid_n=g.valid_n, coords=g.coords)


def ungroup(g: GroupedTokens) -> TokenSequence:
    """Drop the grouping and strip pads back to the valid sequence."""
    flat = g.flat()
    return TokenSequence(features=np.ascontiguousarray(flat[:g.valid_n]),
                         coords=g.coords, valid_n=g.valid_n)


def convdotmix_forward(g: GroupedTokens, layer: ConvDotMixParams) -> GroupedTokens:
    """One mixer layer over each group row independently.

        u  = norm1(x)
        a  = dwconv(linear_a(u))          # spatial mixing
        b  = linear_b(u)                  # channel-only mixing
        y1 = x + linear_out(a * b)
        y  = y1 + ffn2(gelu(ffn1(norm2(y1))))

    Pad positions are re-zeroed afterwards; zero pads inside the layer can
    reach up to (K-1)/2 trailing valid tokens through the convolution, the
    same boundary effect as any group edge.
    """
    x = g.data
    if x.shape[2] != layer.feature_dim:
        raise ValueError(f"channels {x.shape[2]} != layer dim {layer.feature_dim}")
    u = layer_norm(x, layer.norm1_gamma, layer.norm1_beta)
    a = dwconv1d(linear(u, layer.w_a1, layer.b_a1), layer.dw_kernel, layer.dw_bias)
    b = linear(u, layer.w_b, layer.b_b)
    y1 = x + linear(hadamard(a, b), layer.w_out, layer.b_out)
    hidden = gelu(linear(layer_norm(y1, layer.norm2_gamma, layer.norm2_beta),
                         layer.w_ffn1, layer.b_ffn1))
    y = y1 + linear(hidden, layer.w_ffn2, layer.b_ffn2)
    out = GroupedTokens(y, valid_n=g.valid_n, coords=g.coords)
    out.flat()[g.valid_n:] = 0.0
    return out


def run_backbone(seq: TokenSequence, layers: list, schedule: GroupSchedule) -> TokenSequence:
    """Pad and group once, run all mixer layers under the schedule
    (regrouping only when the size changes), then ungroup and strip pads."""
    if schedule.num_layers() != len(layers):
        raise ValueError(f"schedule length {schedule.num_layers()} != layer count {len(layers)}")
    sizes = schedule.concrete(seq.valid_n)
    g = pad_and_group(seq, sizes[0], pad_to=schedule.pad_multiple())
    for k, layer in zip(sizes, layers):
        g = regroup(g, k)
        g = convdotmix_forward(g, layer)
    return ungroup(g)


def layer_flops(b: int, t: int, d: int, k: int) -> FlopsReport:
    """Analytic cost of one mixer layer on a [b, t, d] input."""
    r = FlopsReport()
    r.merge(count_flops("layer_norm", B=b, T=t, C=d))
    r.merge(count_flops("linear", B=b, T=t, Cin=d, Cout=d))  # w_a1
    r.merge(count_flops("dwconv1d", B=b, T=t, C=d, K=k))
    r.merge(count_flops("linear", B=b, T=t, Cin=d, Cout=d))  # w_b
    r.merge(count_flops("hadamard", B=b, T=t, C=d))
    r.merge(count_flops("linear", B=b, T=t, Cin=d, Cout=d))  # w_out
    r.merge(count_flops("add", B=b, T=t, C=d))
    r.merge(count_flops("layer_norm", B=b, T=t, C=d))
    r.merge(count_flops("linear", B=b, T=t, Cin=d, Cout=FFN_EXPANSION * d))
    r.merge(count_flops("gelu", B=b, T=t, C=FFN_EXPANSION * d))
    r.merge(count_flops("linear", B=b, T=t, Cin=FFN_EXPANSION * d, Cout=d))
    r.merge(count_flops("add", B=b, T=t, C=d))
    return r


def backbone_flops(n_tokens: int, schedule: GroupSchedule, d: int, k: int) -> FlopsReport:
    """Analytic cost of the full backbone at n_tokens valid tokens (cost is
    computed at the padded length, which is what actually runs)."""
    m = schedule.pad_multiple()
    n_pad = ((n_tokens + m - 1) // m) * m
    r = FlopsReport()
    for size in schedule.concrete(n_tokens):
        n_groups = max(n_pad // size, 0)
        r.merge(layer_flops(n_groups, size, d, k))
    return r
