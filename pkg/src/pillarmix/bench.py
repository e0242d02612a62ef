"""Single-layer latency microbenchmark across batch/length splits.

All shapes hold B*T*C constant, so the analytic MAC count is identical per
row and any wall-clock spread isolates the grouping overhead (many short
rows vs. few long ones). Timing runs with BLAS pinned to one thread so the
numbers are comparable across shapes; wall-clock is reported, never
asserted.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from .backbone3d import GroupedTokens, convdotmix_forward, layer_flops
from .kernels import FlopsReport
from .rng import SplitMix64
from .weights import random_mixer_layer

# (B, T, C) splits of the same 768k-token-feature workload
DEFAULT_SHAPES = (
    (1, 6000, 128),
    (2, 3000, 128),
    (4, 1500, 128),
    (10, 600, 128),
    (20, 300, 128),
    (60, 100, 128),
)


@dataclass(frozen=True)
class BenchSpec:
    shapes: tuple = DEFAULT_SHAPES
    kernel: int = 11
    repeats: int = 5
    warmup: int = 2
    seed: int = 0

    def validate(self):
        if self.repeats < 3:
            raise ValueError(f"repeats must be >= 3, got {self.repeats}")
        if self.warmup < 0:
            raise ValueError(f"warmup must be >= 0, got {self.warmup}")
        for shape in self.shapes:
            if len(shape) != 3 or any(v < 1 for v in shape):
                raise ValueError(f"shapes must be positive (B, T, C) triples, got {shape!r}")
        if self.kernel < 1 or self.kernel % 2 == 0:
            raise ValueError(f"kernel must be odd and >= 1, got {self.kernel}")


@dataclass
class BenchRow:
    b: int
    t: int
    c: int
    k: int
    macs: int
    median_ms: float
    p10_ms: float
    p90_ms: float


def _time_once(fn) -> float:
    t0 = time.perf_counter()
    fn()
    return (time.perf_counter() - t0) * 1e3


def bench_layer(spec: BenchSpec = BenchSpec()) -> list:
    """Time one mixer layer per shape; returns one BenchRow per shape."""
    spec.validate()
    rows = []
    for b, t, c in spec.shapes:
        rng = SplitMix64(spec.seed)
        layer = random_mixer_layer(rng, c, spec.kernel)
        x = rng.symmetric(1.0, size=(b, t, c)).astype(np.float32)
        g = GroupedTokens(x, valid_n=b * t, coords=np.zeros((0, 2), np.int32))
        run = lambda: convdotmix_forward(g, layer)
        with threadpool_limits(limits=1):
            for _ in range(spec.warmup):
                run()
            samples = [_time_once(run) for _ in range(spec.repeats)]
        p10, med, p90 = np.percentile(samples, [10, 50, 90])
        rows.append(BenchRow(b=b, t=t, c=c, k=spec.kernel,
                             macs=layer_flops(b, t, c, spec.kernel).macs,
                             median_ms=float(med), p10_ms=float(p10), p90_ms=float(p90)))
    return rows


CSV_HEADER = "B,T,C,K,macs,median_ms,p10_ms,p90_ms"


def rows_to_csv(rows: list) -> str:
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(f"{r.b},{r.t},{r.c},{r.k},{r.macs},"
                     f"{r.median_ms:.3f},{r.p10_ms:.3f},{r.p90_ms:.3f}")
    return "\n".join(lines) + "\n"


def save_csv(rows: list, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(rows_to_csv(rows))


def attention_flops_reference(b: int, t: int, c: int) -> FlopsReport:
    """Analytic cost of one standard self-attention layer (q/k/v/out
    projections + score and value matmuls) for comparison against the
    conv-based mixer: 4*B*T*C^2 + 2*B*T^2*C MACs."""
    r = FlopsReport()
    r.add("attn_proj", macs=4 * b * t * c * c)
    r.add("attn_mix", macs=2 * b * t * t * c)
    return r
