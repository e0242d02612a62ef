"""Dense float32 kernels for [B, T, C] token tensors, plus analytic FLOPs.

Every kernel is deterministic: reductions run in a fixed order (numpy's
per-axis pairwise summation or an explicit left-to-right tap loop), so
repeated calls on identical inputs produce identical bytes. Math is float32
end to end, except the layer_norm row statistics, which run in float64:
near-constant rows have tiny variance, and the 1/sqrt(var) amplification
would blow float32 rounding past kernel-oracle tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LN_EPS = 1e-5

# tanh-approximation GELU constants
_GELU_C0 = 0.7978845608028654  # sqrt(2/pi)
_GELU_C1 = 0.044715


def _check3(x: np.ndarray, name: str = "x") -> None:
    if x.ndim != 3:
        raise ValueError(f"{name} must be [B, T, C], got shape {x.shape}")


def linear(x: np.ndarray, w: np.ndarray, b: np.ndarray | None = None) -> np.ndarray:
    """y[b,t,:] = x[b,t,:] @ w + b, with w of shape (Cin, Cout)."""
    _check3(x)
    bb, t, cin = x.shape
    if w.shape[0] != cin:
        raise ValueError(f"weight rows {w.shape[0]} != input channels {cin}")
    y = x.reshape(bb * t, cin).astype(np.float32, copy=False) @ w.astype(np.float32, copy=False)
    if b is not None:
        if b.shape != (w.shape[1],):
            raise ValueError(f"bias shape {b.shape} != ({w.shape[1]},)")
        y = y + b.astype(np.float32, copy=False)
    return np.ascontiguousarray(y.reshape(bb, t, w.shape[1]), dtype=np.float32)


def dwconv1d(x: np.ndarray, k: np.ndarray, bias: np.ndarray | None = None) -> np.ndarray:
    """Same-length zero-padded depthwise convolution along the token axis.

    y[b,t,c] = sum_{j=-r..r} x[b,t+j,c] * k[c,j+r] + bias[c] with r=(K-1)/2;
    out-of-range positions contribute zero. k has shape (C, K), K odd.
    Taps accumulate left to right (j = -r first) for reproducibility.
    """
    _check3(x)
    bb, t, c = x.shape
    if k.ndim != 2 or k.shape[0] != c:
        raise ValueError(f"kernel must be (C={c}, K), got {k.shape}")
    kk = k.shape[1]
    if kk % 2 == 0:
        raise ValueError(f"kernel size must be odd, got {kk}")
    r = (kk - 1) // 2
    xp = np.zeros((bb, t + 2 * r, c), dtype=np.float32)
    xp[:, r:r + t, :] = x
    y = np.zeros((bb, t, c), dtype=np.float32)
    for j in range(kk):
        y += xp[:, j:j + t, :] * k[:, j].astype(np.float32, copy=False)
    if bias is not None:
        if bias.shape != (c,):
            raise ValueError(f"bias shape {bias.shape} != ({c},)")
        y += bias.astype(np.float32, copy=False)
    return y


def layer_norm(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray, eps: float = LN_EPS) -> np.ndarray:
    """Normalize each (b, t) row over channels: zero mean, unit population
    variance (eps inside the square root), then scale-shift."""
    _check3(x)
    c = x.shape[2]
    if gamma.shape != (c,) or beta.shape != (c,):
        raise ValueError(f"gamma/beta must be ({c},), got {gamma.shape}/{beta.shape}")
    xd = x.astype(np.float64)
    mu = xd.mean(axis=2, keepdims=True)
    var = np.square(xd - mu).mean(axis=2, keepdims=True)
    xn = (xd - mu) / np.sqrt(var + eps)
    out = xn * gamma.astype(np.float64) + beta.astype(np.float64)
    return out.astype(np.float32)


def hadamard(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Elementwise product of same-shape tensors."""
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return (a.astype(np.float32, copy=False) * b.astype(np.float32, copy=False))


def gelu(x: np.ndarray) -> np.ndarray:
    """Tanh-approximation GELU: 0.5*x*(1 + tanh(c0*(x + c1*x^3)))."""
    x = x.astype(np.float32, copy=False)
    inner = np.float32(_GELU_C0) * (x + np.float32(_GELU_C1) * x * x * x)
    return np.float32(0.5) * x * (np.float32(1.0) + np.tanh(inner))


def sigmoid(x: np.ndarray) -> np.ndarray:
    x = x.astype(np.float32, copy=False)
    # split by sign to avoid exp overflow warnings on large magnitudes
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


# ---------------------------------------------------------------------------
# analytic FLOPs accounting


@dataclass
class FlopsReport:
    """MAC and standalone-add counts with a per-kernel breakdown.

    ``macs`` counts multiply-accumulates (1 MAC = 2 FLOPs in gflops());
    ``adds`` counts standalone additions and adds-equivalent elementwise
    work (normalization, activation, residual adds). Bias adds are not
    counted, per the usual MAC-counting convention.
    """

    macs: int = 0
    adds: int = 0
    by_op: dict = field(default_factory=dict)  # kind -> {"macs": n, "adds": n}

    def add(self, kind: str, macs: int = 0, adds: int = 0) -> "FlopsReport":
        self.macs += macs
        self.adds += adds
        bucket = self.by_op.setdefault(kind, {"macs": 0, "adds": 0})
        bucket["macs"] += macs
        bucket["adds"] += adds
        return self

    def merge(self, other: "FlopsReport") -> "FlopsReport":
        for kind, bucket in other.by_op.items():
            self.add(kind, bucket["macs"], bucket["adds"])
        return self

    def total_flops(self) -> int:
        """Scalar FLOPs with the 1 MAC = 2 FLOPs convention."""
        return 2 * self.macs + self.adds

    def gflops(self) -> float:
        return self.total_flops() / 1e9

    def check_totals(self) -> None:
        assert self.macs == sum(b["macs"] for b in self.by_op.values())
        assert self.adds == sum(b["adds"] for b in self.by_op.values())


def count_flops(op: str, **dims: int) -> FlopsReport:
    """Analytic cost of one kernel invocation.

    Descriptors and their dims:
      linear(B, T, Cin, Cout)    -> B*T*Cin*Cout MACs
      dwconv1d(B, T, C, K)       -> B*T*C*K MACs
      hadamard(B, T, C)          -> B*T*C multiplies (counted as MACs)
      layer_norm(B, T, C)        -> B*T*C adds-equivalent
      gelu(B, T, C)              -> B*T*C adds-equivalent
      add(B, T, C)               -> B*T*C standalone adds (residual)
      conv2d(H, W, Cin, Cout, KH, KW)  -> H*W*Cin*Cout*KH*KW MACs
                                   (H, W are *output* spatial dims)
    """
    r = FlopsReport()
    if op == "linear":
        r.add("linear", macs=dims["B"] * dims["T"] * dims["Cin"] * dims["Cout"])
    elif op == "dwconv1d":
        r.add("dwconv1d", macs=dims["B"] * dims["T"] * dims["C"] * dims["K"])
    elif op == "hadamard":
        r.add("hadamard", macs=dims["B"] * dims["T"] * dims["C"])
    elif op in ("layer_norm", "gelu"):
        r.add(op, adds=dims["B"] * dims["T"] * dims["C"])
    elif op == "add":
        r.add("add", adds=dims["B"] * dims["T"] * dims["C"])
    elif op == "conv2d":
        r.add("conv2d", macs=dims["H"] * dims["W"] * dims["Cin"] * dims["Cout"]
              * dims["KH"] * dims["KW"])
    else:
        raise ValueError(f"unknown op descriptor: {op!r}")
    return r
