"""One-shot serialization of occupied pillars into a dense 1D token sequence.

The grid is partitioned into local windows of (wx, wy) cells; windows are
visited row-major (window-row major, window-column minor), and the occupied
cells inside each window are emitted contiguously, sorted by the configured
axis order. The permutation is built exactly once per inference; its inverse
drives the final scatter back to the BEV grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .voxelizer import VoxelFeatures

# incremented on every build_order call; tests assert the one-shot contract
BUILD_ORDER_CALLS = 0

AXIS_ORDERS = ("x", "y", "none")


@dataclass(frozen=True)
class SerializationConfig:
    window: tuple = (12, 12)  # (wx, wy) cells
    axis_order: str = "y"  # "x" | "y" | "none"

    def validate(self) -> None:
        wx, wy = self.window
        if wx < 1 or wy < 1:
            raise ValueError(f"window dims must be >= 1, got {self.window}")
        if self.axis_order not in AXIS_ORDERS:
            raise ValueError(f"axis_order must be one of {AXIS_ORDERS}, got {self.axis_order!r}")


@dataclass
class SerializationOrder:
    """perm: sequence position -> pillar index; inv: pillar index -> position."""

    perm: np.ndarray  # (N,) int64
    inv: np.ndarray  # (N,) int64


@dataclass
class TokenSequence:
    features: np.ndarray  # (N, D) float32
    coords: np.ndarray  # (N, 2) int32, sequence order
    valid_n: int

    def __len__(self) -> int:
        return self.valid_n


def build_order(coords: np.ndarray, cfg: SerializationConfig) -> SerializationOrder:
    """Build the window-traversal permutation over unique pillar coords.

    axis_order "x" sorts a window's cells by (iy, ix) (x varies fastest),
    "y" by (ix, iy), and "none" keeps the incoming order (identity).
    """
    global BUILD_ORDER_CALLS
    BUILD_ORDER_CALLS += 1
    cfg.validate()
    n = coords.shape[0]
    keys = coords[:, 0].astype(np.int64) * (2 ** 32) + coords[:, 1].astype(np.int64)
    if np.unique(keys).size != n:
        raise ValueError("duplicate pillar coords")
    if cfg.axis_order == "none" or n == 0:
        perm = np.arange(n, dtype=np.int64)
        return SerializationOrder(perm, perm.copy())

    ix = coords[:, 0].astype(np.int64)
    iy = coords[:, 1].astype(np.int64)
    wx_idx = ix // cfg.window[0]
    wy_idx = iy // cfg.window[1]
    if cfg.axis_order == "x":
        k1, k2 = iy, ix
    else:
        k1, k2 = ix, iy
    # lexsort: last key is most significant
    perm = np.lexsort((k2, k1, wx_idx, wy_idx)).astype(np.int64)
    inv = np.empty_like(perm)
    inv[perm] = np.arange(n, dtype=np.int64)
    return SerializationOrder(perm, inv)


def apply_order(feats: VoxelFeatures, order: SerializationOrder) -> TokenSequence:
    """Gather features and coords into sequence order: token t = feats[perm[t]]."""
    n = len(feats)
    if order.perm.shape[0] != n:
        raise ValueError(f"order built for {order.perm.shape[0]} pillars, got {n}")
    return TokenSequence(
        features=np.ascontiguousarray(feats.features[order.perm], dtype=np.float32),
        coords=np.ascontiguousarray(feats.coords[order.perm]),
        valid_n=n,
    )


def scatter_to_bev(seq: TokenSequence, grid_hw: tuple) -> np.ndarray:
    """Scatter tokens back onto a dense (H, W, D) grid; untouched cells stay
    zero. Coords must be unique and in-grid (each cell written at most once)."""
    h, w = grid_hw
    d = seq.features.shape[1]
    coords = seq.coords[:seq.valid_n]
    feats = seq.features[:seq.valid_n]
    if coords.shape[0] and (
            coords[:, 0].min() < 0 or coords[:, 0].max() >= w
            or coords[:, 1].min() < 0 or coords[:, 1].max() >= h):
        raise ValueError(f"coordinate outside {h}x{w} grid")
    grid = np.zeros((h, w, d), dtype=np.float32)
    grid[coords[:, 1], coords[:, 0]] = feats
    return grid
