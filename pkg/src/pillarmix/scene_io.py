"""Point-cloud and detection I/O plus deterministic synthetic scenes.

File formats:
  bin_xyzi  -- flat little-endian float32 quadruples (x, y, z, intensity),
               no header.
  csv       -- header ``x,y,z,intensity``, one point per row.
  detections JSON -- ``{"detections": [{"class_id": ..., "score": ...,
               "x": ..., "y": ..., "z": ..., "l": ..., "w": ..., "h": ...,
               "yaw": ...}]}`` with yaw in radians in (-pi, pi].

Corrupt captures fail fast: truncated binary records and non-finite or
out-of-range values are rejected at load with the offending offset/row.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .rng import SplitMix64

POINT_RECORD_BYTES = 16  # 4 little-endian float32 per point

# cluster points are drawn inside a fractionally shrunken box so the final
# float32 cast cannot push a boundary sample outside its ground-truth box
_BOX_SHRINK = 0.999


@dataclass
class PointCloud:
    """Raw LiDAR points, one row per point: (x, y, z, intensity)."""

    points: np.ndarray  # (N, 4) float32

    def __len__(self) -> int:
        return self.points.shape[0]

    @staticmethod
    def empty() -> "PointCloud":
        return PointCloud(np.zeros((0, 4), dtype=np.float32))


@dataclass(frozen=True)
class Box:
    """Axis-aligned-in-yaw ground-truth box (center, extents, heading)."""

    class_id: int
    x: float
    y: float
    z: float
    l: float
    w: float
    h: float
    yaw: float


@dataclass(frozen=True)
class Detection:
    class_id: int
    score: float
    x: float
    y: float
    z: float
    l: float
    w: float
    h: float
    yaw: float


@dataclass(frozen=True)
class SceneSpec:
    seed: int
    num_clusters: int
    points_per_cluster: int
    cluster_box: tuple  # (l, w, h) meters
    range: tuple  # (x_min, x_max, y_min, y_max, z_min, z_max)
    noise_points: int

    def validate(self) -> None:
        x0, x1, y0, y1, z0, z1 = self.range
        if not (x0 < x1 and y0 < y1 and z0 < z1):
            raise ValueError(f"scene range must be well-ordered per axis, got {self.range}")
        if min(self.num_clusters, self.points_per_cluster, self.noise_points) < 0:
            raise ValueError("scene counts must be >= 0")
        l, w, h = self.cluster_box
        if min(l, w, h) <= 0:
            raise ValueError(f"cluster_box extents must be positive, got {self.cluster_box}")
        if self.num_clusters > 0:
            margin_xy = math.hypot(l, w) / 2.0
            if x1 - x0 <= 2 * margin_xy or y1 - y0 <= 2 * margin_xy or z1 - z0 <= h:
                raise ValueError("scene range too small to place a cluster box")


def _validate_rows(pts: np.ndarray, source: str) -> None:
    bad = np.nonzero(~np.isfinite(pts).all(axis=1))[0]
    if bad.size:
        raise ValueError(f"{source}: non-finite value at row {int(bad[0])}")
    off = np.nonzero((pts[:, 3] < 0.0) | (pts[:, 3] > 1.0))[0]
    if off.size:
        raise ValueError(f"{source}: intensity outside [0, 1] at row {int(off[0])}")


def load_points(path: str, format: str = "bin_xyzi") -> PointCloud:
    """Load a point cloud, preserving file order. Raises on truncated
    records and on non-finite / out-of-range values (fail fast)."""
    if format == "bin_xyzi":
        with open(path, "rb") as f:
            raw = f.read()
        if len(raw) % POINT_RECORD_BYTES != 0:
            full = (len(raw) // POINT_RECORD_BYTES) * POINT_RECORD_BYTES
            raise ValueError(
                f"{path}: truncated record at byte offset {full} "
                f"({len(raw)} bytes is not a multiple of {POINT_RECORD_BYTES})")
        pts = np.frombuffer(raw, dtype="<f4").reshape(-1, 4).astype(np.float32)
        _validate_rows(pts, path)
        return PointCloud(pts)
    if format == "csv":
        rows = []
        with open(path, "r", newline="") as f:
            reader = csv.reader(f)
            header = next(reader, None)
            if header != ["x", "y", "z", "intensity"]:
                raise ValueError(f"{path}: expected header x,y,z,intensity, got {header}")
            for i, row in enumerate(reader):
                if len(row) != 4:
                    raise ValueError(f"{path}: expected 4 fields at row {i}, got {len(row)}")
                rows.append([float(v) for v in row])
        pts = np.asarray(rows, dtype=np.float32).reshape(-1, 4)
        _validate_rows(pts, path)
        return PointCloud(pts)
    raise ValueError(f"unknown point format {format!r}")


def save_points(cloud: PointCloud, path: str, format: str = "bin_xyzi") -> None:
    pts = np.ascontiguousarray(cloud.points, dtype="<f4")
    if format == "bin_xyzi":
        with open(path, "wb") as f:
            f.write(pts.tobytes())
    elif format == "csv":
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["x", "y", "z", "intensity"])
            for row in pts:
                writer.writerow([repr(float(v)) for v in row])
    else:
        raise ValueError(f"unknown point format {format!r}")


def synth_scene(spec: SceneSpec) -> tuple[PointCloud, list[Box]]:
    """Deterministic synthetic scene: point clusters inside ground-truth
    boxes plus uniform noise.

    Draw order is fixed and documented so the output is a pure function of
    the SceneSpec: per cluster, (cx, cy, cz, yaw), then per point
    (dx, dy, dz, intensity) row-major; after all clusters, per noise point
    (x, y, z, intensity). Cluster class ids cycle 0, 1, 2.
    """
    spec.validate()
    rng = SplitMix64(spec.seed)
    x0, x1, y0, y1, z0, z1 = (float(v) for v in spec.range)
    l, w, h = (float(v) for v in spec.cluster_box)
    margin_xy = math.hypot(l, w) / 2.0

    chunks = []
    boxes = []
    for i in range(spec.num_clusters):
        cx = rng.uniform(x0 + margin_xy, x1 - margin_xy)
        cy = rng.uniform(y0 + margin_xy, y1 - margin_xy)
        cz = rng.uniform(z0 + h / 2.0, z1 - h / 2.0)
        yaw = math.pi - 2.0 * math.pi * rng.uniform()  # in (-pi, pi]
        boxes.append(Box(class_id=i % 3, x=cx, y=cy, z=cz, l=l, w=w, h=h, yaw=yaw))
        if spec.points_per_cluster:
            u = rng.uniform(size=spec.points_per_cluster * 4).reshape(-1, 4)
            local = (u[:, :3] - 0.5) * np.array([l, w, h]) * _BOX_SHRINK
            c, s = math.cos(yaw), math.sin(yaw)
            pts = np.empty((spec.points_per_cluster, 4), dtype=np.float64)
            pts[:, 0] = cx + local[:, 0] * c - local[:, 1] * s
            pts[:, 1] = cy + local[:, 0] * s + local[:, 1] * c
            pts[:, 2] = cz + local[:, 2]
            pts[:, 3] = u[:, 3]
            chunks.append(pts)
    if spec.noise_points:
        u = rng.uniform(size=spec.noise_points * 4).reshape(-1, 4)
        pts = np.empty((spec.noise_points, 4), dtype=np.float64)
        pts[:, 0] = x0 + u[:, 0] * (x1 - x0)
        pts[:, 1] = y0 + u[:, 1] * (y1 - y0)
        pts[:, 2] = z0 + u[:, 2] * (z1 - z0)
        pts[:, 3] = u[:, 3]
        chunks.append(pts)

    if chunks:
        points = np.concatenate(chunks, axis=0).astype(np.float32)
    else:
        points = np.zeros((0, 4), dtype=np.float32)
    return PointCloud(points), boxes


_DET_FIELDS = ("class_id", "score", "x", "y", "z", "l", "w", "h", "yaw")


def save_detections(dets: list[Detection], path: str) -> None:
    """Write the detections JSON schema with a stable field order."""
    records = []
    for i, d in enumerate(dets):
        rec = {}
        for name in _DET_FIELDS:
            v = getattr(d, name)
            if name != "class_id" and not math.isfinite(v):
                raise ValueError(f"detection {i}: non-finite field {name}")
            rec[name] = int(v) if name == "class_id" else float(v)
        records.append(rec)
    with open(path, "w") as f:
        json.dump({"detections": records}, f, indent=2)
        f.write("\n")


def load_detections(path: str) -> list[Detection]:
    with open(path, "r") as f:
        payload = json.load(f)
    return [Detection(**rec) for rec in payload["detections"]]
