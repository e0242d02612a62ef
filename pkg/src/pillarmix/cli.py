"""Command-line entry points.

    pillarmix infer  --points scene.bin (--weights w.bin | --random-weights) --out dets.json
    pillarmix bench  [--shapes default] [--out bench.csv]
    pillarmix flops  [--n-tokens 6000]
    pillarmix synth  --out scene.bin [--num-clusters 4] ...

Exit codes: 0 success, 2 invalid configuration (message names the field),
1 I/O or data error.
"""

from __future__ import annotations

import argparse
import sys

from .bench import DEFAULT_SHAPES, BenchSpec, attention_flops_reference, bench_layer, rows_to_csv
from .backbone3d import layer_flops
from .config import ConfigError, PipelineConfig, default_config, load_config
from .pipeline import pipeline_flops, run_inference
from .scene_io import SceneSpec, load_points, save_detections, save_points, synth_scene
from .weights import build_params, load_weights, random_weights


def _load_cfg(path) -> PipelineConfig:
    return load_config(path) if path else default_config()


def _parse_shapes(text: str) -> tuple:
    if text == "default":
        return DEFAULT_SHAPES
    shapes = []
    for part in text.split(";"):
        fields = part.split(",")
        if len(fields) != 3:
            raise ConfigError("shapes", f"expected B,T,C triple, got {part!r}")
        try:
            shapes.append(tuple(int(v) for v in fields))
        except ValueError:
            raise ConfigError("shapes", f"non-integer value in {part!r}") from None
    return tuple(shapes)


def _print_flops_table(stages: dict) -> None:
    total_macs = total_adds = 0
    print(f"{'stage':<10} {'MACs':>15} {'adds':>13}")
    for name, rep in stages.items():
        print(f"{name:<10} {rep.macs:>15,} {rep.adds:>13,}")
        total_macs += rep.macs
        total_adds += rep.adds
    gflops = (2 * total_macs + total_adds) / 1e9
    print(f"{'total':<10} {total_macs:>15,} {total_adds:>13,}  ({gflops:.2f} GFLOPs)")


def cmd_infer(args) -> int:
    cfg = _load_cfg(args.config)
    seed = args.seed if args.seed is not None else cfg.seed
    if args.weights:
        tensors = load_weights(args.weights)
    else:
        tensors = random_weights(cfg, seed)
    params = build_params(cfg, tensors)
    cloud = load_points(args.points)
    result = run_inference(cfg, cloud, params)
    save_detections(result.detections, args.out)
    print(f"points: {cloud.points.shape[0]}  pillars: N={result.n_tokens}  "
          f"padded: N_pad={result.n_padded}")
    _print_flops_table(result.flops)
    print(f"detections: {len(result.detections)} -> {args.out}")
    return 0


def cmd_bench(args) -> int:
    cfg = _load_cfg(args.config)
    seed = args.seed if args.seed is not None else cfg.seed
    spec = BenchSpec(shapes=_parse_shapes(args.shapes), kernel=cfg.backbone.kernel, seed=seed)
    try:
        spec.validate()
    except ValueError as e:
        raise ConfigError("shapes", str(e)) from e
    rows = bench_layer(spec)
    csv_text = rows_to_csv(rows)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(csv_text)
        print(f"wrote {len(rows)} rows -> {args.out}")
    else:
        print(csv_text, end="")
    return 0


def cmd_flops(args) -> int:
    cfg = _load_cfg(args.config)
    n = args.n_tokens
    if n < 0:
        raise ConfigError("n-tokens", f"must be >= 0, got {n}")
    d, k = cfg.voxel.feature_dim, cfg.backbone.kernel
    m = cfg.backbone.to_schedule().pad_multiple()
    n_pad = ((n + m - 1) // m) * m if n else 0
    w, h = cfg.voxel.dims
    stages = pipeline_flops(cfg, n)
    print(f"analytic cost at N={n} tokens (padded to {n_pad}), D={d}, K={k}, "
          f"grid {w}x{h}")
    _print_flops_table(stages)
    mixer = layer_flops(1, n_pad, d, k)
    attn = attention_flops_reference(1, n_pad, d)
    if mixer.macs:
        print(f"mixer layer at T={n_pad}: {mixer.macs:,} MACs; "
              f"attention layer: {attn.macs:,} MACs "
              f"({attn.macs / mixer.macs:.2f}x)")
    return 0


def cmd_synth(args) -> int:
    cfg = _load_cfg(args.config)
    seed = args.seed if args.seed is not None else cfg.seed
    spec = SceneSpec(seed=seed, num_clusters=args.num_clusters,
                     points_per_cluster=args.points_per_cluster,
                     cluster_box=(4.5, 2.0, 1.6), range=cfg.voxel.range,
                     noise_points=args.noise_points)
    try:
        spec.validate()
    except ValueError as e:
        raise ConfigError("synth", str(e)) from e
    cloud, boxes = synth_scene(spec)
    save_points(cloud, args.out)
    print(f"wrote {cloud.points.shape[0]} points "
          f"({len(boxes)} clusters + {spec.noise_points} noise) -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pillarmix",
                                     description="Pillar-token LiDAR detection pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("infer", help="run detection on a point cloud")
    p.add_argument("--config", help="YAML config (default: packaged)")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--weights", help="binary weight file")
    g.add_argument("--random-weights", action="store_true",
                   help="draw weights deterministically from the seed")
    p.add_argument("--points", required=True, help="input .bin point file")
    p.add_argument("--seed", type=int, help="override config seed")
    p.add_argument("--out", required=True, help="detections JSON path")
    p.set_defaults(fn=cmd_infer)

    p = sub.add_parser("bench", help="single-layer latency microbenchmark")
    p.add_argument("--config", help="YAML config (default: packaged)")
    p.add_argument("--shapes", default="default",
                   help='"default" or "B,T,C;B,T,C;..."')
    p.add_argument("--seed", type=int, help="override config seed")
    p.add_argument("--out", help="CSV path (default: print to stdout)")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("flops", help="analytic per-stage cost")
    p.add_argument("--config", help="YAML config (default: packaged)")
    p.add_argument("--n-tokens", type=int, default=6000, help="occupied pillar count")
    p.set_defaults(fn=cmd_flops)

    p = sub.add_parser("synth", help="generate a synthetic point cloud")
    p.add_argument("--config", help="YAML config supplying the scene range")
    p.add_argument("--seed", type=int, help="override config seed")
    p.add_argument("--num-clusters", type=int, default=4)
    p.add_argument("--points-per-cluster", type=int, default=120)
    p.add_argument("--noise-points", type=int, default=800)
    p.add_argument("--out", required=True, help="output .bin point file")
    p.set_defaults(fn=cmd_synth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as e:
        print(str(e), file=sys.stderr)
        return 2
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
