# End-to-end inference on a synthetic scene with seeded random weights,
# plus the analytic cost breakdown the profiler reports for the same run.
#
# Run:  python3 demos/04_full_pipeline.py

from pillarmix import (BackboneConfig, BEVConfig, PipelineConfig, SceneSpec,
                       SerializationConfig, VoxelGridConfig, build_params,
                       pipeline_flops, random_weights, run_inference, synth_scene)

CFG = PipelineConfig(
    voxel=VoxelGridConfig(range=(-7.2, 7.2, -7.2, 7.2, -3.0, 5.0), feature_dim=16),
    serializer=SerializationConfig(window=(6, 6), axis_order="y"),
    backbone=BackboneConfig(layers=2, kernel=5, feature_dim=16, schedule=(32, 64)),
    bev=BEVConfig(stage_blocks=(1, 1, 1), base_channels=4, fused_channels=8),
).validate()


def main() -> None:
    cloud, _ = synth_scene(SceneSpec(seed=21, num_clusters=2, points_per_cluster=80,
                                     cluster_box=(2.5, 1.4, 1.2), range=CFG.voxel.range,
                                     noise_points=300))
    params = build_params(CFG, random_weights(CFG, seed=CFG.seed))
    res = run_inference(CFG, cloud, params)

    print(f"points {cloud.points.shape[0]} -> tokens {res.n_tokens} "
          f"(padded to {res.n_padded}) -> detections {len(res.detections)}")
    for d in res.detections[:5]:
        print(f"  class={d.class_id} score={d.score:.3f} "
              f"xy=({d.x:+.2f}, {d.y:+.2f}) lwh=({d.l:.2f}, {d.w:.2f}, {d.h:.2f})")

    print("\nstage cost (analytic):")
    total = res.total_flops()
    for stage, r in res.flops.items():
        print(f"  {stage:<9} {r.macs:>12,} MACs  {r.adds:>10,} adds")
    print(f"  {'total':<9} {total.macs:>12,} MACs  {total.adds:>10,} adds "
          f"= {total.total_flops():,} FLOPs")

    # backbone cost is linear in the padded token count
    for n in (64, 128, 256):
        r = pipeline_flops(CFG, n)["backbone"]
        print(f"  backbone at N={n:>3}: {r.macs:>12,} MACs")


if __name__ == "__main__":
    main()
