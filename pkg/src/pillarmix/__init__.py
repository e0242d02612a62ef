"""Framework-free LiDAR pillar detection pipeline.

Points are binned into vertical pillars, encoded to one token per occupied
pillar, serialized once through a windowed space-filling order, mixed by a
stack of gated large-kernel conv layers over implicitly grouped tokens,
scattered back to a dense BEV grid, and decoded by a center-style head.
"""

from .backbone3d import (ConvDotMixParams, GroupedTokens, GroupSchedule,
                         backbone_flops, convdotmix_forward, layer_flops,
                         pad_and_group, regroup, run_backbone, ungroup)
from .bench import BenchRow, BenchSpec, attention_flops_reference, bench_layer, save_csv
from .bev import BEVConfig, BEVParams, bev_flops, bev_forward, conv2d
from .config import (BackboneConfig, ConfigError, PipelineConfig,
                     config_from_dict, default_config, load_config)
from .head import HeadConfig, HeadOutput, HeadParams, decode, head_flops, head_forward
from .kernels import (FlopsReport, count_flops, dwconv1d, gelu, hadamard,
                      layer_norm, linear, sigmoid)
from .pipeline import InferenceResult, pipeline_flops, run_inference
from .rng import SplitMix64
from .scene_io import (Box, Detection, PointCloud, SceneSpec, load_detections,
                       load_points, save_detections, save_points, synth_scene)
from .serializer import (SerializationConfig, SerializationOrder, TokenSequence,
                         apply_order, build_order, scatter_to_bev)
from .voxelizer import (EncoderParams, PillarSet, VoxelFeatures, VoxelGridConfig,
                        assign_pillars, encode_pillars, grid_dims)
from .weights import (PipelineParams, build_params, load_weights,
                      random_mixer_layer, random_weights, save_weights,
                      tensor_specs)

__version__ = "0.1.0"
