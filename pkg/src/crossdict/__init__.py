"""crossdict: two-scale predictive dictionaries for fast sparse coding.

A coarse dictionary codes the downsampled signal first; its support,
expanded through a fixed block map, prunes the fine-scale search so the
expensive scan runs over Q*K_low atoms instead of all T_high. The package
covers pursuit (OMP and the two-step zero-tree variant), K-SVD training
with the cross-scale support constraint, the measurement operators and
patch pipelines for denoising / inpainting / demosaicing / video and
light-field compressive sensing, plus a benchmark harness and CLI.
"""

from .crossscale import (CrossScaleModel, ZeroTreeResult, cross_scale_map,
                         omp_cost, predicted_speedup, zero_tree_many_arrays,
                         zero_tree_omp, zero_tree_omp_many)
from .errors import (ChecksumError, CombinatorialBudgetError, ConfigError,
                     CrossdictError, DegenerateAtomError, DegenerateDataError,
                     DimensionError, DomainError, FormatError)
from .fileio import (SingleScaleModel, load_model, load_signal, load_tensor,
                     save_model, save_signal, save_tensor)
from .learn import TrainConfig, TrainReport, ksvd, ksvd_constrained, train_cross_scale
from .patchwork import PatchGrid, aggregate_patches, extract_patches, patch_count
from .pipelines import (BenchmarkRow, PipelineConfig, RecoveryMetrics,
                        benchmark_sweep, demosaic, denoise, inpaint,
                        lightfield_cs, recover, video_cs, write_benchmark_csv)
from .pursuit import (BatchSolve, DenseColumns, LazyColumns, PursuitConfig,
                      PursuitResult, brute_force_best_k, least_squares_on_support,
                      omp, omp_many, omp_many_arrays)
from .scaling import ScaleSpec, downsample, downsample_columns, upsample, upsample_columns
from .sensing import (LinearOperator, identity, make_angular_sample,
                      make_channel_mosaic, make_dense, make_mask,
                      make_temporal_code, mask_from_tensor, patch_problem)
from .tensor import (Dictionary, SparseCode, Tensor, normalize_atoms,
                     reconstruct, snr)

__version__ = "0.1.0"
