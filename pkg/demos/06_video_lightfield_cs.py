"""Compressive sensing of video and light fields.

Video: a per-pixel exposure code collapses 8 frames into one coded image;
every patch is recovered from its own slice of the code. Light field: only
a subset of the sub-aperture views is kept and the full view grid is
recovered per patch.
"""

import numpy as np

from crossdict import (PipelineConfig, ScaleSpec, TrainConfig, extract_patches,
                       ksvd, lightfield_cs, snr, train_cross_scale, video_cs)
from crossdict.sensing import make_angular_sample
from crossdict.synthetic import synthetic_lightfield, synthetic_video

rng = np.random.default_rng(0)

print("=== video: 8 frames from one coded exposure ===")
video = synthetic_video((56, 56), frames=8, seed=2)
patches, _ = extract_patches(video, (8, 8, 8), (1, 1, 8), remove_dc=False)
patches = patches[:, ::2]
print(f"training on {patches.shape[1]} video patches (this is the slow part) ...")
model, _ = train_cross_scale(patches, ScaleSpec((8, 8, 8), (2, 2, 2)),
                             64, 1024, 4, 6, iterations=6, seed=1)
single, _, _ = ksvd(patches, TrainConfig(1024, 6, iterations=6, seed=1))

code = np.zeros((56, 56, 8))
code[np.arange(56)[:, None], np.arange(56)[None, :], rng.integers(0, 8, (56, 56))] = 1.0
coded = (np.asarray(video) * code).sum(axis=2)

cfg_z = PipelineConfig(method="zerotree", model=model, stride=(4, 4, 8))
cfg_s = PipelineConfig(method="omp-single", model=single, patch_shape=(8, 8, 8),
                       sparsity=6, stride=(4, 4, 8))
est_z, m_z = video_cs(coded, code, cfg_z)
est_s, m_s = video_cs(coded, code, cfg_s)
print(f"recovering {video.shape} from one {coded.shape} coded image:")
print(f"  single-scale {snr(video, est_s):5.2f} dB  coding {m_s.coding_time_s * 1e3:6.0f} ms")
print(f"  zero-tree    {snr(video, est_z):5.2f} dB  coding {m_z.coding_time_s * 1e3:6.0f} ms "
      f"({m_s.coding_time_s / m_z.coding_time_s:.2f}x faster)")

print("\n=== light field: 4 of 16 views kept ===")
lf = synthetic_lightfield((16, 16), (4, 4), seed=7)
cols, _ = extract_patches(lf, (4, 4, 4, 4), (1, 1, 4, 4), remove_dc=False)
lf_model, _ = train_cross_scale(cols, ScaleSpec((4, 4, 4, 4), (2, 2, 2, 2)),
                                16, 128, 3, 5, iterations=8, seed=2)
kept = [1, 4, 13, 16]
op = make_angular_sample(256, (4, 4), kept)
measured = op.apply(np.asarray(lf).ravel()).reshape(16, 16, len(kept))
cfg = PipelineConfig(method="zerotree", model=lf_model, stride=(2, 2, 4, 4))
estimate, metrics = lightfield_cs(measured, (4, 4), kept, cfg)
print(f"kept views {kept} -> full grid recovered at {snr(lf, estimate):.2f} dB "
      f"({metrics.patch_count} patches)")
