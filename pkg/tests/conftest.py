import time
from types import SimpleNamespace

import numpy as np
import pytest

from crossdict.learn import TrainConfig, ksvd, train_cross_scale
from crossdict.patchwork import extract_patches
from crossdict.pursuit import PursuitConfig, omp
from crossdict.scaling import ScaleSpec
from crossdict.synthetic import synthetic_hyperspectral, synthetic_image, synthetic_video


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # first call JIT-compiles the pursuit kernel; keep it out of timed tests
    omp(np.eye(4), np.array([1.0, 0.0, 0.0, 0.0]), PursuitConfig(1))


@pytest.fixture(scope="session")
def image_setup():
    """Desk-scale denoising setup: 256x256 image, T=1024 single + 64/1024 cross."""
    t0 = time.perf_counter()
    image = synthetic_image((256, 256), seed=1)
    cols, _ = extract_patches(image, (8, 8), 4, remove_dc=True)
    single, _, report_single = ksvd(cols, TrainConfig(1024, 8, iterations=8, seed=0))
    scale = ScaleSpec((8, 8), (2, 2))
    model, (report_low, report_high) = train_cross_scale(
        cols, scale, 64, 1024, 8, 8, iterations=8, seed=0
    )
    return SimpleNamespace(
        image=image,
        train_cols=cols,
        single=single,
        model=model,
        reports=(report_single, report_low, report_high),
        train_seconds=time.perf_counter() - t0,
    )


@pytest.fixture(scope="session")
def video_setup():
    """Coded-exposure video CS setup: 8 frames collapse to one coded image."""
    rng = np.random.default_rng(0)
    video = synthetic_video((56, 56), 8, seed=2)
    cols, _ = extract_patches(video, (8, 8, 8), (1, 1, 8), remove_dc=False)
    cols = cols[:, ::2]
    scale = ScaleSpec((8, 8, 8), (2, 2, 2))
    model, reports = train_cross_scale(cols, scale, 64, 1024, 4, 6, iterations=8, seed=1)
    single, _, report_single = ksvd(cols, TrainConfig(1024, 6, iterations=8, seed=1))
    code = np.zeros((56, 56, 8))
    frame = rng.integers(0, 8, size=(56, 56))
    code[np.arange(56)[:, None], np.arange(56)[None, :], frame] = 1.0
    coded = (np.asarray(video) * code).sum(axis=2)
    return SimpleNamespace(
        video=video, code=code, coded=coded, model=model, single=single,
        reports=(report_single,) + reports,
    )


@pytest.fixture(scope="session")
def mosaic_setup():
    """Spectral demosaicing setup: one random channel sampled per pixel."""
    rng = np.random.default_rng(4)
    cube = synthetic_hyperspectral((48, 48), 8, seed=3)
    cols, _ = extract_patches(cube, (8, 8, 8), (1, 1, 8), remove_dc=False)
    scale = ScaleSpec((8, 8, 8), (2, 2, 4))
    model, reports = train_cross_scale(cols, scale, 64, 1024, 4, 6, iterations=8, seed=2)
    single, _, report_single = ksvd(cols, TrainConfig(1024, 6, iterations=8, seed=2))
    assignment = rng.integers(1, 9, size=(48, 48))
    coded = np.take_along_axis(np.asarray(cube), assignment[..., None] - 1, axis=2)[..., 0]
    return SimpleNamespace(
        cube=cube, assignment=assignment, coded=coded, model=model, single=single,
        reports=(report_single,) + reports,
    )
