import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import HashNoiseEstimator
from tiledsds.diffusion import make_linear_schedule
from tiledsds.estimators import (
    BoxBlurEstimator,
    ConstantEstimator,
    EstimatorContext,
    GaussianPriorEstimator,
    SpyEstimator,
)
from tiledsds.grid import LatentGrid
from tiledsds.mne import consolidate
from tiledsds.tiling import plan_tiles

SCHEDULE = make_linear_schedule()
CTX = EstimatorContext(250, "a croissant")


def random_grid(seed, shape=(16, 16, 3)):
    return LatentGrid(np.random.default_rng(seed).standard_normal(shape))


def test_constant_zero():
    assert ConstantEstimator(0.0).estimate(random_grid(0), CTX) == LatentGrid.zeros(16, 16, 3)


def test_constant_consolidates_to_constant_for_any_stride():
    g = random_grid(1, (24, 24, 2))
    outs = [consolidate(g, ConstantEstimator(3.0), plan_tiles(24, 24, 8, s), CTX) for s in (2, 4, 8)]
    for out in outs:
        np.testing.assert_allclose(out.data, 3.0, rtol=0, atol=1e-15)
    assert outs[1] == outs[2]  # counts 1, 2, 4 are exact


def test_constant_rejects_nonfinite():
    with pytest.raises(ValueError):
        ConstantEstimator(math.inf)


def test_gaussian_prior_zero_at_scaled_mean():
    ab = SCHEDULE.alpha_bar_at(CTX.timestep)
    tile = LatentGrid.full(4, 4, 2, math.sqrt(ab) * 0.7)
    assert np.abs(GaussianPriorEstimator(0.7, SCHEDULE).estimate(tile, CTX).data).max() <= 1e-15


def test_gaussian_prior_zero_mean_reduction():
    tile = random_grid(2)
    ab = SCHEDULE.alpha_bar_at(CTX.timestep)
    out = GaussianPriorEstimator(0.0, SCHEDULE).estimate(tile, CTX)
    np.testing.assert_allclose(out.data, tile.data / math.sqrt(1 - ab), rtol=1e-15)


@given(st.integers(0, 2**32 - 1), st.integers(1, 1000), st.floats(-3, 3))
@settings(max_examples=80, deadline=None)
def test_gaussian_prior_denoiser_identity(seed, t, m):
    x = random_grid(seed, (5, 5, 2))
    ctx = EstimatorContext(t)
    ab = SCHEDULE.alpha_bar_at(t)
    eps_hat = GaussianPriorEstimator(m, SCHEDULE).estimate(x, ctx)
    recon = x.data - math.sqrt(1 - ab) * eps_hat.data
    np.testing.assert_allclose(recon, math.sqrt(ab) * m, rtol=0, atol=1e-12 * max(1.0, np.abs(x.data).max()))


def test_gaussian_prior_rejects_bad_timestep():
    with pytest.raises(ValueError):
        GaussianPriorEstimator(0.0, SCHEDULE).estimate(random_grid(3), EstimatorContext(1001))


def test_gaussian_prior_tiled_equals_full():
    g = random_grid(4, (40, 40, 3))
    est = GaussianPriorEstimator(-0.4, SCHEDULE)
    for s in (3, 7, 12):
        out = consolidate(g, est, plan_tiles(40, 40, 12, s), CTX)
        assert np.abs(out.data - est.estimate(g, CTX).data).max() <= 1e-12


def test_blur_constant_input():
    out = BoxBlurEstimator(2).estimate(LatentGrid.full(9, 9, 2, 1.25), CTX)
    np.testing.assert_allclose(out.data, 1.25, rtol=0, atol=1e-15)


def test_blur_impulse():
    tile = LatentGrid.zeros(7, 7, 1)
    tile.data[3, 3, 0] = 1.0
    out = BoxBlurEstimator(1).estimate(tile, CTX).data[..., 0]
    expected = np.zeros((7, 7))
    expected[2:5, 2:5] = 1 / 9
    np.testing.assert_allclose(out, expected, rtol=0, atol=1e-16)


def test_blur_brute_force_oracle():
    x = random_grid(5, (6, 8, 2)).data
    r = 2
    out = BoxBlurEstimator(r).estimate(LatentGrid(x), CTX).data
    h, w, _ = x.shape
    for i in range(h):
        for j in range(w):
            vals = [x[min(max(i + di, 0), h - 1), min(max(j + dj, 0), w - 1)]
                    for di in range(-r, r + 1) for dj in range(-r, r + 1)]
            np.testing.assert_allclose(out[i, j], np.mean(vals, axis=0), rtol=1e-13)


@given(st.integers(0, 2**32 - 1), st.floats(-5, 5))
@settings(max_examples=40, deadline=None)
def test_blur_commutes_with_shift(seed, c):
    x = random_grid(seed, (10, 10, 2))
    blur = BoxBlurEstimator(2)
    shifted = blur.estimate(LatentGrid(x.data + c), CTX).data
    np.testing.assert_allclose(shifted, blur.estimate(x, CTX).data + c, rtol=0, atol=1e-12)


def test_blur_argument_checks():
    with pytest.raises(ValueError):
        BoxBlurEstimator(0)
    with pytest.raises(ValueError):
        BoxBlurEstimator(4, window=8)
    with pytest.raises(ValueError):
        BoxBlurEstimator(3).estimate(random_grid(6, (5, 5, 1)), CTX)


def test_blur_seams_shrink_with_overlap():
    g = random_grid(7, (64, 64, 2))
    blur = BoxBlurEstimator(3)
    full = blur.estimate(g, CTX).data
    disjoint = np.abs(consolidate(g, blur, plan_tiles(64, 64, 16, 16), CTX).data - full).max()
    half = np.abs(consolidate(g, blur, plan_tiles(64, 64, 16, 8), CTX).data - full).max()
    assert disjoint > 0
    assert half < disjoint


@pytest.mark.parametrize("est", [
    ConstantEstimator(2.0),
    GaussianPriorEstimator(0.3, SCHEDULE),
    BoxBlurEstimator(2),
    HashNoiseEstimator(),
    SpyEstimator(BoxBlurEstimator(1)),
])
def test_shape_preserving_and_pure(est):
    tile = random_grid(8, (9, 9, 3))
    before = tile.data.copy()
    a = est.estimate(tile, CTX)
    b = est.estimate(tile, CTX)
    assert a.shape == tile.shape
    assert a == b
    assert np.array_equal(tile.data, before)
    assert isinstance(est.describe(), str)


def test_spy_records_calls_in_plan_order():
    g = random_grid(9, (20, 20, 2))
    plan = plan_tiles(20, 20, 8, 4)
    spy = SpyEstimator(ConstantEstimator(1.0))
    consolidate(g, spy, plan, CTX)
    assert spy.call_count == len(plan)
    assert set(spy.shapes) == {(8, 8, 2)}
    for call, region in zip(spy.calls, plan.tiles):
        assert np.array_equal(call["tile"], g.data[region.slices])
    spy.reset()
    assert spy.call_count == 0
