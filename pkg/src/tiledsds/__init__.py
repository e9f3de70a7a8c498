"""Tiled score-distillation noise estimation with desk-scale verification experiments."""

from .diffusion import DiffusionSchedule, TimestepSample, add_noise, make_linear_schedule, sample_timestep
from .estimators import (
    BoxBlurEstimator,
    ConstantEstimator,
    EstimatorContext,
    GaussianPriorEstimator,
    NoiseEstimator,
    SpyEstimator,
)
from .grid import LatentGrid, Region, crop, elementwise_div, paste_add
from .mne import Accumulator, WeightMap, accumulate, consolidate, estimate_tile
from .sds import OptimizeConfig, SdsGradientSample, apply_pullback, optimize, sds_step
from .tiling import TilingPlan, plan_tiles, tile_count

__version__ = "0.1.0"
