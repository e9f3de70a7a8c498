"""Score-distillation gradients built on the consolidated noise estimate.

The latent gradient is the closed form ``w(t) * (eps_hat - eps)``. There is no
differentiation anywhere in this module: the estimator is a black box, and
mapping the latent gradient back to parameters is delegated to a caller
supplied linear :class:`Pullback`.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import numpy as np

from .diffusion import (
    OMEGA_ONE_MINUS_ALPHA_BAR,
    DiffusionSchedule,
    TimestepSample,
    add_noise,
    gaussian_grid,
    make_rng,
    sample_timestep,
)
from .errors import ShapeMismatchError
from .estimators import EstimatorContext, NoiseEstimator
from .grid import LatentGrid
from .mne import consolidate
from .tiling import TilingPlan

TRACE_COLUMNS = ("step", "t", "omega", "residual_norm", "target_error")


@dataclass
class SdsGradientSample:
    grad_latent: LatentGrid
    timestep: TimestepSample
    residual_norm: float


class Pullback(Protocol):
    """Linear map from a flattened latent gradient to a parameter gradient."""

    input_size: int | None

    def __call__(self, grad: np.ndarray) -> np.ndarray: ...


class IdentityPullback:
    def __init__(self, input_size: int | None = None, scale: float = 1.0):
        self.input_size = input_size
        self.scale = scale

    def __call__(self, grad):
        return grad.copy() if self.scale == 1.0 else self.scale * grad


class MatrixPullback:
    """Pullback given by a ``(P, N)`` matrix; anything supporting ``@`` works (dense or sparse)."""

    def __init__(self, matrix):
        self.matrix = matrix
        self.input_size = matrix.shape[1]

    def __call__(self, grad):
        return np.asarray(self.matrix @ grad).reshape(-1)


def sds_step(
    latent: LatentGrid,
    estimator: NoiseEstimator,
    plan: TilingPlan,
    schedule: DiffusionSchedule,
    ts: TimestepSample,
    rng: np.random.Generator,
    condition=None,
    workers: int = 1,
) -> SdsGradientSample:
    noise = gaussian_grid(rng, *latent.shape)
    noisy = add_noise(schedule, latent, ts.t, noise)
    eps_hat = consolidate(noisy, estimator, plan, EstimatorContext(ts.t, condition), workers=workers)
    residual = eps_hat.data - noise.data
    return SdsGradientSample(
        grad_latent=LatentGrid(ts.weight * residual),
        timestep=ts,
        residual_norm=float(np.linalg.norm(residual.reshape(-1))),
    )


def apply_pullback(sample: SdsGradientSample, pb: Pullback) -> np.ndarray:
    flat = sample.grad_latent.data.reshape(-1)
    expected = getattr(pb, "input_size", None)
    if expected is not None and expected != flat.size:
        raise ShapeMismatchError(f"pullback expects {expected} latent entries, got {flat.size}")
    return pb(flat)


@dataclass(frozen=True)
class OptimizeConfig:
    steps: int = 500
    lr: float = 0.01
    t_min: int = 20
    t_max: int = 980
    seed: int = 42
    weighting: str = OMEGA_ONE_MINUS_ALPHA_BAR
    workers: int = 1


@dataclass(frozen=True)
class TraceRow:
    step: int
    t: int
    omega: float
    residual_norm: float
    target_error: float | None


@dataclass
class OptimizationResult:
    params: LatentGrid
    rows: list[TraceRow] = field(default_factory=list)
    initial_error: float | None = None

    @property
    def final_error(self) -> float | None:
        return self.rows[-1].target_error if self.rows else self.initial_error

    def csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for r in self.rows:
            err = "" if r.target_error is None else repr(r.target_error)
            writer.writerow([r.step, r.t, repr(r.omega), repr(r.residual_norm), err])
        return buf.getvalue()

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.csv_text())


def _target_error(params: LatentGrid, target) -> float | None:
    if target is None:
        return None
    ref = target.data if isinstance(target, LatentGrid) else target
    return float(np.max(np.abs(params.data - ref)))


def optimize(
    params: LatentGrid,
    estimator: NoiseEstimator,
    plan: TilingPlan,
    schedule: DiffusionSchedule,
    config: OptimizeConfig,
    *,
    target: LatentGrid | float | None = None,
    pullback: Pullback | None = None,
    condition=None,
) -> OptimizationResult:
    """Plain gradient descent on ``params`` (used directly as the latent) with SDS gradients.

    One timestep and one noise draw per step, both from a single PCG64 stream
    seeded with ``config.seed``; the input grid is not modified.
    """
    rng = make_rng(config.seed)
    pb = pullback or IdentityPullback(params.data.size)
    theta = params.copy()
    result = OptimizationResult(params=theta, initial_error=_target_error(theta, target))
    for step in range(1, config.steps + 1):
        ts = sample_timestep(rng, schedule, config.t_min, config.t_max, config.weighting)
        sample = sds_step(theta, estimator, plan, schedule, ts, rng, condition, config.workers)
        grad = apply_pullback(sample, pb)
        theta = LatentGrid(theta.data - config.lr * grad.reshape(theta.shape))
        result.rows.append(TraceRow(step, ts.t, ts.weight, sample.residual_norm, _target_error(theta, target)))
    result.params = theta
    return result


def trailing_means(values, window: int = 100) -> np.ndarray:
    """Means of every length-``window`` run of ``values`` (empty if too short)."""
    v = np.asarray(values, dtype=np.float64)
    if v.size < window:
        return np.empty(0)
    c = np.concatenate([[0.0], np.cumsum(v)])
    return (c[window:] - c[:-window]) / window


def expected_gaussian_gradient_factor(schedule: DiffusionSchedule, t: int, weight: float) -> float:
    """Factor ``k`` with E[grad] = k * (theta - m) for the uniform Gaussian prior."""
    ab = schedule.alpha_bar_at(t)
    return weight * math.sqrt(ab) / math.sqrt(1.0 - ab)
