"""Forward diffusion: linear beta schedules, noising, timestep sampling, seeded Gaussians.

Timesteps are 1-based, ``t in [1, T]``; ``alpha_bar_at(t)`` is the cumulative
signal retention after ``t`` steps.

Randomness comes from numpy's PCG64 bit generator. Standard normals are made
with the Box-Muller transform from its uniform doubles and laid out in
row-major grid order, so a (seed, shape) pair always yields the same tensor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import LatentGrid

OMEGA_ONE_MINUS_ALPHA_BAR = "one_minus_alpha_bar"
OMEGA_UNIFORM = "uniform"
OMEGA_MODES = (OMEGA_ONE_MINUS_ALPHA_BAR, OMEGA_UNIFORM)


@dataclass(frozen=True, eq=False)
class DiffusionSchedule:
    beta: np.ndarray
    alpha_bar: np.ndarray

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=np.float64)
        alpha_bar = np.asarray(self.alpha_bar, dtype=np.float64)
        if beta.ndim != 1 or beta.shape != alpha_bar.shape or beta.size < 1:
            raise ValueError("beta and alpha_bar must be equal-length 1-D arrays")
        if not ((beta > 0) & (beta < 1)).all():
            raise ValueError("beta values must lie in (0, 1)")
        if not ((alpha_bar > 0) & (alpha_bar <= 1)).all() or (np.diff(alpha_bar) >= 0).any():
            raise ValueError("alpha_bar must be strictly decreasing within (0, 1]")
        beta.flags.writeable = False
        alpha_bar.flags.writeable = False
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "alpha_bar", alpha_bar)

    @property
    def num_steps(self) -> int:
        return self.beta.size

    def check_timestep(self, t: int) -> None:
        if not 1 <= t <= self.num_steps:
            raise ValueError(f"timestep {t} outside [1, {self.num_steps}]")

    def alpha_bar_at(self, t: int) -> float:
        self.check_timestep(t)
        return float(self.alpha_bar[t - 1])

    def to_grid(self) -> LatentGrid:
        """Pack as a ``1 x T x 2`` grid holding (beta, alpha_bar) per step."""
        return LatentGrid(np.stack([self.beta, self.alpha_bar], axis=-1)[None])

    @classmethod
    def from_grid(cls, grid: LatentGrid) -> DiffusionSchedule:
        if grid.height != 1 or grid.channels != 2:
            raise ValueError(f"schedule grid must be 1 x T x 2, got {grid.shape}")
        return cls(beta=grid.data[0, :, 0].copy(), alpha_bar=grid.data[0, :, 1].copy())

    def __eq__(self, other):
        if not isinstance(other, DiffusionSchedule):
            return NotImplemented
        return np.array_equal(self.beta, other.beta) and np.array_equal(self.alpha_bar, other.alpha_bar)


def make_linear_schedule(num_steps: int = 1000, beta_start: float = 1e-4, beta_end: float = 2e-2) -> DiffusionSchedule:
    if num_steps < 1:
        raise ValueError(f"num_steps must be >= 1, got {num_steps}")
    if not 0 < beta_start <= beta_end < 1:
        raise ValueError(f"need 0 < beta_start <= beta_end < 1, got {beta_start}, {beta_end}")
    beta = np.linspace(beta_start, beta_end, num_steps)
    return DiffusionSchedule(beta=beta, alpha_bar=np.cumprod(1.0 - beta))


def add_noise(schedule: DiffusionSchedule, latent: LatentGrid, t: int, noise: LatentGrid) -> LatentGrid:
    """``sqrt(abar_t) * latent + sqrt(1 - abar_t) * noise``."""
    if noise.shape != latent.shape:
        raise ValueError(f"noise shape {noise.shape} != latent shape {latent.shape}")
    ab = schedule.alpha_bar_at(t)
    return LatentGrid(math.sqrt(ab) * latent.data + math.sqrt(1.0 - ab) * noise.data)


def omega(schedule: DiffusionSchedule, t: int, mode: str = OMEGA_ONE_MINUS_ALPHA_BAR) -> float:
    if mode == OMEGA_ONE_MINUS_ALPHA_BAR:
        return 1.0 - schedule.alpha_bar_at(t)
    if mode == OMEGA_UNIFORM:
        schedule.check_timestep(t)
        return 1.0
    raise ValueError(f"unknown omega mode {mode!r}; expected one of {OMEGA_MODES}")


@dataclass(frozen=True)
class TimestepSample:
    t: int
    weight: float

    def __post_init__(self):
        if not (math.isfinite(self.weight) and self.weight >= 0):
            raise ValueError(f"timestep weight must be finite and >= 0, got {self.weight}")


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def worker_rng(seed: int, worker: int) -> np.random.Generator:
    """Independent stream for one worker, derived from the master seed."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(worker,))))


def sample_timestep(
    rng: np.random.Generator,
    schedule: DiffusionSchedule,
    t_min: int,
    t_max: int,
    weighting: str = OMEGA_ONE_MINUS_ALPHA_BAR,
) -> TimestepSample:
    if not 1 <= t_min <= t_max <= schedule.num_steps:
        raise ValueError(f"need 1 <= t_min <= t_max <= {schedule.num_steps}, got [{t_min}, {t_max}]")
    t = int(rng.integers(t_min, t_max + 1))
    return TimestepSample(t=t, weight=omega(schedule, t, weighting))


def standard_normal(rng: np.random.Generator, size: int) -> np.ndarray:
    """Box-Muller standard normals; pair ``i`` fills outputs ``2i`` and ``2i + 1``."""
    pairs = (size + 1) // 2
    u = rng.random(2 * pairs).reshape(pairs, 2)
    radius = np.sqrt(-2.0 * np.log1p(-u[:, 0]))  # 1 - u in (0, 1], log is finite
    angle = 2.0 * np.pi * u[:, 1]
    out = np.empty((pairs, 2))
    out[:, 0] = radius * np.cos(angle)
    out[:, 1] = radius * np.sin(angle)
    return out.reshape(-1)[:size]


def gaussian_grid(rng: np.random.Generator, height: int, width: int, channels: int) -> LatentGrid:
    return LatentGrid(standard_normal(rng, height * width * channels).reshape(height, width, channels))
