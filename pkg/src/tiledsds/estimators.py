"""Noise estimators: the per-tile ``Q(tile; condition, t)`` interface and analytic stand-ins.

An estimator sees one tile, the timestep and an opaque condition token, and
nothing else. In particular it never learns where the tile sits in the full
grid, so any position-dependent behaviour is impossible by construction.
"""

from __future__ import annotations

import abc
import math
import threading
from dataclasses import dataclass
from typing import Any, Hashable

import numpy as np

from .diffusion import DiffusionSchedule
from .grid import LatentGrid


@dataclass(frozen=True)
class EstimatorContext:
    timestep: int
    condition: Hashable = None


class NoiseEstimator(abc.ABC):
    """Shape-preserving, side-effect-free map from a noisy tile to a noise estimate.

    Implementations must be safe to call concurrently on distinct tiles.
    """

    name: str = "estimator"

    @abc.abstractmethod
    def estimate(self, tile: LatentGrid, ctx: EstimatorContext) -> LatentGrid:
        ...

    def describe(self) -> str:
        return self.name

    def __call__(self, tile: LatentGrid, ctx: EstimatorContext) -> LatentGrid:
        return self.estimate(tile, ctx)


class ConstantEstimator(NoiseEstimator):
    name = "constant"

    def __init__(self, value: float):
        if not math.isfinite(value):
            raise ValueError(f"constant must be finite, got {value}")
        self.value = float(value)

    def estimate(self, tile, ctx):
        return LatentGrid(np.full(tile.shape, self.value))

    def describe(self):
        return f"constant(c={self.value!r})"


class GaussianPriorEstimator(NoiseEstimator):
    """Optimal denoiser for data distributed as N(m, I) with a spatially uniform mean m.

    For ``x_t = sqrt(abar) x0 + sqrt(1 - abar) eps`` with ``x0 ~ N(m, I)`` the
    posterior-mean noise is ``(x_t - sqrt(abar) m) / sqrt(1 - abar)``.
    """

    name = "gaussian_prior"

    def __init__(self, mean: float, schedule: DiffusionSchedule):
        if not math.isfinite(mean):
            raise ValueError(f"mean must be finite, got {mean}")
        self.mean = float(mean)
        self.schedule = schedule

    def estimate(self, tile, ctx):
        ab = self.schedule.alpha_bar_at(ctx.timestep)
        return LatentGrid((tile.data - math.sqrt(ab) * self.mean) / math.sqrt(1.0 - ab))

    def describe(self):
        return f"gaussian_prior(mean={self.mean!r}, T={self.schedule.num_steps})"


def box_blur(data: np.ndarray, radius: int) -> np.ndarray:
    """Per-channel ``(2r+1)^2`` box average of an ``(H, W, C)`` array with edge replication."""
    size = 2 * radius + 1
    padded = np.pad(data, ((radius, radius), (radius, radius), (0, 0)), mode="edge")
    h, w = data.shape[:2]
    rows = sum(padded[i:i + h] for i in range(size))
    total = sum(rows[:, j:j + w] for j in range(size))
    return total / (size * size)


class BoxBlurEstimator(NoiseEstimator):
    """Nonlocal stand-in with a ``2r+1`` receptive field.

    Tiles see replicated edge pixels instead of their true neighbours, so the
    tiled result departs from the full-grid one near tile borders.
    """

    name = "box_blur"

    def __init__(self, radius: int, window: int | None = None):
        if radius < 1:
            raise ValueError(f"blur radius must be >= 1, got {radius}")
        if window is not None and 2 * radius + 1 > window:
            raise ValueError(f"blur diameter {2 * radius + 1} exceeds window {window}")
        self.radius = radius
        self.window = window

    def estimate(self, tile, ctx):
        if 2 * self.radius + 1 > min(tile.height, tile.width):
            raise ValueError(f"blur diameter {2 * self.radius + 1} exceeds tile {tile.height}x{tile.width}")
        return LatentGrid(box_blur(tile.data, self.radius))

    def describe(self):
        return f"box_blur(radius={self.radius})"


class SpyEstimator(NoiseEstimator):
    """Delegates to ``inner`` and logs every call's input shape and timestep."""

    name = "spy"

    def __init__(self, inner: NoiseEstimator):
        self.inner = inner
        self._lock = threading.Lock()
        self.calls: list[dict[str, Any]] = []

    def estimate(self, tile, ctx):
        out = self.inner.estimate(tile, ctx)
        with self._lock:
            self.calls.append({"shape": tile.shape, "timestep": ctx.timestep, "tile": tile.data.copy()})
        return out

    @property
    def call_count(self) -> int:
        return len(self.calls)

    @property
    def shapes(self) -> list[tuple[int, int, int]]:
        return [c["shape"] for c in self.calls]

    def reset(self) -> None:
        with self._lock:
            self.calls.clear()

    def describe(self):
        return f"spy({self.inner.describe()})"
