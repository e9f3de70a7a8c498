"""Multiple noise estimation: per-tile estimates averaged into one full-grid estimate.

For every tile ``m`` of a plan the estimator runs on the cropped noisy tile
only. Estimates are summed into an accumulator and a weight map counts how
many tiles touched each pixel; the consolidated estimate is their quotient,
i.e. the plain per-pixel mean over covering tiles.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

from .errors import CoverageError, EstimatorError, ShapeMismatchError
from .estimators import EstimatorContext, NoiseEstimator
from .grid import LatentGrid, crop, elementwise_div, paste_add
from .tiling import TilingPlan

__all__ = [
    "Accumulator",
    "WeightMap",
    "EstimatorContext",
    "estimate_tile",
    "accumulate",
    "consolidate",
    "run_accumulation",
]


@dataclass
class Accumulator:
    xi: LatentGrid

    @classmethod
    def zeros(cls, shape: tuple[int, int, int]) -> Accumulator:
        return cls(LatentGrid.zeros(*shape))


@dataclass
class WeightMap:
    w: LatentGrid

    @classmethod
    def zeros(cls, shape: tuple[int, int, int]) -> WeightMap:
        return cls(LatentGrid.zeros(*shape))


def _check_plan(noisy: LatentGrid, plan: TilingPlan) -> None:
    if (plan.grid_height, plan.grid_width) != (noisy.height, noisy.width):
        raise ShapeMismatchError(
            f"plan is for {plan.grid_height}x{plan.grid_width}, grid is {noisy.height}x{noisy.width}"
        )


def estimate_tile(
    estimator: NoiseEstimator,
    noisy: LatentGrid,
    plan: TilingPlan,
    m: int,
    ctx: EstimatorContext,
) -> LatentGrid:
    """Run the estimator on tile ``m`` (1-based) of ``plan``.

    The estimator only ever receives the ``k x k x C`` crop.
    """
    if not 1 <= m <= len(plan.tiles):
        raise IndexError(f"tile index {m} outside [1, {len(plan.tiles)}]")
    region = plan.tiles[m - 1]
    tile = crop(noisy, region)
    try:
        out = estimator.estimate(tile, ctx)
    except Exception as exc:
        raise EstimatorError(m, exc) from exc
    if out.shape != tile.shape:
        raise EstimatorError(m, ShapeMismatchError(f"estimate shape {out.shape} != tile shape {tile.shape}"))
    return out


def accumulate(acc: Accumulator, wmap: WeightMap, plan: TilingPlan, m: int, estimate: LatentGrid) -> None:
    region = plan.tiles[m - 1]
    paste_add(acc.xi, region, estimate)
    paste_add(wmap.w, region, LatentGrid.full(region.size, region.size, wmap.w.channels, 1.0))


def run_accumulation(
    noisy: LatentGrid,
    estimator: NoiseEstimator,
    plan: TilingPlan,
    ctx: EstimatorContext,
    *,
    workers: int = 1,
    order: Sequence[int] | None = None,
) -> tuple[Accumulator, WeightMap]:
    """Estimate every tile and commit it into fresh accumulator and weight map.

    Tile estimates may be computed on ``workers`` threads; they are always
    committed in ``order`` (1-based tile indices, default plan order), which
    keeps the result deterministic.
    """
    _check_plan(noisy, plan)
    indices = list(range(1, len(plan.tiles) + 1)) if order is None else list(order)
    if sorted(indices) != list(range(1, len(plan.tiles) + 1)):
        raise ValueError("order must be a permutation of the plan's tile indices")

    acc = Accumulator.zeros(noisy.shape)
    wmap = WeightMap.zeros(noisy.shape)

    def run(m: int) -> LatentGrid:
        return estimate_tile(estimator, noisy, plan, m, ctx)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            # map yields results in submission order
            for m, est in zip(indices, pool.map(run, indices)):
                accumulate(acc, wmap, plan, m, est)
    else:
        for m in indices:
            accumulate(acc, wmap, plan, m, run(m))
    return acc, wmap


def consolidate(
    noisy: LatentGrid,
    estimator: NoiseEstimator,
    plan: TilingPlan,
    ctx: EstimatorContext,
    *,
    workers: int = 1,
    order: Sequence[int] | None = None,
) -> LatentGrid:
    """Consolidated noise estimate for ``noisy``: accumulated estimates over tile counts."""
    acc, wmap = run_accumulation(noisy, estimator, plan, ctx, workers=workers, order=order)
    if not (wmap.w.data > 0).all():
        raise CoverageError("plan leaves pixels with zero weight")
    return elementwise_div(acc.xi, wmap.w)
