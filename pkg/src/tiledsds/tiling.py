"""Sliding-window tiling plans.

Candidate tile origins along an axis are ``0, s, 2s, ...``. Any candidate whose
window would run past the edge is replaced by the clamped origin ``dim - k``,
so every tile keeps the full ``k x k`` size and the far edge is always covered.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CoverageError
from .grid import Region

DEFAULT_WINDOW = 64


def axis_positions(dim: int, window: int, stride: int) -> list[int]:
    positions: list[int] = []
    for p in range(0, dim, stride):
        p = min(p, dim - window)
        if not positions or positions[-1] != p:
            positions.append(p)
    return positions


def _axis_covered(positions: list[int], dim: int, window: int) -> bool:
    reach = 0
    for p in positions:
        if p > reach:
            return False
        reach = p + window
    return reach >= dim


@dataclass(frozen=True)
class TilingPlan:
    grid_height: int
    grid_width: int
    window: int
    stride: int
    tiles: tuple[Region, ...]

    def __len__(self) -> int:
        return len(self.tiles)

    def __iter__(self):
        return iter(self.tiles)

    def coverage(self) -> np.ndarray:
        """Per-pixel count of tiles containing each pixel, shape ``(H, W)``."""
        counts = np.zeros((self.grid_height, self.grid_width), dtype=np.int64)
        for region in self.tiles:
            counts[region.slices] += 1
        return counts


def plan_tiles(height: int, width: int, window: int = DEFAULT_WINDOW, stride: int = 32) -> TilingPlan:
    """Build the row-major tiling plan for an ``height x width`` grid.

    Raises ``ValueError`` when the window does not fit or the stride is not
    positive, and :class:`CoverageError` when a stride larger than the window
    leaves pixels uncovered.
    """
    if height < 1 or width < 1:
        raise ValueError(f"grid dims must be positive, got {height}x{width}")
    if window < 1 or window > min(height, width):
        raise ValueError(f"window {window} does not fit a {height}x{width} grid")
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")

    tops = axis_positions(height, window, stride)
    lefts = axis_positions(width, window, stride)
    if not (_axis_covered(tops, height, window) and _axis_covered(lefts, width, window)):
        raise CoverageError(
            f"stride {stride} with window {window} leaves gaps in a {height}x{width} grid"
        )
    tiles = tuple(Region(t, l, window) for t in tops for l in lefts)
    return TilingPlan(height, width, window, stride, tiles)


def tile_count(plan: TilingPlan) -> int:
    return len(plan.tiles)
