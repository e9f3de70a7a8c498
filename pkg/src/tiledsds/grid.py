"""Dense H x W x C float64 grids with square-region crop and additive paste.

Everything in latent space (the clean latent, the noisy latent, sampled noise,
per-tile estimates and the consolidated estimate) is a :class:`LatentGrid`.
Data is stored row-major as ``(row, column, channel)``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import GridBoundsError, ShapeMismatchError

_HEADER = struct.Struct("<III")


class LatentGrid:
    """A finite-valued ``(height, width, channels)`` float64 tensor."""

    __slots__ = ("data",)

    def __init__(self, data):
        arr = np.array(data, dtype=np.float64)
        if arr.ndim != 3 or min(arr.shape) < 1:
            raise ShapeMismatchError(f"expected a non-empty (H, W, C) array, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("grid values must be finite")
        self.data = arr

    @classmethod
    def zeros(cls, height: int, width: int, channels: int) -> LatentGrid:
        return cls(np.zeros((height, width, channels)))

    @classmethod
    def full(cls, height: int, width: int, channels: int, value: float) -> LatentGrid:
        return cls(np.full((height, width, channels), float(value)))

    @classmethod
    def zeros_like(cls, other: LatentGrid) -> LatentGrid:
        return cls(np.zeros_like(other.data))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape  # type: ignore[return-value]

    def copy(self) -> LatentGrid:
        return LatentGrid(self.data)

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, LatentGrid):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.data, other.data))

    def __repr__(self):
        return f"LatentGrid(shape={self.shape})"


@dataclass(frozen=True)
class Region:
    """Square region stored as top-left corner plus side length."""

    top: int
    left: int
    size: int

    def __post_init__(self):
        if self.top < 0 or self.left < 0:
            raise GridBoundsError(f"negative region origin ({self.top}, {self.left})")
        if self.size < 1:
            raise GridBoundsError(f"region size must be positive, got {self.size}")

    @property
    def center(self) -> tuple[float, float]:
        return (self.top + self.size / 2, self.left + self.size / 2)

    @property
    def slices(self) -> tuple[slice, slice]:
        return (slice(self.top, self.top + self.size), slice(self.left, self.left + self.size))

    def fits(self, height: int, width: int) -> bool:
        return self.top + self.size <= height and self.left + self.size <= width


def _check_fits(grid: LatentGrid, region: Region) -> None:
    if not region.fits(grid.height, grid.width):
        raise GridBoundsError(f"{region} does not fit in a {grid.height}x{grid.width} grid")


def crop(grid: LatentGrid, region: Region) -> LatentGrid:
    """Return a copy of ``grid`` restricted to ``region``."""
    _check_fits(grid, region)
    return LatentGrid(grid.data[region.slices])


def paste_add(target: LatentGrid, region: Region, tile: LatentGrid) -> None:
    """Add ``tile`` into ``target`` over ``region``, in place."""
    _check_fits(target, region)
    expected = (region.size, region.size, target.channels)
    if tile.shape != expected:
        raise ShapeMismatchError(f"tile shape {tile.shape} != region shape {expected}")
    target.data[region.slices] += tile.data


def elementwise_div(num: LatentGrid, den: LatentGrid) -> LatentGrid:
    if num.shape != den.shape:
        raise ShapeMismatchError(f"shape mismatch: {num.shape} vs {den.shape}")
    if not (den.data > 0).all():
        raise ZeroDivisionError("denominator has non-positive entries (incomplete tile coverage?)")
    return LatentGrid(num.data / den.data)


def grid_to_bytes(grid: LatentGrid) -> bytes:
    """Serialize as three little-endian uint32 dims followed by little-endian float64 data."""
    return _HEADER.pack(*grid.shape) + grid.data.astype("<f8").tobytes(order="C")


def grid_from_bytes(buf: bytes) -> LatentGrid:
    h, w, c = _HEADER.unpack_from(buf)
    body = buf[_HEADER.size:]
    if len(body) != 8 * h * w * c:
        raise ShapeMismatchError(f"payload holds {len(body)} bytes, header implies {8 * h * w * c}")
    return LatentGrid(np.frombuffer(body, dtype="<f8").reshape(h, w, c))


def write_grid(path: str | Path, grid: LatentGrid) -> None:
    Path(path).write_bytes(grid_to_bytes(grid))


def read_grid(path: str | Path) -> LatentGrid:
    return grid_from_bytes(Path(path).read_bytes())
