import hashlib

import numpy as np
import pytest

from tiledsds.estimators import NoiseEstimator
from tiledsds.grid import LatentGrid

GOLDEN = __import__("pathlib").Path(__file__).parent / "golden"


def brute_force_coverage(height, width, tiles):
    """Count covering tiles per pixel by explicit containment tests."""
    counts = np.zeros((height, width), dtype=np.int64)
    for r in range(height):
        for c in range(width):
            counts[r, c] = sum(
                t.top <= r < t.top + t.size and t.left <= c < t.left + t.size for t in tiles
            )
    return counts


class HashNoiseEstimator(NoiseEstimator):
    """Pure but arbitrary: output is Gaussian noise seeded by a digest of the input tile."""

    name = "hash_noise"

    def __init__(self, salt=0):
        self.salt = salt

    def estimate(self, tile, ctx):
        digest = hashlib.sha256(tile.data.tobytes() + bytes([self.salt])).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
        return LatentGrid(rng.standard_normal(tile.shape))


class PointwiseEstimator(NoiseEstimator):
    name = "pointwise"

    def estimate(self, tile, ctx):
        x = tile.data
        return LatentGrid(np.tanh(x) * 0.5 + 0.1 * x * x - 0.01 * ctx.timestep)


class IdentityEstimator(NoiseEstimator):
    name = "identity"

    def estimate(self, tile, ctx):
        return tile.copy()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
