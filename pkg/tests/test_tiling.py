import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import brute_force_coverage
from tiledsds.errors import CoverageError
from tiledsds.tiling import plan_tiles, tile_count


def origins(plan):
    return sorted({t.top for t in plan.tiles}), sorted({t.left for t in plan.tiles})


def test_window_equals_grid():
    plan = plan_tiles(64, 64, 64, 16)
    assert tile_count(plan) == 1
    assert plan.tiles[0].top == 0 and plan.tiles[0].left == 0


def test_stride_equal_window_partitions():
    plan = plan_tiles(128, 128, 64, 64)
    assert tile_count(plan) == 4
    assert (brute_force_coverage(128, 128, plan.tiles) == 1).all()


def test_half_overlap_nine_tiles():
    plan = plan_tiles(128, 128, 64, 32)
    # oracle: every p = 0, s, 2s, ... with p + k <= dim
    expected = [p for p in range(0, 128, 32) if p + 64 <= 128]
    assert origins(plan) == (expected, expected) == ([0, 32, 64], [0, 32, 64])
    assert tile_count(plan) == 9
    assert brute_force_coverage(128, 128, plan.tiles).min() >= 1


def test_edge_clamp():
    plan = plan_tiles(96, 96, 64, 48)
    # candidates 0 and 48; 48 + 64 > 96 so 48 -> 96 - 64 = 32
    assert origins(plan) == ([0, 32], [0, 32])


def test_stride_sixteen_count():
    positions = [p for p in range(0, 128, 16) if p + 64 <= 128]
    assert tile_count(plan_tiles(128, 128, 64, 16)) == len(positions) ** 2 == 25


def test_row_major_order_and_unique():
    plan = plan_tiles(100, 70, 32, 20)
    keys = [(t.top, t.left) for t in plan.tiles]
    assert keys == sorted(keys)
    assert len(set(keys)) == len(keys)


def test_rejections():
    with pytest.raises(ValueError):
        plan_tiles(32, 64, 48, 16)
    with pytest.raises(ValueError):
        plan_tiles(64, 64, 32, 0)
    with pytest.raises(CoverageError):
        plan_tiles(100, 100, 10, 60)


def test_stride_larger_than_window_accepted_when_covered():
    plan = plan_tiles(20, 20, 15, 16)
    assert origins(plan) == ([0, 5], [0, 5])
    assert brute_force_coverage(20, 20, plan.tiles).min() >= 1


plan_params = st.integers(1, 40).flatmap(
    lambda h: st.tuples(st.just(h), st.integers(1, 40)).flatmap(
        lambda hw: st.tuples(st.just(hw[0]), st.just(hw[1]), st.integers(1, min(hw)), st.integers(1, 40))
    )
)


@given(plan_params)
@settings(max_examples=200, deadline=None)
def test_plan_invariants(p):
    h, w, k, s = p
    try:
        plan = plan_tiles(h, w, k, s)
    except CoverageError:
        assert s > k
        return
    cov = brute_force_coverage(h, w, plan.tiles)
    assert cov.min() >= 1
    np.testing.assert_array_equal(cov, plan.coverage())
    assert all(t.size == k for t in plan.tiles)
    assert len(set(plan.tiles)) == len(plan.tiles) >= 1
    if s == k and h % k == 0 and w % k == 0:
        assert (cov == 1).all()


@given(st.integers(8, 48), st.integers(8, 48), st.integers(1, 8))
@settings(max_examples=60, deadline=None)
def test_monotone_in_stride(h, w, k):
    counts = []
    for s in range(1, k + 1):
        counts.append(tile_count(plan_tiles(h, w, k, s)))
    assert all(a >= b for a, b in zip(counts, counts[1:]))


@pytest.mark.parametrize("k,s", [(8, 4), (8, 2), (12, 4), (16, 8)])
def test_interior_coverage_matches_ratio(k, s):
    dim = 8 * k
    plan = plan_tiles(dim, dim, k, s)
    cov = brute_force_coverage(dim, dim, plan.tiles)
    interior = cov[k:dim - k, k:dim - k]
    assert (interior == (k // s) ** 2).all()
