"""
Test suite for range processes and intersections.

Covers the range process and its interpolation, the block decomposition
identity, intersection counts of two walks, block quantities and rescaling.
"""

import numpy as np

from rangewalk.errors import DomainError, ResourceBudgetError, SampleSizeError
from rangewalk.rangekit import (
    range_process, streaming_range, interpolate, subrange, decompose_range,
    intersect_count, pair_count, intersection_stats, block_quantities,
    increment_defect, pack_sites, rescale_values, rescale_center,
    escape_probability_estimate, SiteCounter
)
from rangewalk.regvar import make_scale_suite
from rangewalk.walks import WalkSpec, sample_path


def test_range_process():
    """Test R_k and discovery times on a hand-made path"""
    print("Testing range process...")

    rp = range_process([0, 1, 0, 2])
    assert rp.n == 3
    assert list(rp.R) == [1, 2, 2, 3]
    assert list(rp.tau) == [1, 3]

    # A path that never moves has range 1
    still = range_process(np.zeros((5, 2), dtype=np.int64))
    assert list(still.R) == [1] * 5
    assert len(still.tau) == 0

    print("✓ Range process")


def test_interpolation():
    """Test the interpolated range"""
    print("Testing interpolation...")

    rp = range_process([0, 1, 0, 2])
    assert interpolate(rp, 0.0) == 1.0
    assert interpolate(rp, 0.5) == 1.5
    assert interpolate(rp, 1.5) == 2.0
    assert interpolate(rp, 2.5) == 2.5
    assert interpolate(rp, 3.0) == 3.0
    values = interpolate(rp, np.array([0.25, 3.0]))
    assert np.allclose(values, [1.25, 3.0])

    for bad in (-0.1, 3.5):
        try:
            interpolate(rp, bad)
            assert False, "Should have raised DomainError"
        except DomainError:
            pass

    # |R(t) - R_floor(t)| <= 1 and |A| <= 2 on sampled paths
    spec = WalkSpec.lazy_srw(2)
    rng = np.random.default_rng(3)
    for seed in range(10):
        rp = range_process(sample_path(spec, 500, seed))
        t = rng.uniform(0, 500, 100)
        assert np.all(np.abs(interpolate(rp, t) - rp.R[np.floor(t).astype(int)]) <= 1.0)
        for s, u in np.sort(rng.uniform(0, 1, (10, 2)), axis=1):
            assert abs(increment_defect(rp, 500, s, u)) <= 2.0

    print("✓ Interpolation")


def test_subrange():
    """Test interval ranges"""
    print("Testing subrange...")

    path = [0, 1, 0, 2]
    assert subrange(path, 0, 3) == 3
    assert subrange(path, 1, 2) == 2
    assert subrange(path, 3, 3) == 1
    assert subrange(path, 3, 1) == 0

    try:
        subrange(path, 0, 4)
        assert False, "Should have raised DomainError"
    except DomainError:
        pass

    print("✓ Subrange")


def test_decomposition_identity():
    """Test R_n = sum of block ranges minus intersections with the past"""
    print("Testing range decomposition...")

    result = decompose_range([0, 1, 0, 2], 3, 3)
    assert result.lhs == 3
    assert result.block_ranges == [2, 1, 1]
    assert result.past_intersections == [1, 0]
    assert result.exact

    spec = WalkSpec.lazy_srw(2)
    for seed in range(20):
        path = sample_path(spec, 1024, seed)
        for p in (1, 2, 4, 8):
            for closed in (False, True):
                result = decompose_range(path, 1024, p, closed)
                assert result.exact, f"seed={seed} p={p} closed={closed}: {result}"

    try:
        decompose_range([0, 1], 1, 0)
        assert False, "Should have raised DomainError"
    except DomainError:
        pass

    print("✓ Range decomposition")


def test_streaming_range():
    """Streaming and stored ranges agree"""
    print("Testing streaming range...")

    spec = WalkSpec.srw(3)
    n = 70000
    rp = range_process(sample_path(spec, n, 11))
    record = [0, 100, 65535, 65536, n]
    total, values = streaming_range(spec, n, 11, record)
    assert total == rp.R[-1]
    assert list(values) == [int(rp.R[k]) for k in record]

    print("✓ Streaming range")

def test_site_counter():
    """Chunked discovery flags match first visits of the whole path"""
    print("Testing site counter...")

    counter = SiteCounter()
    flags = counter.update(np.array([[0, 0], [1, 0], [0, 0], [1, 1]]))
    assert list(flags) == [1, 1, 0, 1]
    assert list(counter.update(np.array([[1, 1], [2, 1], [2, 1]]))) == [0, 1, 0]
    assert len(counter) == 4
    assert len(counter.update(np.zeros((0, 2), dtype=np.int64))) == 0

    positions = sample_path(WalkSpec.lazy_srw(2), 5000, 4).positions
    counter = SiteCounter()
    fresh = np.concatenate([counter.update(positions[k:k + 97])
                            for k in range(0, len(positions), 97)])
    rp = range_process(positions)
    assert np.array_equal(np.cumsum(fresh), rp.R)
    assert len(counter) == rp.R[-1]
    assert len(counter.runs) <= int(np.log2(rp.R[-1])) + 1
    assert all(np.all(np.diff(run) > 0) for run in counter.runs)

    print("✓ Site counter")



def test_intersections():
    """Test I and J of two walks"""
    print("Testing intersections...")

    a = [0, 1, 2]
    b = [0, -1, 1]
    assert intersect_count(a, b, 2, 2) == 2
    assert pair_count(a, b, 2, 2) == 2
    assert intersect_count(a, b, 0, 2) == 0
    assert intersect_count(a, b, 0, 0, empty_is_zero=False) == 1

    # Repeated visits count in J only
    c = [0, 1, 0, 1]
    d = [0, 0, 1]
    assert intersect_count(c, d, 3, 2) == 2
    assert pair_count(c, d, 3, 2) == 2 * 2 + 2 * 1

    spec = WalkSpec.srw(2)
    pa, pb = sample_path(spec, 300, 1), sample_path(spec, 300, 2)
    grid = [0, 50, 150, 300]
    table = intersection_stats(pa, pb, grid, grid)
    for n in grid:
        for m in grid:
            assert table.at(n, m) == (intersect_count(pa, pb, n, m), pair_count(pa, pb, n, m))
    assert np.all(table.J >= table.I)

    print("✓ Intersections")


def test_block_quantities():
    """Block ranges and intersections match interval ranges"""
    print("Testing block quantities...")

    spec = WalkSpec.lazy_srw(2)
    path = sample_path(spec, 800, 5)
    q = block_quantities(path, 400, 4, m=400, k=2)
    edges = [0, 100, 200, 300, 400]
    for i in range(4):
        assert q.ranges[i] == subrange(path, edges[i], edges[i + 1])
    for i in range(2):
        a, b, c = edges[2 * i], edges[2 * i + 1], edges[2 * i + 2]
        union = subrange(path, a, c)
        assert q.self_intersections[i] == subrange(path, a, b) + subrange(path, b, c) - union
    assert q.cross.shape == (2, 2)
    assert np.all(q.cross >= 0)

    print("✓ Block quantities")


def test_packing_box():
    """Sites outside the packable box are rejected"""
    print("Testing site packing...")

    keys = pack_sites(np.array([[0, 0], [1, 0], [0, 1]]))
    assert len(np.unique(keys)) == 3
    try:
        pack_sites(np.array([[1 << 20, 0]]))
        assert False, "Should have raised ResourceBudgetError"
    except ResourceBudgetError:
        pass

    print("✓ Site packing")


def test_rescaling():
    """Centring needs enough replicas; SUB paths are not centred"""
    print("Testing rescaling...")

    values = np.arange(20, dtype=float).reshape(10, 2)
    assert np.allclose(rescale_values(values, 2.0, center=False), 2.0 * values)
    try:
        rescale_values(values, 1.0, center=True)
        assert False, "Should have raised SampleSizeError"
    except SampleSizeError:
        pass

    centred = rescale_values(np.random.default_rng(0).normal(size=(200, 3)), 1.0, center=True)
    assert np.allclose(centred.mean(axis=0), 0.0)

    spec = WalkSpec.srw(1)
    suite = make_scale_suite(1, 2.0, spec, 400)
    R = np.full((5, 3), 20.0)
    paths = rescale_center(R, suite, [0.0, 0.5, 1.0], 400)
    assert len(paths) == 5
    assert np.allclose(paths[0].values, 20.0 / 20.0)

    print("✓ Rescaling")


def test_escape_probability():
    """R_n / n estimates the escape probability of a transient walk"""
    print("Testing escape probability...")

    estimate = escape_probability_estimate([50, 60, 70], 100)
    assert abs(estimate.p_range - 0.6) < 1e-12
    assert estimate.stderr > 0
    assert np.isnan(estimate.p_green)

    try:
        escape_probability_estimate([5], 10)
        assert False, "Should have raised SampleSizeError"
    except SampleSizeError:
        pass

    print("✓ Escape probability")
