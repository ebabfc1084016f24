"""
Test suite for the statistical checks.
"""

import math

import numpy as np

from rangewalk.errors import DomainError, SampleSizeError, ScaleMismatchError
from rangewalk.regvar import Regime
from rangewalk.stats import (
    StatReport, covariance_check, envelope_constant, envelope_stability, estimate_sigma2,
    holder_exponent, ks_test, moment_ratio_report, ratio_within, sigma2_stability, skewness_ci
)
from rangewalk.youngint import HolderPath


def brownian_paths(count: int, N: int = 256, sigma2: float = 1.0, seed: int = 0):
    rng = np.random.default_rng(seed)
    steps = rng.normal(0, math.sqrt(sigma2 / N), (count, N))
    values = np.concatenate([np.zeros((count, 1)), np.cumsum(steps, axis=1)], axis=1)
    grid = np.linspace(0.0, 1.0, N + 1)
    return [HolderPath(grid, row, 0.45) for row in values]


def test_stat_report():
    """Reports validate p-values and summarise"""
    print("Testing StatReport...")

    report = StatReport("demo", 0.25, p_value=0.5, bound=0.01)
    assert report.passed
    assert "[PASS] demo" in report.summary()
    assert report.to_dict()['statistic'] == 0.25

    failed = ratio_within(1.2, 1.0, 0.1, "ratio")
    assert not failed.passed
    assert "[FAIL]" in failed.summary()

    try:
        StatReport("bad", 0.0, p_value=1.5)
        assert False, "Should have raised DomainError"
    except DomainError:
        pass

    print("✓ StatReport")


def test_ks_test():
    """One-sample, two-sample and fitted-normal KS"""
    print("Testing KS tests...")

    rng = np.random.default_rng(0)
    x = rng.normal(size=500)

    same = ks_test(x, x.copy())
    assert same.statistic == 0.0
    assert same.passed
    assert same.details['kind'] == "two-sample"

    shifted = ks_test(x, x + 1.0)
    assert not shifted.passed

    assert ks_test(x, "norm").details['kind'] == "one-sample"
    assert not ks_test(rng.exponential(size=500), "norm").passed

    fitted = ks_test(3.0 + 2.0 * x)
    assert fitted.details['kind'] == "lilliefors"
    assert not ks_test(rng.exponential(size=500)).passed

    for args in ((x[:10],), (x, x[:10])):
        try:
            ks_test(*args)
            assert False, "Should have raised SampleSizeError"
        except SampleSizeError:
            pass

    print("✓ KS tests")


def test_holder_exponent():
    """Slopes of mean maximal increments"""
    print("Testing Hoelder exponent...")

    grid = np.linspace(0.0, 1.0, 257)
    rng = np.random.default_rng(1)
    lines = [HolderPath(grid, a * grid) for a in rng.uniform(1.0, 2.0, 100)]
    estimate = holder_exponent(lines, n_boot=20)
    assert abs(estimate.alpha - 1.0) < 1e-9
    assert estimate.ci_low - 1e-9 <= estimate.alpha <= estimate.ci_high + 1e-9
    assert len(estimate.lags) == 6

    rough = holder_exponent(brownian_paths(200), n_boot=20)
    assert 0.35 < rough.alpha < 0.65

    try:
        holder_exponent(lines[:10])
        assert False, "Should have raised SampleSizeError for too few paths"
    except SampleSizeError:
        pass
    coarse = [HolderPath(np.linspace(0, 1, 9), np.linspace(0, 1, 9)) for _ in range(100)]
    try:
        holder_exponent(coarse)
        assert False, "Should have raised SampleSizeError for a coarse grid"
    except SampleSizeError:
        pass
    flat = [HolderPath(grid, np.zeros(257)) for _ in range(100)]
    try:
        holder_exponent(flat)
        assert False, "Should have raised DomainError for constant paths"
    except DomainError:
        pass

    print("✓ Hoelder exponent")


def test_sigma2():
    """Variance estimates, stability and Brownian covariance"""
    print("Testing sigma^2...")

    paths = brownian_paths(2000, sigma2=2.0, seed=2)
    estimate = estimate_sigma2(paths, Regime.SUP)
    assert abs(estimate.value - 2.0) < 4 * estimate.stderr + 1e-12
    assert estimate.ci_low < estimate.value < estimate.ci_high
    assert estimate.samples == 2000

    half = estimate_sigma2(paths, Regime.SUP, t=0.5)
    assert abs(half.value - 2.0) < 0.25

    plain = estimate_sigma2([1.0, 2.0, 3.0, 4.0], Regime.SUP)
    assert abs(plain.value - np.var([1.0, 2.0, 3.0, 4.0], ddof=1)) < 1e-12

    try:
        estimate_sigma2(paths, Regime.MID)
        assert False, "Should have raised ScaleMismatchError"
    except ScaleMismatchError:
        pass
    try:
        estimate_sigma2([1.0, 2.0], Regime.SUP)
        assert False, "Should have raised SampleSizeError"
    except SampleSizeError:
        pass

    stable = sigma2_stability({1000: plain, 2000: plain._replace(value=plain.value * 1.05)})
    assert stable.passed
    assert not sigma2_stability({1000: plain, 2000: plain._replace(value=plain.value * 1.5)}).passed

    assert covariance_check(paths, 2.0, tolerance=0.25).passed
    assert not covariance_check(paths, 4.0).passed

    print("✓ sigma^2")


def test_moments_and_envelope():
    """Moment ratios, envelope constants and skewness"""
    print("Testing moment and envelope diagnostics...")

    report = moment_ratio_report(np.full(100, 2.0))
    assert report.mean == 2.0
    assert report.centered_constants[2] == 0.0
    # E[I^p] = (E I)^p for a constant
    assert abs(report.raw_ratios[2] - 0.25) < 1e-12
    assert report.ok

    try:
        moment_ratio_report([-1.0, -2.0])
        assert False, "Should have raised DomainError"
    except DomainError:
        pass

    means = {(0.25, 1.0): 0.5, (0.5, 0.5): 1.0}
    assert abs(envelope_constant(means, 0.6, eta=0.1) - max(0.5 / 0.25 ** 0.5, 1.0 / 0.5 ** 0.5)) < 1e-12

    assert envelope_stability({100: 1.0, 200: 1.5, 400: 1.2}).passed
    assert not envelope_stability({100: 1.0, 200: 3.0}).passed
    # One-sided: shrinking constants are fine
    assert envelope_stability({100: 3.0, 200: 1.0}, two_sided=False).passed
    assert not envelope_stability({100: 3.0, 200: 1.0}).passed

    x = np.random.default_rng(3).normal(size=2000)
    skew, low, high = skewness_ci(x, n_boot=200)
    assert low <= skew <= high
    skew, low, _ = skewness_ci(np.random.default_rng(3).exponential(size=2000), n_boot=200)
    assert low > 1.0

    print("✓ Moment and envelope diagnostics")
