"""
Test suite for Young integrals and the singular kernel.
"""

import numpy as np
from scipy import special

from rangewalk.errors import ConvergenceError, DomainError
from rangewalk.youngint import (
    HolderPath, young_integral, ibp_residual, time_inversion_check,
    singular_kernel_integral, singular_kernel_batch, singular_kernel_cutoff, cutoff_check
)


def brownian_path(seed: int, N: int = 1024, alpha: float = 0.6) -> HolderPath:
    rng = np.random.default_rng(seed)
    values = np.concatenate([[0.0], np.cumsum(rng.normal(0, np.sqrt(1.0 / N), N))])
    return HolderPath(np.linspace(0.0, 1.0, N + 1), values, alpha)


def test_holder_path():
    """HolderPath validation and helpers"""
    print("Testing HolderPath...")

    g = HolderPath.from_function(lambda t: t ** 2, 2.0, 8)
    assert g.start == 0.0 and g.end == 2.0
    assert g.uniform
    assert abs(g(1.0) - 1.0) < 1e-15
    assert len(g.refine().grid) == 17
    assert np.allclose(g.reversed().values, g.values[::-1])

    line = HolderPath.from_function(lambda t: 3 * t, 1.0, 16)
    assert abs(line.C - 3.0) < 1e-12

    for args in ((np.array([0.0, 1.0]), np.array([1.0])),
                 (np.array([0.0, 0.0, 1.0]), np.zeros(3)),
                 (np.array([0.0, 1.0]), np.zeros(2), 1.5)):
        try:
            HolderPath(*args)
            assert False, f"Should have raised DomainError for {args}"
        except DomainError:
            pass

    print("✓ HolderPath")


def test_young_oracles():
    """Closed-form Young integrals of smooth paths"""
    print("Testing Young integral oracles...")

    N = 4096
    ident = HolderPath.from_function(lambda t: t, 1.0, N)
    result = young_integral(ident, ident)
    assert abs(result.value - 0.5) < 1e-8
    assert result.level >= 1

    square = HolderPath.from_function(lambda t: t ** 2, 1.0, N)
    cube = HolderPath.from_function(lambda t: t ** 3, 1.0, N)
    assert abs(young_integral(square, cube).value - 0.6) < 1e-6
    assert abs(young_integral(square, cube, richardson=True).value - 0.6) < 1e-6

    # Constant integrand telescopes
    g = HolderPath.from_function(lambda t: np.sin(5 * t), 1.0, N)
    const = HolderPath.from_function(lambda t: np.full_like(t, 2.0), 1.0, N)
    assert abs(young_integral(const, g).value - 2.0 * np.sin(5.0)) < 1e-10

    print("✓ Young integral oracles")


def test_young_domain():
    """Summability and interval checks"""
    print("Testing Young integral domain...")

    rough = brownian_path(0, alpha=0.4)
    try:
        young_integral(rough, rough)
        assert False, "Should have raised DomainError for alpha + beta <= 1"
    except DomainError:
        pass

    longer = HolderPath.from_function(lambda t: t, 2.0, 16)
    shorter = HolderPath.from_function(lambda t: t, 1.0, 16)
    try:
        young_integral(longer, shorter)
        assert False, "Should have raised DomainError for different intervals"
    except DomainError:
        pass

    f = brownian_path(1)
    try:
        young_integral(f, f, tol=1e-300, max_level=3)
        assert False, "Should have raised ConvergenceError"
    except ConvergenceError:
        pass

    print("✓ Young integral domain")

def test_young_bilinearity():
    """Young integrals are linear in each path"""
    print("Testing Young bilinearity...")

    f1, f2, g1, g2 = (brownian_path(seed) for seed in (11, 12, 13, 14))
    a, b = 2.0, -3.0

    def combine(p, q):
        return HolderPath(p.grid, a * p.values + b * q.values, p.alpha)

    cases = [
        (young_integral(combine(f1, f2), g1),
         young_integral(f1, g1), young_integral(f2, g1)),
        (young_integral(f1, combine(g1, g2)),
         young_integral(f1, g1), young_integral(f1, g2)),
    ]
    for whole, first, second in cases:
        target = a * first.value + b * second.value
        bound = whole.error + abs(a) * first.error + abs(b) * second.error + 1e-12
        assert abs(whole.value - target) <= bound

    # The extrapolated limit carries no stopping-level error
    whole = young_integral(f1, combine(g1, g2), richardson=True)
    parts = [young_integral(f1, g, richardson=True).value for g in (g1, g2)]
    assert abs(whole.value - (a * parts[0] + b * parts[1])) < 1e-10

    print("✓ Young bilinearity")


def test_brownian_isometry():
    """Var int_0^1 (1 - s)^chi dW = 1 / (2 chi + 1)"""
    print("Testing Brownian isometry...")

    N, samples = 32, 100_000
    rng = np.random.default_rng(2024)
    steps = rng.normal(0.0, np.sqrt(1.0 / N), (samples, N))
    values = np.concatenate([np.zeros((samples, 1)), np.cumsum(steps, axis=1)], axis=1)
    grid = np.linspace(0.0, 1.0, N + 1)
    paths = [HolderPath(grid, row, 0.49) for row in values]

    for chi in (0.0, 0.5):
        integrals = singular_kernel_batch(paths, chi, 1.0)
        target = 1.0 / (2.0 * chi + 1.0)
        assert abs(integrals.mean()) < 0.02
        assert abs(integrals.var() / target - 1.0) < 0.02

    print("✓ Brownian isometry")



def test_ibp_and_time_inversion():
    """Integration by parts and time inversion on rough paths"""
    print("Testing integration by parts...")

    for seed in range(5):
        f, g = brownian_path(seed), brownian_path(seed + 100)
        ibp = ibp_residual(f, g)
        assert ibp.ok, f"seed={seed}: {ibp}"
        inversion = time_inversion_check(f, g)
        assert inversion.ok, f"seed={seed}: {inversion}"

    # Different grids are merged
    a = HolderPath(np.linspace(0, 1, 65), np.sin(np.linspace(0, 1, 65)))
    b = HolderPath(np.linspace(0, 1, 97), np.cos(np.linspace(0, 1, 97)))
    assert ibp_residual(a, b).ok

    print("✓ Integration by parts")


def test_singular_kernel_oracles():
    """int_0^t (t - s)^chi dg(s) against closed forms"""
    print("Testing singular kernel oracles...")

    N = 4096
    ident = HolderPath.from_function(lambda t: t, 1.0, N)
    square = HolderPath.from_function(lambda t: t ** 2, 1.0, N)

    assert abs(singular_kernel_integral(ident, 0.5, 1.0) - 2.0 / 3.0) < 1e-8
    assert abs(singular_kernel_integral(square, -0.25, 1.0) - 2.0 * special.beta(2.0, 0.75)) < 1e-6
    # (t - s)^chi with t = 0.5 on the identity: t^(chi + 1) / (chi + 1)
    assert abs(singular_kernel_integral(ident, -0.5, 0.5) - 2.0 * np.sqrt(0.5)) < 1e-8

    # chi = 0 telescopes, also when g(0) != 0
    shifted = HolderPath.from_function(lambda t: 1.0 + np.cos(3 * t), 1.0, N)
    assert abs(singular_kernel_integral(shifted, 0.0, 1.0) - (np.cos(3.0) - 1.0)) < 1e-10

    # Quadrature agrees with the exact piecewise-linear formula
    g = HolderPath.from_function(lambda t: np.sin(4 * t), 1.0, 32)
    exact = singular_kernel_integral(g, -0.3, 0.8)
    quad = singular_kernel_integral(g, -0.3, 0.8, method="quad")
    assert abs(exact - quad) < 1e-7

    print("✓ Singular kernel oracles")


def test_singular_kernel_domain():
    """chi and t outside their ranges are rejected"""
    print("Testing singular kernel domain...")

    g = brownian_path(3)
    for chi, t in ((-0.7, 1.0), (0.5, 1.5), (0.5, -0.1)):
        try:
            singular_kernel_integral(g, chi, t)
            assert False, f"Should have raised DomainError for chi={chi}, t={t}"
        except DomainError:
            pass
    assert singular_kernel_integral(g, 0.5, 0.0) == 0.0

    try:
        singular_kernel_integral(g, 0.5, 1.0, method="simpson")
        assert False, "Should have raised DomainError for an unknown method"
    except DomainError:
        pass

    print("✓ Singular kernel domain")


def test_singular_kernel_batch():
    """Batched evaluation matches the single-path one"""
    print("Testing singular kernel batch...")

    paths = [brownian_path(seed) for seed in range(4)]
    batch = singular_kernel_batch(paths, -0.25, 0.7)
    single = [singular_kernel_integral(p, -0.25, 0.7) for p in paths]
    assert np.allclose(batch, single, rtol=1e-12, atol=1e-14)
    assert np.allclose(singular_kernel_batch(paths, 0.0, 0.7),
                       [p(0.7) - p.values[0] for p in paths])
    assert len(singular_kernel_batch([], 0.5, 1.0)) == 0

    print("✓ Singular kernel batch")


def test_cutoff():
    """eps-cutoffs approach the singular integral"""
    print("Testing singular kernel cutoff...")

    ident = HolderPath.from_function(lambda t: t, 1.0, 1024)
    # int_0^(1 - eps) (1 - s)^(-1/2) ds = 2 (1 - sqrt(eps))
    assert abs(singular_kernel_cutoff(ident, -0.5, 1.0, 0.25) - 1.0) < 1e-12

    report = cutoff_check(brownian_path(7), -0.2, 1.0)
    assert len(report.eps) == 9
    assert all(d >= 0 for d in report.differences)

    smooth = cutoff_check(ident, -0.5, 1.0)
    assert smooth.stable()
    assert abs(smooth.fitted_constant - 2.0) < 1e-6

    try:
        singular_kernel_cutoff(ident, -0.5, 1.0, 0.0)
        assert False, "Should have raised DomainError"
    except DomainError:
        pass

    print("✓ Singular kernel cutoff")
