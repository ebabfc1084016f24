"""
Test suite for scale functions, Green functions and memory kernels.
"""

import math

import numpy as np

from rangewalk.errors import DomainError, ResourceBudgetError
from rangewalk.regvar import (
    Regime, KernelSpec, classify_regime, regime_chi, energy_chi_bound, estimate_green,
    green_truncated, make_scale_suite, ScaleSuite, potter_check, ratio_test,
    kernel_eval, kernel_derivative, kernel_antiderivative, kernel_rescaled,
    kernel_rescaled_derivative, kernel_rescaled_antiderivative, kernel_sup, torus_nodes
)
from rangewalk.walks import WalkSpec


def test_regimes():
    """Regime table, chi and the energy bound"""
    print("Testing regimes...")

    assert classify_regime(1, 2.0) == Regime.SUB
    assert classify_regime(2, 2.0) == Regime.MID
    assert classify_regime(3, 2.0) == Regime.SUP
    assert classify_regime(1, 0.8) == Regime.MID
    assert classify_regime(2, 1.0) == Regime.SUP

    assert regime_chi(1, 2.0) == 0.5
    assert regime_chi(2, 2.0) == 1.0
    assert regime_chi(4, 2.0) == 0.5
    assert abs(regime_chi(1, 0.8) - 0.75) < 1e-12

    assert energy_chi_bound(4, 2.0) == -0.5
    assert energy_chi_bound(2, 2.0) == -1.0
    assert energy_chi_bound(1, 2.0) == -0.5

    print("✓ Regimes")


def test_green_exact():
    """h(n) by lattice convolution against hand counts"""
    print("Testing exact Green function...")

    assert abs(green_truncated(WalkSpec.srw(1), 2) - 0.5) < 1e-15
    assert abs(green_truncated(WalkSpec.srw(2), 2) - 0.25) < 1e-15
    assert abs(green_truncated(WalkSpec.lazy_srw(1), 2) - 0.875) < 1e-15
    # SRW on Z: P(X_4 = 0) = 6/16
    assert abs(green_truncated(WalkSpec.srw(1), 4) - (0.5 + 0.375)) < 1e-15

    estimate = estimate_green(WalkSpec.srw(3), 10)
    assert estimate.method == "exact"
    assert estimate.stderr == 0.0

    print("✓ Exact Green function")


def test_green_quadrature():
    """Torus quadrature agrees with exact convolution"""
    print("Testing Green function quadrature...")

    x, w = torus_nodes()
    assert len(x) == 256
    assert abs(w.sum() - 2 * math.pi) < 1e-12

    walk = WalkSpec.lazy_srw(2)
    exact = estimate_green(walk, 64, method="exact").value
    quad = estimate_green(walk, 64, method="quadrature").value
    assert abs(quad - exact) < 1e-3 * exact

    # Beyond the exact range auto picks quadrature in d <= 2
    assert estimate_green(walk, 1000).method == "quadrature"

    try:
        estimate_green(WalkSpec.srw(4), 10 ** 6, method="mc")
        assert False, "Should have raised ResourceBudgetError"
    except ResourceBudgetError:
        pass

    print("✓ Green function quadrature")


def test_scale_suite():
    """Scale functions of the regime table"""
    print("Testing scale suite...")

    suite = make_scale_suite(3, 2.0, WalkSpec.srw(3), 1000)
    assert suite.regime == Regime.SUP
    assert abs(suite.g(3) - 11.0 / 6.0) < 1e-12
    assert suite.g(1000) > suite.g(999)
    assert abs(suite.S(100) - (100 * suite.g(100)) ** -0.5) < 1e-15

    sub = make_scale_suite(1, 2.0, WalkSpec.srw(1), 10000)
    assert abs(sub.b(400) - 20.0) < 1e-12
    assert abs(sub.S(400) - 1.0 / 20.0) < 1e-15
    assert sub.s(400) == 1.0
    assert np.all(np.diff(sub.b(np.arange(1, 100))) > 0)

    mid = make_scale_suite(2, 2.0, WalkSpec.lazy_srw(2), 64)
    h = mid.h(64)
    assert abs(mid.S(64) - h ** 2 * 64.0 / 64.0 ** 2) < 1e-12
    assert abs(mid.intersection_scale(64) - mid.S(64)) < 1e-15
    assert abs(mid.pair_scale(64) - 1.0 / 64.0) < 1e-15

    # Cached values survive serialisation
    restored = ScaleSuite.from_dict(mid.to_dict())
    assert restored.h(64) == h
    assert restored.regime == Regime.MID

    try:
        sub.b(0)
        assert False, "Should have raised DomainError"
    except DomainError:
        pass

    print("✓ Scale suite")


def test_scale_suite_errors():
    """make_scale_suite rejects bad arguments"""
    print("Testing scale suite errors...")

    cases = [
        (1, 2.5, WalkSpec.srw(1), 10),
        (2, 2.0, WalkSpec.srw(3), 10),
        (1, 2.0, WalkSpec.srw(1), 0),
        (1, 0.8, WalkSpec.custom([[1], [2]], [0.5, 0.5], beta=0.8), 10),
    ]
    for d, beta, walk, n_max in cases:
        try:
            make_scale_suite(d, beta, walk, n_max)
            assert False, f"Should have raised DomainError for d={d} beta={beta}"
        except DomainError:
            pass

    print("✓ Scale suite errors")


def test_potter_and_ratio():
    """Potter bounds and the ratio test"""
    print("Testing Potter bounds...")

    x = 2.0 ** np.arange(1, 20)
    report = potter_check(np.sqrt(x) * np.log(x), 0.5, 0.1, x)
    assert report.ok
    assert report.c_eps >= 1.0

    jumpy = potter_check([1.0, 1.0, 1000.0], 0.0, 0.1)
    assert not jumpy.ok
    assert jumpy.n_violations >= 1

    assert abs(ratio_test(lambda t: t ** 1.5, 1000.0, 1.5) - 1.0) < 1e-12
    assert abs(ratio_test(lambda t: t * math.log(t), 1e6, 1.0) - 1.0) < 0.06

    try:
        potter_check([1.0, -1.0], 0.0, 0.1)
        assert False, "Should have raised DomainError"
    except DomainError:
        pass

    print("✓ Potter bounds")


def test_parametric_kernel():
    """m(t) = L / (1 + t)^delta, its derivative and antiderivative"""
    print("Testing parametric kernel...")

    k = KernelSpec(L=2.0, delta=0.5)
    assert k.chi_m == -0.5
    t = np.array([0.0, 1.0, 3.0, 8.0])
    assert np.allclose(kernel_eval(k, t), 2.0 / np.sqrt(1 + t))
    assert np.allclose(kernel_derivative(k, t), -0.5 * 2.0 * (1 + t) ** -1.5)
    assert np.allclose(kernel_antiderivative(k, t), 4.0 * (np.sqrt(1 + t) - 1.0))
    assert np.allclose(kernel_antiderivative(KernelSpec(delta=1.0), t), np.log1p(t))
    assert np.allclose(kernel_antiderivative(KernelSpec(), t), t)
    assert kernel_sup(k, 10.0) == 2.0

    # m_n(x) -> x^chi
    x = np.array([0.25, 0.5, 2.0])
    ratio = kernel_rescaled(k, 1e6, x) / x ** -0.5
    assert np.all(np.abs(ratio - 1.0) < 0.05)
    assert np.allclose(kernel_rescaled_derivative(k, 100.0, x),
                       100.0 * kernel_derivative(k, 100.0 * x) / kernel_eval(k, 100.0))
    assert np.allclose(kernel_rescaled_antiderivative(k, 100.0, x),
                       kernel_antiderivative(k, 100.0 * x) / (100.0 * kernel_eval(k, 100.0)))

    for kwargs in (dict(L=0.0), dict(delta=0.5, chi=-0.4)):
        try:
            KernelSpec(**kwargs)
            assert False, f"Should have raised DomainError for {kwargs}"
        except DomainError:
            pass
    try:
        kernel_eval(k, -1.0)
        assert False, "Should have raised DomainError"
    except DomainError:
        pass

    print("✓ Parametric kernel")


def test_tabulated_kernel():
    """Tabulated kernels interpolate and extend as a power law"""
    print("Testing tabulated kernel...")

    k = KernelSpec(t_table=(0.0, 1.0, 2.0), m_table=(1.0, 0.5, 0.25), chi=-1.0)
    assert k.tabulated
    assert k.chi_m == -1.0
    assert abs(kernel_eval(k, 1.5) - 0.375) < 1e-15
    assert abs(kernel_eval(k, 4.0) - 0.125) < 1e-15
    assert abs(kernel_antiderivative(k, 2.0) - 1.125) < 1e-15
    assert abs(kernel_antiderivative(k, 1.5) - 0.96875) < 1e-15
    assert abs(kernel_antiderivative(k, 4.0) - (1.125 + 0.5 * math.log(2.0))) < 1e-12
    assert kernel_sup(k, 3.0) == 1.0

    restored = KernelSpec.from_dict(k.to_dict())
    assert restored == k

    for kwargs in (dict(t_table=(1.0, 2.0, 3.0), m_table=(1.0, 0.5, 0.25), chi=-1.0),
                   dict(t_table=(0.0, 1.0, 2.0), m_table=(1.0, 0.5, 0.25)),
                   dict(t_table=(0.0, 1.0, 2.0), m_table=(1.0, 0.0, 0.25), chi=-1.0)):
        try:
            KernelSpec(**kwargs)
            assert False, f"Should have raised DomainError for {kwargs}"
        except DomainError:
            pass

    print("✓ Tabulated kernel")


def test_regular_variation_ratios():
    """f(2n) / f(n) -> 2^kappa for b, h, g and m at n = 2^20"""
    print("Testing regular variation ratios...")

    n = 2 ** 20
    sub = make_scale_suite(1, 2.0, WalkSpec.lazy_srw(1), 2 * n)
    assert abs(ratio_test(sub.b, n, 0.5) - 1.0) < 1e-12
    assert abs(ratio_test(sub.h, n, 0.5) - 1.0) < 0.05

    # g is slowly varying in the SUP regime, also at the boundary d / beta = 3/2
    boundary = make_scale_suite(3, 2.0, WalkSpec.srw(3), 2 * n)
    assert abs(ratio_test(boundary.g, n, 0.0) - 1.0) < 0.05
    deep = make_scale_suite(4, 2.0, WalkSpec.srw(4), 2 * n)
    assert abs(ratio_test(deep.g, n, 0.0) - 1.0) < 1e-5

    k = KernelSpec(delta=0.5)
    assert abs(ratio_test(lambda t: kernel_eval(k, t), n, -0.5) - 1.0) < 0.05

    print("✓ Regular variation ratios")


def test_boundary_growth():
    """s(n)^d sqrt(g(n)) grows without bound at d / beta = 3/2"""
    print("Testing boundary growth...")

    suite = make_scale_suite(3, 2.0, WalkSpec.srw(3), 2 ** 22)
    ns = 2 ** np.arange(10, 23)
    growth = np.array([suite.s(int(n)) ** 3 * math.sqrt(suite.g(int(n))) for n in ns])
    assert np.all(np.diff(growth) > 0)
    # g(n) ~ log n, so the product passes sqrt(log 2^22) ~ 3.9
    assert growth[-1] > 3.9

    print("✓ Boundary growth")


def test_green_logarithmic_growth():
    """h(n) / log n settles in d = 2"""
    print("Testing logarithmic Green growth...")

    suite = make_scale_suite(2, 2.0, WalkSpec.lazy_srw(2), 2 ** 16)
    low = suite.h(2 ** 14) / math.log(2 ** 14)
    high = suite.h(2 ** 16) / math.log(2 ** 16)
    assert abs(high / low - 1.0) < 0.10

    print("✓ Logarithmic Green growth")


def test_potter_examples():
    """Exact powers, x log(1 + x) and the exponential"""
    print("Testing Potter examples...")

    x = 2.0 ** np.arange(1, 21)
    for eps in (0.01, 0.1, 0.5):
        assert potter_check(np.sqrt(x), 0.5, eps, x).c_eps == 1.0

    report = potter_check(x * np.log1p(x), 1.0, 0.1, x)
    assert math.isfinite(report.c_eps) and report.c_eps > 1.0
    assert report.ok

    y = np.arange(1.0, 41.0)
    exponential = potter_check(np.exp(y), 1.0, 0.1, y)
    assert not exponential.ok
    assert exponential.n_violations > 0 and exponential.violations

    print("✓ Potter examples")


def test_rescaled_kernel_limits():
    """n m'(n) / m(n) -> chi, constant kernels rescale to 1"""
    print("Testing rescaled kernel limits...")

    k = KernelSpec(L=3.0, delta=0.5)
    assert abs(kernel_rescaled_derivative(k, 1e6, 1.0) + 0.5) < 0.02 * 0.5
    assert abs(kernel_rescaled(KernelSpec(delta=1.0), 1e6, 2.0) - 0.5) < 1e-5

    flat = KernelSpec(L=2.0)
    x = np.array([0.0, 0.5, 3.0])
    assert np.all(kernel_rescaled(flat, 1000, x) == 1.0)
    assert np.all(kernel_derivative(flat, x) == 0.0)

    print("✓ Rescaled kernel limits")
