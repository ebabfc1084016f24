"""
Statistical checks used by the acceptance suite.

KS tests (one-sample, two-sample and the Lilliefors variant for normals
with fitted moments), Hoelder exponent regression, sigma^2 estimation and
moment/envelope diagnostics.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union, TYPE_CHECKING

import numpy as np
from scipy import stats as sps
from statsmodels.stats.diagnostic import lilliefors

from .errors import DomainError, SampleSizeError, ScaleMismatchError
from .regvar import Regime
from .youngint import HolderPath

if TYPE_CHECKING:
    from numpy.typing import NDArray

logger = logging.getLogger(__name__)

MIN_KS_SAMPLES = 50
MIN_HOLDER_POINTS = 32
MIN_HOLDER_PATHS = 100


@dataclass
class StatReport:
    """Outcome of one statistical check"""
    name: str
    statistic: float
    p_value: Optional[float] = None
    bound: Optional[float] = None
    passed: bool = True
    sample_sizes: List[int] = field(default_factory=list)
    details: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.p_value is not None:
            if not 0.0 <= self.p_value <= 1.0:
                raise DomainError(f"p-value outside [0, 1]: {self.p_value}")
            self.p_value = float(self.p_value)
        self.statistic = float(self.statistic)
        self.passed = bool(self.passed)

    def to_dict(self) -> dict:
        return asdict(self)

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        text = f"[{status}] {self.name}: statistic={self.statistic:.4g}"
        if self.p_value is not None:
            text += f" p={self.p_value:.4g}"
        if self.bound is not None:
            text += f" bound={self.bound:.4g}"
        return text


Reference = Union[None, str, Callable, Sequence[float], 'NDArray']


def ks_test(samples: Sequence[float], reference: Reference = None, alpha: float = 0.01,
            name: str = "ks") -> StatReport:
    """
    Kolmogorov-Smirnov test of `samples` against `reference`.

    reference:
        None or "fitted-normal": normal law with moments estimated from the
            samples, with Lilliefors critical values
        array: second sample (two-sample test)
        callable or scipy distribution name: one-sample test against its CDF

    The report passes when the test does not reject at level alpha.

    Raises:
        SampleSizeError: for fewer than 50 samples
    """
    x = np.asarray(samples, dtype=float)
    if len(x) < MIN_KS_SAMPLES:
        raise SampleSizeError(f"KS test needs >= {MIN_KS_SAMPLES} samples, got {len(x)}")

    if reference is None or (isinstance(reference, str) and reference == "fitted-normal"):
        statistic, p = lilliefors(x, dist='norm', pvalmethod='table')
        sizes = [len(x)]
        kind = "lilliefors"
    elif callable(reference) or isinstance(reference, str):
        result = sps.kstest(x, reference, method='auto')
        statistic, p = result.statistic, result.pvalue
        sizes = [len(x)]
        kind = "one-sample"
    else:
        y = np.asarray(reference, dtype=float)
        if len(y) < MIN_KS_SAMPLES:
            raise SampleSizeError(f"KS test needs >= {MIN_KS_SAMPLES} reference samples, got {len(y)}")
        result = sps.ks_2samp(x, y, method='auto')
        statistic, p = result.statistic, result.pvalue
        sizes = [len(x), len(y)]
        kind = "two-sample"
    p = min(max(float(p), 0.0), 1.0)
    return StatReport(name, statistic, p, alpha, p > alpha, sizes, {'kind': kind})


# Hoelder exponent

class HolderEstimate(NamedTuple):
    alpha: float
    ci_low: float
    ci_high: float
    lags: 'NDArray'               # in time units
    mean_increments: 'NDArray'


def _path_matrix(paths: Sequence[HolderPath]) -> Tuple['NDArray', 'NDArray']:
    if len(paths) < MIN_HOLDER_PATHS:
        raise SampleSizeError(f"Hoelder estimation needs >= {MIN_HOLDER_PATHS} paths, got {len(paths)}")
    grid = paths[0].grid
    if len(grid) < MIN_HOLDER_POINTS:
        raise SampleSizeError(f"Grid too coarse: {len(grid)} < {MIN_HOLDER_POINTS} points")
    if any(len(p.grid) != len(grid) or not np.allclose(p.grid, grid) for p in paths):
        raise DomainError("Hoelder estimation needs a common grid")
    if not paths[0].uniform:
        raise DomainError("Hoelder estimation needs a uniform grid")
    return grid, np.stack([p.values for p in paths])


def _max_increments(values: 'NDArray', lags: Sequence[int], starts: 'NDArray') -> 'NDArray':
    # same window starts for every lag, so the extreme-value factor is shared
    return np.stack([np.max(np.abs(values[:, starts + k] - values[:, starts]), axis=1)
                     for k in lags], axis=1)


def _slope(log_lags: 'NDArray', increments: 'NDArray') -> float:
    mean = increments.mean(axis=0)
    if np.any(mean <= 0):
        raise DomainError("Paths are constant at some lag; no Hoelder exponent")
    return float(np.polyfit(log_lags, np.log(mean), 1)[0])


def holder_exponent(paths: Sequence[HolderPath], n_boot: int = 200, seed: int = 0,
                    level: float = 0.95) -> HolderEstimate:
    """
    Regression of log E[max increment at lag k] on log k over dyadic lags
    k = 1, 2, 4, ... up to N/8, with a bootstrap CI over paths.

    Raises:
        SampleSizeError: for fewer than 32 grid points or 100 paths
    """
    grid, values = _path_matrix(paths)
    N = len(grid) - 1
    k_max = 1 << int(math.floor(math.log2(N / 8)))
    lags = [1 << i for i in range(int(math.log2(k_max)) + 1)]
    starts = np.arange(0, N - k_max + 1, k_max)
    increments = _max_increments(values, lags, starts)

    dt = grid[1] - grid[0]
    log_lags = np.log(np.asarray(lags) * dt)
    alpha = _slope(log_lags, increments)

    rng = np.random.default_rng(seed)
    boots = [_slope(log_lags, increments[rng.integers(len(increments), size=len(increments))])
             for _ in range(n_boot)]
    tail = 100.0 * (1.0 - level) / 2.0
    low, high = np.percentile(boots, [tail, 100.0 - tail]) if boots else (alpha, alpha)
    return HolderEstimate(alpha, float(low), float(high), np.asarray(lags) * dt,
                          increments.mean(axis=0))


# sigma^2

class Sigma2Estimate(NamedTuple):
    value: float
    stderr: float
    ci_low: float
    ci_high: float
    samples: int


def _jackknife_variance(x: 'NDArray') -> Tuple[float, float]:
    m = len(x)
    s1, s2 = x.sum(), np.dot(x, x)
    loo_mean = (s1 - x) / (m - 1)
    loo_var = ((s2 - x * x) - (m - 1) * loo_mean ** 2) / (m - 2)
    value = float(x.var(ddof=1))
    se = float(math.sqrt((m - 1) / m * np.sum((loo_var - loo_var.mean()) ** 2)))
    return value, se


def estimate_sigma2(paths: Union[Sequence[HolderPath], Sequence[float]], regime: Regime,
                    t: float = 1.0, z: float = 1.96) -> Sigma2Estimate:
    """
    sigma^2 as the variance of rescaled SUP-regime ranges at time t (divided
    by t), with a jackknife confidence interval.

    Raises:
        ScaleMismatchError: if the ensemble is not from the SUP regime
    """
    if Regime(regime) != Regime.SUP:
        raise ScaleMismatchError(f"sigma^2 is defined for the SUP regime, got {Regime(regime).value}")
    if len(paths) and isinstance(paths[0], HolderPath):
        x = np.array([float(p(t)) for p in paths])
    else:
        x = np.asarray(paths, dtype=float)
    if len(x) < 3:
        raise SampleSizeError(f"Need at least 3 samples, got {len(x)}")
    value, se = _jackknife_variance(x)
    value, se = value / t, se / t
    return Sigma2Estimate(value, se, value - z * se, value + z * se, len(x))


def sigma2_stability(estimates: Mapping[int, Sigma2Estimate], tolerance: float = 0.10) -> StatReport:
    """Relative spread of sigma^2 estimates across horizons n"""
    values = np.array([e.value for e in estimates.values()])
    spread = float((values.max() - values.min()) / values.mean())
    return StatReport("sigma2-stability", spread, bound=tolerance, passed=spread <= tolerance,
                      sample_sizes=[e.samples for e in estimates.values()],
                      details={str(n): e.value for n, e in estimates.items()})


def covariance_check(paths: Sequence[HolderPath], sigma2: float,
                     times: Sequence[float] = (0.25, 0.5, 0.75, 1.0),
                     tolerance: float = 0.10) -> StatReport:
    """Largest relative deviation of Cov(path(s), path(t)) from sigma^2 min(s, t)"""
    x = np.array([[float(p(t)) for t in times] for p in paths])
    cov = np.cov(x, rowvar=False)
    target = sigma2 * np.minimum.outer(np.asarray(times), np.asarray(times))
    worst = float(np.max(np.abs(cov - target) / target))
    return StatReport("brownian-covariance", worst, bound=tolerance, passed=worst <= tolerance,
                      sample_sizes=[len(paths)])


# Moment and envelope diagnostics

@dataclass
class MomentReport:
    """
    Fitted constants in E[{I}^(2p)] <= (p!)^2 K (E I)^(2p) and the raw bound
    E[I^p] <= (p!)^2 (E I)^p with a 3-standard-error slack.
    """
    mean: float
    centered_constants: Dict[int, float]
    raw_ratios: Dict[int, float]
    raw_bound_ok: Dict[int, bool]

    @property
    def ok(self) -> bool:
        return all(self.raw_bound_ok.values())


def moment_ratio_report(samples: Sequence[float], powers: Sequence[int] = (2, 3)) -> MomentReport:
    x = np.asarray(samples, dtype=float)
    if len(x) < 2:
        raise SampleSizeError("Moment diagnostics need at least two samples")
    mean = float(x.mean())
    if mean <= 0:
        raise DomainError(f"Moment bounds need a positive mean, got {mean}")
    centered = x - mean
    consts, ratios, oks = {}, {}, {}
    for p in powers:
        fact2 = math.factorial(p) ** 2
        consts[p] = float(np.mean(centered ** (2 * p)) / (fact2 * mean ** (2 * p)))
        raw = x ** p
        se = float(raw.std(ddof=1) / math.sqrt(len(x)))
        ratios[p] = float(raw.mean() / (fact2 * mean ** p))
        oks[p] = bool(raw.mean() - 3.0 * se <= fact2 * mean ** p)
    return MomentReport(mean, consts, ratios, oks)


def envelope_constant(scaled_means: Mapping[Tuple[float, float], float], chi: float,
                      eta: float = 0.1) -> float:
    """Smallest C with value <= C (s ^ t)^(chi - eta) over the given (s, t)"""
    return max(v / min(s, t) ** (chi - eta) for (s, t), v in scaled_means.items())


def envelope_stability(constants: Mapping[int, float], factor: float = 2.0,
                       two_sided: bool = True) -> StatReport:
    """
    Spread of fitted envelope constants across horizons. One-sided: only
    growth relative to the smallest horizon counts.
    """
    ordered = [constants[n] for n in sorted(constants)]
    values = np.array(ordered)
    ratio = float(values.max() / values.min()) if two_sided else float(values.max() / values[0])
    return StatReport("envelope-stability", ratio, bound=factor, passed=ratio <= factor,
                      details={str(n): c for n, c in constants.items()})


def skewness_ci(samples: Sequence[float], n_boot: int = 1000, seed: int = 0,
                level: float = 0.95) -> Tuple[float, float, float]:
    """Sample skewness with a bootstrap percentile interval"""
    x = np.asarray(samples, dtype=float)
    rng = np.random.default_rng(seed)
    boots = sps.skew(x[rng.integers(len(x), size=(n_boot, len(x)))], axis=1)
    tail = 100.0 * (1.0 - level) / 2.0
    low, high = np.percentile(boots, [tail, 100.0 - tail])
    return float(sps.skew(x)), float(low), float(high)


def ratio_within(a: float, b: float, tolerance: float, name: str) -> StatReport:
    """|a / b - 1| <= tolerance"""
    stat = abs(a / b - 1.0)
    return StatReport(name, stat, bound=tolerance, passed=stat <= tolerance)
