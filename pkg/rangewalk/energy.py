"""
Energy functionals of the range and their limits.

E_t sums the memory kernel over discovery times; the interpolated energy
integrates it against the piecewise-linear range:

    E_t   = sum_{tau <= t} m(t - tau)
    Ecal_t = int_0^t m(t - s) dR(s) = sum_{tau - 1 < t} M(t - tau + 1) - M(max(t - tau, 0))

with M the antiderivative of m.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, TYPE_CHECKING

import numpy as np
from scipy import integrate

from .errors import DomainError, SampleSizeError
from .rangekit import RangeProcess, as_holder_paths, declared_alpha, rescale_values
from .regvar import (KernelSpec, Regime, ScaleSuite, energy_chi_bound, kernel_antiderivative,
                     kernel_eval, kernel_rescaled, kernel_rescaled_antiderivative, kernel_sup)
from .walks import make_rng
from .youngint import HolderPath, singular_kernel_batch

if TYPE_CHECKING:
    from numpy.typing import NDArray

logger = logging.getLogger(__name__)


def _check_horizon(rp: RangeProcess, t) -> 'NDArray':
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t > rp.n):
        raise DomainError(f"Energy time outside [0, {rp.n}]: {t}")
    return t


def energy_discrete(rp: RangeProcess, k: KernelSpec, t):
    """E_t = sum of m(t - tau) over discovery times tau <= t"""
    t_arr = _check_horizon(rp, t)
    tau = rp.tau.astype(float)
    flat = np.atleast_1d(t_arr)
    values = np.array([math.fsum(kernel_eval(k, ti - tau[tau <= ti])) for ti in flat])
    return float(values[0]) if np.ndim(t) == 0 else values.reshape(t_arr.shape)


def energy_interpolated(rp: RangeProcess, k: KernelSpec, t):
    """Ecal_t, the Stieltjes integral of m(t - .) against the interpolated range"""
    t_arr = _check_horizon(rp, t)
    tau = rp.tau.astype(float)
    flat = np.atleast_1d(t_arr)
    values = []
    for ti in flat:
        active = tau[tau - 1.0 < ti]
        upper = kernel_antiderivative(k, ti - active + 1.0)
        lower = kernel_antiderivative(k, np.maximum(ti - active, 0.0))
        values.append(math.fsum(upper - lower))
    values = np.asarray(values)
    return float(values[0]) if np.ndim(t) == 0 else values.reshape(t_arr.shape)


@dataclass
class EnergySample:
    """Discrete and interpolated energy of one replica on a time grid"""
    E: 'NDArray'
    Ecal: 'NDArray'
    t_grid: 'NDArray'
    kernel: KernelSpec
    n: Optional[int] = None

    @property
    def max_gap(self) -> float:
        return float(np.max(np.abs(self.Ecal - self.E)))

    @property
    def gap_bound(self) -> float:
        """sup of m on [0, max t]"""
        return kernel_sup(self.kernel, float(np.max(self.t_grid)))


def energy_sample(rp: RangeProcess, k: KernelSpec, times: Sequence[float],
                  n: Optional[int] = None) -> EnergySample:
    times = np.asarray(times, dtype=float)
    return EnergySample(energy_discrete(rp, k, times), energy_interpolated(rp, k, times),
                        times, k, n)


def check_energy_chi(suite: ScaleSuite, k: KernelSpec) -> None:
    """
    Raises:
        DomainError: if the kernel index is not above the regime's bound
    """
    bound = energy_chi_bound(suite.d, suite.beta)
    if not k.chi_m > bound:
        raise DomainError(f"Kernel index chi={k.chi_m} not admissible in regime "
                          f"{suite.regime.value}: need chi > {bound:.6g}")


def energy_alpha(suite: ScaleSuite, k: KernelSpec) -> float:
    """Declared Hoelder exponent of rescaled energy paths"""
    return declared_alpha(min(suite.chi, suite.chi + k.chi_m))


def rescaled_energy(ensemble: Sequence[RangeProcess], suite: ScaleSuite, k: KernelSpec,
                    t_grid: Sequence[float], n: Optional[int] = None) -> List[HolderPath]:
    """
    S(n) / m(n) (Ecal(nt) - mean Ecal(nt)) on t_grid for every replica; in
    the SUB regime the paths are Ecal(nt) / (m(n) b(n)) without centring.

    Raises:
        DomainError: if the kernel index is not admissible for the regime
        SampleSizeError: if centring gets fewer than 100 replicas
    """
    check_energy_chi(suite, k)
    if len(ensemble) == 0:
        raise SampleSizeError("Empty ensemble")
    n = ensemble[0].n if n is None else n
    t_grid = np.asarray(t_grid, dtype=float)
    values = np.stack([energy_interpolated(rp, k, n * t_grid) for rp in ensemble])
    scale = suite.S(n) / float(kernel_eval(k, float(n)))
    rescaled = rescale_values(values, scale, suite.regime != Regime.SUB)
    return as_holder_paths(rescaled, t_grid, energy_alpha(suite, k))


def fine_range_paths(ensemble: Sequence[RangeProcess], suite: ScaleSuite, T: float,
                     n: Optional[int] = None) -> List[HolderPath]:
    """Rescaled (centred unless SUB) range paths on the grid {j / n : j <= nT}"""
    n = ensemble[0].n if n is None else n
    steps = int(math.floor(n * T))
    grid = np.arange(steps + 1) / n
    values = np.stack([rp.R[:steps + 1] for rp in ensemble]).astype(float)
    rescaled = rescale_values(values, suite.S(n), suite.regime != Regime.SUB)
    return as_holder_paths(rescaled, grid, declared_alpha(suite.chi))


def energy_from_path(path: HolderPath, k: KernelSpec, n: float, t: float) -> float:
    """
    m_n(t) (p(t) - p(0)) - int_0^t (p(t) - p(t - u)) d/du m_n(u) du

    for the piecewise-linear path p, integrated exactly segment by segment.
    On rescaled range paths this equals the rescaled energy at t.
    """
    if not path.start <= t <= path.end * (1 + 1e-12):
        raise DomainError(f"t={t} outside the path span [{path.start}, {path.end}]")
    t = min(t, path.end)
    if t == path.start:
        return 0.0
    grid = path.grid
    inner = grid[(grid > path.start) & (grid < t)]
    u = np.concatenate([[0.0], (t - inner)[::-1], [t - path.start]])
    h = float(path(t)) - path(t - u)
    slope = np.diff(h) / np.diff(u)
    intercept = h[:-1] - slope * u[:-1]

    m = kernel_rescaled(k, n, u)
    Mn = kernel_rescaled_antiderivative(k, n, u)
    um = u * m
    integral = math.fsum(intercept * np.diff(m) + slope * (np.diff(um) - np.diff(Mn)))
    m_t = float(kernel_rescaled(k, n, t - path.start))
    return m_t * (float(path(t)) - float(path.values[0])) - integral


# Limits

def _kernel_covariance(a: float, b: float, chi: float) -> float:
    """int_0^a (a - s)^chi (b - s)^chi ds for a <= b"""
    if a <= 0.0:
        return 0.0
    if math.isclose(a, b):
        return a ** (2.0 * chi + 1.0) / (2.0 * chi + 1.0)
    value, _ = integrate.quad(lambda s: (b - s) ** chi, 0.0, a, weight='alg', wvar=(0.0, chi))
    return value


def gaussian_limit_covariance(t_grid: Sequence[float], chi: float, sigma2: float = 1.0) -> 'NDArray':
    """Covariance of sigma int_0^t (t - s)^chi dW_s on the grid"""
    times = np.asarray(t_grid, dtype=float)
    cov = np.zeros((len(times), len(times)))
    for i, a in enumerate(times):
        for j in range(i, len(times)):
            lo, hi = min(a, times[j]), max(a, times[j])
            cov[i, j] = cov[j, i] = sigma2 * _kernel_covariance(lo, hi, chi)
    return cov


def _matrix_root(cov: 'NDArray') -> 'NDArray':
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(cov)
        return v * np.sqrt(np.clip(w, 0.0, None))


def limit_energy_sampler(regime: Regime, chi: float, t_grid: Sequence[float], seed: int,
                         n_samples: int = 10_000, sigma2: float = 1.0,
                         limit_paths: Optional[Sequence[HolderPath]] = None) -> 'NDArray':
    """
    Samples of the limiting energy on t_grid, shape (samples, len(t_grid)).

    SUP: the Gaussian process sigma int_0^t (t - s)^chi dW_s, drawn exactly
    from its covariance. MID: -int_0^t (t - s)^chi dgamma_s over the supplied
    gamma paths. SUB: int_0^t (t - s)^chi dL_s over the supplied L paths.

    Raises:
        DomainError: if chi is not admissible or MID/SUB get no paths
    """
    regime = Regime(regime)
    times = np.asarray(t_grid, dtype=float)
    if regime == Regime.SUP:
        if not chi > -0.5:
            raise DomainError(f"Gaussian energy limit needs chi > -1/2, got {chi}")
        positive = times > 0
        root = _matrix_root(gaussian_limit_covariance(times[positive], chi, sigma2))
        rng = make_rng(seed)
        samples = np.zeros((n_samples, len(times)))
        samples[:, positive] = rng.standard_normal((n_samples, int(positive.sum()))) @ root.T
        return samples

    if not limit_paths:
        raise DomainError(f"Regime {regime.value} needs supplied limit paths")
    sign = -1.0 if regime == Regime.MID else 1.0
    columns = [sign * singular_kernel_batch(limit_paths, chi, float(t)) for t in times]
    return np.stack(columns, axis=1)
