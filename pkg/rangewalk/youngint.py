"""
Young integration against Hoelder paths sampled on a grid.

Paths are taken piecewise linear between grid points. For such paths the
left-point Riemann sums under uniform refinement have a closed form, so
dyadic refinement costs one pass over the grid per level and the returned
error is exact.
"""

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Callable, List, NamedTuple, Optional, Sequence, TYPE_CHECKING

import numpy as np
from scipy import integrate

from .errors import ConvergenceError, DomainError

if TYPE_CHECKING:
    from numpy.typing import NDArray

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
MAX_REFINE_LEVEL = 64


@dataclass
class HolderPath:
    """
    Real path on a time grid with a declared Hoelder exponent.

    Between grid points the path is linear.
    """
    grid: 'NDArray'
    values: 'NDArray'
    alpha: float = 1.0

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.grid.ndim != 1 or self.grid.shape != self.values.shape:
            raise DomainError(f"Grid {self.grid.shape} and values {self.values.shape} differ")
        if len(self.grid) < 2 or np.any(np.diff(self.grid) <= 0):
            raise DomainError("Grid needs at least two strictly increasing times")
        if not 0.0 < self.alpha <= 1.0:
            raise DomainError(f"Hoelder exponent must lie in (0, 1], got {self.alpha}")

    @classmethod
    def from_function(cls, f: Callable, T: float = 1.0, N: int = 1024,
                      alpha: float = 1.0) -> 'HolderPath':
        grid = np.linspace(0.0, T, N + 1)
        return cls(grid, f(grid), alpha)

    @property
    def start(self) -> float:
        return float(self.grid[0])

    @property
    def end(self) -> float:
        return float(self.grid[-1])

    @property
    def uniform(self) -> bool:
        steps = np.diff(self.grid)
        return bool(np.allclose(steps, steps[0], rtol=1e-9, atol=0.0))

    def __call__(self, t):
        return np.interp(t, self.grid, self.values)

    @property
    def C(self) -> float:
        """Empirical Hoelder constant sup |dg| / |dt|^alpha over grid pairs"""
        v, t = self.values, self.grid
        best = 0.0
        for lag in range(1, len(t)):
            dv = np.abs(v[lag:] - v[:-lag])
            dt = (t[lag:] - t[:-lag]) ** self.alpha
            best = max(best, float(np.max(dv / dt)))
        return best

    def refine(self) -> 'HolderPath':
        """Insert linear midpoints"""
        mid = 0.5 * (self.grid[1:] + self.grid[:-1])
        grid = np.empty(2 * len(self.grid) - 1)
        grid[0::2], grid[1::2] = self.grid, mid
        return HolderPath(grid, self(grid), self.alpha)

    def reversed(self) -> 'HolderPath':
        """t -> g(a + b - t) on the mirrored grid"""
        grid = self.start + self.end - self.grid[::-1]
        return HolderPath(grid, self.values[::-1].copy(), self.alpha)

    def on_grid(self, grid: 'NDArray') -> 'HolderPath':
        return HolderPath(grid, self(grid), self.alpha)


class YoungResult(NamedTuple):
    """Young integral with the last refinement delta as error estimate"""
    value: float
    error: float
    level: int          # each grid cell was split into 2^level parts


def _common_grid(f: HolderPath, g: HolderPath) -> 'NDArray':
    if not (math.isclose(f.start, g.start) and math.isclose(f.end, g.end)):
        raise DomainError(f"Paths live on different intervals: [{f.start}, {f.end}] "
                          f"vs [{g.start}, {g.end}]")
    if len(f.grid) == len(g.grid) and np.array_equal(f.grid, g.grid):
        return f.grid
    return np.union1d(f.grid, g.grid)


def _check_summable(f: HolderPath, g: HolderPath) -> None:
    if f.alpha + g.alpha <= 1.0:
        raise DomainError(f"Young integral needs alpha_f + alpha_g > 1, "
                          f"got {f.alpha} + {g.alpha}")


def young_integral(f: HolderPath, g: HolderPath, tol: float = DEFAULT_TOL,
                   richardson: bool = False,
                   max_level: int = MAX_REFINE_LEVEL) -> YoungResult:
    """
    Left-point Riemann-Stieltjes sums of f dg under dyadic refinement.

    Splitting each cell into M parts gives the trapezoid sum minus
    sum(df dg) / (2M), so successive levels differ by sum(df dg) / (4M) and
    that difference is also the remaining error. Refinement stops once it
    falls below tol * scale. With richardson=True the extrapolated value
    (the limit itself) is returned.

    The stopping level depends on the data, so the plain value is linear in
    f and in g only up to the reported errors: a combination of integrals
    matches the integral of the combination within the sum of their error
    fields, about tol * scale. The richardson value is the trapezoid sum
    and is bilinear to round-off.

    Raises:
        DomainError: if alpha_f + alpha_g <= 1 or the intervals differ
        ConvergenceError: if max_level is reached first
    """
    _check_summable(f, g)
    grid = _common_grid(f, g)
    fv, gv = f(grid), g(grid)
    df, dg = np.diff(fv), np.diff(gv)

    trapezoid = math.fsum((fv[:-1] + 0.5 * df) * dg)
    cross = math.fsum(df * dg)
    scale = max(1.0, math.fsum(np.abs(fv[:-1] * dg)))

    previous = trapezoid - cross / 2.0          # M = 1: the plain left sum
    for level in range(1, max_level + 1):
        M = 2.0 ** level
        current = trapezoid - cross / (2.0 * M)
        delta = abs(current - previous)
        if delta < tol * scale:
            if richardson:
                return YoungResult(2.0 * current - previous, 0.0, level)
            return YoungResult(current, delta, level)
        previous = current
    raise ConvergenceError(f"Young sums still moving by {delta:.3g} after {max_level} levels")


class CheckResult(NamedTuple):
    """Residual of an identity and the error bound it must stay under"""
    residual: float
    bound: float

    @property
    def ok(self) -> bool:
        return self.residual <= self.bound


def _bound(*results: YoungResult, scale: float = 1.0) -> float:
    # the last delta equals the remaining error, so allow rounding on top
    return sum(r.error for r in results) * (1.0 + 1e-9) + 1e-12 * scale


def ibp_residual(f: HolderPath, g: HolderPath, tol: float = DEFAULT_TOL) -> CheckResult:
    """
    Integration by parts:
    |int f dg + int g df - (f(b) g(b) - f(a) g(a))|.
    """
    fg = young_integral(f, g, tol)
    gf = young_integral(g, f, tol)
    boundary = f(g.end) * g(g.end) - f(g.start) * g(g.start)
    residual = abs(fg.value + gf.value - boundary)
    return CheckResult(float(residual), _bound(fg, gf, scale=max(1.0, abs(boundary))))


def time_inversion_check(f: HolderPath, g: HolderPath, tol: float = DEFAULT_TOL) -> CheckResult:
    """
    Time inversion: |int f(t) dg(t) + int f(b - t) dg_b(t)| with g_b(t) = g(b - t).
    """
    forward = young_integral(f, g, tol)
    backward = young_integral(f.reversed(), g.reversed(), tol)
    residual = abs(forward.value + backward.value)
    return CheckResult(float(residual), _bound(forward, backward,
                                               scale=max(1.0, abs(forward.value))))


# Singular kernel (t - s)^chi

def _singular_exact(grid: 'NDArray', values: 'NDArray', chi: float, t: float) -> 'NDArray':
    """
    t^chi (g(t) - g(0)) - chi * int_0^t (g(t) - g(t - s)) s^(chi - 1) ds
    for g linear between grid points; values may carry leading batch axes.
    """
    at_t = np.array([np.interp(t, grid, row) for row in values.reshape(-1, len(grid))])
    at_0 = values.reshape(-1, len(grid))[:, 0]
    rows = values.reshape(-1, len(grid))

    # s-breakpoints: s = t - u for grid nodes u in (0, t)
    inner = grid[(grid > grid[0]) & (grid < t)]
    s_nodes = np.concatenate([[0.0], (t - inner)[::-1], [t - grid[0]]])
    u_nodes = t - s_nodes
    g_nodes = np.stack([np.interp(u_nodes, grid, row) for row in rows])
    h = at_t[:, None] - g_nodes                        # h(s) = g(t) - g(t - s)

    s0, s1 = s_nodes[:-1], s_nodes[1:]
    h0, h1 = h[:, :-1], h[:, 1:]
    slope = (h1 - h0) / (s1 - s0)
    intercept = h0 - slope * s0
    with np.errstate(divide='ignore', invalid='ignore'):
        p0 = np.where(s0 > 0, s0 ** chi, 0.0)
        a_term = (s1 ** chi - p0) / chi
        b_term = (s1 ** (chi + 1.0) - s0 ** (chi + 1.0)) / (chi + 1.0)
    # h(0) = 0, so the first piece has no intercept and no s^chi singularity
    a_term[0] = 0.0
    intercept[:, 0] = 0.0
    integral = intercept @ a_term + slope @ b_term

    value = (t - grid[0]) ** chi * (at_t - at_0) - chi * integral
    return value.reshape(values.shape[:-1])


def _singular_quad(g: HolderPath, chi: float, t: float, tol: float) -> float:
    span = t - g.start
    power = g.alpha + chi
    g_t = float(g(t))

    def integrand(u):
        # s = u^(1/power): bounded since |g(t) - g(t - s)| <= C s^alpha
        if u <= 0.0:
            return 0.0
        s = u ** (1.0 / power)
        return (g_t - float(g(t - s))) * s ** (-g.alpha) / power

    kinks = np.sort((t - g.grid[(g.grid > g.start) & (g.grid < t)]) ** power)
    points = kinks[:: max(1, len(kinks) // 40)] if len(kinks) else None
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            integral, err = integrate.quad(integrand, 0.0, span ** power, limit=2000,
                                           epsabs=tol, epsrel=tol, points=points)
        except integrate.IntegrationWarning as e:
            raise ConvergenceError(f"Singular-kernel quadrature did not converge: {e}") from e
    return span ** chi * (g_t - float(g.values[0])) - chi * integral


def singular_kernel_integral(g: HolderPath, chi: float, t: float,
                             method: str = "exact", tol: float = 1e-10) -> float:
    """
    int_0^t (t - s)^chi dg(s) = t^chi (g(t) - g(0))
                                - chi int_0^t (g(t) - g(t - s)) s^(chi - 1) ds.

    method="exact" integrates the piecewise-linear path segment by segment;
    method="quad" uses adaptive quadrature after substituting u = s^(alpha + chi).

    Raises:
        DomainError: if chi <= -g.alpha or t is outside the grid span
        ConvergenceError: if the quadrature fails
    """
    if chi <= -g.alpha:
        raise DomainError(f"Singular kernel needs chi > -alpha = {-g.alpha}, got {chi}")
    if not g.start <= t <= g.end * (1 + 1e-12):
        raise DomainError(f"t={t} outside the path span [{g.start}, {g.end}]")
    t = min(t, g.end)
    if t == g.start:
        return 0.0
    if chi == 0.0:
        return float(g(t) - g.values[0])
    if method == "exact":
        return float(_singular_exact(g.grid, g.values, chi, t))
    if method == "quad":
        return _singular_quad(g, chi, t, tol)
    raise DomainError(f"Unknown singular-kernel method: {method}")


def singular_kernel_batch(paths: Sequence[HolderPath], chi: float, t: float) -> 'NDArray':
    """singular_kernel_integral over paths sharing one grid"""
    if not paths:
        return np.zeros(0)
    first = paths[0]
    if any(len(p.grid) != len(first.grid) or not np.array_equal(p.grid, first.grid) for p in paths):
        raise DomainError("Batched singular integrals need a common grid")
    alpha = min(p.alpha for p in paths)
    if chi <= -alpha:
        raise DomainError(f"Singular kernel needs chi > -alpha = {-alpha}, got {chi}")
    if t == first.start:
        return np.zeros(len(paths))
    values = np.stack([p.values for p in paths])
    if chi == 0.0:
        return np.array([p(t) for p in paths]) - values[:, 0]
    return _singular_exact(first.grid, values, chi, t)


def singular_kernel_cutoff(g: HolderPath, chi: float, t: float, eps: float) -> float:
    """int_0^(t - eps) (t - s)^chi dg(s), exact for the piecewise-linear path"""
    if not 0.0 < eps <= t - g.start:
        raise DomainError(f"Cutoff eps must lie in (0, {t - g.start}], got {eps}")
    stop = t - eps
    nodes = np.concatenate([g.grid[g.grid < stop], [stop]])
    vals = g(nodes)
    slope = np.diff(vals) / np.diff(nodes)
    a, b = nodes[:-1], nodes[1:]
    if chi == -1.0:
        weights = np.log((t - a) / (t - b))
    else:
        weights = ((t - a) ** (chi + 1.0) - (t - b) ** (chi + 1.0)) / (chi + 1.0)
    return float(math.fsum(slope * weights))


@dataclass
class CutoffReport:
    """Distance between the singular integral and its eps-cutoffs"""
    eps: List[float]
    differences: List[float]
    constants: List[float]          # difference / eps^(alpha + chi)

    @property
    def fitted_constant(self) -> float:
        return max(self.constants) if self.constants else 0.0

    def stable(self, factor: float = 2.0) -> bool:
        nonzero = [c for c in self.constants if c > 0]
        return not nonzero or max(nonzero) <= factor * max(min(nonzero), 1e-300)


def cutoff_check(g: HolderPath, chi: float, t: float,
                 eps_values: Optional[Sequence[float]] = None) -> CutoffReport:
    """
    Compare the singular integral with int_0^(t - eps) for eps = 2^-6..2^-14;
    the difference is of order eps^(alpha + chi).
    """
    if eps_values is None:
        eps_values = [2.0 ** -k for k in range(6, 15)]
    full = singular_kernel_integral(g, chi, t)
    diffs, consts = [], []
    for eps in eps_values:
        diff = abs(full - singular_kernel_cutoff(g, chi, t, eps))
        diffs.append(diff)
        consts.append(diff / eps ** (g.alpha + chi))
    return CutoffReport(list(eps_values), diffs, consts)
