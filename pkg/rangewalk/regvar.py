"""
Scale functions, memory kernels and regular-variation utilities.

ScaleSuite bundles b(n), s(n), h(n), g(n), the regime normalisation S(n) and
the exponent chi for a walk. h(n), the Green function truncated at n, is
computed by exact convolution, torus quadrature or Monte Carlo depending on
a cost model.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple, TYPE_CHECKING

import numpy as np

from .errors import DomainError, ResourceBudgetError
from .walks import WalkSpec, char_fn, char_fn_defect, make_rng, sample_increments

if TYPE_CHECKING:
    from numpy.typing import NDArray

logger = logging.getLogger(__name__)

EXACT_MAX_N = 64
EXACT_MAX_D = 3
EXACT_CELL_BUDGET = 60_000_000       # summed box cells over all convolution steps
QUAD_NODES_PER_AXIS = 256
QUAD_MAX_D = 2
MC_MIN_REPLICAS = 1_000_000
MC_STEP_BUDGET = 200_000_000         # replicas * steps
G_BLOCK = 1 << 16


class Regime(str, Enum):
    """Fluctuation regimes by the ratio d/beta"""
    SUB = "SUB"    # d/beta < 1
    MID = "MID"    # 1 <= d/beta < 3/2
    SUP = "SUP"    # d/beta >= 3/2


def classify_regime(d: int, beta: float) -> Regime:
    ratio = d / beta
    if ratio < 1.0:
        return Regime.SUB
    if ratio < 1.5:
        return Regime.MID
    return Regime.SUP


def regime_chi(d: int, beta: float) -> float:
    """Hoelder / intersection exponent chi_{d,beta}"""
    regime = classify_regime(d, beta)
    if regime == Regime.SUB:
        return 1.0 / beta
    if regime == Regime.MID:
        return 2.0 - d / beta
    return 0.5


def energy_chi_bound(d: int, beta: float) -> float:
    """Kernel index chi must exceed this bound for the energy limit to exist"""
    regime = classify_regime(d, beta)
    if regime == Regime.SUP:
        return -0.5
    if regime == Regime.MID:
        return beta / d - 2.0
    return -1.0 / beta


# Truncated Green function

class GreenEstimate(NamedTuple):
    """h(n) with the method used and its standard error (0 when exact)"""
    value: float
    stderr: float
    method: str


def _exact_cost(points: 'NDArray', n: int) -> int:
    radius = int(np.max(np.abs(points))) if len(points) else 0
    d = points.shape[1]
    return sum((2 * k * radius + 1) ** d for k in range(1, n + 1))


def _green_exact(walk: WalkSpec, n: int) -> Tuple[float, List[float]]:
    """Iterated lattice convolution; returns h(n) and P(X_k = 0) for k = 1..n"""
    points, probs = walk.increment_pmf()
    keep = probs > 0
    points, probs = points[keep], probs[keep]
    radius = int(np.max(np.abs(points)))
    d = walk.d

    dist = np.ones((1,) * d)
    returns = []
    for k in range(1, n + 1):
        size = 2 * k * radius + 1
        new = np.zeros((size,) * d)
        prev = dist.shape[0]
        for point, p in zip(points, probs):
            start = [radius + int(c) for c in point]
            window = tuple(slice(s, s + prev) for s in start)
            new[window] += p * dist
        dist = new
        returns.append(float(dist[(k * radius,) * d]))
    return math.fsum(returns), returns


def torus_nodes(per_axis: int = QUAD_NODES_PER_AXIS, order: int = 4,
                levels_zero: int = 20) -> Tuple['NDArray', 'NDArray']:
    """
    Gauss-Legendre nodes and weights on (-pi, pi] with panels graded
    geometrically toward 0 and toward +-pi, `per_axis` nodes in total.
    """
    panels = per_axis // (2 * order)
    levels_pi = panels - levels_zero
    if levels_pi < 1:
        raise DomainError(f"{per_axis} nodes per axis leave no panels near pi")
    near_zero = math.pi * 0.5 ** np.arange(levels_zero, 0, -1)
    near_pi = math.pi - math.pi * 0.5 ** np.arange(2, levels_pi + 1)
    edges = np.concatenate([[0.0], near_zero, near_pi, [math.pi]])

    base, base_w = np.polynomial.legendre.leggauss(order)
    lo, hi = edges[:-1, None], edges[1:, None]
    x = (0.5 * (hi - lo) * base + 0.5 * (hi + lo)).ravel()
    w = (0.5 * (hi - lo) * base_w).ravel()
    return np.concatenate([-x[::-1], x]), np.concatenate([w[::-1], w])


class _TorusGrid:
    """phi and 1 - phi tabulated once on the tensor quadrature grid"""

    def __init__(self, walk: WalkSpec, per_axis: int = QUAD_NODES_PER_AXIS):
        if walk.d > QUAD_MAX_D:
            raise ResourceBudgetError(f"Torus quadrature needs {per_axis}^{walk.d} nodes; "
                                      f"capped at d <= {QUAD_MAX_D}")
        x, w = torus_nodes(per_axis)
        grids = np.meshgrid(*([x] * walk.d), indexing='ij')
        points = np.stack(grids, axis=-1)
        weights = w
        for _ in range(walk.d - 1):
            weights = np.multiply.outer(weights, w)
        self.weights = weights / (2.0 * math.pi) ** walk.d
        self.phi = char_fn(walk, points)
        self.defect = char_fn_defect(walk, points)

    def green(self, n: int) -> float:
        phi, defect = self.phi, self.defect
        if np.iscomplexobj(phi):
            tail = 1.0 - phi ** n
        else:
            # 1 - phi^n without cancellation when phi is close to 1
            near_one = np.minimum(defect, 0.5)
            tail = np.where(defect < 0.5, -np.expm1(n * np.log1p(-near_one)), 1.0 - phi ** n)
        with np.errstate(divide='ignore', invalid='ignore'):
            # sum_{k=1}^n phi^k = phi (1 - phi^n) / (1 - phi)
            geometric = phi * tail / defect
        geometric = np.where(np.abs(defect) < 1e-300, float(n), geometric)
        return float(np.sum(self.weights * np.real(geometric)))


def _green_monte_carlo(walk: WalkSpec, n: int, replicas: int, seed: int,
                       budget: int) -> GreenEstimate:
    if replicas * n > budget:
        raise ResourceBudgetError(f"Monte Carlo h({n}) with {replicas:,} replicas costs "
                                  f"{replicas * n:,} steps > budget {budget:,}")
    rng = make_rng(seed)
    batch = 100_000
    counts = []
    for start in range(0, replicas, batch):
        size = min(batch, replicas - start)
        pos = np.zeros((size, walk.d), dtype=np.int64)
        visits = np.zeros(size)
        for _ in range(n):
            pos += sample_increments(walk, rng, size)
            visits += np.all(pos == 0, axis=1)
        counts.append(visits)
    visits = np.concatenate(counts)
    return GreenEstimate(float(visits.mean()), float(visits.std(ddof=1) / math.sqrt(replicas)), "mc")


def estimate_green(walk: WalkSpec, n: int, method: str = "auto",
                   mc_replicas: int = MC_MIN_REPLICAS, mc_seed: int = 0,
                   step_budget: int = MC_STEP_BUDGET) -> GreenEstimate:
    """
    h(n) = sum_{k=1}^n P(X_k = 0) with the method chosen by cost.

    auto: exact convolution for n <= 64 and d <= 3 with finite support;
    tensor Gauss-Legendre over the torus for d <= 2; Monte Carlo otherwise.

    Raises:
        ResourceBudgetError: if the requested method exceeds its budget
    """
    if n < 1:
        raise DomainError(f"h(n) needs n >= 1, got {n}")

    if method == "auto":
        if (walk.finite_support and n <= EXACT_MAX_N and walk.d <= EXACT_MAX_D
                and _exact_cost(walk.increment_pmf()[0], n) <= EXACT_CELL_BUDGET):
            method = "exact"
        elif walk.d <= QUAD_MAX_D:
            method = "quadrature"
        else:
            method = "mc"
        logger.info("h(%d) for %s d=%d by %s", n, walk.law.value, walk.d, method)

    if method == "exact":
        if not walk.finite_support:
            raise ResourceBudgetError(f"{walk.law.value} has unbounded support; no exact h(n)")
        cost = _exact_cost(walk.increment_pmf()[0], n)
        if cost > EXACT_CELL_BUDGET:
            raise ResourceBudgetError(f"Exact h({n}) needs {cost:,} cells > {EXACT_CELL_BUDGET:,}")
        return GreenEstimate(_green_exact(walk, n)[0], 0.0, "exact")
    if method == "quadrature":
        return GreenEstimate(_TorusGrid(walk).green(n), 0.0, "quadrature")
    if method == "mc":
        return _green_monte_carlo(walk, n, mc_replicas, mc_seed, step_budget)
    raise DomainError(f"Unknown h(n) method: {method}")


def green_truncated(walk: WalkSpec, n: int, method: str = "auto") -> float:
    """Truncated Green function h(n) at the origin"""
    return estimate_green(walk, n, method).value


# Scale suite

class ScaleSuite:
    """
    Scale functions of a walk, valid on [1, n_max].

    b(n) = sigma_hat n^(1/beta), s(n) = b(n) / n^(1/beta),
    g(n) = sum_{k<=n} k^2 b(k)^(-2d), and S(n) the normalisation of the
    regime. h(n) is computed on first use and cached.
    """

    def __init__(self, walk: WalkSpec, n_max: int, regime: Optional[Regime] = None,
                 h_table: Optional[Dict[int, float]] = None,
                 h_method: str = "auto"):
        self.walk = walk
        self.d = walk.d
        self.beta = walk.beta
        self.sigma_hat = walk.sigma_hat
        self.n_max = n_max
        self.regime = Regime(regime) if regime is not None else classify_regime(self.d, self.beta)
        self.chi = regime_chi(self.d, self.beta)
        self.h_method = h_method
        self._h_cache: Dict[int, float] = dict(h_table or {})
        self._g_prefix: List[float] = [0.0]
        self._g_cache: Dict[int, float] = {}
        self._torus: Optional[_TorusGrid] = None

    def _check(self, n) -> None:
        if np.any(np.asarray(n) < 1):
            raise DomainError(f"Scale functions need n >= 1, got {n}")

    def b(self, n):
        self._check(n)
        return self.sigma_hat * np.asarray(n, dtype=float) ** (1.0 / self.beta)

    def s(self, n):
        self._check(n)
        return np.full(np.shape(n), self.sigma_hat) if np.ndim(n) else self.sigma_hat

    def h(self, n: int) -> float:
        n = int(n)
        self._check(n)
        if n not in self._h_cache:
            exact_ok = self.walk.finite_support and n <= EXACT_MAX_N
            if self.h_method == "auto" and self.d <= QUAD_MAX_D and not exact_ok:
                # the torus grid is tabulated once and reused across n
                if self._torus is None:
                    logger.info("Tabulating phi on the torus for %s d=%d", self.walk.law.value, self.d)
                    self._torus = _TorusGrid(self.walk)
                self._h_cache[n] = self._torus.green(n)
            else:
                self._h_cache[n] = green_truncated(self.walk, n, self.h_method)
        return self._h_cache[n]

    def _g_exponent(self) -> float:
        return 2.0 - 2.0 * self.d / self.beta

    def g(self, n: int) -> float:
        n = int(n)
        self._check(n)
        if n in self._g_cache:
            return self._g_cache[n]
        power = self._g_exponent()
        blocks = n // G_BLOCK
        while len(self._g_prefix) <= blocks:
            i = len(self._g_prefix) - 1
            k = np.arange(i * G_BLOCK + 1, (i + 1) * G_BLOCK + 1, dtype=float)
            self._g_prefix.append(math.fsum([self._g_prefix[-1], float(np.sum(k ** power))]))
        k = np.arange(blocks * G_BLOCK + 1, n + 1, dtype=float)
        total = math.fsum([self._g_prefix[blocks], float(np.sum(k ** power))])
        value = total * self.sigma_hat ** (-2.0 * self.d)
        self._g_cache[n] = value
        return value

    def S(self, n: int) -> float:
        """Normalisation of the centred range in this regime"""
        if self.regime == Regime.SUB:
            return float(1.0 / self.b(n))
        if self.regime == Regime.MID:
            return float(self.h(n) ** 2 * self.b(n) ** self.d / float(n) ** 2)
        return float((n * self.g(n)) ** -0.5)

    def intersection_scale(self, n: int) -> float:
        """h(n)^2 b(n)^d / n^2, the site-count normalisation of self-intersections"""
        return float(self.h(n) ** 2 * self.b(n) ** self.d / float(n) ** 2)

    def pair_scale(self, n: int) -> float:
        """b(n)^d / n^2, the normalisation of coincidence-pair counts"""
        return float(self.b(n) ** self.d / float(n) ** 2)

    def tabulate(self, ns: Sequence[int], with_h: bool = True) -> None:
        """Evaluate and cache g (and h) at the given n so they serialise"""
        for n in ns:
            self.g(n)
            if with_h:
                self.h(n)

    def to_dict(self) -> dict:
        return {
            'd': self.d, 'beta': self.beta, 'regime': self.regime.value, 'chi': self.chi,
            'sigma_hat': self.sigma_hat, 'n_max': self.n_max,
            'walk': self.walk.to_dict(),
            'h_table': {str(k): v for k, v in sorted(self._h_cache.items())},
            'g_table': {str(k): v for k, v in sorted(self._g_cache.items())},
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'ScaleSuite':
        walk = WalkSpec.from_dict(data['walk'])
        suite = cls(walk, int(data['n_max']), Regime(data['regime']),
                    h_table={int(k): float(v) for k, v in data.get('h_table', {}).items()})
        suite._g_cache.update({int(k): float(v) for k, v in data.get('g_table', {}).items()})
        return suite

    def __getstate__(self):
        state = self.__dict__.copy()
        state['_torus'] = None
        return state


def _one_signed(walk: WalkSpec) -> bool:
    if not walk.finite_support or walk.d != 1:
        return False
    points, probs = walk.increment_pmf()
    moves = points[probs > 0, 0]
    return bool(np.all(moves >= 0) or np.all(moves <= 0))


def make_scale_suite(d: int, beta: float, walk: WalkSpec, n_max: int,
                     regime: Optional[Regime] = None, h_method: str = "auto") -> ScaleSuite:
    """
    Build the scale functions of `walk` on [1, n_max].

    Raises:
        DomainError: for beta outside (0, 2], d < 1, n_max < 1, a walk that
            disagrees with (d, beta), or a d = 1 walk whose limit is a stable
            subordinator
    """
    if not 0.0 < beta <= 2.0:
        raise DomainError(f"Stability index must lie in (0, 2], got {beta}")
    if d < 1 or n_max < 1:
        raise DomainError(f"Need d >= 1 and n_max >= 1, got d={d}, n_max={n_max}")
    if walk.d != d or walk.beta != beta:
        raise DomainError(f"Walk has (d={walk.d}, beta={walk.beta}), requested ({d}, {beta})")
    if _one_signed(walk) and beta < 1.0:
        raise DomainError("One-signed increments with beta < 1 converge to a stable "
                          "subordinator, which is excluded")
    return ScaleSuite(walk, n_max, regime, h_method=h_method)


# Potter bounds and ratio tests

@dataclass
class PotterReport:
    """Smallest C_eps over all sampled pairs and the pairs needing more than c_max"""
    kappa: float
    eps: float
    c_eps: float
    n_pairs: int
    violations: List[Tuple[float, float, float]] = field(default_factory=list)
    n_violations: int = 0

    @property
    def ok(self) -> bool:
        return self.n_violations == 0


def potter_check(f_samples: Sequence[float], kappa: float, eps: float,
                 x: Optional[Sequence[float]] = None, c_max: float = 10.0,
                 max_listed: int = 20) -> PotterReport:
    """
    Potter bounds C^-1 min((x/y)^(k-e), (x/y)^(k+e)) <= f(x)/f(y)
    <= C max((x/y)^(k-e), (x/y)^(k+e)) over all pairs of samples.

    `x` are the (increasing) arguments, defaulting to 1..len(f). A pair whose
    own admissible constant exceeds c_max is reported as a violation.
    """
    if eps <= 0:
        raise DomainError(f"eps must be positive, got {eps}")
    f = np.asarray(f_samples, dtype=float)
    args = np.arange(1, len(f) + 1, dtype=float) if x is None else np.asarray(x, dtype=float)
    if np.any(f <= 0) or np.any(args <= 0):
        raise DomainError("Potter check needs positive samples and arguments")
    if np.any(np.diff(args) <= 0):
        raise DomainError("Arguments must be strictly increasing")

    log_f, log_x = np.log(f), np.log(args)
    i, j = np.triu_indices(len(f), k=1)          # y = args[i] < x = args[j]
    lr = log_f[j] - log_f[i]
    lx = log_x[j] - log_x[i]
    need = np.maximum(lr - (kappa + eps) * lx, (kappa - eps) * lx - lr)
    need = np.maximum(need, 0.0)

    c_eps = float(np.exp(need.max())) if len(need) else 1.0
    bad = np.nonzero(need > math.log(c_max))[0]
    listed = [(float(args[j[b]]), float(args[i[b]]), float(np.exp(need[b])))
              for b in bad[:max_listed]]
    return PotterReport(kappa, eps, c_eps, len(need), listed, len(bad))


def ratio_test(f: Callable[[float], float], n: float, kappa: float, c: float = 2.0) -> float:
    """f(c n) / f(n) / c^kappa; tends to 1 for f regularly varying of index kappa"""
    return float(f(c * n) / f(n) / c ** kappa)


# Memory kernels

@dataclass(frozen=True)
class KernelSpec:
    """
    Memory kernel m of regular-variation index chi.

    Parametric: m(t) = L / (1 + t)^delta, chi = -delta.
    Tabulated: values on a grid starting at 0, interpolated linearly and
    extended beyond the grid as a power law of index `chi`. L only scales the
    parametric family.
    """
    L: float = 1.0
    delta: float = 0.0
    t_table: Tuple[float, ...] = ()
    m_table: Tuple[float, ...] = ()
    chi: Optional[float] = None

    def __post_init__(self):
        if self.L <= 0:
            raise DomainError(f"Kernel amplitude must be positive, got {self.L}")
        if self.tabulated:
            self._validate_table()
        elif self.chi is not None and self.chi != -self.delta:
            raise DomainError(f"Parametric kernel has chi=-delta={-self.delta}, got {self.chi}")

    @property
    def tabulated(self) -> bool:
        return len(self.t_table) > 0

    @property
    def chi_m(self) -> float:
        return float(self.chi) if self.tabulated else -self.delta

    def _validate_table(self):
        t = np.asarray(self.t_table, dtype=float)
        m = np.asarray(self.m_table, dtype=float)
        if len(t) != len(m) or len(t) < 3:
            raise DomainError("Tabulated kernel needs matching grids of length >= 3")
        if t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise DomainError("Tabulated kernel grid must start at 0 and increase strictly")
        if np.any(m <= 0):
            raise DomainError("Tabulated kernel values must be strictly positive")
        if self.chi is None:
            raise DomainError("Tabulated kernel needs its declared index chi")
        slope = np.diff(m) / np.diff(t)
        ds = np.diff(slope)
        if not (np.all(ds >= -1e-12 * np.abs(slope[1:]).max()) or
                np.all(ds <= 1e-12 * np.abs(slope[1:]).max())):
            raise DomainError("Tabulated kernel derivative is not monotone")

    @classmethod
    def from_file(cls, filename: str, chi: float, L: float = 1.0) -> 'KernelSpec':
        """Two-column text file: t, m(t)"""
        data = np.loadtxt(filename, ndmin=2)
        return cls(L=L, t_table=tuple(data[:, 0]), m_table=tuple(data[:, 1]), chi=chi)

    def to_dict(self) -> dict:
        if self.tabulated:
            return {'L': self.L, 'chi': self.chi, 't_table': list(self.t_table),
                    'm_table': list(self.m_table)}
        return {'L': self.L, 'delta': self.delta}

    @classmethod
    def from_dict(cls, data: dict) -> 'KernelSpec':
        return cls(L=float(data.get('L', 1.0)), delta=float(data.get('delta', 0.0)),
                   t_table=tuple(data.get('t_table', ())), m_table=tuple(data.get('m_table', ())),
                   chi=data.get('chi'))

    @property
    def _cumulative(self) -> 'NDArray':
        t = np.asarray(self.t_table)
        m = np.asarray(self.m_table)
        return np.concatenate([[0.0], np.cumsum(0.5 * (m[1:] + m[:-1]) * np.diff(t))])


def _check_time(t) -> 'NDArray':
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError(f"Kernel time must be >= 0, got {t.min()}")
    return t


def kernel_eval(k: KernelSpec, t):
    """m(t)"""
    t = _check_time(t)
    if not k.tabulated:
        return k.L * (1.0 + t) ** (-k.delta)
    grid, values = np.asarray(k.t_table), np.asarray(k.m_table)
    inside = np.interp(t, grid, values)
    with np.errstate(divide='ignore', invalid='ignore'):
        outside = values[-1] * (t / grid[-1]) ** k.chi
    return np.where(t <= grid[-1], inside, outside)


def kernel_derivative(k: KernelSpec, t):
    """dm/dt; closed form for the parametric family, central differences otherwise"""
    t = _check_time(t)
    if not k.tabulated:
        return -k.delta * k.L * (1.0 + t) ** (-k.delta - 1.0)
    step = 1e-4
    lo = np.maximum(t - step, 0.0)
    hi = t + step
    return (kernel_eval(k, hi) - kernel_eval(k, lo)) / (hi - lo)


def kernel_antiderivative(k: KernelSpec, u):
    """M(u) = integral of m over [0, u]"""
    u = _check_time(u)
    if not k.tabulated:
        if k.delta == 0.0:
            return k.L * u
        if k.delta == 1.0:
            return k.L * np.log1p(u)
        return k.L * np.expm1((1.0 - k.delta) * np.log1p(u)) / (1.0 - k.delta)
    grid, values = np.asarray(k.t_table), np.asarray(k.m_table)
    cum = k._cumulative
    idx = np.clip(np.searchsorted(grid, u, side='right') - 1, 0, len(grid) - 2)
    left = grid[idx]
    slope = (values[idx + 1] - values[idx]) / (grid[idx + 1] - grid[idx])
    dx = np.minimum(u, grid[-1]) - left
    inside = cum[idx] + values[idx] * dx + 0.5 * slope * dx * dx
    # power-law extension beyond the grid
    T, mT, chi = grid[-1], values[-1], k.chi
    with np.errstate(divide='ignore', invalid='ignore'):
        if chi == -1.0:
            extra = mT * T * np.log(np.maximum(u, T) / T)
        else:
            extra = mT * T / (chi + 1.0) * ((np.maximum(u, T) / T) ** (chi + 1.0) - 1.0)
    return inside + np.where(u > T, extra, 0.0)


def kernel_rescaled(k: KernelSpec, n: float, x):
    """m_n(x) = m(n x) / m(n)"""
    if n < 1:
        raise DomainError(f"Rescaling needs n >= 1, got {n}")
    return kernel_eval(k, n * _check_time(x)) / kernel_eval(k, float(n))


def kernel_rescaled_derivative(k: KernelSpec, n: float, s):
    """d/ds m_n(s) = n m'(n s) / m(n)"""
    if n < 1:
        raise DomainError(f"Rescaling needs n >= 1, got {n}")
    return n * kernel_derivative(k, n * _check_time(s)) / kernel_eval(k, float(n))


def kernel_rescaled_antiderivative(k: KernelSpec, n: float, u):
    """integral of m_n over [0, u] = M(n u) / (n m(n))"""
    return kernel_antiderivative(k, n * _check_time(u)) / (n * kernel_eval(k, float(n)))


def kernel_sup(k: KernelSpec, t: float) -> float:
    """sup of m over [0, t]"""
    if not k.tabulated:
        return float(k.L if k.delta >= 0 else kernel_eval(k, t))
    grid = np.concatenate([[0.0], np.asarray(k.t_table)[np.asarray(k.t_table) <= t], [t]])
    return float(np.max(kernel_eval(k, grid)))
