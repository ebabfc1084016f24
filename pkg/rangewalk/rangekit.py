"""
Range processes, intersections and block decompositions of lattice paths.

Sites are packed into int64 keys so that sets of visited sites become
sorted integer arrays. Interval ranges X(a, b) include both endpoints.
"""

import logging
import math
from dataclasses import dataclass
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union, TYPE_CHECKING

import numpy as np

from .errors import DomainError, ResourceBudgetError, SampleSizeError
from .regvar import Regime, ScaleSuite
from .walks import PathSample, WalkSpec, stream_path
from .youngint import HolderPath

if TYPE_CHECKING:
    from numpy.typing import NDArray

logger = logging.getLogger(__name__)

PACK_BITS_SMALL_D = 21        # bits per axis for d <= 3
MIN_CENTERING_REPLICAS = 100
ALPHA_MARGIN = 0.02

PathLike = Union[PathSample, 'NDArray', Sequence]


def as_positions(path: PathLike) -> 'NDArray':
    """Positions as an int64 array of shape (n+1, d)"""
    if isinstance(path, PathSample):
        return path.positions
    positions = np.asarray(path, dtype=np.int64)
    if positions.ndim == 1:
        positions = positions[:, None]
    if positions.ndim != 2 or len(positions) == 0:
        raise DomainError(f"Path must be a nonempty (n+1, d) array, got shape {positions.shape}")
    return positions


def pack_sites(positions: 'NDArray') -> 'NDArray':
    """
    Pack lattice points of shape (k, d) into int64 keys.

    d = 1 uses the coordinate itself, d <= 3 uses 21 bits per axis and larger
    d uses 63 // d bits per axis.

    Raises:
        ResourceBudgetError: if a coordinate leaves the packable box
    """
    positions = np.asarray(positions, dtype=np.int64)
    d = positions.shape[1]
    if d == 1:
        return positions[:, 0].copy()
    bits = PACK_BITS_SMALL_D if d <= 3 else 63 // d
    half = 1 << (bits - 1)
    if len(positions) and (positions.min() < -half or positions.max() >= half):
        raise ResourceBudgetError(f"Path leaves the packing box |x| < 2^{bits - 1} "
                                  f"({bits} bits per axis, d={d})")
    keys = np.zeros(len(positions), dtype=np.int64)
    for axis in range(d):
        keys = (keys << bits) | (positions[:, axis] + half)
    return keys


def _site_ids(positions: 'NDArray') -> Tuple['NDArray', 'NDArray']:
    """Per-time site index and the first visit time of each site"""
    _, first, ids = np.unique(pack_sites(positions), return_index=True, return_inverse=True)
    return ids.ravel(), first


# Range process

@dataclass
class RangeProcess:
    """
    R_k = |X(0, k)| for k = 0..n.

    tau holds the times at which R increases, that is the discovery times of
    levels 2, 3, ..., R_n; level 1 is the starting site.
    """
    R: 'NDArray'
    tau: 'NDArray'

    @property
    def n(self) -> int:
        return len(self.R) - 1

    @classmethod
    def from_first_visits(cls, first: 'NDArray', n: int) -> 'RangeProcess':
        fresh = np.zeros(n + 1, dtype=np.int64)
        fresh[first] = 1
        return cls(np.cumsum(fresh), np.sort(first[first > 0]).astype(np.int64))


def range_process(path: PathLike) -> RangeProcess:
    """Range process of a stored path"""
    positions = as_positions(path)
    _, first = _site_ids(positions)
    return RangeProcess.from_first_visits(first, len(positions) - 1)


class SiteCounter:
    """
    Set of visited sites, fed chunk by chunk.

    Sites are kept as sorted runs of packed keys. A new run is merged into
    the last one until each run is more than twice the next, so there are at
    most log2(R) + 1 runs.
    """

    def __init__(self):
        self.runs: List['NDArray'] = []

    def _seen(self, keys: 'NDArray') -> 'NDArray':
        seen = np.zeros(len(keys), dtype=bool)
        for run in self.runs:
            at = np.minimum(np.searchsorted(run, keys), len(run) - 1)
            seen |= run[at] == keys
        return seen

    def update(self, chunk: 'NDArray') -> 'NDArray':
        """Add a chunk of positions; returns the 0/1 discovery flags"""
        keys, first = np.unique(pack_sites(chunk), return_index=True)
        new = ~self._seen(keys)
        fresh = np.zeros(len(chunk), dtype=np.int64)
        fresh[first[new]] = 1
        run = keys[new]
        while self.runs and len(self.runs[-1]) <= 2 * len(run):
            run = np.union1d(self.runs.pop(), run)
        if len(run):
            self.runs.append(run)
        return fresh

    def __len__(self) -> int:
        return sum(len(run) for run in self.runs)


def streaming_range(spec: WalkSpec, n: int, seed: int,
                    record: Optional[Sequence[int]] = None) -> Tuple[int, 'NDArray']:
    """
    R_n of sample_path(spec, n, seed) without storing the path.

    Returns R_n and R at the times in `record` (sorted, within [0, n]).
    """
    record = np.asarray(sorted(record) if record is not None else [], dtype=np.int64)
    if len(record) and (record[0] < 0 or record[-1] > n):
        raise DomainError(f"Record times must lie in [0, {n}]")
    counter = SiteCounter()
    values = np.zeros(len(record), dtype=np.int64)
    offset, total = 0, 0
    for chunk in stream_path(spec, n, seed):
        cumulative = total + np.cumsum(counter.update(chunk))
        inside = (record >= offset) & (record < offset + len(chunk))
        values[inside] = cumulative[record[inside] - offset]
        total = int(cumulative[-1])
        offset += len(chunk)
    return total, values


def interpolate(rp: RangeProcess, t):
    """
    Linearly interpolated range at real times t in [0, n].

    Raises:
        DomainError: if some t lies outside [0, n]
    """
    t_arr = np.asarray(t, dtype=float)
    n = rp.n
    if np.any(t_arr < 0) or np.any(t_arr > n):
        raise DomainError(f"Interpolation time outside [0, {n}]: {t}")
    if n == 0:
        values = np.full(t_arr.shape, float(rp.R[0]))
    else:
        k = np.minimum(np.floor(t_arr).astype(np.int64), n - 1)
        values = rp.R[k] + (rp.R[k + 1] - rp.R[k]) * (t_arr - k)
    return float(values) if np.ndim(t) == 0 else values


def subrange(path: PathLike, a: int, b: int) -> int:
    """|X(a, b)|; 0 when a > b"""
    positions = as_positions(path)
    n = len(positions) - 1
    if a > b:
        return 0
    if a < 0 or b > n:
        raise DomainError(f"Interval [{a}, {b}] outside [0, {n}]")
    return int(len(np.unique(pack_sites(positions[a:b + 1]))))


# Decomposition

class RangeDecomposition(NamedTuple):
    """Both sides of R_n = sum(block ranges) - sum(intersections with the past)"""
    lhs: int
    block_ranges: List[int]
    past_intersections: List[int]     # entry k - 2 for block k >= 2

    @property
    def rhs(self) -> int:
        return sum(self.block_ranges) - sum(self.past_intersections)

    @property
    def exact(self) -> bool:
        return self.lhs == self.rhs


def block_edges(n: int, p: int) -> List[int]:
    """floor(k n / p) for k = 0..p"""
    return [k * n // p for k in range(p + 1)]


def decompose_range(path: PathLike, n: int, p: int, closed: bool = False) -> RangeDecomposition:
    """
    Split {0..n} into p blocks and return both sides of the range identity.

    Block k covers the times (floor((k-1)n/p), floor(kn/p)], block 1 also
    time 0. With closed=True block k covers the closed interval and shares
    its first site with the past.
    """
    positions = as_positions(path)
    if p < 1:
        raise DomainError(f"Need p >= 1 blocks, got {p}")
    if not 0 <= n < len(positions):
        raise DomainError(f"Horizon {n} outside the path of {len(positions) - 1} steps")
    ids, first = _site_ids(positions[:n + 1])
    edges = block_edges(n, p)

    blocks, past = [], []
    for k in range(1, p + 1):
        lo, hi = edges[k - 1], edges[k]
        start = lo if (closed or k == 1) else lo + 1
        sites = np.unique(ids[start:hi + 1])
        blocks.append(int(len(sites)))
        if k >= 2:
            past.append(int(np.count_nonzero(first[sites] <= lo)))
    return RangeDecomposition(int(len(first)), blocks, past)


# Intersections of two walks

def _prefix_sites(positions: 'NDArray', stop: int) -> Tuple['NDArray', 'NDArray']:
    return np.unique(pack_sites(positions[:stop + 1]), return_counts=True)


def _check_horizon(positions: 'NDArray', n: int, name: str) -> None:
    if not 0 <= n < len(positions):
        raise DomainError(f"{name}={n} outside [0, {len(positions) - 1}]")


def intersect_count(pathA: PathLike, pathB: PathLike, n: int, m: int,
                    empty_is_zero: bool = True) -> int:
    """
    I_{n,m} = |X(0, n) and X'(0, m)| as distinct common sites.

    With empty_is_zero, I_{n,0} = I_{0,m} = 0.
    """
    a, b = as_positions(pathA), as_positions(pathB)
    _check_horizon(a, n, "n")
    _check_horizon(b, m, "m")
    if empty_is_zero and (n == 0 or m == 0):
        return 0
    return int(len(np.intersect1d(pack_sites(a[:n + 1]), pack_sites(b[:m + 1]),
                                  assume_unique=False)))


def pair_count(pathA: PathLike, pathB: PathLike, n: int, m: int,
               empty_is_zero: bool = True) -> int:
    """J_{n,m} = #{(i, j): i <= n, j <= m, X_i = X'_j} = sum_y occ_A(y) occ_B(y)"""
    a, b = as_positions(pathA), as_positions(pathB)
    _check_horizon(a, n, "n")
    _check_horizon(b, m, "m")
    if empty_is_zero and (n == 0 or m == 0):
        return 0
    sites_a, occ_a = _prefix_sites(a, n)
    sites_b, occ_b = _prefix_sites(b, m)
    _, ia, ib = np.intersect1d(sites_a, sites_b, assume_unique=True, return_indices=True)
    return int(np.dot(occ_a[ia], occ_b[ib]))


@dataclass
class IntersectionStats:
    """I_{n,m} and J_{n,m} of two walks on a grid of horizons"""
    n_grid: 'NDArray'
    m_grid: 'NDArray'
    I: 'NDArray'
    J: 'NDArray'

    def at(self, n: int, m: int) -> Tuple[int, int]:
        i = int(np.searchsorted(self.n_grid, n))
        j = int(np.searchsorted(self.m_grid, m))
        if i >= len(self.n_grid) or self.n_grid[i] != n or j >= len(self.m_grid) or self.m_grid[j] != m:
            raise KeyError(f"({n}, {m}) not on the tabulated grid")
        return int(self.I[i, j]), int(self.J[i, j])


def intersection_stats(pathA: PathLike, pathB: PathLike, n_grid: Sequence[int],
                       m_grid: Sequence[int], empty_is_zero: bool = True) -> IntersectionStats:
    """Tabulate I and J for all horizons in n_grid x m_grid"""
    a, b = as_positions(pathA), as_positions(pathB)
    n_grid = np.asarray(sorted(n_grid), dtype=np.int64)
    m_grid = np.asarray(sorted(m_grid), dtype=np.int64)
    _check_horizon(a, int(n_grid[-1]), "n")
    _check_horizon(b, int(m_grid[-1]), "m")
    N, M = int(n_grid[-1]), int(m_grid[-1])

    keys = np.concatenate([pack_sites(a[:N + 1]), pack_sites(b[:M + 1])])
    _, ids = np.unique(keys, return_inverse=True)
    ids = ids.ravel()
    ids_a, ids_b = ids[:N + 1], ids[N + 1:]
    size = int(ids.max()) + 1

    occ_a = np.stack([np.bincount(ids_a[:n + 1], minlength=size) for n in n_grid])
    occ_b = np.stack([np.bincount(ids_b[:m + 1], minlength=size) for m in m_grid])
    J = occ_a @ occ_b.T
    I = (occ_a > 0).astype(np.int64) @ (occ_b > 0).astype(np.int64).T
    if empty_is_zero:
        I[n_grid == 0, :] = 0
        I[:, m_grid == 0] = 0
        J[n_grid == 0, :] = 0
        J[:, m_grid == 0] = 0
    return IntersectionStats(n_grid, m_grid, I, J)


# Block quantities

def _interval_sites(ids: 'NDArray', a: int, b: int) -> 'NDArray':
    return np.unique(ids[a:b + 1])


@dataclass
class BlockQuantities:
    """
    Block ranges R^(i,j), adjacent-block self-intersections I^(i,j) and
    cross intersections I^(i,j,k) with the continuation after time n.
    """
    n: int
    j: int
    ranges: List[int]                  # R^(i,j), i = 1..j
    self_intersections: List[int]      # I^(i,j), i = 1..j // 2
    m: int = 0
    k: int = 0
    cross: Optional['NDArray'] = None  # cross[i-1, j-1] = I^(i,j,k)


def block_quantities(path: PathLike, n: int, j: int, m: int = 0,
                     k: Optional[int] = None) -> BlockQuantities:
    """
    Block quantities of one path, with interval ends floored:

    R^(i,j) = |X((i-1)n/j, in/j)|,
    I^(i,j) = |X((2i-2)n/j, (2i-1)n/j) and X((2i-1)n/j, 2in/j)|,
    I^(i,j',k) = |X((i-1)n/k, in/k) and X(n + (j'-1)m/k, n + j'm/k)|,

    the last one only when m > 0 and k is given; the path must then have at
    least n + m steps.
    """
    positions = as_positions(path)
    if j < 1 or (k is not None and k < 1):
        raise DomainError(f"Block counts must be >= 1, got j={j}, k={k}")
    horizon = n + (m if k else 0)
    _check_horizon(positions, horizon, "n + m")
    ids, _ = _site_ids(positions[:horizon + 1])

    edges = block_edges(n, j)
    ranges = [int(len(_interval_sites(ids, edges[i - 1], edges[i]))) for i in range(1, j + 1)]

    selfs = []
    for i in range(1, j // 2 + 1):
        left = _interval_sites(ids, edges[2 * i - 2], edges[2 * i - 1])
        right = _interval_sites(ids, edges[2 * i - 1], edges[2 * i])
        selfs.append(int(len(np.intersect1d(left, right, assume_unique=True))))

    cross = None
    if k and m > 0:
        first_edges = block_edges(n, k)
        second_edges = [n + e for e in block_edges(m, k)]
        first = [_interval_sites(ids, first_edges[i - 1], first_edges[i]) for i in range(1, k + 1)]
        second = [_interval_sites(ids, second_edges[i - 1], second_edges[i]) for i in range(1, k + 1)]
        cross = np.array([[len(np.intersect1d(f, s, assume_unique=True)) for s in second]
                          for f in first], dtype=np.int64)
    return BlockQuantities(n, j, ranges, selfs, m, k or 0, cross)


def increment_defect(rp: RangeProcess, n: int, s: float, t: float) -> float:
    """
    A_{n,s,t} = (R(nt) - R(ns)) - (R_floor(nt) - R_floor(ns)) for the
    interpolated range; always of absolute value at most 2.
    """
    if not 0 <= s <= t:
        raise DomainError(f"Need 0 <= s <= t, got s={s}, t={t}")
    interpolated = interpolate(rp, n * t) - interpolate(rp, n * s)
    discrete = rp.R[int(math.floor(n * t))] - rp.R[int(math.floor(n * s))]
    return float(interpolated - discrete)


# Rescaling

def declared_alpha(chi: float) -> float:
    """Hoelder exponent declared for rescaled paths: min(chi, 1) less a margin"""
    return max(min(chi, 1.0) - ALPHA_MARGIN, 0.01)


def rescale_values(values: 'NDArray', scale: float, center: bool) -> 'NDArray':
    """
    scale * (values - column means), or scale * values without centering.

    Raises:
        SampleSizeError: if centering is requested on fewer than 100 rows
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 2 or len(values) == 0:
        raise DomainError(f"Need a nonempty (replicas, times) matrix, got shape {values.shape}")
    if not center:
        return scale * values
    if len(values) < MIN_CENTERING_REPLICAS:
        raise SampleSizeError(f"Centering by ensemble means needs >= {MIN_CENTERING_REPLICAS} "
                              f"replicas, got {len(values)}")
    return scale * (values - values.mean(axis=0))


def as_holder_paths(values: 'NDArray', t_grid: Sequence[float], alpha: float) -> List[HolderPath]:
    grid = np.asarray(t_grid, dtype=float)
    return [HolderPath(grid, row, alpha) for row in values]


def range_values(ensemble: Iterable[RangeProcess], times: 'NDArray') -> 'NDArray':
    """Interpolated range of every replica at the given real times"""
    return np.stack([interpolate(rp, times) for rp in ensemble])


def rescale_center(ensemble: Union[Sequence[RangeProcess], 'NDArray'], suite: ScaleSuite,
                   t_grid: Sequence[float], n: Optional[int] = None) -> List[HolderPath]:
    """
    S(n) (R(nt) - mean R(nt)) on t_grid for every replica.

    `ensemble` is a list of RangeProcess or a matrix of R(nt) values
    (replicas x len(t_grid)), in which case n is required. In the SUB regime
    the paths are R(nt) / b(n) and are not centred.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if isinstance(ensemble, np.ndarray):
        if n is None:
            raise DomainError("Horizon n is required with a value matrix")
        values = ensemble
    else:
        if len(ensemble) == 0:
            raise SampleSizeError("Empty ensemble")
        n = ensemble[0].n if n is None else n
        values = range_values(ensemble, n * t_grid)
    center = suite.regime != Regime.SUB
    rescaled = rescale_values(values, suite.S(n), center)
    return as_holder_paths(rescaled, t_grid, declared_alpha(suite.chi))


class EscapeEstimate(NamedTuple):
    """Escape probability from R_n / n and from 1 / (1 + h(n))"""
    p_range: float
    stderr: float
    p_green: float
    n: int

    @property
    def relative_gap(self) -> float:
        return abs(self.p_range - self.p_green) / max(self.p_green, 1e-300)


def escape_probability_estimate(final_ranges: Sequence[int], n: int,
                                suite: Optional[ScaleSuite] = None) -> EscapeEstimate:
    """
    Estimate P(no return to 0) by the ensemble mean of R_n / n and, when a
    suite is given, by the inverse expected number of visits 1 / (1 + h(n)).
    """
    ratios = np.asarray(final_ranges, dtype=float) / n
    if len(ratios) < 2:
        raise SampleSizeError("Need at least two replicas")
    stderr = float(ratios.std(ddof=1) / math.sqrt(len(ratios)))
    p_green = 1.0 / (1.0 + suite.h(n)) if suite is not None else float('nan')
    return EscapeEstimate(float(ratios.mean()), stderr, p_green, n)
