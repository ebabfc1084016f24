"""
Dyadic estimator of the renormalised self-intersection local time.

The strict upper triangle {0 <= s < u <= t} is covered by the rectangles
A^(i,j) = [(2i-2)t/2^j, (2i-1)t/2^j) x ((2i-1)t/2^j, 2it/2^j]. On a path the
rectangle becomes a pair of consecutive integer time blocks; counting the
intersections of all such pairs down to a finite depth, centring by pilot
means and rescaling gives the estimate.
"""

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple, TYPE_CHECKING

import numpy as np
from joblib import Parallel, delayed

from .centering import CenteringTable
from .errors import CenteringError, DomainError, SampleSizeError, ScaleMismatchError
from .rangekit import PathLike, as_holder_paths, as_positions, declared_alpha, pack_sites
from .regvar import ScaleSuite
from .stats import StatReport, ks_test
from .walks import WalkSpec, replica_seed, sample_path
from .youngint import HolderPath

if TYPE_CHECKING:
    from numpy.typing import NDArray

logger = logging.getLogger(__name__)

MAX_DEFAULT_DEPTH = 8
MIN_PILOT_REPLICAS = 500
PILOT_STREAM = 1
COUNTS = ("sites", "pairs")


@dataclass(frozen=True)
class DyadicBlock:
    """
    Rectangle A^(i,j) and its integer time blocks.

    left covers times (left_start, left_stop] and right (left_stop, right_stop];
    the first block of each level also contains time 0.
    """
    level: int
    position: int
    s0: float
    s1: float
    u0: float
    u1: float
    left: Tuple[int, int]       # inclusive integer range
    right: Tuple[int, int]

    @property
    def area(self) -> float:
        return (self.s1 - self.s0) * (self.u1 - self.u0)

    @property
    def empty(self) -> bool:
        return self.left[0] > self.left[1] or self.right[0] > self.right[1]


def default_depth(n: int) -> int:
    """min(8, log2 n - 6): the finest blocks span at least 64 steps"""
    return max(1, min(MAX_DEFAULT_DEPTH, int(math.floor(math.log2(max(n, 2)))) - 6))


def dyadic_blocks(t: float, depth: int, n: int) -> List[DyadicBlock]:
    """
    Rectangles of levels 1..depth for horizon t on a path rescaled by n.

    Integer block edges are floor(k floor(nt) / 2^j). Empty blocks are kept
    and reported with a warning.
    """
    if depth < 1:
        raise DomainError(f"Dyadic depth must be >= 1, got {depth}")
    if t < 0 or n < 1:
        raise DomainError(f"Need t >= 0 and n >= 1, got t={t}, n={n}")
    N = int(math.floor(n * t))
    blocks = []
    for j in range(1, depth + 1):
        width = t / 2 ** j
        for i in range(1, 2 ** (j - 1) + 1):
            e0, e1, e2 = ((2 * i - 2) * N) >> j, ((2 * i - 1) * N) >> j, (2 * i * N) >> j
            left_start = e0 if i == 1 else e0 + 1
            blocks.append(DyadicBlock(j, i, (2 * i - 2) * width, (2 * i - 1) * width,
                                      (2 * i - 1) * width, 2 * i * width,
                                      (left_start, e1), (e1 + 1, e2)))
    n_empty = sum(b.empty for b in blocks)
    if n_empty:
        warnings.warn(f"{n_empty} of {len(blocks)} dyadic blocks are empty: depth {depth} "
                      f"is too deep for {N} steps")
    return blocks


def dyadic_area(blocks: Sequence[DyadicBlock]) -> float:
    return math.fsum(b.area for b in blocks)


def _occupation(keys: 'NDArray') -> Tuple['NDArray', 'NDArray']:
    return np.unique(keys, return_counts=True)


def _block_count(keys: 'NDArray', block: DyadicBlock, count: str) -> int:
    (a0, a1), (b0, b1) = block.left, block.right
    if block.empty:
        return 0
    left_sites, left_occ = _occupation(keys[a0:a1 + 1])
    right_sites, right_occ = _occupation(keys[b0:b1 + 1])
    _, ia, ib = np.intersect1d(left_sites, right_sites, assume_unique=True, return_indices=True)
    if count == "sites":
        return int(len(ia))
    return int(np.dot(left_occ[ia], right_occ[ib]))


def block_counts(path: PathLike, t: float, depth: int, n: Optional[int] = None,
                 count: str = "sites") -> List['NDArray']:
    """
    Intersection counts of every dyadic rectangle, one array per level.

    count="sites" counts common distinct sites of the two blocks,
    count="pairs" counts time pairs (s, u) in the rectangle with X_s = X_u.
    """
    if count not in COUNTS:
        raise DomainError(f"Unknown count '{count}', expected one of {COUNTS}")
    positions = as_positions(path)
    n = len(positions) - 1 if n is None else n
    if math.floor(n * t) > len(positions) - 1:
        raise DomainError(f"Horizon n t = {n * t:g} beyond the path of {len(positions) - 1} steps")
    keys = pack_sites(positions[:int(math.floor(n * t)) + 1])
    levels: List[List[int]] = [[] for _ in range(depth)]
    for block in dyadic_blocks(t, depth, n):
        levels[block.level - 1].append(_block_count(keys, block, count))
    return [np.asarray(level, dtype=np.int64) for level in levels]


@dataclass
class SiltSample:
    """Rescaled, centred dyadic estimate and its per-level parts"""
    gamma_hat: float
    level_contributions: List[float]
    n: int
    t: float
    depth: int
    count: str
    block_counts: List['NDArray']


def _check_table(table: Optional[CenteringTable], n: int, t: float, depth: int,
                 count: str) -> CenteringTable:
    if table is None:
        raise CenteringError(f"No centering table for n={n}, t={t:g}, depth={depth}")
    if table.n != n or table.count != count or not math.isclose(table.t, t):
        raise ScaleMismatchError(f"Centering table is for (n={table.n}, t={table.t:g}, "
                                 f"{table.count}), estimate is (n={n}, t={t:g}, {count})")
    return table if table.depth == depth else table.truncated(depth)


def count_scale(suite: ScaleSuite, n: int, count: str) -> float:
    """h(n)^2 b(n)^d / n^2 for site counts, b(n)^d / n^2 for pair counts"""
    return suite.intersection_scale(n) if count == "sites" else suite.pair_scale(n)


def silt_estimate(path: PathLike, suite: ScaleSuite, t: float, depth: Optional[int] = None,
                  centering: Optional[CenteringTable] = None, n: Optional[int] = None,
                  count: str = "sites") -> SiltSample:
    """
    scale(n) * sum over levels <= depth and blocks of (count - pilot mean).

    Raises:
        CenteringError: without a centering table covering `depth`
        ScaleMismatchError: if the table is for another (n, t, count)
    """
    positions = as_positions(path)
    n = len(positions) - 1 if n is None else n
    depth = default_depth(n) if depth is None else depth
    table = _check_table(centering, n, t, depth, count)
    counts = block_counts(positions, t, depth, n, count)
    scale = count_scale(suite, n, count)
    levels = [scale * math.fsum(c - table.level_means(j + 1)) for j, c in enumerate(counts)]
    return SiltSample(math.fsum(levels), levels, n, t, depth, count, counts)


def _pilot_counts(spec: WalkSpec, n: int, t: float, depth: int, count: str,
                  seed: int) -> List['NDArray']:
    positions = sample_path(spec, int(math.floor(n * t)), seed).positions
    return block_counts(positions, t, depth, n, count)


def build_centering_table(spec: WalkSpec, n: int, t: float = 1.0, depth: Optional[int] = None,
                          count: str = "sites", replicas: int = MIN_PILOT_REPLICAS,
                          master_seed: int = 0, n_jobs: int = 1) -> CenteringTable:
    """
    Per-block mean counts from a pilot ensemble drawn on its own seed stream.

    Raises:
        SampleSizeError: for fewer than 500 pilot replicas
    """
    if replicas < MIN_PILOT_REPLICAS:
        raise SampleSizeError(f"Pilot ensembles need >= {MIN_PILOT_REPLICAS} replicas, got {replicas}")
    depth = default_depth(n) if depth is None else depth
    logger.info("Building centering table: n=%d t=%g depth=%d %s, %d replicas",
                n, t, depth, count, replicas)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        runs = Parallel(n_jobs=n_jobs)(
            delayed(_pilot_counts)(spec, n, t, depth, count, replica_seed(master_seed, i, PILOT_STREAM))
            for i in range(replicas))
    means, stds = [], []
    for level in range(depth):
        stacked = np.stack([run[level] for run in runs]).astype(float)
        means.append(stacked.mean(axis=0).tolist())
        stds.append(float(stacked.sum(axis=1).std(ddof=1)))
    return CenteringTable(spec.spec_hash(), n, depth, float(t), count, means, stds, replicas)


def cross_term_estimate(path: PathLike, suite: ScaleSuite, t: float, s: float,
                        n: Optional[int] = None, count: str = "sites") -> float:
    """
    Rescaled, uncentred intersection count of the time blocks [0, nt] and
    (nt, n(t+s)]; centre across an ensemble before use.
    """
    positions = as_positions(path)
    n = len(positions) - 1 if n is None else n
    a = int(math.floor(n * t))
    b = int(math.floor(n * (t + s)))
    if b > len(positions) - 1:
        raise DomainError(f"Horizon n (t + s) = {n * (t + s):g} beyond the path")
    keys = pack_sites(positions[:b + 1])
    block = DyadicBlock(0, 1, 0.0, t, t, t + s, (0, a), (a + 1, b))
    return count_scale(suite, n, count) * _block_count(keys, block, count)


class SiltEnsemble(NamedTuple):
    """gamma-hat values of one ensemble with its scale metadata"""
    values: 'NDArray'
    n: int
    depth: int
    t: float
    count: str

    @classmethod
    def from_samples(cls, samples: Sequence[SiltSample]) -> 'SiltEnsemble':
        if not samples:
            raise SampleSizeError("Empty gamma-hat ensemble")
        first = samples[0]
        if any((s.n, s.depth, s.count) != (first.n, first.depth, first.count) for s in samples):
            raise ScaleMismatchError("Samples disagree on (n, depth, count)")
        return cls(np.array([s.gamma_hat for s in samples]), first.n, first.depth,
                   first.t, first.count)


def decomposition_check(first: SiltEnsemble, second: SiltEnsemble, cross: SiltEnsemble,
                        full: SiltEnsemble, cross_scale: float = 1.0, seed: int = 0,
                        alpha: float = 0.01) -> StatReport:
    """
    Two-sample KS of gamma_(t+s) against gamma_t + independent gamma_s + cross.

    `first` and `cross` come from the same replicas and stay paired; `second`
    is permuted to make it independent of them. The cross term is centred by
    its ensemble mean and multiplied by cross_scale.

    Raises:
        ScaleMismatchError: if the ensembles disagree on n or count, or the
            depths do not match (full may be one level deeper)
    """
    ensembles = (first, second, cross, full)
    if len({e.n for e in ensembles}) != 1 or len({e.count for e in ensembles}) != 1:
        raise ScaleMismatchError("Decomposition ensembles must share n and count")
    if first.depth != second.depth or full.depth not in (first.depth, first.depth + 1):
        raise ScaleMismatchError(f"Depth mismatch: {first.depth}, {second.depth}, full {full.depth}")
    if len(first.values) != len(cross.values):
        raise ScaleMismatchError("First and cross ensembles must be paired replica by replica")

    rng = np.random.default_rng(seed)
    m = min(len(first.values), len(second.values))
    other = second.values[rng.permutation(len(second.values))[:m]]
    crossed = cross_scale * (cross.values[:m] - cross.values.mean())
    combined = first.values[:m] + other + crossed
    report = ks_test(combined, full.values, alpha, name="gamma-decomposition")
    report.details.update({'t': first.t, 's': second.t, 'cross_scale': cross_scale})
    return report


def scaling_check(small: SiltEnsemble, large: SiltEnsemble, suite: ScaleSuite,
                  alpha: float = 0.01) -> StatReport:
    """gamma_(ct) against c^chi gamma_t by two-sample KS"""
    if small.n != large.n or small.count != large.count:
        raise ScaleMismatchError("Scaling ensembles must share n and count")
    factor = (large.t / small.t) ** suite.chi
    report = ks_test(factor * small.values, large.values, alpha, name="gamma-scaling")
    report.details['factor'] = factor
    return report


def level_variances(samples: Sequence[SiltSample]) -> 'NDArray':
    """Empirical variance of each level contribution across an ensemble"""
    levels = np.array([s.level_contributions for s in samples])
    return levels.var(axis=0, ddof=1)


def block_correlation(samples: Sequence[SiltSample], level: int, reduce: str = "max") -> float:
    """
    |correlation| between the counts of distinct blocks on one level, reduced
    over block pairs by "max" or "mean".

    Same-level blocks see disjoint increments, so only sampling noise of order
    1/sqrt(replicas) remains; the maximum over many pairs grows with the pair count.
    """
    if reduce not in ("max", "mean"):
        raise DomainError(f"Unknown reduction '{reduce}', expected 'max' or 'mean'")
    counts = np.stack([s.block_counts[level - 1] for s in samples]).astype(float)
    if counts.shape[1] < 2:
        raise DomainError(f"Level {level} has a single block")
    keep = counts.std(axis=0) > 0
    corr = np.corrcoef(counts[:, keep], rowvar=False)
    off = np.abs(corr[~np.eye(len(corr), dtype=bool)])
    if len(off) == 0:
        return 0.0
    return float(np.max(off)) if reduce == "max" else float(np.mean(off))


def depth_stability(samples: Sequence[SiltSample], table: CenteringTable, depth: int,
                    suite: ScaleSuite) -> StatReport:
    """
    gamma-hat at depth + 2 against depth: the ensemble mean of the two extra
    level contributions must stay within one pilot standard deviation of them,
    bounded by scale * (std of level depth + 1 + std of level depth + 2).

    Raises:
        CenteringError: if the samples or the table are shallower than depth + 2
    """
    deep = depth + 2
    if any(s.depth < deep for s in samples) or table.depth < deep or len(table.level_stds) < deep:
        raise CenteringError(f"Depth stability needs samples and a table of depth >= {deep}")
    first = samples[0]
    extra = np.array([math.fsum(s.level_contributions[depth:deep]) for s in samples])
    bound = count_scale(suite, first.n, first.count) * math.fsum(table.level_stds[depth:deep])
    shift = abs(float(extra.mean()))
    return StatReport(f"gamma-depth-{depth}-vs-{deep}", shift, bound=bound, passed=shift < bound,
                      sample_sizes=[len(samples), table.replicas],
                      details={'rms': float(np.sqrt(np.mean(extra ** 2)))})


def _gamma_row(spec: WalkSpec, suite: ScaleSuite, n: int, times: 'NDArray', depth: int,
               tables: Dict[float, CenteringTable], seed: int) -> List[float]:
    path = sample_path(spec, int(math.floor(n * times.max())), seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return [0.0 if t == 0 else silt_estimate(path, suite, float(t), depth, tables[float(t)], n).gamma_hat
                for t in times]


def gamma_paths(spec: WalkSpec, suite: ScaleSuite, n: int, times: Sequence[float], depth: int,
                tables: Dict[float, CenteringTable], replicas: int, master_seed: int = 0,
                n_jobs: int = 1, stream: int = 0) -> List[HolderPath]:
    """
    gamma-hat evaluated along one path per replica at every time in `times`;
    gamma-hat at t = 0 is 0. `tables` maps each positive time to its centering.

    Raises:
        CenteringError: if a positive time has no centering table
    """
    times = np.asarray(times, dtype=float)
    missing = [float(t) for t in times if t > 0 and float(t) not in tables]
    if missing:
        raise CenteringError(f"No centering tables for t={missing}")
    rows = Parallel(n_jobs=n_jobs)(
        delayed(_gamma_row)(spec, suite, n, times, depth, tables,
                            replica_seed(master_seed, i, stream))
        for i in range(replicas))
    return as_holder_paths(np.asarray(rows), times, declared_alpha(suite.chi))
