"""
Lattice random walks in the domain of attraction of beta-stable laws.

Provides the increment laws (simple, lazy, discrete Pareto, product Pareto and
user-supplied finite laws), counter-based replica seeding, stored and
streamed path sampling, the characteristic function and the support /
aperiodicity check.
"""

import hashlib
import json
import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Iterator, List, Sequence, Tuple, Union, TYPE_CHECKING

import numpy as np
from scipy import special, stats

from .binary_format import PathFlags, read_path_file, write_path_file
from .errors import DomainError, ResourceBudgetError

if TYPE_CHECKING:
    from numpy.typing import NDArray

logger = logging.getLogger(__name__)

# Increments are drawn in fixed-size chunks so stored and streamed sampling
# consume the generator identically.
STEP_CHUNK = 1 << 16

DEFAULT_MEMORY_BUDGET = 2 << 30       # bytes of stored positions
PARETO_TAIL_MASS = 1e-9
PARETO_TABLE_CAP = 1 << 20            # entries of the inverse-CDF table
PARETO_JUMP_CAP = 1 << 40


class Law(str, Enum):
    """Built-in increment laws"""
    SRW = "SRW"
    LAZY_SRW = "LAZY_SRW"
    DISCRETE_PARETO = "DISCRETE_PARETO"
    PRODUCT_PARETO = "PRODUCT_PARETO"
    CUSTOM = "CUSTOM"


@dataclass(frozen=True)
class WalkSpec:
    """
    Increment law of a lattice walk on Z^d.

    beta is the stability index of the declared limit; sigma_hat is the
    calibration constant in b(n) = sigma_hat * n^(1/beta).
    """
    d: int
    beta: float
    law: Law
    hold: float = 0.0                      # LAZY_SRW only
    sigma_hat: float = 1.0
    support: Tuple[Tuple[int, ...], ...] = ()   # CUSTOM only
    probs: Tuple[float, ...] = ()               # CUSTOM only

    def __post_init__(self):
        object.__setattr__(self, 'law', Law(self.law))
        if self.d < 1:
            raise DomainError(f"Dimension must be >= 1, got {self.d}")
        if not 0.0 < self.beta <= 2.0:
            raise DomainError(f"Stability index must lie in (0, 2], got {self.beta}")
        if self.sigma_hat <= 0:
            raise DomainError(f"sigma_hat must be positive, got {self.sigma_hat}")

        if self.law in (Law.SRW, Law.LAZY_SRW) and self.beta != 2.0:
            raise DomainError(f"{self.law.value} is attracted to beta=2, got beta={self.beta}")
        if self.law == Law.LAZY_SRW and not 0.0 < self.hold < 1.0:
            raise DomainError(f"Hold probability must lie in (0, 1), got {self.hold}")
        if self.law == Law.DISCRETE_PARETO and self.d != 1:
            raise DomainError("DISCRETE_PARETO is defined on Z; use PRODUCT_PARETO for d > 1")
        if self.law == Law.PRODUCT_PARETO and self.d < 2:
            raise DomainError("PRODUCT_PARETO needs d >= 2")
        if self.law == Law.CUSTOM:
            self._validate_custom()

    def _validate_custom(self):
        if not self.support or len(self.support) != len(self.probs):
            raise DomainError("CUSTOM law needs matching support and probs")
        if any(len(x) != self.d for x in self.support):
            raise DomainError(f"CUSTOM support points must have {self.d} coordinates")
        probs = np.asarray(self.probs, dtype=float)
        if np.any(probs < 0):
            raise DomainError("CUSTOM probabilities must be nonnegative")
        if abs(math.fsum(self.probs) - 1.0) > 1e-12:
            raise DomainError(f"CUSTOM probabilities sum to {math.fsum(self.probs)!r}, not 1")

    # Constructors for the built-in laws

    @classmethod
    def srw(cls, d: int) -> 'WalkSpec':
        return cls(d=d, beta=2.0, law=Law.SRW)

    @classmethod
    def lazy_srw(cls, d: int, hold: float = 0.5) -> 'WalkSpec':
        return cls(d=d, beta=2.0, law=Law.LAZY_SRW, hold=hold)

    @classmethod
    def discrete_pareto(cls, beta: float, sigma_hat: float = 1.0) -> 'WalkSpec':
        return cls(d=1, beta=beta, law=Law.DISCRETE_PARETO, sigma_hat=sigma_hat)

    @classmethod
    def product_pareto(cls, d: int, beta: float, sigma_hat: float = 1.0) -> 'WalkSpec':
        return cls(d=d, beta=beta, law=Law.PRODUCT_PARETO, sigma_hat=sigma_hat)

    @classmethod
    def custom(cls, support: Sequence[Sequence[int]], probs: Sequence[float],
               beta: float = 2.0, sigma_hat: float = 1.0) -> 'WalkSpec':
        support = tuple(tuple(int(c) for c in np.atleast_1d(x)) for x in support)
        return cls(d=len(support[0]), beta=beta, law=Law.CUSTOM, sigma_hat=sigma_hat,
                   support=support, probs=tuple(float(p) for p in probs))

    @property
    def anisotropic(self) -> bool:
        """PRODUCT_PARETO has independent heavy-tailed coordinates"""
        return self.law == Law.PRODUCT_PARETO

    @property
    def heavy_tailed(self) -> bool:
        """Pareto laws, whose sigma_hat has no closed form and is calibrated"""
        return self.law in (Law.DISCRETE_PARETO, Law.PRODUCT_PARETO)

    @property
    def finite_support(self) -> bool:
        return self.law in (Law.SRW, Law.LAZY_SRW, Law.CUSTOM)

    def increment_pmf(self) -> Tuple['NDArray', 'NDArray']:
        """
        Support points (K, d) and probabilities (K,) of a finite-support law.
        """
        d = self.d
        if self.law in (Law.SRW, Law.LAZY_SRW):
            eye = np.eye(d, dtype=np.int64)
            points = np.concatenate([eye, -eye])
            move = 1.0 - self.hold if self.law == Law.LAZY_SRW else 1.0
            probs = np.full(2 * d, move / (2 * d))
            if self.law == Law.LAZY_SRW:
                points = np.concatenate([np.zeros((1, d), dtype=np.int64), points])
                probs = np.concatenate([[self.hold], probs])
            return points, probs
        if self.law == Law.CUSTOM:
            return np.array(self.support, dtype=np.int64), np.array(self.probs, dtype=float)
        raise DomainError(f"{self.law.value} has unbounded support")

    def to_dict(self) -> dict:
        data = {'d': self.d, 'beta': self.beta, 'law': self.law.value,
                'hold': self.hold, 'sigma_hat': self.sigma_hat}
        if self.law == Law.CUSTOM:
            data['support'] = [list(x) for x in self.support]
            data['probs'] = list(self.probs)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> 'WalkSpec':
        return cls(d=int(data['d']), beta=float(data['beta']), law=Law(data['law']),
                   hold=float(data.get('hold', 0.0)),
                   sigma_hat=float(data.get('sigma_hat', 1.0)),
                   support=tuple(tuple(int(c) for c in x) for x in data.get('support', ())),
                   probs=tuple(float(p) for p in data.get('probs', ())))

    def spec_hash(self) -> str:
        """Stable short hash used to key stored centering tables"""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class PathSample:
    """Positions X_0..X_n of one replica, shape (n+1, d)"""
    positions: 'NDArray'
    spec: WalkSpec
    seed: int

    @property
    def n(self) -> int:
        return self.positions.shape[0] - 1

    @property
    def d(self) -> int:
        return self.positions.shape[1]

    def export(self, filename: Union[str, Path]) -> int:
        """Write the path in the binary debug format"""
        flags = PathFlags.NONE
        if self.spec.law == Law.LAZY_SRW:
            flags |= PathFlags.LAZY
        if self.spec.law in (Law.DISCRETE_PARETO, Law.PRODUCT_PARETO):
            flags |= PathFlags.HEAVY_TAILED
        return write_path_file(filename, self.positions, self.seed, flags)

    @classmethod
    def load(cls, filename: Union[str, Path], spec: WalkSpec) -> 'PathSample':
        header, positions = read_path_file(filename)
        if header.d != spec.d:
            raise ValueError(f"Path file has d={header.d}, spec has d={spec.d}")
        return cls(positions, spec, header.seed & ((1 << 64) - 1))


# Seeding

def replica_seed(master_seed: int, index: int, stream: int = 0) -> int:
    """
    Seed of replica `index`, derived by hashing (master_seed, index).

    Distinct streams give independent families for the same replica index
    (e.g. pilot ensembles or the second walk of an intersection pair).
    """
    if master_seed < 0 or index < 0 or stream < 0:
        raise DomainError(f"Seeds must be nonnegative: {master_seed}, {index}, {stream}")
    seq = np.random.SeedSequence(entropy=(master_seed, index), spawn_key=(stream,))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator for a replica seed"""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


# Discrete Pareto tables

@dataclass(frozen=True)
class ParetoTable:
    """Inverse-CDF table for |Y| of the symmetric discrete Pareto law"""
    beta: float
    radius: int           # table covers magnitudes 1..radius
    cdf: 'NDArray'        # unnormalised cumulative mass of |Y| <= k
    tail_mass: float      # P(|Y| > radius)
    extended: bool        # tail beyond the table is sampled, not dropped
    pmf: 'NDArray' = field(repr=False)    # P(|Y| = k), k = 1..radius


def _pareto_tail(beta: float, radius: int) -> float:
    # P(|Y| > radius) = zeta(1+beta, radius+1) / zeta(1+beta)
    return float(special.zeta(1.0 + beta, radius + 1.0) / special.zeta(1.0 + beta))


@lru_cache(maxsize=16)
def pareto_table(beta: float, tail_mass: float = PARETO_TAIL_MASS,
                 cap: int = PARETO_TABLE_CAP) -> ParetoTable:
    """
    Build the truncation table for P(Y = x) proportional to |x|^(-1-beta).

    The radius is the smallest one with tail mass below `tail_mass`. When that
    radius exceeds `cap` the table stops at `cap` and the remaining tail is
    sampled from the continuous Pareto extension.
    """
    zeta = float(special.zeta(1.0 + beta))
    guess = (beta * zeta * tail_mass) ** (-1.0 / beta)
    radius = int(min(max(8.0, math.ceil(guess)), cap))
    while radius < cap and _pareto_tail(beta, radius) >= tail_mass:
        radius = min(cap, 2 * radius)

    k = np.arange(1, radius + 1, dtype=float)
    pmf = k ** (-1.0 - beta) / zeta
    cdf = np.cumsum(pmf)
    tail = _pareto_tail(beta, radius)
    extended = tail >= tail_mass
    if extended:
        warnings.warn(f"Discrete Pareto table for beta={beta} capped at {radius} entries; "
                      f"tail mass {tail:.3g} sampled from the Pareto extension")
    else:
        # renormalise the head so the truncated law sums to 1
        pmf = pmf / cdf[-1]
        cdf = cdf / cdf[-1]
        tail = 0.0
    logger.debug("Pareto table beta=%s radius=%d tail=%.3g", beta, radius, tail)
    return ParetoTable(beta, radius, cdf, tail, extended, pmf)


def _pareto_magnitudes(table: ParetoTable, u: 'NDArray') -> 'NDArray':
    head = 1.0 - table.tail_mass
    mags = np.searchsorted(table.cdf, np.minimum(u, head) * (table.cdf[-1] / head),
                           side='right') + 1
    mags = np.minimum(mags, table.radius).astype(np.int64)
    if table.extended:
        in_tail = u >= head
        if np.any(in_tail):
            v = (u[in_tail] - head) / table.tail_mass
            v = np.maximum(1.0 - v, 1e-300)
            jump = np.floor(table.radius * v ** (-1.0 / table.beta)) + 1
            mags[in_tail] = np.minimum(jump, PARETO_JUMP_CAP).astype(np.int64)
    return mags


# Increment sampling

def sample_increments(spec: WalkSpec, rng: np.random.Generator, size: int) -> 'NDArray':
    """Draw `size` i.i.d. increments, shape (size, d), int64"""
    d = spec.d
    if spec.law in (Law.SRW, Law.LAZY_SRW):
        axis = rng.integers(d, size=size)
        sign = 2 * rng.integers(2, size=size) - 1
        if spec.law == Law.LAZY_SRW:
            sign = np.where(rng.random(size) < spec.hold, 0, sign)
        inc = np.zeros((size, d), dtype=np.int64)
        inc[np.arange(size), axis] = sign
        return inc

    if spec.law in (Law.DISCRETE_PARETO, Law.PRODUCT_PARETO):
        table = pareto_table(spec.beta)
        u = rng.random((size, d, 2))
        mags = _pareto_magnitudes(table, u[..., 0].ravel()).reshape(size, d)
        return np.where(u[..., 1] < 0.5, -mags, mags)

    points, probs = spec.increment_pmf()
    idx = np.searchsorted(np.cumsum(probs), rng.random(size) * math.fsum(probs), side='right')
    return points[np.minimum(idx, len(probs) - 1)]


def stream_path(spec: WalkSpec, n: int, seed: int) -> Iterator['NDArray']:
    """
    Yield the positions of a path chunk by chunk.

    The first chunk starts with X_0 = 0; concatenating all chunks gives
    exactly the positions of sample_path(spec, n, seed).
    """
    if n < 0:
        raise DomainError(f"Number of steps must be >= 0, got {n}")
    rng = make_rng(seed)
    current = np.zeros(spec.d, dtype=np.int64)
    yield current[None, :].copy()

    done = 0
    while done < n:
        size = min(STEP_CHUNK, n - done)
        chunk = np.cumsum(sample_increments(spec, rng, size), axis=0) + current
        current = chunk[-1].copy()
        done += size
        yield chunk


def sample_path(spec: WalkSpec, n: int, seed: int,
                memory_budget: int = DEFAULT_MEMORY_BUDGET) -> PathSample:
    """
    Sample n steps of the walk started at 0.

    Raises:
        ResourceBudgetError: if storing n+1 positions exceeds memory_budget;
            use stream_path to consume positions without storing them
    """
    if n < 0:
        raise DomainError(f"Number of steps must be >= 0, got {n}")
    need = (n + 1) * spec.d * 8
    if need > memory_budget:
        raise ResourceBudgetError(f"Path of {n} steps needs {need:,} bytes > budget "
                                  f"{memory_budget:,}; use stream_path")
    positions = np.concatenate(list(stream_path(spec, n, seed)), axis=0)
    return PathSample(positions, spec, seed)


# Characteristic function

def _as_points(spec: WalkSpec, x) -> 'NDArray':
    """Coerce angles to shape (..., d); for d = 1 plain arrays are accepted"""
    x = np.asarray(x, dtype=float)
    if spec.d == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    if x.shape[-1] != spec.d:
        raise DomainError(f"Expected points with {spec.d} coordinates, got shape {x.shape}")
    return x


def _pareto_defect_1d(beta: float, x: 'NDArray') -> 'NDArray':
    """1 - phi(x) for the 1-d discrete Pareto law, evaluated on unique x"""
    table = pareto_table(beta)
    flat = np.asarray(x, dtype=float).ravel()
    uniq, inverse = np.unique(flat, return_inverse=True)
    out = np.zeros(uniq.shape)
    k = np.arange(1, table.radius + 1, dtype=float)
    block = max(1, (1 << 22) // max(1, len(uniq)))
    for start in range(0, table.radius, block):
        kk = k[start:start + block]
        s = np.sin(np.outer(uniq, kk) / 2.0)
        out += (2.0 * s * s) @ table.pmf[start:start + block]
    # tail beyond the table: cos(kx) averages out, so 1 - cos contributes its mass
    out += table.tail_mass
    return out[inverse].reshape(np.shape(x))


def char_fn_defect(spec: WalkSpec, x: 'NDArray') -> 'NDArray':
    """
    1 - phi(x), evaluated without cancellation near x = 0.

    x has shape (..., d); for d = 1 a plain array of angles is accepted.
    """
    x = _as_points(spec, x)

    if spec.law in (Law.SRW, Law.LAZY_SRW):
        s = np.sin(x / 2.0)
        defect = np.mean(2.0 * s * s, axis=-1)
        return defect * (1.0 - spec.hold) if spec.law == Law.LAZY_SRW else defect

    if spec.law in (Law.DISCRETE_PARETO, Law.PRODUCT_PARETO):
        total = np.zeros(x.shape[:-1])
        for axis in range(spec.d):
            delta = _pareto_defect_1d(spec.beta, x[..., axis])
            # 1 - (1 - D)(1 - delta)
            total = total + delta - total * delta
        return total

    return 1.0 - char_fn(spec, x)


def char_fn(spec: WalkSpec, x: 'NDArray') -> 'NDArray':
    """
    Characteristic function phi(x) = E[exp(i <x, Y>)].

    Closed form for SRW/LAZY_SRW (d=1 SRW: cos x), truncated series for the
    Pareto laws (see char_fn_tail_bound), finite sum for CUSTOM laws.
    """
    x = _as_points(spec, x)
    if spec.law == Law.CUSTOM:
        points, probs = spec.increment_pmf()
        value = np.exp(1j * (x @ points.T.astype(float))) @ probs
        return value.real if np.allclose(value.imag, 0.0, atol=1e-15) else value

    if spec.law in (Law.SRW, Law.LAZY_SRW):
        value = np.mean(np.cos(x), axis=-1)
        if spec.law == Law.LAZY_SRW:
            value = spec.hold + (1.0 - spec.hold) * value
        return value

    return 1.0 - char_fn_defect(spec, x)


def char_fn_tail_bound(spec: WalkSpec, x: 'NDArray') -> 'NDArray':
    """
    Bound on the truncation error of char_fn for the Pareto laws.

    The neglected sum over |k| > radius of p_k cos(kx) is bounded by the tail
    mass and, by Abel summation, by p_radius / |sin(x/2)|.
    """
    x = _as_points(spec, x)
    if spec.law not in (Law.DISCRETE_PARETO, Law.PRODUCT_PARETO):
        return np.zeros(x.shape[:-1])
    table = pareto_table(spec.beta)
    with np.errstate(divide='ignore'):
        abel = table.pmf[-1] / np.abs(np.sin(x / 2.0))
    return np.sum(np.minimum(table.tail_mass, abel), axis=-1)


# Support and aperiodicity

@dataclass
class SupportReport:
    """Outcome of the (A1) generation / aperiodicity check"""
    generates: bool
    aperiodic: bool
    period: int                      # index of the difference lattice; 0 if infinite
    sublattice: List[List[int]]      # basis of the lattice generated by the support
    certified: bool                  # built-in law, result is a known constant
    recommendation: str = ""

    @property
    def ok(self) -> bool:
        return self.generates and self.aperiodic


def _lattice_basis(vectors: 'NDArray') -> List[List[int]]:
    """Integer row-echelon basis of the lattice spanned by integer vectors"""
    rows = [list(map(int, v)) for v in vectors if any(int(c) != 0 for c in v)]
    d = len(vectors[0]) if len(vectors) else 0
    basis = []
    col = 0
    while rows and col < d:
        while True:
            live = [r for r in rows if r[col] != 0]
            if len(live) <= 1:
                break
            live.sort(key=lambda r: abs(r[col]))
            pivot = live[0]
            for r in live[1:]:
                q = r[col] // pivot[col]
                for c in range(d):
                    r[c] -= q * pivot[c]
            rows = [r for r in rows if any(r)]
        live = [r for r in rows if r[col] != 0]
        if live:
            pivot = live[0]
            if pivot[col] < 0:
                pivot = [-c for c in pivot]
            basis.append(pivot)
            rows = [r for r in rows if r is not live[0]]
        col += 1
    return basis


def _lattice_index(basis: List[List[int]], d: int) -> int:
    """Index of the lattice in Z^d (0 if not full rank)"""
    if len(basis) < d:
        return 0
    index = 1
    for i, row in enumerate(basis):
        index *= abs(row[i]) if i < len(row) else 0
    return index


def support_check(spec: WalkSpec) -> SupportReport:
    """
    Check that the increment support generates Z^d and that the walk is
    aperiodic.

    The period is the index of the lattice generated by the differences
    x - x0 of support points inside the lattice generated by the support.
    For the Pareto laws a finite piece of the support ({1, 2} per axis)
    already decides the question.
    """
    d = spec.d
    if spec.finite_support:
        points, probs = spec.increment_pmf()
        points = points[probs > 0]
    else:
        mags = np.array([-2, -1, 1, 2])
        grids = np.meshgrid(*([mags] * d), indexing='ij')
        points = np.stack([g.ravel() for g in grids], axis=1)

    basis = _lattice_basis(points)
    full_index = _lattice_index(basis, d)
    diffs = points - points[0]
    diff_index = _lattice_index(_lattice_basis(diffs), d) if len(points) > 1 else 0

    generates = full_index == 1
    if full_index and diff_index:
        period = diff_index // full_index
    else:
        period = 0
    aperiodic = period == 1

    recommendation = ""
    if not generates:
        recommendation = f"support generates a proper sublattice {basis}"
    elif not aperiodic:
        recommendation = (f"walk has period {period}; add mass at 0 "
                          f"(LAZY_SRW) to make it aperiodic")

    certified = spec.law != Law.CUSTOM
    return SupportReport(generates, aperiodic, period, basis, certified, recommendation)


# Calibration

def calibrate_sigma_hat(spec: WalkSpec, n: int = 100_000, replicas: int = 2000,
                        master_seed: int = 0) -> float:
    """
    Estimate sigma_hat by matching the interquartile range of X_n / n^(1/beta)
    (first coordinate) to that of the standard symmetric beta-stable law.
    """
    if replicas < 50:
        raise DomainError(f"Need at least 50 replicas to calibrate, got {replicas}")
    ends = np.empty(replicas)
    for r in range(replicas):
        last = None
        for chunk in stream_path(spec, n, replica_seed(master_seed, r, stream=7)):
            last = chunk[-1]
        ends[r] = last[0]
    scaled = ends / n ** (1.0 / spec.beta)
    q1, q3 = np.percentile(scaled, [25, 75])
    law = stats.levy_stable(spec.beta, 0.0)
    ref = law.ppf(0.75) - law.ppf(0.25)
    sigma = float((q3 - q1) / ref)
    logger.info("Calibrated sigma_hat=%.4f for %s (n=%d, %d replicas)",
                sigma, spec.law.value, n, replicas)
    return sigma


@lru_cache(maxsize=32)
def calibrated_spec(spec: WalkSpec, n: int = 100_000, replicas: int = 2000,
                    master_seed: int = 0) -> WalkSpec:
    """The same law with sigma_hat replaced by its calibrated value"""
    return replace(spec, sigma_hat=calibrate_sigma_hat(spec, n, replicas, master_seed))
