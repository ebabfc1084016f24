"""
Replica ensembles and the acceptance suite.

Replicas are independent tasks: replica i of a run draws its walk from
replica_seed(master_seed, i), so every result is a pure function of the
configuration and the index. Results are written as JSON lines in replica
index order whatever the completion order of the workers.
"""

import json
import logging
import math
import os
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Union, TYPE_CHECKING

import numpy as np
from joblib import Parallel, delayed
from scipy import special

from .centering import CenteringTable
from .config import ExperimentConfig, load_tolerances
from .energy import (energy_discrete, energy_from_path, energy_interpolated, fine_range_paths,
                     rescaled_energy)
from .errors import ConfigError
from .rangekit import (decompose_range, increment_defect, intersection_stats, interpolate,
                       range_process, rescale_center, rescale_values)
from .regvar import KernelSpec, ScaleSuite, make_scale_suite
from .silt import (SiltEnsemble, build_centering_table, cross_term_estimate, decomposition_check,
                   gamma_paths, scaling_check, silt_estimate)
from .stats import (StatReport, envelope_constant, envelope_stability, holder_exponent, ks_test,
                    ratio_within, skewness_ci)
from .walks import WalkSpec, calibrated_spec, replica_seed, sample_path
from .youngint import (HolderPath, ibp_residual, singular_kernel_integral, time_inversion_check,
                       young_integral)

if TYPE_CHECKING:
    from numpy.typing import NDArray

logger = logging.getLogger(__name__)

RESULTS_FILE = "replicas.jsonl"
SECOND_WALK_STREAM = 2
INDEPENDENT_STREAM = 3


@dataclass
class ReplicaResult:
    """Grid values of the requested functionals for one replica"""
    index: int
    seed: int
    values: Dict[str, List[float]] = field(default_factory=dict)
    error: Optional[str] = None
    elapsed: float = 0.0
    kernel: Optional[dict] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def to_json_line(self) -> str:
        # timing is left out so that reruns produce identical files
        record = {'index': self.index, 'seed': self.seed, 'values': self.values}
        if self.error is not None:
            record['error'] = self.error
        if self.kernel is not None:
            record['kernel'] = self.kernel
        return json.dumps(record, sort_keys=True)

    @classmethod
    def from_json_line(cls, line: str) -> 'ReplicaResult':
        record = json.loads(line)
        return cls(int(record['index']), int(record['seed']),
                   {k: list(v) for k, v in record.get('values', {}).items()},
                   record.get('error'), kernel=record.get('kernel'))


def _grid_steps(cfg: ExperimentConfig) -> 'NDArray':
    return np.floor(cfg.n * np.asarray(cfg.t_grid)).astype(np.int64)


def run_replica(cfg: ExperimentConfig, index: int, suite: Optional[ScaleSuite] = None,
                centering: Optional[CenteringTable] = None) -> ReplicaResult:
    """Simulate replica `index` and evaluate the configured functionals"""
    start = time.perf_counter()
    seed = replica_seed(cfg.master_seed, index)
    path = sample_path(cfg.walk, cfg.horizon, seed)
    rp = range_process(path)
    times = cfg.n * np.asarray(cfg.t_grid)
    steps = _grid_steps(cfg)
    values: Dict[str, List[float]] = {}

    if "R" in cfg.functionals:
        values["R"] = rp.R[steps].astype(float).tolist()
    if "Rcal" in cfg.functionals:
        values["Rcal"] = interpolate(rp, times).tolist()
    if {"I", "J"} & set(cfg.functionals):
        other = sample_path(cfg.walk, cfg.horizon, replica_seed(cfg.master_seed, index,
                                                                SECOND_WALK_STREAM))
        table = intersection_stats(path, other, steps, steps)
        if "I" in cfg.functionals:
            values["I"] = np.diag(table.I).astype(float).tolist()
        if "J" in cfg.functionals:
            values["J"] = np.diag(table.J).astype(float).tolist()
    if "gamma" in cfg.functionals:
        if suite is None:
            raise ConfigError("gamma needs a scale suite")
        sample = silt_estimate(path, suite, cfg.T, cfg.depth, centering, cfg.n, cfg.count)
        values["gamma"] = [sample.gamma_hat]
        values["gamma_levels"] = list(sample.level_contributions)
    if "E" in cfg.functionals:
        values["E"] = energy_discrete(rp, cfg.kernel, times).tolist()
    if "Ecal" in cfg.functionals:
        values["Ecal"] = energy_interpolated(rp, cfg.kernel, times).tolist()
    kernel = cfg.kernel.to_dict() if cfg.kernel and {"E", "Ecal"} & set(cfg.functionals) else None
    return ReplicaResult(index, seed, values, None, time.perf_counter() - start, kernel)


def _run_replica_safe(cfg: ExperimentConfig, index: int, suite: Optional[ScaleSuite],
                      centering: Optional[CenteringTable]) -> ReplicaResult:
    try:
        return run_replica(cfg, index, suite, centering)
    except Exception as e:
        logger.warning("Replica %d failed: %s", index, e)
        return ReplicaResult(index, replica_seed(cfg.master_seed, index), {}, f"{type(e).__name__}: {e}")


def read_results(filename: Union[str, Path]) -> List[ReplicaResult]:
    with open(filename) as f:
        return [ReplicaResult.from_json_line(line) for line in f if line.strip()]


def run_experiment(cfg: ExperimentConfig, output: Optional[Union[str, Path]] = None,
                   resume: bool = False, suite: Optional[ScaleSuite] = None,
                   centering: Optional[CenteringTable] = None) -> Iterator[ReplicaResult]:
    """
    Run all replicas of `cfg` and yield their results in index order.

    Results stream into `<output_dir>/replicas.jsonl` (through a temporary
    file renamed at the end). With resume=True, successful replicas already
    in the output file are kept and only missing or failed ones are rerun.
    """
    out = Path(output) if output else Path(cfg.output_dir) / RESULTS_FILE
    out.parent.mkdir(parents=True, exist_ok=True)
    cfg.save(out.with_name("config.json"))

    kept: Dict[int, ReplicaResult] = {}
    if resume and out.exists():
        kept = {r.index: r for r in read_results(out) if r.ok and r.index < cfg.replicas}
        logger.info("Resuming: %d of %d replicas already done", len(kept), cfg.replicas)
    todo = [i for i in range(cfg.replicas) if i not in kept]
    if "gamma" in cfg.functionals and suite is not None:
        suite.h(cfg.n)

    logger.info("Running %d replicas of %s d=%d n=%d on %d workers",
                len(todo), cfg.walk.law.value, cfg.walk.d, cfg.n, cfg.n_jobs)
    fresh = iter(Parallel(n_jobs=cfg.n_jobs, return_as="generator")(
        delayed(_run_replica_safe)(cfg, i, suite, centering) for i in todo))

    tmp = out.with_suffix(out.suffix + ".tmp")
    failed = 0
    with open(tmp, "w") as f:
        for index in range(cfg.replicas):
            result = kept[index] if index in kept else next(fresh)
            failed += not result.ok
            f.write(result.to_json_line() + "\n")
            f.flush()
            yield result
    os.replace(tmp, out)
    logger.info("Finished %d replicas (%d failed) -> %s", cfg.replicas, failed, out)


def collect(results: Sequence[ReplicaResult], key: str) -> 'NDArray':
    """Matrix (replicas, grid) of one functional over successful replicas"""
    return np.array([r.values[key] for r in results if r.ok and key in r.values])


# Ensembles for the acceptance suite

def walk_from_settings(data: dict) -> WalkSpec:
    """
    Walk of a tolerance profile. Pareto laws without a sigma_hat entry are
    calibrated, with optional "calibration" settings {n, replicas, master_seed}.
    """
    data = dict(data)
    calibration = data.pop('calibration', {})
    spec = WalkSpec.from_dict(data)
    if spec.heavy_tailed and 'sigma_hat' not in data:
        spec = calibrated_spec(spec, **calibration)
    return spec


def _range_at(spec: WalkSpec, n: int, seed: int, steps: Sequence[int]) -> 'NDArray':
    rp = range_process(sample_path(spec, n, seed))
    return rp.R[np.asarray(steps)]


def range_ensemble(spec: WalkSpec, n: int, replicas: int, steps: Sequence[int],
                   master_seed: int = 0, n_jobs: int = 1, stream: int = 0) -> 'NDArray':
    """R at the given integer times for each replica, shape (replicas, len(steps))"""
    rows = Parallel(n_jobs=n_jobs)(
        delayed(_range_at)(spec, n, replica_seed(master_seed, i, stream), steps)
        for i in range(replicas))
    return np.stack(rows).astype(float)


def _process_at(spec: WalkSpec, n: int, seed: int):
    return range_process(sample_path(spec, n, seed))


def process_ensemble(spec: WalkSpec, n: int, replicas: int, master_seed: int = 0,
                     n_jobs: int = 1, stream: int = 0) -> list:
    return Parallel(n_jobs=n_jobs)(
        delayed(_process_at)(spec, n, replica_seed(master_seed, i, stream)) for i in range(replicas))


def _silt_replica(spec: WalkSpec, suite: ScaleSuite, n: int, t: float, depth: int,
                  table: CenteringTable, seed: int, cross_s: float = 0.0):
    path = sample_path(spec, int(math.floor(n * (t + cross_s))), seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        gamma = silt_estimate(path, suite, t, depth, table, n).gamma_hat
    cross = cross_term_estimate(path, suite, t, cross_s, n) if cross_s > 0 else 0.0
    return gamma, cross


def silt_ensemble(spec: WalkSpec, suite: ScaleSuite, n: int, t: float, depth: int,
                  table: CenteringTable, replicas: int, master_seed: int = 0, n_jobs: int = 1,
                  stream: int = 0, cross_s: float = 0.0):
    """gamma-hat ensemble at horizon t (and the cross term with (t, t + cross_s])"""
    suite.h(n)
    rows = Parallel(n_jobs=n_jobs)(
        delayed(_silt_replica)(spec, suite, n, t, depth, table,
                               replica_seed(master_seed, i, stream), cross_s)
        for i in range(replicas))
    gammas = np.array([r[0] for r in rows])
    crosses = np.array([r[1] for r in rows])
    return (SiltEnsemble(gammas, n, depth, t, "sites"),
            SiltEnsemble(crosses, n, depth, cross_s, "sites"))


# Acceptance criteria

def check_decomposition(s: dict, seed: int, n_jobs: int) -> List[StatReport]:
    spec = walk_from_settings(s['walk'])
    failures = 0
    for i in range(s['paths']):
        path = sample_path(spec, s['n'], replica_seed(seed, i))
        for p in s['blocks']:
            for closed in (False, True):
                failures += not decompose_range(path, s['n'], p, closed).exact
    return [StatReport("range-decomposition", failures, bound=0, passed=failures == 0,
                       sample_sizes=[s['paths']])]


def check_interpolation(s: dict, seed: int, n_jobs: int) -> List[StatReport]:
    spec = walk_from_settings(s['walk'])
    n = s['n']
    rng = np.random.default_rng(seed)
    worst_interp, worst_defect = 0.0, 0.0
    for i in range(s['paths']):
        rp = range_process(sample_path(spec, n, replica_seed(seed, i)))
        t = np.sort(rng.uniform(0, n, 256))
        worst_interp = max(worst_interp, float(np.max(np.abs(interpolate(rp, t) - rp.R[np.floor(t).astype(int)]))))
        for a, b in np.sort(rng.uniform(0, 1, (16, 2)), axis=1):
            worst_defect = max(worst_defect, abs(increment_defect(rp, n, a, b)))
    return [
        StatReport("interpolation-bound", worst_interp, bound=s['interp_bound'],
                   passed=worst_interp <= s['interp_bound'], sample_sizes=[s['paths']]),
        StatReport("increment-defect-bound", worst_defect, bound=s['defect_bound'],
                   passed=worst_defect <= s['defect_bound'], sample_sizes=[s['paths']]),
    ]


def check_young(s: dict, seed: int, n_jobs: int) -> List[StatReport]:
    N = s['grid']
    reports = []

    def report(name, error, tol):
        reports.append(StatReport(name, error, bound=tol, passed=error <= tol))

    g = HolderPath.from_function(lambda t: np.sin(3 * t) + t, 1.0, N)
    const = HolderPath.from_function(lambda t: np.full_like(t, 2.5), 1.0, N)
    report("young-constant", abs(young_integral(const, g).value - 2.5 * (g.values[-1] - g.values[0])),
           s['telescoping_tol'])
    ident = HolderPath.from_function(lambda t: t, 1.0, N)
    report("young-linear", abs(young_integral(ident, ident).value - 0.5), s['linear_tol'])
    square = HolderPath.from_function(lambda t: t ** 2, 1.0, N)
    cube = HolderPath.from_function(lambda t: t ** 3, 1.0, N)
    report("young-polynomial", abs(young_integral(square, cube).value - 0.6), s['oracle_tol'])

    report("singular-chi-zero", abs(singular_kernel_integral(g, 0.0, 1.0) - (g.values[-1] - g.values[0])),
           s['telescoping_tol'])
    report("singular-linear", abs(singular_kernel_integral(ident, 0.5, 1.0) - 2.0 / 3.0), s['linear_tol'])
    report("singular-beta", abs(singular_kernel_integral(square, -0.25, 1.0) - 2.0 * special.beta(2.0, 0.75)),
           s['oracle_tol'])

    rng = np.random.default_rng(seed)
    M = s['random_grid']
    grid = np.linspace(0.0, 1.0, M + 1)
    f = HolderPath(grid, np.cumsum(rng.uniform(-1, 1, M + 1)) / math.sqrt(M))
    h = HolderPath(grid, np.cumsum(rng.uniform(-1, 1, M + 1)) / math.sqrt(M))
    for name, check in (("ibp-residual", ibp_residual(f, h)),
                        ("time-inversion", time_inversion_check(f, h))):
        reports.append(StatReport(name, check.residual, bound=check.bound, passed=check.ok))
    return reports


def check_sub_mean(s: dict, seed: int, n_jobs: int) -> List[StatReport]:
    spec = walk_from_settings(s['walk'])
    n = s['n']
    R = range_ensemble(spec, n, s['replicas'], [n], seed, n_jobs)[:, 0]
    suite = make_scale_suite(spec.d, spec.beta, spec, n)
    mean = float(np.mean(R * suite.S(n)))
    report = ratio_within(mean, s['target'], s['tol'], "sub-range-mean")
    report.sample_sizes = [s['replicas']]
    return [report]


def check_sup_gaussian(s: dict, seed: int, n_jobs: int) -> List[StatReport]:
    spec = walk_from_settings(s['walk'])
    n = s['n']
    R = range_ensemble(spec, n, s['replicas'], [n // 2, n], seed, n_jobs)
    normal = ks_test((R[:, 1] - R[:, 1].mean()) / math.sqrt(n), None, s['alpha'], "sup-gaussian")
    var_ratio = ratio_within(R[:, 1].var(ddof=1) / n, R[:, 0].var(ddof=1) / (n // 2),
                             s['var_tol'], "sup-variance-linear")
    return [normal, var_ratio]


def check_boundary(s: dict, seed: int, n_jobs: int) -> List[StatReport]:
    spec = walk_from_settings(s['walk'])
    small, large = s['ns']
    suite = make_scale_suite(spec.d, spec.beta, spec, large)
    scaled = {}
    for n in (small, large):
        R = range_ensemble(spec, n, s['replicas'], [n], seed, n_jobs)[:, 0]
        scaled[n] = R.var(ddof=1) / (n * suite.g(n))
    return [ratio_within(scaled[large], scaled[small], s['tol'], "boundary-variance")]


def check_mid(s: dict, seed: int, n_jobs: int) -> List[StatReport]:
    spec = walk_from_settings(s['walk'])
    small, large = s['ns']
    scaled, finals = {}, {}
    for n in (small, large):
        R = range_ensemble(spec, n, s['replicas'], [n], seed, n_jobs)[:, 0]
        scaled[n] = R.var(ddof=1) * math.log(n) ** 4 / n ** 2
        finals[n] = R
    reports = [ratio_within(scaled[large], scaled[small], s['var_tol'], "mid-variance")]

    skew, low, high = skewness_ci(finals[small], s['n_boot'], seed)
    reports.append(StatReport("mid-negative-skewness", skew, bound=0.0, passed=high < 0.0,
                              sample_sizes=[len(finals[small])], details={'ci': [low, high]}))

    n = s['gamma_n']
    suite = make_scale_suite(spec.d, spec.beta, spec, n)
    table = build_centering_table(spec, n, 1.0, s['depth'], "sites", s['pilot_replicas'],
                                  seed, n_jobs)
    gammas, _ = silt_ensemble(spec, suite, n, 1.0, s['depth'], table, s['gamma_replicas'],
                              seed, n_jobs)
    R = range_ensemble(spec, n, s['gamma_replicas'], [n], seed, n_jobs, INDEPENDENT_STREAM)
    ranges = rescale_values(R, suite.S(n), center=True)[:, 0]
    reports.append(ks_test(gammas.values, -ranges, s['alpha'], "gamma-vs-range"))
    return reports


def check_gamma_scaling(s: dict, seed: int, n_jobs: int) -> List[StatReport]:
    spec = walk_from_settings(s['walk'])
    n, t, depth = s['n'], s['t'], s['depth']
    suite = make_scale_suite(spec.d, spec.beta, spec, n)
    ensembles = []
    for horizon, levels in ((t, depth - 1), (1.0, depth)):
        table = build_centering_table(spec, n, horizon, levels, "sites", s['pilot_replicas'],
                                      seed, n_jobs)
        ensembles.append(silt_ensemble(spec, suite, n, horizon, levels, table, s['replicas'],
                                       seed, n_jobs)[0])
    return [scaling_check(ensembles[0], ensembles[1], suite, s['alpha'])]


def check_gamma_decomposition(s: dict, seed: int, n_jobs: int) -> List[StatReport]:
    spec = walk_from_settings(s['walk'])
    n, depth = s['n'], s['depth']
    suite = make_scale_suite(spec.d, spec.beta, spec, n)
    half = build_centering_table(spec, n, 0.5, depth - 1, "sites", s['pilot_replicas'], seed, n_jobs)
    whole = build_centering_table(spec, n, 1.0, depth, "sites", s['pilot_replicas'], seed, n_jobs)
    first, cross = silt_ensemble(spec, suite, n, 0.5, depth - 1, half, s['replicas'], seed,
                                 n_jobs, cross_s=0.5)
    second, _ = silt_ensemble(spec, suite, n, 0.5, depth - 1, half, s['replicas'], seed,
                              n_jobs, stream=INDEPENDENT_STREAM)
    full, _ = silt_ensemble(spec, suite, n, 1.0, depth, whole, s['replicas'], seed, n_jobs,
                            stream=SECOND_WALK_STREAM)
    law = decomposition_check(first, second, cross, full, 1.0, seed, s['alpha'])
    control = decomposition_check(first, second, cross, full, s['negative_factor'], seed, s['alpha'])
    control.name = "gamma-decomposition-negative-control"
    control.passed = control.p_value < s['alpha']
    return [law, control]


def check_energy_sup(s: dict, seed: int, n_jobs: int) -> List[StatReport]:
    spec = walk_from_settings(s['walk'])
    n = s['n']
    suite = make_scale_suite(spec.d, spec.beta, spec, n)
    ensemble = process_ensemble(spec, n, s['replicas'], seed, n_jobs)
    reports, variances = [], {}
    for delta in s['deltas']:
        k = KernelSpec(delta=delta)
        values = np.array([p(1.0) for p in rescaled_energy(ensemble, suite, k, [0.0, 1.0])])
        reports.append(ks_test(values, None, s['alpha'], f"energy-gaussian-chi={-delta:g}"))
        variances[delta] = values.var(ddof=1)
    base, other = s['deltas'][0], s['deltas'][-1]
    target = (2 * -base + 1) / (2 * -other + 1)
    reports.append(ratio_within(variances[other] / variances[base], target, s['ratio_tol'],
                                "energy-variance-ratio"))
    return reports


def check_energy_identity(s: dict, seed: int, n_jobs: int) -> List[StatReport]:
    spec = walk_from_settings(s['walk'])
    n = s['n']
    ensemble = process_ensemble(spec, n, s['replicas'], seed, n_jobs)
    flat = KernelSpec(delta=0.0)
    times = np.linspace(0.0, n, 4 * n + 1)
    worst = 0.0
    for rp in ensemble:
        E = energy_discrete(rp, flat, times)
        Ecal = energy_interpolated(rp, flat, times)
        worst = max(worst, float(np.max(np.abs(E - (rp.R[np.floor(times).astype(int)] - rp.R[0])))),
                    float(np.max(np.abs(Ecal - (interpolate(rp, times) - 1.0)))))
    reports = [StatReport("energy-flat-kernel", worst, bound=s['exact_tol'],
                          passed=worst <= s['exact_tol'], sample_sizes=[len(ensemble)])]

    suite = make_scale_suite(spec.d, spec.beta, spec, n)
    k = KernelSpec(delta=s['delta'])
    t_grid = np.linspace(0.0, 1.0, 9)
    direct = rescaled_energy(ensemble, suite, k, t_grid)
    fine = fine_range_paths(ensemble, suite, 1.0)
    gap = 0.0
    for path, energy in zip(fine, direct):
        for t in t_grid[1:]:
            gap = max(gap, abs(energy_from_path(path, k, n, t) - float(energy(t))))
    scale = max(1.0, max(float(np.max(np.abs(p.values))) for p in direct))
    reports.append(StatReport("energy-ibp-identity", gap, bound=s['identity_tol'] * scale,
                              passed=gap <= s['identity_tol'] * scale, sample_sizes=[len(ensemble)]))
    return reports


def _holder_paths(spec: WalkSpec, n: int, s: dict, seed: int, n_jobs: int) -> List[HolderPath]:
    points = s['grid_points']
    t_grid = np.arange(points + 1) / points
    steps = np.floor(n * t_grid).astype(np.int64)
    R = range_ensemble(spec, n, s['paths'], steps, seed, n_jobs)
    suite = make_scale_suite(spec.d, spec.beta, spec, n)
    return rescale_center(R, suite, t_grid, n)


def check_holder(s: dict, seed: int, n_jobs: int) -> List[StatReport]:
    reports = []
    for regime in ("sup", "mid"):
        spec = walk_from_settings(s[f'{regime}_walk'])
        estimate = holder_exponent(_holder_paths(spec, s[f'{regime}_n'], s, seed, n_jobs), seed=seed)
        low, high = s[f'{regime}_range']
        reports.append(StatReport(f"holder-{regime}", estimate.alpha, bound=high,
                                  passed=low < estimate.alpha < high, sample_sizes=[s['paths']],
                                  details={'ci': [estimate.ci_low, estimate.ci_high]}))
    if 'gamma_walk' in s:
        reports.append(_check_gamma_holder(s, seed, n_jobs))
    return reports


def _check_gamma_holder(s: dict, seed: int, n_jobs: int) -> StatReport:
    spec = walk_from_settings(s['gamma_walk'])
    n, depth = s['gamma_n'], s['gamma_depth']
    suite = make_scale_suite(spec.d, spec.beta, spec, n)
    times = np.arange(s['gamma_points'] + 1) / s['gamma_points']
    tables = {float(t): build_centering_table(spec, n, float(t), depth, "sites",
                                              s['pilot_replicas'], seed, n_jobs)
              for t in times[1:]}
    paths = gamma_paths(spec, suite, n, times, depth, tables, s['paths'], seed, n_jobs)
    estimate = holder_exponent(paths, seed=seed)
    low, high = s['gamma_range']
    return StatReport("holder-gamma", estimate.alpha, bound=high,
                      passed=low <= estimate.alpha <= high, sample_sizes=[s['paths']],
                      details={'ci': [estimate.ci_low, estimate.ci_high]})


def _mean_intersections(spec: WalkSpec, n: int, times: Sequence[float], pairs: int,
                        seed: int, n_jobs: int) -> 'NDArray':
    steps = np.floor(n * np.asarray(times)).astype(np.int64)

    def one(i):
        a = sample_path(spec, n, replica_seed(seed, i))
        b = sample_path(spec, n, replica_seed(seed, i, SECOND_WALK_STREAM))
        return intersection_stats(a, b, steps, steps).I

    return np.mean(Parallel(n_jobs=n_jobs, prefer="threads")(delayed(one)(i) for i in range(pairs)),
                   axis=0)


def check_envelope(s: dict, seed: int, n_jobs: int) -> List[StatReport]:
    reports = []
    times = s['times']
    for regime in ("mid", "sup"):
        spec = walk_from_settings(s[f'{regime}_walk'])
        constants = {}
        for n in s['ns']:
            suite = make_scale_suite(spec.d, spec.beta, spec, n)
            I = _mean_intersections(spec, n, times, s['pairs'], seed, n_jobs)
            scaled = {(a, b): suite.S(n) * I[i, j] for i, a in enumerate(times)
                      for j, b in enumerate(times)}
            constants[n] = envelope_constant(scaled, suite.chi, s['eta'])
        report = envelope_stability(constants, s['factor'], two_sided=(regime == "mid"))
        report.name = f"envelope-{regime}"
        reports.append(report)
    return reports


CRITERIA_SETTINGS: Dict[int, str] = {
    1: "decomposition", 2: "interpolation", 3: "young", 4: "sub_mean", 5: "sup_gaussian",
    6: "boundary", 7: "mid", 8: "gamma_scaling", 9: "gamma_decomposition", 10: "energy_sup",
    11: "energy_identity", 12: "holder", 13: "envelope",
}

CHECKS: Dict[int, Callable[[dict, int, int], List[StatReport]]] = {
    1: check_decomposition, 2: check_interpolation, 3: check_young, 4: check_sub_mean,
    5: check_sup_gaussian, 6: check_boundary, 7: check_mid, 8: check_gamma_scaling,
    9: check_gamma_decomposition, 10: check_energy_sup, 11: check_energy_identity,
    12: check_holder, 13: check_envelope,
}


def run_criterion(criterion: int, tolerances: dict, master_seed: int = 0,
                  n_jobs: int = 1) -> List[StatReport]:
    return CHECKS[criterion](tolerances[CRITERIA_SETTINGS[criterion]], master_seed, n_jobs)


def acceptance_suite(profile: str = "fast", master_seed: int = 0, n_jobs: int = 1,
                     tolerances_file: Optional[Union[str, Path]] = None,
                     criteria: Optional[Sequence[int]] = None) -> List[StatReport]:
    """
    Run the criteria of a tolerance profile, or the given subset of them.

    Raises:
        ConfigError: for an unknown profile, or a criterion the profile has
            no settings for
    """
    tolerances = load_tolerances(profile, tolerances_file)
    selected = tolerances['criteria'] if criteria is None else list(criteria)
    missing = [c for c in selected if c not in CHECKS]
    if missing:
        raise ConfigError(f"Unknown acceptance criteria: {missing}")
    absent = [c for c in selected if CRITERIA_SETTINGS[c] not in tolerances]
    if absent:
        raise ConfigError(f"Profile '{profile}' has no settings for criteria {absent}")
    reports = []
    for criterion in selected:
        logger.info("Acceptance criterion %d (%s profile)", criterion, profile)
        start = time.perf_counter()
        for report in run_criterion(criterion, tolerances, master_seed, n_jobs):
            report.details.setdefault('criterion', criterion)
            reports.append(report)
        logger.info("Criterion %d done in %.1f s", criterion, time.perf_counter() - start)
    return reports


# Reports

def summarize(results: Sequence[ReplicaResult], key: str) -> Dict[str, 'NDArray']:
    """Mean, variance and quartiles per grid time of one functional"""
    values = collect(results, key)
    if values.size == 0:
        raise ConfigError(f"No successful replica carries '{key}'")
    q = np.percentile(values, [5, 25, 50, 75, 95], axis=0)
    return {
        'mean': values.mean(axis=0),
        'var': values.var(axis=0, ddof=1) if len(values) > 1 else np.zeros(values.shape[1]),
        'q05': q[0], 'q25': q[1], 'q50': q[2], 'q75': q[3], 'q95': q[4],
    }


def write_report(results: Sequence[ReplicaResult], t_grid: Sequence[float], key: str,
                 csv_path: Union[str, Path], dat_path: Optional[Union[str, Path]] = None) -> None:
    """CSV summary per grid time and an optional whitespace-separated data file"""
    summary = summarize(results, key)
    columns = ['t'] + list(summary)
    if len(t_grid) != len(summary['mean']):
        t_grid = list(range(len(summary['mean'])))
    rows = np.column_stack([np.asarray(t_grid, dtype=float)] + [summary[c] for c in summary])
    np.savetxt(csv_path, rows, delimiter=",", header=",".join(columns), comments="", fmt="%.10g")
    if dat_path:
        np.savetxt(dat_path, rows, header=" ".join(columns), fmt="%.10g")
