"""
rangewalk - Monte Carlo laboratory for random walk range fluctuations

Simulates lattice random walks attracted to beta-stable laws and provides:
- Range, intersection and self-intersection functionals of the walks
- Scale functions, Green functions and memory kernels
- Young integrals and the singular-kernel integral of Hoelder paths
- Energy functionals and their limits
- Replica ensembles, statistical checks and the acceptance suite

License: MIT
"""

__version__ = "0.1.0"

from .errors import (
    RangewalkError, DomainError, ResourceBudgetError, ConvergenceError,
    CenteringError, ScaleMismatchError, ConfigError, SampleSizeError
)
from .walks import (
    Law, WalkSpec, PathSample, replica_seed, sample_path, stream_path,
    char_fn, char_fn_defect, support_check, calibrate_sigma_hat, calibrated_spec
)
from .regvar import (
    Regime, ScaleSuite, KernelSpec, classify_regime, regime_chi, energy_chi_bound,
    make_scale_suite, green_truncated, estimate_green, potter_check, ratio_test,
    kernel_eval, kernel_derivative, kernel_rescaled
)
from .rangekit import (
    RangeProcess, range_process, streaming_range, interpolate, subrange,
    decompose_range, intersect_count, pair_count, intersection_stats,
    block_quantities, increment_defect, rescale_center, escape_probability_estimate
)
from .youngint import (
    HolderPath, young_integral, ibp_residual, time_inversion_check,
    singular_kernel_integral, singular_kernel_batch, singular_kernel_cutoff, cutoff_check
)
from .centering import CenteringTable, CenteringStore
from .silt import (
    DyadicBlock, SiltSample, SiltEnsemble, dyadic_blocks, block_counts, silt_estimate,
    build_centering_table, cross_term_estimate, decomposition_check, scaling_check
)
from .energy import (
    EnergySample, energy_discrete, energy_interpolated, energy_sample, rescaled_energy,
    energy_from_path, limit_energy_sampler
)
from .stats import (
    StatReport, ks_test, holder_exponent, estimate_sigma2, sigma2_stability,
    covariance_check, moment_ratio_report
)
from .config import ExperimentConfig, load_tolerances
from .harness import ReplicaResult, run_experiment, read_results, acceptance_suite

__all__ = [
    'RangewalkError', 'DomainError', 'ResourceBudgetError', 'ConvergenceError',
    'CenteringError', 'ScaleMismatchError', 'ConfigError', 'SampleSizeError',
    'Law', 'WalkSpec', 'PathSample', 'replica_seed', 'sample_path', 'stream_path',
    'char_fn', 'char_fn_defect', 'support_check', 'calibrate_sigma_hat', 'calibrated_spec',
    'Regime', 'ScaleSuite', 'KernelSpec', 'classify_regime', 'regime_chi', 'energy_chi_bound',
    'make_scale_suite', 'green_truncated', 'estimate_green', 'potter_check', 'ratio_test',
    'kernel_eval', 'kernel_derivative', 'kernel_rescaled',
    'RangeProcess', 'range_process', 'streaming_range', 'interpolate', 'subrange',
    'decompose_range', 'intersect_count', 'pair_count', 'intersection_stats',
    'block_quantities', 'increment_defect', 'rescale_center', 'escape_probability_estimate',
    'HolderPath', 'young_integral', 'ibp_residual', 'time_inversion_check',
    'singular_kernel_integral', 'singular_kernel_batch', 'singular_kernel_cutoff', 'cutoff_check',
    'CenteringTable', 'CenteringStore',
    'DyadicBlock', 'SiltSample', 'SiltEnsemble', 'dyadic_blocks', 'block_counts', 'silt_estimate',
    'build_centering_table', 'cross_term_estimate', 'decomposition_check', 'scaling_check',
    'EnergySample', 'energy_discrete', 'energy_interpolated', 'energy_sample', 'rescaled_energy',
    'energy_from_path', 'limit_energy_sampler',
    'StatReport', 'ks_test', 'holder_exponent', 'estimate_sigma2', 'sigma2_stability',
    'covariance_check', 'moment_ratio_report',
    'ExperimentConfig', 'load_tolerances',
    'ReplicaResult', 'run_experiment', 'read_results', 'acceptance_suite',
]
