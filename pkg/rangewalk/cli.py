"""
Command-line interface for rangewalk.

Runs replica ensembles, the limit-law suites and the acceptance profiles, and
turns replica files into CSV / gnuplot summaries.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .centering import CenteringStore
from .config import ExperimentConfig, FUNCTIONALS, apply_env_overrides
from .errors import CenteringError, ConfigError
from .harness import (RESULTS_FILE, acceptance_suite, collect, range_ensemble, read_results,
                      run_experiment, silt_ensemble, write_report)
from .rangekit import rescale_center
from .regvar import KernelSpec, make_scale_suite
from .silt import build_centering_table, default_depth
from .stats import holder_exponent
from .walks import Law, WalkSpec, calibrated_spec, replica_seed, sample_path

# acceptance criteria behind each limit-law suite
FLUCTUATION_CRITERIA = [4, 5, 6, 7]
SILT_CRITERIA = [8, 9]
ENERGY_CRITERIA = [10, 11]


def parse_kernel(text: str = None, kernel_file: str = None, chi: float = None) -> KernelSpec:
    """`L,delta` or a two-column table file with its declared index"""
    if kernel_file:
        if chi is None:
            raise ValueError("--kernel-file needs --kernel-chi")
        return KernelSpec.from_file(kernel_file, chi)
    if not text:
        raise ValueError("No kernel given; use --kernel L,delta or --kernel-file")
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError(f"Kernel must be 'L,delta', got '{text}'")
    return KernelSpec(L=float(parts[0]), delta=float(parts[1]))


def walk_from_args(args) -> WalkSpec:
    """Walk from the command line; Pareto laws without --sigma-hat are calibrated"""
    law = Law(args.law)
    beta = 2.0 if law in (Law.SRW, Law.LAZY_SRW) else args.beta
    walk = WalkSpec(d=args.d, beta=beta, law=law, hold=args.hold if law == Law.LAZY_SRW else 0.0,
                    sigma_hat=args.sigma_hat or 1.0)
    if walk.heavy_tailed and args.sigma_hat is None:
        print(f"Calibrating sigma_hat: n={args.calibration_n}, {args.calibration_replicas} replicas")
        walk = calibrated_spec(walk, args.calibration_n, args.calibration_replicas, args.seed)
        print(f"Calibrated sigma_hat: {walk.sigma_hat:.4f}")
    return walk


def print_reports(reports) -> int:
    """Print one line per report and return the number of failures"""
    failures = 0
    for report in reports:
        print(f"  {report.summary()}")
        failures += not report.passed
    print()
    print(f"{len(reports) - failures}/{len(reports)} checks passed")
    return failures


def save_reports(reports, output: str) -> None:
    Path(output).write_text(json.dumps([r.to_dict() for r in reports], indent=2, default=float))
    print(f"Saved reports to: {output}")


def simulate_command(args):
    """Run a replica ensemble and stream it to a JSON-lines file"""
    try:
        if args.config:
            cfg = ExperimentConfig.load(args.config)
        else:
            kernel = None
            if args.kernel or args.kernel_file:
                kernel = parse_kernel(args.kernel, args.kernel_file, args.kernel_chi)
            cfg = apply_env_overrides(ExperimentConfig(
                walk=walk_from_args(args), n=args.n, replicas=args.replicas,
                t_grid=[k / args.grid for k in range(args.grid + 1)], kernel=kernel,
                functionals=args.functionals.split(","), master_seed=args.seed,
                output_dir=args.output_dir, n_jobs=args.jobs))
    except Exception as e:
        print(f"Error building configuration: {e}")
        return 1

    print(f"Simulating {cfg.replicas} replicas: {cfg.walk.law.value} d={cfg.walk.d} "
          f"beta={cfg.walk.beta} n={cfg.n}")
    print("=" * 50)

    try:
        suite = centering = None
        if "gamma" in cfg.functionals:
            suite = make_scale_suite(cfg.walk.d, cfg.walk.beta, cfg.walk, cfg.n)
            depth = cfg.depth or default_depth(cfg.n)
            store = CenteringStore(args.store_dir)
            try:
                centering = store.load(cfg.walk.spec_hash(), cfg.n, depth, cfg.T, cfg.count)
            except CenteringError:
                centering = build_centering_table(cfg.walk, cfg.n, cfg.T, depth, cfg.count,
                                                  args.pilot_replicas, cfg.master_seed, cfg.n_jobs)
                store.save(centering)

        failed = 0
        for result in run_experiment(cfg, resume=args.resume, suite=suite, centering=centering):
            failed += not result.ok
            if not result.ok:
                print(f"  replica {result.index}: {result.error}")

        if args.export_paths:
            out = Path(args.export_paths)
            out.mkdir(parents=True, exist_ok=True)
            for i in range(min(args.export_count, cfg.replicas)):
                path = sample_path(cfg.walk, cfg.horizon, replica_seed(cfg.master_seed, i))
                path.export(out / f"path_{i:05d}.bin")
            print(f"Exported {min(args.export_count, cfg.replicas)} paths to: {out}")

        print(f"Replicas: {cfg.replicas} ({failed} failed)")
        print(f"Results: {Path(cfg.output_dir) / RESULTS_FILE}")
    except Exception as e:
        print(f"Error running experiment: {e}")
        return 1

    return 0 if failed == 0 else 1


def suite_command(title: str, criteria, profile: str, seed: int, jobs: int, output: str = None):
    """Run a subset of acceptance criteria and print the reports"""
    print(f"{title} ({profile} profile, criteria {', '.join(map(str, criteria))})")
    print("=" * 50)
    try:
        reports = acceptance_suite(profile, seed, jobs, criteria=criteria)
    except Exception as e:
        print(f"Error running {title.lower()}: {e}")
        return 1
    failures = print_reports(reports)
    if output:
        save_reports(reports, output)
    return 0 if failures == 0 else 1


def silt_command(args):
    """gamma-hat ensemble for one walk, or the scaling/decomposition suites"""
    if args.suite:
        return suite_command("Self-intersection suites", SILT_CRITERIA, args.profile,
                             args.seed, args.jobs, args.output)

    try:
        walk = walk_from_args(args)
        depth = args.depth or default_depth(args.n)
        suite = make_scale_suite(walk.d, walk.beta, walk, args.n)
        print(f"gamma-hat: {walk.law.value} d={walk.d} n={args.n} t={args.t:g} depth={depth}")
        print("=" * 50)

        store = CenteringStore(args.store_dir)
        try:
            table = store.load(walk.spec_hash(), args.n, depth, args.t)
            print(f"Using stored centering table ({table.replicas} pilot replicas)")
        except CenteringError:
            table = build_centering_table(walk, args.n, args.t, depth, "sites",
                                          args.pilot_replicas, args.seed, args.jobs)
            saved = store.save(table)
            print(f"Built centering table ({table.replicas} pilot replicas)"
                  + (f" -> {saved}" if saved else ""))

        gammas, _ = silt_ensemble(walk, suite, args.n, args.t, depth, table, args.replicas,
                                  args.seed, args.jobs)
        values = gammas.values
        print(f"Replicas: {len(values)}")
        print(f"Mean:     {values.mean():.6g}")
        print(f"Variance: {values.var(ddof=1):.6g}")
        q = np.percentile(values, [5, 50, 95])
        print(f"Quantiles 5/50/95%: {q[0]:.4g} {q[1]:.4g} {q[2]:.4g}")
        if args.output:
            np.savetxt(args.output, values, header=f"gamma-hat n={args.n} t={args.t:g} depth={depth}")
            print(f"Saved values to: {args.output}")
    except Exception as e:
        print(f"Error estimating self-intersections: {e}")
        return 1
    return 0


def energy_command(args):
    """Energy ensemble for one walk and kernel, or the energy suites"""
    if args.suite:
        return suite_command("Energy suites", ENERGY_CRITERIA, args.profile, args.seed,
                             args.jobs, args.output)

    try:
        kernel = parse_kernel(args.kernel, args.kernel_file, args.kernel_chi)
        cfg = apply_env_overrides(ExperimentConfig(
            walk=walk_from_args(args), n=args.n, replicas=args.replicas,
            t_grid=[k / args.grid for k in range(args.grid + 1)], kernel=kernel,
            functionals=["E", "Ecal"], master_seed=args.seed, output_dir=args.output_dir,
            n_jobs=args.jobs))
        print(f"Energy: {cfg.walk.law.value} d={cfg.walk.d} n={cfg.n} kernel={kernel.to_dict()}")
        print("=" * 50)

        results = list(run_experiment(cfg, resume=args.resume))
        E, Ecal = collect(results, "E"), collect(results, "Ecal")
        if E.size == 0:
            print("No successful replicas")
            return 1
        print(f"Replicas: {len(E)} of {cfg.replicas}")
        print(f"Mean E_n:    {E[:, -1].mean():.6g}")
        print(f"Mean Ecal_n: {Ecal[:, -1].mean():.6g}")
        print(f"Max |Ecal - E|: {np.max(np.abs(Ecal - E)):.4g}")
        print(f"Results: {Path(cfg.output_dir) / RESULTS_FILE}")
    except Exception as e:
        print(f"Error running energy ensemble: {e}")
        return 1
    return 0


def holder_command(args):
    """Hoelder exponent of rescaled range paths of one walk"""
    try:
        walk = walk_from_args(args)
        suite = make_scale_suite(walk.d, walk.beta, walk, args.n)
        print(f"Hoelder exponent: {walk.law.value} d={walk.d} n={args.n} "
              f"({suite.regime.value}, chi={suite.chi:g})")
        print("=" * 50)

        t_grid = np.arange(args.grid + 1) / args.grid
        steps = np.floor(args.n * t_grid).astype(np.int64)
        R = range_ensemble(walk, args.n, args.paths, steps, args.seed, args.jobs)
        estimate = holder_exponent(rescale_center(R, suite, t_grid, args.n),
                                   n_boot=args.n_boot, seed=args.seed)
        print(f"alpha-hat: {estimate.alpha:.4f}")
        print(f"95% CI:    [{estimate.ci_low:.4f}, {estimate.ci_high:.4f}]")
    except Exception as e:
        print(f"Error estimating Hoelder exponent: {e}")
        return 1
    return 0


def verify_command(profile: str, seed: int, jobs: int, output: str = None):
    """Run an acceptance profile; exit code 0 only if every check passes"""
    print(f"Acceptance suite: {profile} profile")
    print("=" * 50)
    try:
        reports = acceptance_suite(profile, seed, jobs)
    except ConfigError as e:
        print(f"Error: {e}")
        return 1
    except Exception as e:
        print(f"Error running acceptance suite: {e}")
        return 1
    failures = print_reports(reports)
    if output:
        save_reports(reports, output)
    return 0 if failures == 0 else 1


def report_command(results_file: str, key: str, output: str = None, dat: str = None):
    """CSV summary (and gnuplot data file) of one functional in a replica file"""
    try:
        results = read_results(results_file)
        config_file = Path(results_file).with_name("config.json")
        t_grid = []
        if config_file.exists():
            t_grid = ExperimentConfig.from_json(config_file.read_text()).t_grid
        csv_path = output or str(Path(results_file).with_suffix(f".{key}.csv"))
        write_report(results, t_grid, key, csv_path, dat)
    except Exception as e:
        print(f"Error writing report: {e}")
        return 1

    print(f"Replicas read: {len(results)} ({sum(not r.ok for r in results)} failed)")
    print(f"CSV summary: {csv_path}")
    if dat:
        print(f"Data file: {dat}")
    return 0


def add_walk_arguments(parser):
    parser.add_argument('--law', default='SRW', choices=[l.value for l in Law if l != Law.CUSTOM],
                        help='Increment law (default: SRW)')
    parser.add_argument('--d', type=int, default=2, help='Lattice dimension (default: 2)')
    parser.add_argument('--beta', type=float, default=2.0,
                        help='Stability index for Pareto laws (default: 2.0)')
    parser.add_argument('--hold', type=float, default=0.5,
                        help='Hold probability of LAZY_SRW (default: 0.5)')
    parser.add_argument('--sigma-hat', type=float,
                        help='Normalisation constant of b(n) (default: 1.0, calibrated for Pareto laws)')
    parser.add_argument('--calibration-n', type=int, default=100_000,
                        help='Horizon of the sigma_hat calibration (default: 100000)')
    parser.add_argument('--calibration-replicas', type=int, default=2000,
                        help='Replicas of the sigma_hat calibration (default: 2000)')
    parser.add_argument('--n', type=int, default=4096, help='Horizon in steps (default: 4096)')
    parser.add_argument('--seed', type=int, default=0, help='Master seed (default: 0)')
    parser.add_argument('--jobs', type=int, default=1, help='Parallel workers (default: 1)')


def add_kernel_arguments(parser):
    parser.add_argument('--kernel', help="Parametric kernel 'L,delta', m(t) = L / (1 + t)^delta")
    parser.add_argument('--kernel-file', help='Two-column table t, m(t)')
    parser.add_argument('--kernel-chi', type=float, help='Declared index of a tabulated kernel')


def add_suite_arguments(parser):
    parser.add_argument('--suite', action='store_true', help='Run the acceptance suites instead')
    parser.add_argument('--profile', default='full', help='Tolerance profile (default: full)')


def main():
    """Main command-line interface"""
    parser = argparse.ArgumentParser(
        description="rangewalk - Monte Carlo laboratory for random walk range fluctuations",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  rangewalk simulate --law LAZY_SRW --d 2 --n 65536 --replicas 100   # Range ensemble
  rangewalk fluctuations --profile full                             # Range regime suites
  rangewalk silt --law LAZY_SRW --d 2 --n 16384 --t 1               # gamma-hat ensemble
  rangewalk energy --d 4 --n 10000 --kernel 1,0.25                  # Energy ensemble
  rangewalk holder --d 4 --n 100000 --paths 200                     # Hoelder exponent
  rangewalk young-selftest                                          # Young integral oracles
  rangewalk verify --profile fast                                   # Acceptance suite
  rangewalk report rangewalk_output/replicas.jsonl --key R          # CSV summary
        """
    )
    parser.add_argument('-v', '--verbose', action='store_true', help='Debug logging')

    subparsers = parser.add_subparsers(dest='command', help='Available commands')

    # Simulate command
    simulate_parser = subparsers.add_parser('simulate', help='Run a replica ensemble')
    add_walk_arguments(simulate_parser)
    add_kernel_arguments(simulate_parser)
    simulate_parser.add_argument('--config', help='Experiment config file (JSON)')
    simulate_parser.add_argument('--replicas', type=int, default=100,
                                 help='Number of replicas (default: 100)')
    simulate_parser.add_argument('--grid', type=int, default=16,
                                 help='Time grid points per unit time (default: 16)')
    simulate_parser.add_argument('--functionals', default='R,Rcal',
                                 help=f"Comma-separated subset of {','.join(FUNCTIONALS)} (default: R,Rcal)")
    simulate_parser.add_argument('--output-dir', default='rangewalk_output',
                                 help='Output directory (default: rangewalk_output)')
    simulate_parser.add_argument('--resume', action='store_true', help='Rerun only missing replicas')
    simulate_parser.add_argument('--store-dir', help='Centering table directory')
    simulate_parser.add_argument('--pilot-replicas', type=int, default=500,
                                 help='Pilot replicas for centering tables (default: 500)')
    simulate_parser.add_argument('--export-paths', help='Directory for binary path exports')
    simulate_parser.add_argument('--export-count', type=int, default=10,
                                 help='Number of paths to export (default: 10)')

    # Fluctuations command
    fluctuations_parser = subparsers.add_parser('fluctuations', help='Range fluctuation suites')
    fluctuations_parser.add_argument('--profile', default='full', help='Tolerance profile (default: full)')
    fluctuations_parser.add_argument('--seed', type=int, default=0, help='Master seed (default: 0)')
    fluctuations_parser.add_argument('--jobs', type=int, default=1, help='Parallel workers (default: 1)')
    fluctuations_parser.add_argument('--output', '-o', help='Save reports (JSON)')

    # Silt command
    silt_parser = subparsers.add_parser('silt', help='Dyadic self-intersection estimator')
    add_walk_arguments(silt_parser)
    add_suite_arguments(silt_parser)
    silt_parser.add_argument('--t', type=float, default=1.0, help='Time horizon (default: 1.0)')
    silt_parser.add_argument('--depth', type=int, help='Dyadic depth (default: from n)')
    silt_parser.add_argument('--replicas', type=int, default=500, help='Replicas (default: 500)')
    silt_parser.add_argument('--pilot-replicas', type=int, default=500,
                             help='Pilot replicas (default: 500)')
    silt_parser.add_argument('--store-dir', help='Centering table directory')
    silt_parser.add_argument('--output', '-o', help='Save values or reports')

    # Energy command
    energy_parser = subparsers.add_parser('energy', help='Energy functionals')
    add_walk_arguments(energy_parser)
    add_kernel_arguments(energy_parser)
    add_suite_arguments(energy_parser)
    energy_parser.add_argument('--replicas', type=int, default=100, help='Replicas (default: 100)')
    energy_parser.add_argument('--grid', type=int, default=16,
                               help='Time grid points per unit time (default: 16)')
    energy_parser.add_argument('--output-dir', default='rangewalk_output',
                               help='Output directory (default: rangewalk_output)')
    energy_parser.add_argument('--resume', action='store_true', help='Rerun only missing replicas')
    energy_parser.add_argument('--output', '-o', help='Save reports (JSON) with --suite')

    # Holder command
    holder_parser = subparsers.add_parser('holder', help='Hoelder exponent of rescaled ranges')
    add_walk_arguments(holder_parser)
    holder_parser.add_argument('--paths', type=int, default=200, help='Paths (default: 200)')
    holder_parser.add_argument('--grid', type=int, default=64, help='Grid intervals (default: 64)')
    holder_parser.add_argument('--n-boot', type=int, default=200,
                               help='Bootstrap resamples (default: 200)')

    # Young self-test command
    young_parser = subparsers.add_parser('young-selftest', help='Young integral oracles')
    young_parser.add_argument('--profile', default='fast', help='Tolerance profile (default: fast)')

    # Verify command
    verify_parser = subparsers.add_parser('verify', help='Run an acceptance profile')
    verify_parser.add_argument('--profile', default='fast', help='fast or full (default: fast)')
    verify_parser.add_argument('--seed', type=int, default=0, help='Master seed (default: 0)')
    verify_parser.add_argument('--jobs', type=int, default=1, help='Parallel workers (default: 1)')
    verify_parser.add_argument('--output', '-o', help='Save reports (JSON)')

    # Report command
    report_parser = subparsers.add_parser('report', help='Summarise a replica file')
    report_parser.add_argument('results', help='JSON-lines replica file')
    report_parser.add_argument('--key', default='R', help='Functional to summarise (default: R)')
    report_parser.add_argument('--output', '-o', help='CSV file (default: next to results)')
    report_parser.add_argument('--dat', help='Whitespace-separated data file for gnuplot')

    args = parser.parse_args()

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(levelname)s: %(message)s")

    if not args.command:
        parser.print_help()
        return 1

    # Dispatch to command functions
    if args.command == 'simulate':
        return simulate_command(args)

    elif args.command == 'fluctuations':
        return suite_command("Range fluctuation suites", FLUCTUATION_CRITERIA, args.profile,
                             args.seed, args.jobs, args.output)

    elif args.command == 'silt':
        return silt_command(args)

    elif args.command == 'energy':
        return energy_command(args)

    elif args.command == 'holder':
        return holder_command(args)

    elif args.command == 'young-selftest':
        return suite_command("Young integral self-test", [3], args.profile, 0, 1)

    elif args.command == 'verify':
        return verify_command(args.profile, args.seed, args.jobs, args.output)

    elif args.command == 'report':
        return report_command(args.results, args.key, args.output, args.dat)

    else:
        print(f"Unknown command: {args.command}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
