"""Main entry point for muskat-spectral."""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Optional

from .config_manager import ConfigError, ConfigManager
from .connectors.snapshot_store import SnapshotError
from .diagnostics.report_generator import ReportGenerator, RunSummary
from .experiments.runner import (
    EXIT_CONFIG_ERROR,
    EXIT_IO_ERROR,
    EXIT_NUMERICAL_FAILURE,
    EXIT_SUCCESS,
    SUMMARY_STEM,
    run,
)
from .models.experiment_plan import REPORT_FORMATS, ExperimentKind, ExperimentPlan, InitialDataPreset
from .utils.spinner import spinner

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
DEFAULT_LOG_FILE = 'muskat_spectral.log'
RUN_LOG_FILE = 'run.log'

FLAG_TO_KEY = {
    'preset': 'preset',
    'n': 'n',
    'dt': 'dt',
    't_end': 't_end',
    'epsilon': 'epsilon',
    'delta': 'delta',
    'scheme': 'scheme',
    'formulation': 'formulation',
    'nu': 'nu',
    'corner_eps': 'corner_eps',
    'out': 'out',
    'snapshot_every': 'snapshot_every',
    'seed': 'seed',
    'kind': 'kind',
    'sweep': 'sweep_values',
    'amplitude': 'amplitude',
    'mode': 'mode',
    'checkpoint_every': 'checkpoint_every',
    'resume': 'resume',
    'format': 'format',
}


def setup_logging(verbose: bool = False, log_file: str = DEFAULT_LOG_FILE) -> None:
    """Set up logging configuration."""
    log_level = logging.DEBUG if verbose else logging.WARNING

    logging.basicConfig(
        level=log_level,
        format=LOG_FORMAT,
        handlers=[
            logging.StreamHandler(sys.stdout),
            logging.FileHandler(log_file)
        ],
        force=True,
    )

    # Keep our own loggers quiet unless verbose
    logging.getLogger('src').setLevel(logging.DEBUG if verbose else logging.WARNING)
    logging.getLogger('h5py').setLevel(logging.WARNING)


def attach_run_log(output_dir: Path) -> Path:
    """Mirror the log into the run's output directory."""
    output_dir.mkdir(parents=True, exist_ok=True)
    path = output_dir / RUN_LOG_FILE
    handler = logging.FileHandler(path)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logging.getLogger().addHandler(handler)
    return path


def _dt_value(raw: str) -> Any:
    if raw == 'auto':
        return raw
    try:
        return float(raw)
    except ValueError:
        raise argparse.ArgumentTypeError(f"dt must be a number or 'auto', got '{raw}'")


def create_parser() -> argparse.ArgumentParser:
    """Create and configure the argument parser."""
    parser = argparse.ArgumentParser(
        prog='muskat-spectral',
        description='Pseudo-spectral simulator and diagnostics for the one-phase Muskat problem',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  muskat-spectral --preset single_mode --amplitude 1e-3 --t-end 0.5
  muskat-spectral --config runs.yaml               # Use a configuration file
  muskat-spectral --kind dt_sweep --sweep 1e-2,5e-3,2.5e-3 --preset single_mode
  muskat-spectral --kind corner_family --preset corner --sweep 0.1,0.05,0.025 --t-end 0.1
  muskat-spectral --formulation both --preset single_mode --out runs/equivalence
  muskat-spectral --create-config                  # Write the default configuration

Exit codes: 0 success, 2 configuration error, 3 numerical failure or blow-up, 4 I/O error.
        """
    )

    # Configuration options
    parser.add_argument('--config', type=str, metavar='PATH',
                        help='Path to configuration file (default: config/muskat.yaml when present)')
    parser.add_argument('--create-config', action='store_true',
                        help='Create default configuration file and exit')

    # Experiment
    parser.add_argument('--kind', choices=[k.value for k in ExperimentKind],
                        help='Experiment kind (default: single)')
    parser.add_argument('--sweep', type=str, metavar='VALUES',
                        help='Comma-separated sweep values for sweep kinds')
    parser.add_argument('--resume', type=str, metavar='PATH',
                        help='Resume a single run from a checkpoint file')

    # Initial data
    parser.add_argument('--preset', choices=[p.value for p in InitialDataPreset],
                        help='Initial data preset (default: flat)')
    parser.add_argument('--amplitude', type=float, metavar='FLOAT', help='Initial amplitude')
    parser.add_argument('--mode', type=int, metavar='INT', help='Wavenumber of the single_mode preset')
    parser.add_argument('--nu', type=float, metavar='FLOAT', help='Corner parameter in (0,1)')
    parser.add_argument('--corner-eps', type=float, metavar='FLOAT', help='Corner smoothing width')
    parser.add_argument('--seed', type=int, metavar='INT', help='Random seed (default: 0)')

    # Discretization
    parser.add_argument('--n', type=int, metavar='INT', help='Number of grid points (default: 256)')
    parser.add_argument('--dt', type=_dt_value, metavar='FLOAT|auto', help='Time step (default: auto)')
    parser.add_argument('--t-end', type=float, metavar='FLOAT', help='Final time (default: 1.0)')
    parser.add_argument('--epsilon', type=float, metavar='FLOAT', help='Viscosity (default: 0)')
    parser.add_argument('--delta', type=float, metavar='FLOAT', help='Mollification scale (default: 0)')
    parser.add_argument('--scheme', choices=['rk4', 'imex'], help='Time-stepping scheme (default: rk4)')
    parser.add_argument('--formulation', choices=['g', 'z', 'both'], help='Evolved formulation (default: g)')

    # Output options
    parser.add_argument('--out', type=str, metavar='DIR', help='Output directory (default: runs/<kind>)')
    parser.add_argument('--snapshot-every', type=int, metavar='INT', help='Snapshot cadence in steps')
    parser.add_argument('--checkpoint-every', type=int, metavar='INT',
                        help='Checkpoint cadence in steps (default: 0, disabled)')
    parser.add_argument('--format', choices=list(REPORT_FORMATS), help='Run summary format (default: json)')

    # Output control options
    output_group = parser.add_mutually_exclusive_group()
    output_group.add_argument('--verbose', '-v', action='store_true',
                              help='Show detailed progress information')
    output_group.add_argument('--quiet', '-q', action='store_true',
                              help='No output until completion (silent mode)')
    parser.add_argument('--version', action='version', version='%(prog)s 0.1.0')

    return parser


def collect_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """Flags given on the command line, keyed by configuration alias."""
    return {key: getattr(args, flag) for flag, key in FLAG_TO_KEY.items() if getattr(args, flag) is not None}


def print_plan(plan: ExperimentPlan) -> None:
    """Print the resolved plan."""
    config = plan.base_config
    print("🧪 Experiment Plan:")
    print("-" * 18)
    print(f"  • Kind: {plan.kind.value}")
    if plan.sweep_values:
        print(f"  • Sweep ({plan.sweep_parameter}): {', '.join(f'{v:g}' for v in plan.sweep_values)}")
    print(f"  • Initial data: {plan.initial_data.preset.value}")
    print(f"  • Grid: n = {plan.n_points}")
    print(f"  • Solver: {config.scheme.value}, dt = {'auto' if config.dt is None else f'{config.dt:g}'}, "
          f"t_end = {config.t_end:g}")
    print(f"  • Regularization: epsilon = {config.epsilon:g}, delta = {config.mollifier.delta:g}")
    print(f"  • Formulation: {config.formulation.value}")
    print(f"  • Output: {plan.output_dir}")
    print(f"  • Workers: {plan.threads}")


def print_run_summary(summary: RunSummary, plan: ExperimentPlan) -> None:
    """Print the outcome and the location of the artifacts."""
    if summary.succeeded:
        print(f"✅ Run {summary.status} in {summary.wall_time:.1f} s")
    else:
        print(f"❌ Run ended with status {summary.status}: {summary.failure_reason}")
    summary_path = plan.output_dir / (SUMMARY_STEM + ReportGenerator().file_extension(plan.report_format))
    print(f"📁 Outputs in {plan.output_dir}")
    print(f"📊 Summary saved to: {summary_path}")


def handle_run_mode(plan: ExperimentPlan, args: argparse.Namespace) -> int:
    """Run the plan with one of three output modes: default (spinner), quiet, or verbose."""
    logger = logging.getLogger(__name__)
    animation_mode = not args.verbose and not args.quiet and sys.stdout.isatty()

    if args.verbose:
        print_plan(plan)
        print("\n🚀 Starting integration...")

    if animation_mode:
        with spinner(f"🌊 Running {plan.kind.value}") as s:
            exit_code, summary = run(plan, progress=s.update)
    else:
        exit_code, summary = run(plan)

    logger.info(f"Run finished with exit code {exit_code}")
    if not args.quiet or exit_code != EXIT_SUCCESS:
        print_run_summary(summary, plan)
    return exit_code


def main(argv: Optional[list] = None) -> int:
    """Main entry point for the application."""
    parser = create_parser()
    args = parser.parse_args(argv)

    setup_logging(args.verbose)
    logger = logging.getLogger(__name__)
    logger.info("muskat-spectral starting")

    try:
        if args.create_config:
            config_manager = ConfigManager(args.config)
            config_manager.create_default_config(force=False)
            print(f"✅ Default configuration created at: {config_manager.config_path}")
            return EXIT_SUCCESS

        config_manager = ConfigManager(args.config)
        for key, value in collect_overrides(args).items():
            config_manager.set(key, value)
        config_manager.load_config()
        plan = config_manager.build_plan()
        attach_run_log(plan.output_dir)
        return handle_run_mode(plan, args)

    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        print(f"❌ Configuration error: {e}")
        print("💡 Run with --create-config to write a default configuration")
        return EXIT_CONFIG_ERROR
    except (OSError, SnapshotError) as e:
        logger.error(f"I/O error: {e}")
        print(f"❌ I/O error: {e}")
        return EXIT_IO_ERROR
    except KeyboardInterrupt:
        logger.info("Operation cancelled by user")
        print("\n⚠️  Operation cancelled by user")
        return 130
    except ArithmeticError as e:
        logger.error(f"Numerical failure: {e}")
        print(f"❌ Numerical failure: {e}")
        return EXIT_NUMERICAL_FAILURE


if __name__ == '__main__':
    sys.exit(main())
