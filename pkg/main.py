"""
Main entry point for the quantum Wishart sampler
"""

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent))

from config import settings
from config.experiment import ExperimentConfig
from core.density import log_density_batch, log_density_bloch, log_normalization_constant_qubit
from core.errors import ConfigError, InvalidParams, NumericError, RadiusOutOfRange, WishartError
from core.estimation import PosteriorTarget, mle
from core.loader import (load_json_config, load_matrices, load_samples, output_dir, samples_frame, save_frame,
                         save_json, save_matrices, save_samples)
from core.peak import PeakRequest, build_qubit_proposal, fit_mean_radial, stationary_params
from core.state import BlochVector, DensityMatrix, FieldKind, rho_to_bloch_batch, to_plane
from core.wishart import WishartParams, sample_states_array
from utils.helpers import parse_number_list, setup_logger


logger = logging.getLogger('wishart_sampler')

PACKAGE_LOGGERS = ('wishart_sampler', 'core', 'analytics', 'reports', 'config')

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


class CliParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors become ConfigError (exit code 2, JSON on stderr)."""

    def error(self, message):
        raise ConfigError(f'{self.prog}: {message}')


def _number_list(kind):
    def parse(text):
        try:
            return parse_number_list(text, kind)
        except ValueError as e:
            raise argparse.ArgumentTypeError(str(e))
    return parse


def _json_default(value):
    if hasattr(value, 'tolist'):
        return value.tolist()
    if isinstance(value, complex):
        return [value.real, value.imag]
    raise TypeError(f'Not JSON serializable: {type(value).__name__}')


def _emit(data: Dict):
    print(json.dumps(data, default=_json_default, sort_keys=True))


def _jsonable(data: Dict) -> Dict:
    return json.loads(json.dumps(data, default=_json_default))


def _output(args, name: str) -> Path:
    return output_dir(args.output_dir) / name


def _config_data(args) -> Dict:
    """Config file contents with command-line overrides applied."""
    data = load_json_config(args.config) if args.config else {}
    overrides = {
        name: getattr(args, name, None)
        for name in ('pom', 'clicks', 'seed', 'strategy', 'N', 'alpha', 'n_accept')
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    return data


def _peak_direction(peak) -> np.ndarray:
    vector = peak.bloch.as_3d()
    norm = np.linalg.norm(vector)
    return vector / norm if norm > 1e-12 else np.array([1.0, 0.0, 0.0])


# --- subcommand handlers ---------------------------------------------------

def cmd_density(args) -> int:
    """Log density of the all-mu ensemble at Bloch points or at matrices."""
    field = FieldKind.parse(args.field)
    if args.matrices_file:
        rhos = load_matrices(args.matrices_file)
        p = WishartParams.all_mu(field, rhos.shape[1], args.N, args.mu)
        values = log_density_batch(p, rhos)
        frame = pd.DataFrame({'index': np.arange(len(values)), 'log_density': values})
    else:
        if args.points_file:
            points = load_samples(args.points_file)
        elif args.point:
            points = np.array([args.point], dtype=float)
        else:
            raise InvalidParams('density needs --point, --points-file or --matrices-file')
        if points.shape[1] != field.bloch_dim:
            raise InvalidParams(f'{field.value} Bloch points need {field.bloch_dim} coordinates',
                                width=points.shape[1])
        radius = np.linalg.norm(points, axis=1)
        if np.any(radius > 1 + settings.BLOCH_RADIUS_TOL):
            raise RadiusOutOfRange('Bloch point lies outside the unit ball', radius=float(radius.max()))
        p = WishartParams.all_mu(field, 2, args.N, args.mu)
        values = log_density_bloch(p, points)
        if args.normalize:
            values = values - log_normalization_constant_qubit(p)
        frame = samples_frame(points, field)
        frame['log_density'] = values

    if len(frame) == 1 and not (args.points_file or args.matrices_file):
        _emit({'log_density': float(values[0]), 'normalized': bool(args.normalize),
               'params': p.describe()})
        return EXIT_OK
    path = save_frame(frame, args.output or _output(args, 'density.csv'))
    _emit({'path': str(path), 'count': len(frame), 'normalized': bool(args.normalize)})
    return EXIT_OK


def cmd_sample_wishart(args) -> int:
    """Draw trace-normalized Wishart states; Bloch CSV for qubits, JSONL matrices otherwise."""
    field = FieldKind.parse(args.field)
    p = WishartParams.all_mu(field, args.d, args.N, args.mu)
    rhos = sample_states_array(p, args.n, args.seed, args.workers)
    if args.d == 2:
        points = rho_to_bloch_batch(rhos)
        if field is FieldKind.REAL:
            points = to_plane(points)
        path = save_samples(points, args.output or _output(args, 'wishart_samples.csv'), field)
    else:
        path = save_matrices(rhos, args.output or _output(args, 'wishart_samples.jsonl'))
    _emit({'path': str(path), 'count': args.n, 'params': p.describe(), 'seed': args.seed})
    return EXIT_OK


def cmd_fit_peak(args) -> int:
    """
    Place a proposal peak.

    --r alone gives the all-mu mean peaking at that radius; adding --theta or
    --phi also builds the rotated qubit ensemble. --rho gives the stationary
    covariance and mean for a full-rank state of any dimension.
    """
    field = FieldKind.parse(args.field)
    if args.rho:
        rho = DensityMatrix(load_matrices(args.rho)[0])
        M2 = WishartParams.all_mu(field, rho.dim, args.N, args.mu).M
        solution = stationary_params(rho, M2, args.N, field)
        _emit({'rho': args.rho, 'N': args.N, 'mu': args.mu, 'field': field.value, **solution.to_dict()})
        return EXIT_OK
    if args.r is None:
        raise InvalidParams('fit-peak needs --r or --rho')
    if args.theta is None and args.phi is None:
        mu = fit_mean_radial(args.r, args.N, field)
        _emit({'mu': mu, 'r': args.r, 'N': args.N, 'field': field.value})
        return EXIT_OK

    if field is FieldKind.REAL and abs(np.sin(args.phi or 0.0)) > 1e-12:
        raise InvalidParams('Real peaks lie in the x-z plane: --phi must be 0 or pi', phi=args.phi)
    bloch = BlochVector.from_spherical(args.r, args.theta or 0.0, args.phi or 0.0, field)
    params, rotation = build_qubit_proposal(PeakRequest(bloch, args.N, field))
    _emit({
        # every all-mu entry has real part mu
        'mu': float(params.M[0, 0].real),
        'r': args.r, 'theta': args.theta or 0.0, 'phi': args.phi or 0.0,
        'N': args.N, 'field': field.value,
        'bloch': list(bloch.coords),
        'rotation': rotation.matrix,
        'params': params.describe(),
    })
    return EXIT_OK


def cmd_mle(args) -> int:
    config = ExperimentConfig.from_dict('mle', _config_data(args))
    peak = mle(config.get_pom(), config.click_record())
    _emit({**config.to_dict(), **peak.to_dict()})
    return EXIT_OK


def cmd_posterior_sample(args) -> int:
    from reports.benchmark import posterior_sample

    config = ExperimentConfig.from_dict('posterior-sample', _config_data(args))
    result = posterior_sample(config, args.workers)
    prefix = config.output_prefix or 'posterior'
    samples_path = save_samples(result.points, _output(args, f'{prefix}_samples.csv'), config.get_pom().field)
    report = {
        'config': config.to_dict(),
        'peak': result.peak.to_dict(),
        'proposal': result.spec.describe(),
        'sampling': result.report.to_dict(),
        'samples_path': str(samples_path),
    }
    save_json(_jsonable(report), _output(args, f'{prefix}_report.json'))

    if args.plot:
        from analytics.visualizer import plot_cross_section, plot_radial_histogram
        target = PosteriorTarget.scaled_to_peak(config.get_pom(), config.click_record(), result.peak)
        plot_cross_section(target, result.spec, _peak_direction(result.peak),
                           str(_output(args, f'charts/{prefix}_cross_section.png')))
        plot_radial_histogram(result.points, str(_output(args, f'charts/{prefix}_radii.png')))

    _emit(report)
    return EXIT_OK


def cmd_blr(args) -> int:
    from analytics.blr import blr_convergence, blr_curves, default_lambdas
    from analytics.sampler import sample_uniform_bloch
    from reports.benchmark import PosteriorPipeline

    config = ExperimentConfig.from_dict('blr', _config_data(args))
    pom, clicks = config.get_pom(), config.click_record()
    lambdas = default_lambdas(config.lambda_points)

    uniform = sample_uniform_bloch(pom.field, config.n_samples, config.seed, args.workers)
    result = PosteriorPipeline(dataclasses.replace(config, seed=config.seed + 1), args.workers).run(config.n_samples)
    curve = blr_curves(pom, clicks, uniform, result.points, lambdas, result.peak)

    prefix = config.output_prefix or 'blr'
    curves_path = save_frame(curve.to_frame(), _output(args, f'{prefix}_curves.csv'))
    summary = {
        'config': config.to_dict(),
        'peak': result.peak.to_dict(),
        'max_deviation': curve.max_deviation,
        'curves_path': str(curves_path),
        'sampling': result.report.to_dict(),
    }
    if config.sizes:
        table = blr_convergence(pom, clicks, config.sizes, config.seed, result.spec,
                                result.report.bound_c, lambdas, args.workers)
        summary['convergence'] = table.to_dict(orient='records')
        summary['convergence_path'] = str(save_frame(table, _output(args, f'{prefix}_convergence.csv')))
    save_json(_jsonable(summary), _output(args, f'{prefix}_summary.json'))

    if args.plot:
        from analytics.visualizer import plot_blr_curves
        plot_blr_curves(curve, str(_output(args, f'charts/{prefix}_curves.png')))

    _emit(summary)
    return EXIT_OK


def cmd_bench_acceptance(args) -> int:
    from reports.benchmark import bench_acceptance

    config = ExperimentConfig.from_dict('bench-acceptance', _config_data(args))
    sweep, best = bench_acceptance(config, args.workers)
    prefix = config.output_prefix or 'acceptance'
    sweep_path = save_frame(sweep, _output(args, f'{prefix}_sweep.csv'))
    summary = {'config': config.to_dict(), 'best': best, 'sweep_path': str(sweep_path)}
    save_json(_jsonable(summary), _output(args, f'{prefix}_best.json'))

    if args.plot:
        from analytics.visualizer import plot_acceptance_sweep
        plot_acceptance_sweep(sweep, str(_output(args, f'charts/{prefix}_sweep.png')))

    _emit(summary)
    return EXIT_OK


def cmd_bench_time(args) -> int:
    from reports.benchmark import bench_time

    config = ExperimentConfig.from_dict('bench-time', _config_data(args))
    result, report = bench_time(config, args.workers)
    prefix = config.output_prefix or 'bench_time'
    report['samples_path'] = str(save_samples(result.points, _output(args, f'{prefix}_samples.csv'),
                                              config.get_pom().field))
    save_json(_jsonable(report), _output(args, f'{prefix}_report.json'))
    _emit(report)
    return EXIT_OK


# --- parser ----------------------------------------------------------------

def build_parser() -> CliParser:
    common = CliParser(add_help=False)
    common.add_argument('--workers', type=int, default=os.cpu_count() or 1,
                        help='Worker processes (default: logical cores); results do not depend on it')
    common.add_argument('--output-dir', help=f'Output directory (default: ${settings.OUTPUT_DIR_ENV} or results/)')
    common.add_argument('--log-file', nargs='?', const=settings.LOG_FILE,
                        help=f'Also write the log to this file (bare flag: {settings.LOG_FILE})')
    common.add_argument('--verbose', action='store_true', help='Debug logging')

    field = CliParser(add_help=False)
    field.add_argument('--field', choices=[f.value for f in FieldKind], default=FieldKind.COMPLEX.value)

    config = CliParser(add_help=False)
    config.add_argument('--config', help='JSON experiment config')
    config.add_argument('--pom', help='Override: built-in POM name')
    config.add_argument('--clicks', type=_number_list(int), help='Override: comma-separated click counts')
    config.add_argument('--seed', type=int, help='Override: base seed')
    config.add_argument('--strategy', help='Override: interior, boundary, mix or uniform')
    config.add_argument('--N', type=int, help='Override: interior column count')
    config.add_argument('--alpha', type=float, help='Override: uniform admixture')
    config.add_argument('--plot', action='store_true', help='Also write figures')

    parser = CliParser(
        prog='wishart-sampler',
        description='Non-zero-mean quantum Wishart sampler',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python main.py fit-peak --r 0.5 --N 4 --field real
  python main.py fit-peak --r 0.9 --theta 1.2 --phi 0.4 --N 6
  python main.py mle --pom tetrahedron --clicks 12,7,21,10
  python main.py posterior-sample --config configs/trine_interior.json --workers 4
  python main.py bench-acceptance --config configs/crosshair_sweep.json --plot
  python main.py blr --config configs/tetrahedron_blr.json --plot
        """
    )
    parser.add_argument('--version', action='version',
                        version=f'%(prog)s {settings.VERSION} (rng {settings.RNG_ALGORITHM})')
    commands = parser.add_subparsers(dest='command', metavar='command', required=True)

    density = commands.add_parser('density', parents=[common, field], help='Evaluate the Wishart state density')
    density.add_argument('--N', type=int, required=True)
    density.add_argument('--mu', type=float, default=0.0)
    density.add_argument('--point', type=_number_list(float), help='Bloch point x,y,z (complex) or x,z (real)')
    density.add_argument('--points-file', help='CSV of Bloch points')
    density.add_argument('--matrices-file', help='JSONL of density matrices (any dimension)')
    density.add_argument('--normalize', action='store_true', help='Divide by the qubit normalization constant')
    density.add_argument('--output', help='CSV output path for file inputs')
    density.set_defaults(handler=cmd_density)

    sample = commands.add_parser('sample-wishart', parents=[common, field], help='Draw Wishart states')
    sample.add_argument('--d', type=int, default=2)
    sample.add_argument('--N', type=int, required=True)
    sample.add_argument('--mu', type=float, default=0.0)
    sample.add_argument('--n', type=int, default=1000)
    sample.add_argument('--seed', type=int, default=settings.DEFAULT_SEED)
    sample.add_argument('--output', help='Output path (CSV for qubits, JSONL otherwise)')
    sample.set_defaults(handler=cmd_sample_wishart)

    fit = commands.add_parser('fit-peak', parents=[common, field], help='Mean that peaks a qubit Wishart at radius r')
    target = fit.add_mutually_exclusive_group()
    target.add_argument('--r', type=float, help='Peak radius')
    target.add_argument('--rho', help='JSONL file whose first matrix is the full-rank peak state')
    fit.add_argument('--theta', type=float, help='Peak polar angle from +x (with --r)')
    fit.add_argument('--phi', type=float, help='Peak azimuth (with --r)')
    fit.add_argument('--mu', type=float, default=0.0, help='All-mu entry of the prescribed mean (with --rho)')
    fit.add_argument('--N', type=int, required=True)
    fit.set_defaults(handler=cmd_fit_peak)

    estimate = commands.add_parser('mle', parents=[common], help='Maximum-likelihood qubit state')
    estimate.add_argument('--config', help='JSON config with pom and clicks')
    estimate.add_argument('--pom', help='Override: built-in POM name')
    estimate.add_argument('--clicks', type=_number_list(int), help='Override: comma-separated click counts')
    estimate.set_defaults(handler=cmd_mle)

    posterior = commands.add_parser('posterior-sample', parents=[common, config], help='Sample a posterior')
    posterior.add_argument('--n-accept', type=int, help='Override: accepted sample count')
    posterior.set_defaults(handler=cmd_posterior_sample)

    blr = commands.add_parser('blr', parents=[common, config], help='Bounded-likelihood region curves')
    blr.set_defaults(handler=cmd_blr)

    sweep = commands.add_parser('bench-acceptance', parents=[common, config], help='Acceptance-rate sweep')
    sweep.set_defaults(handler=cmd_bench_acceptance)

    timing = commands.add_parser('bench-time', parents=[common, config], help='Pipeline timing')
    timing.add_argument('--n-accept', type=int, help='Override: accepted sample count')
    timing.set_defaults(handler=cmd_bench_time)

    return parser


def _configure_logging(args):
    level = logging.DEBUG if args.verbose else logging.INFO
    for name in PACKAGE_LOGGERS:
        setup_logger(name, args.log_file, level)


def _fail(error: WishartError, code: int) -> int:
    print(json.dumps(error.to_dict(), default=_json_default, sort_keys=True), file=sys.stderr)
    return code


def run(argv: Optional[List[str]] = None) -> int:
    """
    Parse argv and run one subcommand.

    Returns:
        0 on success, 2 on configuration errors, 3 on numerical failures
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError as e:
        return _fail(e, EXIT_CONFIG)
    except SystemExit as e:
        return int(e.code or 0)

    _configure_logging(args)
    try:
        if args.workers < 1:
            raise InvalidParams('--workers must be at least 1', workers=args.workers)
        return args.handler(args)
    except ConfigError as e:
        logger.error('%s: %s', type(e).__name__, e.message)
        return _fail(e, EXIT_CONFIG)
    except NumericError as e:
        logger.error('%s: %s', type(e).__name__, e.message)
        return _fail(e, EXIT_NUMERIC)


def main():
    """Main function to run the sampler."""
    sys.exit(run())


if __name__ == "__main__":
    main()
