"""Command-line interface.

Usage:
    python main.py spectrum  --source sources/dsbs01.json --kind joint_xy --out spectrum.csv
    python main.py phase     --source sources/dsbs01.json --decoder matched --grid 256 --out b.csv
    python main.py classify  --source sources/dsbs01.json --rate 0.5 --temperature 0.8
    python main.py exponent  --source sources/dsbs01.json --sweep rate=0.3:0.7:9,beta=0.5:2:4 --out e.csv
    python main.py simulate  --source sources/dsbs01.json --n 12 --rate 0.55 --trials 20000 --out r.json
    python main.py simulate  --source sources/dsbs01.json --n-sweep 8,12,16,20 --rate 0.55 --out sweep.csv
    python main.py dilution  --source sources/dsbs01.json --n 20 --rate 0.3 --sweep beta=0.2:3:15 --out d.json
    python main.py two-sided --source sources/dsbs01.json --sweep rate_x=0:1:64,rate_y=0:1:64 --out ts.csv

Exit codes: 0 success, 1 computation or I/O error, 2 usage or validation error,
130 interrupted.
"""

import argparse
import sys
from contextlib import contextmanager
from typing import Callable, Optional, Sequence

import numpy as np
from tqdm import tqdm

from .batch_runner import TrialRunner
from .config import get_config, reload_config
from .core.dilution import rdm_dilution_experiment
from .core.error_exponent import exponent_sweep
from .core.phase_diagram import PhaseDiagram, two_sided_sweep
from .core.simulator import ber_sweep, dominance_map, estimate_ber
from .core.spectrum import Spectrum
from .exceptions import BinningError, ValidationError
from .export import check_writable, emit
from .logging_config import configure_from, get_logger, log_exception
from .models.exponent import MetricKind, MetricName
from .models.phase import DecoderKind
from .models.simulation import SimConfig
from .models.spectrum import SpectrumKind
from .schemas import (
    DilutionReportSchema,
    LoadedSource,
    PhaseLabelSchema,
    SimReportSchema,
    load_source,
)

logger = get_logger('cli')

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_INTERRUPTED = 130


# =============================================================================
# Argument types
# =============================================================================

def non_negative_float(text: str) -> float:
    value = float(text)
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {text}")
    return value


def positive_float(text: str) -> float:
    """Positive number; 'inf' is accepted."""
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {text}")
    return value


def int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError(f"expected positive integers, got {text!r}")
    return values


def parse_sweep(text: str) -> dict[str, np.ndarray]:
    """'axis=start:stop:count,...' -> {axis: linspace(start, stop, count)}, endpoints included."""
    axes = {}
    for part in text.split(','):
        name, sep, spec = part.partition('=')
        fields = spec.split(':')
        if not sep or len(fields) != 3:
            raise argparse.ArgumentTypeError(f"expected axis=start:stop:count, got {part!r}")
        try:
            start, stop, count = float(fields[0]), float(fields[1]), int(fields[2])
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad numbers in sweep {part!r}")
        if count < 1:
            raise argparse.ArgumentTypeError(f"sweep count must be at least 1 in {part!r}")
        axes[name.strip()] = np.linspace(start, stop, count)
    return axes


def _sweep_axis(axes: Optional[dict], name: str, fallback: Optional[float], flag: str,
                lower: float = 0.0, strict: bool = False) -> np.ndarray:
    if axes and name in axes:
        values = axes[name]
    elif fallback is not None:
        values = np.array([fallback])
    else:
        raise ValidationError(f"{flag} or a '{name}' sweep axis is required", field=flag)
    bad = values <= lower if strict else values < lower
    if np.any(bad):
        raise ValidationError(f"{flag} values must be {'>' if strict else '>='} {lower}",
                              field=flag, value=float(values[np.argmax(bad)]))
    return values


def _check_axes(axes: Optional[dict], allowed: Sequence[str]) -> None:
    unknown = sorted(set(axes or {}) - set(allowed))
    if unknown:
        raise ValidationError(f"--sweep axes {unknown} are not among {list(allowed)}", field='--sweep')


# =============================================================================
# Helpers
# =============================================================================

@contextmanager
def progress_bar(desc: str, quiet: bool, unit: str = 'it'):
    """Yields an on_progress(done, total) callback drawing a tqdm bar on stderr."""
    bar = tqdm(total=0, desc=desc, unit=unit, file=sys.stderr, leave=False,
               disable=quiet or not sys.stderr.isatty())

    def update(done: int, total: int) -> None:
        bar.total = total
        bar.n = done
        bar.refresh()

    try:
        yield update
    finally:
        bar.close()


def _metric(loaded: LoadedSource, name: str) -> MetricKind:
    metric = MetricName(name)
    if metric is MetricName.MISMATCHED:
        if loaded.mismatch is None:
            raise ValidationError("--metric mismatched needs 'p_tilde' in the source file",
                                  field='--metric')
        return MetricKind.mismatched(loaded.mismatch)
    return MetricKind(metric)


def _decoder(loaded: LoadedSource, args) -> PhaseDiagram:
    source = loaded.require_source(args.command)
    return PhaseDiagram(source, DecoderKind(args.decoder), loaded.mismatch)


# =============================================================================
# Commands
# =============================================================================

def cmd_spectrum(args, loaded: LoadedSource) -> None:
    """Spectrum table (alpha, epsilon, entropy)."""
    if loaded.is_closed_form:
        spectrum = loaded.closed_form
        alphas = _sweep_axis(args.sweep, 'alpha', None, '--sweep alpha', strict=True) \
            if args.sweep else np.geomspace(0.01, 100.0, 201)
        rows = []
        for alpha in alphas:
            eps = spectrum.epsilon_of_alpha(float(alpha))
            rows.append({'alpha': float(alpha), 'epsilon': eps, 'entropy': spectrum.s_at(eps)})
    else:
        kind = SpectrumKind(args.kind)
        builders = {
            SpectrumKind.CONDITIONAL_X_GIVEN_Y: Spectrum.conditional_x_given_y,
            SpectrumKind.CONDITIONAL_Y_GIVEN_X: Spectrum.conditional_y_given_x,
            SpectrumKind.JOINT_XY: Spectrum.joint,
        }
        spectrum = builders[kind](loaded.source)
        rows = [p.to_dict() for p in spectrum.table()]
    logger.info(f"Spectrum table with {len(rows)} points")
    emit(rows, args.out, args.format, columns=['alpha', 'epsilon', 'entropy'])


def cmd_phase(args, loaded: LoadedSource) -> None:
    """Sampled phase boundaries."""
    diagram = _decoder(loaded, args)
    points = diagram.sample_boundaries(args.grid)
    logger.info(f"{len(points)} boundary points, triple point at {diagram.boundaries().triple_point}")
    emit([p.to_row() for p in points], args.out, args.format, columns=['curve_id', 'R', 'T'])


def cmd_classify(args, loaded: LoadedSource) -> None:
    """Phase of one (R, T) point."""
    label = _decoder(loaded, args).classify(args.rate, args.temperature)
    logger.info(f"R={args.rate} T={args.temperature}: {label.phase.value}")
    emit(PhaseLabelSchema.from_label(label), args.out, 'json')


def cmd_exponent(args, loaded: LoadedSource) -> None:
    """E(R, beta) on a grid."""
    source = loaded.require_source('exponent')
    _check_axes(args.sweep, ('rate', 'beta'))
    rates = _sweep_axis(args.sweep, 'rate', args.rate, '--rate')
    betas = _sweep_axis(args.sweep, 'beta', args.beta, '--beta', strict=True)
    metric = _metric(loaded, args.metric)
    with progress_bar('exponent', args.quiet, unit='cell') as on_progress:
        results = exponent_sweep(source, rates, betas, metric,
                                 workers=get_config().sweep.workers, on_progress=on_progress)
    emit([r.to_row() for r in results], args.out, args.format, columns=['R', 'beta', 'E', 'phase'])


def _sim_config(args, loaded: LoadedSource, n: int) -> SimConfig:
    return SimConfig(
        source=loaded.require_source('simulate'),
        n=n,
        rate=args.rate,
        beta=args.beta,
        trials=args.trials,
        seed=args.seed,
        metric=_metric(loaded, args.metric),
        all_positions=args.all_positions,
        tie_policy=args.tie_policy,
    )


def cmd_simulate(args, loaded: LoadedSource) -> None:
    """Monte Carlo BER, an N-sweep, or a dominance map."""
    runner = TrialRunner(handle_signals=True)
    if args.n_sweep:
        cfg = _sim_config(args, loaded, args.n_sweep[0])
        with progress_bar('simulate', args.quiet, unit='trial') as on_progress:
            points = ber_sweep(cfg, args.n_sweep, runner, on_progress=on_progress)
        emit([p.to_row() for p in points], args.out, args.format,
             columns=['n', 'ber', 'ber_low', 'ber_high', 'slope', 'slope_stderr'])
        return

    if args.n is None:
        raise ValidationError("--n or --n-sweep is required", field='--n')
    cfg = _sim_config(args, loaded, args.n)

    if args.dominance_sweep:
        _check_axes(args.dominance_sweep, ('rate', 'temperature'))
        rates = _sweep_axis(args.dominance_sweep, 'rate', args.rate, '--rate')
        temperatures = _sweep_axis(args.dominance_sweep, 'temperature', 1.0 / args.beta,
                                   '--dominance-sweep temperature', strict=True)
        cells = dominance_map(cfg, rates, temperatures, runner)
        emit([c.to_row() for c in cells], args.out, args.format,
             columns=['R', 'T', 'dominance', 'trials'])
        return

    with progress_bar('simulate', args.quiet, unit='trial') as on_progress:
        report = estimate_ber(cfg, runner, on_progress=on_progress)
    logger.info(f"BER={report.ber:.6g} [{report.ber_low:.6g}, {report.ber_high:.6g}] "
                f"over {report.trials} trials")
    emit(SimReportSchema.from_report(report), args.out, 'json')


def cmd_dilution(args, loaded: LoadedSource) -> None:
    """Random dilution free energy against the analytic curve."""
    source = loaded.require_source('dilution')
    _check_axes(args.sweep, ('beta',))
    betas = _sweep_axis(args.sweep, 'beta', args.beta, '--beta', strict=True)
    report = rdm_dilution_experiment(
        source, args.n, args.rate, betas,
        seed=args.seed,
        realizations=args.realizations,
        keep_correct=args.keep_correct,
    )
    emit(DilutionReportSchema.from_report(report), args.out, 'json')


def cmd_two_sided(args, loaded: LoadedSource) -> None:
    """Dominant term and reliability over (R_X, R_Y)."""
    source = loaded.require_source('two-sided')
    _check_axes(args.sweep, ('rate_x', 'rate_y'))
    rates_x = _sweep_axis(args.sweep, 'rate_x', args.rate_x, '--rate-x')
    rates_y = _sweep_axis(args.sweep, 'rate_y', args.rate_y, '--rate-y')
    with progress_bar('two-sided', args.quiet, unit='row') as on_progress:
        results = two_sided_sweep(source, rates_x, rates_y, args.beta,
                                  workers=get_config().sweep.workers, on_progress=on_progress)
    rows = [r.to_row() for r in results]
    emit(rows, args.out, args.format, columns=['R_X', 'R_Y', 'beta', 'dominant', 'reliable'])


COMMANDS: dict[str, Callable] = {
    'spectrum': cmd_spectrum,
    'phase': cmd_phase,
    'classify': cmd_classify,
    'exponent': cmd_exponent,
    'simulate': cmd_simulate,
    'dilution': cmd_dilution,
    'two-sided': cmd_two_sided,
}


# =============================================================================
# Parser
# =============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='random-binning',
        description="Phase diagrams, error exponents and simulations of random binning",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument('--verbose', '-V', action='store_true', help='Enable DEBUG logging')
    parser.add_argument('--quiet', '-q', action='store_true', help='Warnings only, no progress bars')
    parser.add_argument('--config', help='Path to a config.yaml (default: search CWD, then project)')
    parser.add_argument('--log-file', help='Also write logs to this file')

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--source', required=True, help='JSON source file')
    common.add_argument('--out', help='Output file (default: stdout)')
    common.add_argument('--format', choices=['csv', 'json'],
                        help='Output format (default: from --out suffix)')

    subparsers = parser.add_subparsers(dest='command', help='Command to run')

    p = subparsers.add_parser('spectrum', parents=[common], help='Entropy spectrum table')
    p.add_argument('--kind', default=SpectrumKind.CONDITIONAL_X_GIVEN_Y.value,
                   choices=[k.value for k in SpectrumKind if k is not SpectrumKind.CLOSED_FORM])
    p.add_argument('--sweep', type=parse_sweep, help='alpha=start:stop:count (closed forms only)')

    for name, text in (('phase', 'Sampled phase boundaries'), ('classify', 'Phase of one point')):
        p = subparsers.add_parser(name, parents=[common], help=text)
        p.add_argument('--decoder', default=DecoderKind.MATCHED.value,
                       choices=[d.value for d in DecoderKind])
        if name == 'phase':
            p.add_argument('--grid', type=positive_int, default=256, help='Points per curve')
        else:
            p.add_argument('--rate', type=non_negative_float, required=True)
            p.add_argument('--temperature', type=positive_float, required=True)

    p = subparsers.add_parser('exponent', parents=[common], help='Error exponent E(R, beta)')
    p.add_argument('--rate', type=non_negative_float)
    p.add_argument('--beta', type=positive_float, default=1.0, help="Inverse temperature or 'inf'")
    p.add_argument('--metric', default=MetricName.MATCHED.value, choices=[m.value for m in MetricName])
    p.add_argument('--sweep', type=parse_sweep, help='rate=a:b:n,beta=a:b:n')

    p = subparsers.add_parser('simulate', parents=[common], help='Monte Carlo random binning')
    p.add_argument('--n', type=positive_int)
    p.add_argument('--n-sweep', type=int_list, help='Comma-separated blocklengths, e.g. 8,12,16,20')
    p.add_argument('--rate', type=non_negative_float, required=True)
    p.add_argument('--beta', type=positive_float, default=1.0, help="Inverse temperature or 'inf'")
    p.add_argument('--trials', type=positive_int, default=1000)
    p.add_argument('--seed', type=int)
    p.add_argument('--metric', default=MetricName.MATCHED.value, choices=[m.value for m in MetricName])
    p.add_argument('--all-positions', action='store_true', help='Average errors over every position')
    p.add_argument('--tie-policy', choices=['half', 'pessimistic'])
    p.add_argument('--dominance-sweep', type=parse_sweep, help='rate=a:b:n,temperature=a:b:n')

    p = subparsers.add_parser('dilution', parents=[common], help='Random dilution experiment')
    p.add_argument('--n', type=positive_int, required=True)
    p.add_argument('--rate', type=non_negative_float, required=True)
    p.add_argument('--beta', type=positive_float)
    p.add_argument('--sweep', type=parse_sweep, help='beta=a:b:n')
    p.add_argument('--realizations', type=positive_int)
    p.add_argument('--seed', type=int)
    p.add_argument('--keep-correct', action='store_true',
                   help='A sequence drawn from P(.|y) always survives')

    p = subparsers.add_parser('two-sided', parents=[common], help='Two-sided dominance and reliability')
    p.add_argument('--rate-x', type=non_negative_float)
    p.add_argument('--rate-y', type=non_negative_float)
    p.add_argument('--beta', type=positive_float, default=1.0)
    p.add_argument('--sweep', type=parse_sweep, help='rate_x=a:b:n,rate_y=a:b:n')

    return parser


def parse_and_dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK

    if not args.command:
        parser.print_help()
        return EXIT_USAGE

    try:
        config = reload_config(args.config) if args.config else get_config()
        configure_from(config.logging, args.verbose, args.quiet, args.log_file)
        check_writable(args.out)
        loaded = load_source(args.source)
        COMMANDS[args.command](args, loaded)
    except ValidationError as e:
        print(f"Error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except BinningError as e:
        log_exception(logger, e, f"{args.command} failed")
        print(f"Error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAILURE
    except (OSError, ValueError) as e:
        print(f"Error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAILURE
    except KeyboardInterrupt:
        print("\nInterrupted.", file=sys.stderr)
        return EXIT_INTERRUPTED
    return EXIT_OK


def main() -> None:
    sys.exit(parse_and_dispatch())
