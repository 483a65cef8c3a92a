"""
Command-line interface for Quadtest.
"""

import functools
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, Optional

import click
from rich.console import Console
from rich.logging import RichHandler

from quadtest.core import closed_form, extremal, sim, utest
from quadtest.core.estimator import pilot_branch
from quadtest.errors import ConfigError, NumericalError, QuadTestError
from quadtest.interfaces import files
from quadtest.interfaces.terminal_interface import TerminalRenderer
from quadtest.models.coefficients import SingleIndex, SobolevDerivative
from quadtest.models.config import LEAST_FAVORABLE, NO_ALTERNATIVE, RunConfig
from quadtest.models.solution import RegimeRate
from quadtest.models.spectral import CoefficientMap
from quadtest.models.testing import INDEFINITE, IndefiniteThresholdConfig, TestConfig

logger = logging.getLogger(__name__)

LOG_LEVELS = {0: logging.WARNING, 1: logging.INFO}


def _configure_logging(verbose: int) -> None:
    root = logging.getLogger()
    for handler in list(root.handlers):
        if isinstance(handler, RichHandler):
            root.removeHandler(handler)
    root.addHandler(RichHandler(console=Console(stderr=True), show_path=False))
    root.setLevel(LOG_LEVELS.get(verbose, logging.DEBUG))


def _guarded(command: Callable) -> Callable:
    """Turn QuadTestError into a one-line message and its exit code."""
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except QuadTestError as exc:
            TerminalRenderer(Console(stderr=True)).error(exc.message)
            sys.exit(exc.exit_code)
    return wrapper


def _common_options(command: Callable) -> Callable:
    options = [
        click.option('--config', 'config_path', required=True,
                     type=click.Path(exists=True, dir_okay=False, readable=True), help='JSON run configuration.'),
        click.option('--out', 'out_path', type=click.Path(dir_okay=False), help='Output file (stdout when absent).'),
        click.option('--seed', type=int, help='Override the configured seed.'),
        click.option('--threads', type=int, help='Worker threads; defaults to QUADTEST_THREADS or the config.'),
        click.option('--pretty', is_flag=True, help='Render a rich summary instead of JSON on stdout.'),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def _load(config_path: str, seed: Optional[int], threads: Optional[int]) -> RunConfig:
    run = RunConfig.load(config_path)
    overrides = {key: value for key, value in (("seed", seed), ("threads", threads)) if value is not None}
    return run.with_overrides(**overrides) if overrides else run


def _emit(data: Dict[str, Any], out_path: Optional[str], pretty: bool, render: Callable[[Dict[str, Any]], None]) -> None:
    if out_path:
        files.write_json(out_path, data)
    if pretty:
        render(data)
    elif not out_path:
        click.echo(files.dumps_json(data), nl=False)


def build_test_config(run: RunConfig, n: int) -> TestConfig:
    """TestConfig for a run, resolving the documented class bounds in indefinite mode."""
    spec = run.spec
    basis = run.basis_spec()
    thresholds = None
    if run.mode == INDEFINITE:
        if isinstance(run.class_bounds, IndefiniteThresholdConfig):
            thresholds = run.class_bounds
        else:
            if run.class_bounds is None:
                logger.info("no class bounds configured, using the documented defaults")
            T = run.T if run.T is not None else utest.indefinite_level(spec, n, run.max_box_side)[0]
            thresholds = utest.default_class_bounds(spec, basis, T, run.max_box_side)
    return TestConfig(spec, basis, run.gamma, mode=run.mode, T=run.T, thresholds=thresholds,
                      T_pilot=run.T_pilot, pilot_cap_fraction=run.pilot_cap_fraction,
                      pilot_exponent=run.pilot_exponent, tau=run.tau, max_box_side=run.max_box_side)


def rate_summary(run: RunConfig) -> Dict[str, Any]:
    """Closed-form and numeric rates for a run configuration."""
    spec = run.spec
    n = run.require_n()
    result: Dict[str, Any] = {"family": spec.family}
    if run.mode == INDEFINITE:
        if spec.signed:
            regime = extremal.two_regime_rate(spec, n, run.max_box_side)
        else:
            T, T0, tag = extremal.indefinite_regime(spec, n, run.max_box_side)
            regime = RegimeRate(T, T0, T ** -0.5, tag)
        result.update({
            "rate_exponent": regime.exponent,
            "r_star": regime.rate,
            "C_star": None,
            "T": regime.T_n,
            "regime": regime.regime,
            "numeric": regime.to_dict(),
            "condition_flags": [],
        })
        return result
    closed = None
    if isinstance(spec, SobolevDerivative) and not spec.two_sample:
        closed = closed_form.closed_form_rate_derivative(spec.sigma, spec.alpha, spec.dimension, n, run.gamma)
    elif isinstance(spec, SingleIndex):
        closed = closed_form.closed_form_rate_single_index(spec.beta, spec.sigma, spec.dimension, n, run.gamma,
                                                           run.quadrature_tol)
    numeric = None
    try:
        numeric = extremal.separation_rate(spec, n, run.gamma, run.basis_spec(), pilot_branch(spec),
                                           check_branch=True, max_box_side=run.max_box_side)
    except NumericalError as exc:
        if closed is None:
            raise
        logger.warning("numeric rate unavailable: %s", exc.message)
        result["numeric_error"] = exc.message
    result.update({
        "rate_exponent": None if closed is None else closed.rate_exponent,
        "r_star": closed.r_star if closed is not None else numeric.rate,
        "C_star": None if closed is None else closed.C_star,
        "T": numeric.T if numeric is not None else closed.T_asymptotic,
        "closed_form": None if closed is None else closed.to_dict(),
        "numeric": None if numeric is None else numeric.to_dict(),
        "ratio": None if closed is None or numeric is None else numeric.rate / closed.r_star,
        "condition_flags": [] if numeric is None else [check.to_dict() for check in numeric.conditions],
    })
    return result


@click.group()
@click.option('--verbose', '-v', count=True, help='-v for progress, -vv for debugging output.')
@click.version_option(package_name='quadtest')
def main(verbose):
    """
    Minimax tests for diagonal quadratic functionals of a regression function.

    Every command reads a JSON run configuration and is deterministic given
    the configuration and the seed.
    """
    _configure_logging(verbose)


@main.command()
@_common_options
@_guarded
def rate(config_path, out_path, seed, threads, pretty):
    """Compute the separation rate, its constant and the tuned truncation level."""
    run = _load(config_path, seed, threads)
    result = rate_summary(run)
    result["config"] = run.to_dict()
    _emit(result, out_path, pretty, TerminalRenderer().render_rate)


@main.command()
@_common_options
@_guarded
def weights(config_path, out_path, seed, threads, pretty):
    """Write the optimal weights and least-favorable profile as CSV."""
    run = _load(config_path, seed, threads)
    n = run.require_n()
    solution = extremal.separation_rate(run.spec, n, run.gamma, run.basis_spec(), pilot_branch(run.spec),
                                        check_branch=True, max_box_side=run.max_box_side)
    table = files.weights_table(solution)
    summary = solution.to_dict()
    summary["config"] = run.to_dict()
    if out_path:
        files.write_atomic(out_path, table)
        files.write_json(Path(out_path).with_suffix(".json"), summary)
        if pretty:
            TerminalRenderer().render_weights(summary)
    else:
        click.echo(table, nl=False)


@main.command()
@click.argument('data_path', type=click.Path(exists=True, dir_okay=False, readable=True))
@_common_options
@_guarded
def test(data_path, config_path, out_path, seed, threads, pretty):
    """Run the configured test on a CSV file with columns t1..tD,x."""
    run = _load(config_path, seed, threads)
    sample = files.read_sample(data_path, run.basis_spec().point_dimension)
    if run.n is not None and run.n != sample.n:
        logger.warning("configured n = %d differs from the %d observations in %s", run.n, sample.n, data_path)
    report = utest.run_test(sample, build_test_config(run, sample.n)).to_dict()
    report["config"] = run.to_dict()
    _emit(report, out_path, pretty, TerminalRenderer().render_report)


def _alternative(run: RunConfig, test_object) -> Optional[CoefficientMap]:
    if run.alternative == NO_ALTERNATIVE:
        return None
    if run.alternative != LEAST_FAVORABLE:
        return run.alternative_map()
    if isinstance(test_object, utest.SharpUTest):
        if test_object.solution is None:
            raise ConfigError("the least-favorable alternative needs tuned weights")
        return sim.least_favorable_alternative(test_object.solution)
    return sim.separated_alternative(test_object.active, test_object.guaranteed_rho2, run.spec.ellipsoid_radius())


@main.command()
@_common_options
@_guarded
def simulate(config_path, out_path, seed, threads, pretty):
    """Monte Carlo campaign: type I and II error rates plus the null distribution check."""
    run = _load(config_path, seed, threads)
    n = run.require_n()
    config = build_test_config(run, n)
    test_object = utest.build_test(config, n)
    f_alt = _alternative(run, test_object)
    f_null = CoefficientMap.zero(run.spec.dimension, run.spec.two_sample)
    estimates = sim.monte_carlo(config, f_null, f_alt, run.reps, run.seed, n, run.noise_spec(),
                                run.threads, test=test_object)
    summary = {
        "estimates": estimates.to_dict(),
        "wilks": sim.wilks_from_records(estimates.records).to_dict(),
        "test": test_object.diagnostics(),
        "config": run.to_dict(),
    }
    out_path = out_path or run.output
    if out_path:
        files.write_atomic(Path(out_path).with_suffix(".records.csv"), files.records_table(estimates.records))
    else:
        logger.warning("per-replication records were not written; pass --out or set 'output' to keep them")
    _emit(summary, out_path, pretty, TerminalRenderer().render_simulation)


if __name__ == '__main__':
    main()
