"""Command-line front end.

Every invocation writes one report to stdout and exits with 0 (pass / ok),
1 (validation failed) or 2 (bad input or any other error).
"""
from __future__ import annotations

import logging
import math
import sys
from typing import Any

import click
import numpy as np

from . import report as rpt
from .admission import (
    EquivParams,
    Mode,
    Regime,
    TTestParams,
    induce_params,
    min_n_bound,
    plan_n_e,
    plan_n_e_real,
    plan_n_t,
    plan_n_t_real,
    revised_alpha,
    run_validation,
)
from .normal_dist import quantile
from .power_sim import (
    Figure,
    SimDesign,
    curves_to_csv,
    figure_curves,
    pass_probability_mc,
    stability_scan,
)
from .sde_model import parse_csv, read_csv

_LOGGER = logging.getLogger(__name__)

SEED_ENVVAR = "APCVAL_SEED"
EXIT_PASS, EXIT_FAIL, EXIT_ERROR = 0, 1, 2

_REGIMES = click.Choice([r.value for r in Regime])
_format_option = click.option(
    "--format", "fmt", type=click.Choice(["json", "csv", "text"]), default="json", show_default=True
)


def _t_defaults(regime: str, alpha, beta) -> tuple[float, float]:
    # equivalence flags are in the swapped framing: alpha_e=0.025, beta_e=0.05
    if regime == Regime.EQUIVALENCE.value:
        return (0.025 if alpha is None else alpha, 0.05 if beta is None else beta)
    return (0.05 if alpha is None else alpha, 0.025 if beta is None else beta)


def _params(regime: str, alpha: float, beta: float, dr: float, v: float | None):
    if regime == Regime.EQUIVALENCE.value:
        return EquivParams(alpha_e=alpha, beta_e=beta, delta=dr, v=v)
    return TTestParams(alpha_t=alpha, beta_t=beta, d_r=dr, v=v)


def _emit(command: str, inputs: dict[str, Any], result: dict[str, Any], fmt: str) -> None:
    click.echo(rpt.render(rpt.make_report(command, inputs, result), fmt), nl=False)


def argv_from_inputs(command: str, inputs: dict[str, Any]) -> list[str]:
    """Rebuild a command line from a report's ``inputs`` echo."""
    argv = [command]
    for key, value in inputs.items():
        flag = "--" + key.replace("_", "-")
        if value is None:
            continue
        if isinstance(value, bool):
            argv.append(flag if value else "--no-" + key.replace("_", "-"))
        elif isinstance(value, list):
            argv += [flag, ",".join(repr(float(x)) for x in value)]
        elif isinstance(value, float):
            argv += [flag, repr(value)]
        else:
            argv += [flag, str(value)]
    return argv


@click.group()
@click.version_option(rpt.tool_version(), prog_name="apcval")
def cli():
    """Admission tests for automatic passenger counting systems."""


@cli.command()
@click.option("--regime", type=_REGIMES, default=Regime.TTEST.value, show_default=True)
@click.option("--v", type=float, required=True, help="A-priori standard deviation of the relative differences.")
@click.option("--dr", "--delta", "dr", type=float, default=0.01, show_default=True,
              help="Maximal allowed systematic error (equivalence margin).")
@click.option("--alpha", type=float, default=None, help="Type I error of the chosen framing.")
@click.option("--beta", type=float, default=None, help="Type II error of the chosen framing.")
@_format_option
def plan(regime, v, dr, alpha, beta, fmt):
    """Sample size needed for a regime."""
    alpha, beta = _t_defaults(regime, alpha, beta)
    params = _params(regime, alpha, beta, dr, v)
    result: dict[str, Any] = {"regime": regime}
    if isinstance(params, EquivParams):
        result.update(n=plan_n_e(params), n_real=plan_n_e_real(params))
    elif regime == Regime.INDUCED_EQUIVALENCE.value:
        e = induce_params(params)
        result.update(n=plan_n_e(e), n_real=plan_n_e_real(e),
                      induced_params={"alpha_e": e.alpha_e, "beta_e": e.beta_e, "delta": e.delta})
    else:
        result.update(n=plan_n_t(params), n_real=plan_n_t_real(params))
    inputs = dict(regime=regime, v=v, dr=dr, alpha=alpha, beta=beta, format=fmt)
    _emit("plan", inputs, result, fmt)
    return EXIT_PASS


@cli.command()
@click.option("--input", "input_path", type=str, required=True, help="SDE CSV file, '-' for stdin.")
@click.option("--direction", type=click.Choice(["boarding", "alighting"]), default=None)
@click.option("--regime", type=_REGIMES, default=Regime.INDUCED_EQUIVALENCE.value, show_default=True)
@click.option("--alpha", type=float, default=None)
@click.option("--beta", type=float, default=None)
@click.option("--dr", "--delta", "dr", type=float, default=0.01, show_default=True)
@click.option("--v", type=float, default=None, help="A-priori standard deviation (diagnostics only).")
@_format_option
def validate(input_path, direction, regime, alpha, beta, dr, v, fmt):
    """Run an admission test on a CSV of stop-door events."""
    alpha, beta = _t_defaults(regime, alpha, beta)
    params = _params(regime, alpha, beta, dr, v)
    if input_path == "-":
        sample = parse_csv(sys.stdin, direction)
    else:
        sample = read_csv(input_path, direction)
    verdict = run_validation(sample, params, regime)
    inputs = dict(input=input_path, direction=direction, regime=regime,
                  alpha=alpha, beta=beta, dr=dr, v=v, format=fmt)
    _emit("validate", inputs, verdict.to_dict(), fmt)
    return EXIT_PASS if verdict.passed else EXIT_FAIL


@cli.command("revise-alpha")
@click.option("--v-hat", type=float, required=True, help="Empirical standard deviation.")
@click.option("--n", type=float, default=None, help="Actual sample size; default: planned from --v.")
@click.option("--v", type=float, default=None, help="A-priori standard deviation.")
@click.option("--dr", type=float, default=0.01, show_default=True)
@click.option("--alpha", type=float, default=0.05, show_default=True)
@click.option("--beta", type=float, default=0.025, show_default=True)
@_format_option
def revise_alpha_cmd(v_hat, n, v, dr, alpha, beta, fmt):
    """Revised significance level of the post-hoc adapted t-test."""
    params = TTestParams(alpha_t=alpha, beta_t=beta, d_r=dr, v=v)
    if n is None:
        if v is None:
            raise click.UsageError("give --n or --v")
        n_used = plan_n_t_real(params)
    else:
        n_used = n
    ra = revised_alpha(n_used, v_hat, dr, beta)
    bound = min_n_bound(v_hat, dr, beta)
    z = ra.z
    threshold = math.inf if math.isinf(z) and z > 0 else z * v_hat / math.sqrt(n_used)
    if n_used < bound:
        mode = Mode.ALWAYS_FAIL
    elif ra.underflowed:
        mode = Mode.ALWAYS_PASS
    else:
        mode = Mode.REGULAR
    result = {
        "n_used": n_used,
        "alpha_hat": ra.value,
        "underflowed": ra.underflowed,
        "argument": ra.argument,
        "z_revised": z,
        "threshold": threshold,
        "min_n_bound": bound,
        "mode": mode.value,
    }
    if v is not None:
        result["v_ratio"] = v / v_hat
    inputs = dict(v_hat=v_hat, n=n, v=v, dr=dr, alpha=alpha, beta=beta, format=fmt)
    _emit("revise-alpha", inputs, result, fmt)
    return EXIT_PASS


def _parse_mu(text: str) -> list[float]:
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise click.BadParameter(f"not a comma separated list of numbers: {text!r}", param_hint="--mu")
    if not values:
        raise click.BadParameter("empty grid", param_hint="--mu")
    return values


@cli.command()
@click.option("--preset", type=click.Choice([f.value for f in Figure]), default=None)
@click.option("--regime", type=_REGIMES, default=None)
@click.option("--n", type=click.IntRange(min=2), default=None, help="Sample size; default: planned from --v.")
@click.option("--v", type=float, default=None, help="A-priori standard deviation used for planning.")
@click.option("--alpha", type=float, default=None)
@click.option("--beta", type=float, default=None)
@click.option("--dr", "--delta", "dr", type=float, default=None)
@click.option("--sigma", type=float, default=None, help="True standard deviation of the relative differences.")
@click.option("--mu", type=str, default=None, help="Comma separated grid of true systematic errors.")
@click.option("--replicates", type=click.IntRange(min=1), default=None)
@click.option("--seed", type=click.IntRange(min=0, max=2**64 - 1), default=0, envvar=SEED_ENVVAR, show_default=True)
@click.option("--workers", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--known-variance/--no-known-variance", default=False, show_default=True)
@click.option("--method", type=click.Choice(["summary", "raw"]), default="summary", show_default=True)
@_format_option
def simulate(preset, regime, n, v, alpha, beta, dr, sigma, mu, replicates, seed, workers,
             known_variance, method, fmt):
    """Monte Carlo pass-probability curves."""
    mu_grid = _parse_mu(mu) if mu is not None else None
    if preset is not None:
        overrides: dict[str, Any] = {"seed": seed, "known_variance": known_variance, "method": method}
        for key, value in (("alpha_t", alpha), ("beta_t", beta), ("d_r", dr), ("sigma_true", sigma),
                           ("replicates", replicates), ("mu_grid", mu_grid)):
            if value is not None:
                overrides[key] = value
        if v is not None:
            overrides["v_planned"] = (v,)
        curves = figure_curves(preset, overrides, workers=workers)
    else:
        if regime is None:
            raise click.UsageError("give --preset or --regime")
        alpha, beta = _t_defaults(regime, alpha, beta)
        dr = 0.01 if dr is None else dr
        sigma = 0.15 if sigma is None else sigma
        replicates = 10_000 if replicates is None else replicates
        mu_grid = mu_grid or [round(x, 6) for x in np.linspace(-0.03, 0.03, 61)]
        params = _params(regime, alpha, beta, dr, v)
        if n is None:
            if v is None:
                raise click.UsageError("give --n or --v")
            n = plan_n_e(params) if isinstance(params, EquivParams) else plan_n_t(params)
        design = SimDesign(Regime(regime), params, n, tuple(mu_grid), sigma, replicates, seed,
                           v_planned=v, known_variance=known_variance, method=method)
        curves = [pass_probability_mc(design, workers=workers)]

    inputs = dict(preset=preset, regime=regime, n=n, v=v, alpha=alpha, beta=beta, dr=dr, sigma=sigma,
                  mu=mu_grid, replicates=replicates, seed=seed, workers=workers,
                  known_variance=known_variance, method=method, format=fmt)
    if fmt == "csv":
        click.echo(curves_to_csv(curves), nl=False)
        return EXIT_PASS
    result = {
        "curves": [
            {
                "label": c.design.label,
                "regime": c.design.regime.value,
                "n": c.design.n,
                "v_planned": c.design.v_planned,
                "sigma_true": c.design.sigma_true,
                "replicates": c.design.replicates,
                "seed": c.design.seed,
                "points": [{"mu": p.mu, "pass_prob": p.pass_prob, "std_err": p.std_err} for p in c.points],
            }
            for c in curves
        ]
    }
    _emit("simulate", inputs, result, fmt)
    return EXIT_PASS


@cli.command("stability-scan")
@click.option("--alpha", type=float, default=0.05, show_default=True)
@click.option("--beta", type=float, default=0.025, show_default=True)
@click.option("--lo", type=float, default=1.0, show_default=True)
@click.option("--hi", type=float, default=5.0, show_default=True)
@click.option("--step", type=float, default=0.001, show_default=True)
@click.option("--v-hat", type=float, default=None, help="Also report the a-priori v where saturation starts.")
@_format_option
def stability_scan_cmd(alpha, beta, lo, hi, step, v_hat, fmt):
    """Smallest v / v_hat at which the naive revised t-test always passes."""
    TTestParams(alpha_t=alpha, beta_t=beta)
    ratio = stability_scan(alpha, beta, lo, hi, step)
    result: dict[str, Any] = {"critical_ratio": ratio}
    if v_hat is not None:
        result["v_onset"] = ratio * v_hat
    inputs = dict(alpha=alpha, beta=beta, lo=lo, hi=hi, step=step, v_hat=v_hat, format=fmt)
    _emit("stability-scan", inputs, result, fmt)
    return EXIT_PASS


def _error_report(args: list[str], exc: BaseException) -> None:
    command = next((a for a in args if not a.startswith("-")), None)
    message = exc.format_message() if isinstance(exc, click.ClickException) else str(exc)
    error = {"type": type(exc).__name__, "message": message}
    line = getattr(exc, "line", None)
    if line is not None:
        error["line"] = line
    click.echo(rpt.dumps(rpt.make_report(command or "", {"argv": args}, error=error)))


def main(argv: list[str] | None = None) -> int:
    """Entry point; returns (and, as a script, exits with) 0, 1 or 2."""
    args = list(sys.argv[1:] if argv is None else argv)
    try:
        code = cli.main(args=args, prog_name="apcval", standalone_mode=False)
    except click.exceptions.Exit as exc:  # --help / --version
        code = exc.exit_code
    except (click.ClickException, click.exceptions.Abort, ValueError, TypeError,
            ZeroDivisionError, OSError) as exc:
        _LOGGER.debug("command failed", exc_info=True)
        _error_report(args, exc)
        code = EXIT_ERROR
    if code is None:
        code = EXIT_PASS
    if argv is None:
        sys.exit(code)
    return code


if __name__ == "__main__":
    main()
