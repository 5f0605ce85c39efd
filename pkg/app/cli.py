# Command-line front end: `python -m app constant|stechkin|verify|catalog ...`.
from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Optional

import click
import yaml
from pydantic import ValidationError

from app.core.config import configure_logging
from app.models.run import RunConfig
from app.services.records import write_json
from app.services.runner import EXIT_ERROR, error_record, run

logger = logging.getLogger(__name__)


def _floats(ctx, param, value: Optional[str]) -> Optional[list[float]]:
    """'1,0.5' or '1 0.5' → [1.0, 0.5]."""
    if value is None:
        return None
    try:
        return [float(v) for v in value.replace(",", " ").split()]
    except ValueError:
        raise click.BadParameter(f"expected a comma-separated list of numbers, got {value!r}")


def _load_overrides(path: Optional[str]) -> dict[str, Any]:
    if path is None:
        return {}
    data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    if not isinstance(data, dict):
        raise click.BadParameter("the config file must hold a mapping", param_hint="--config")
    return data


def _finish(ctx: click.Context, command: str, values: dict[str, Any]) -> None:
    """Merge flags with the --config file (file wins), run, print the record, exit."""
    merged = {k: v for k, v in values.items() if v is not None and v != ()}
    merged.update(ctx.obj.get("overrides", {}))
    merged["command"] = command
    try:
        config = RunConfig.model_validate(merged)
    except ValidationError as exc:
        first = exc.errors()[0]
        message = f"{'.'.join(str(p) for p in first['loc'])}: {first['msg']}" if first["loc"] else first["msg"]
        logger.error("invalid run configuration: %s", message)
        write_json(error_record(command, ValueError(message)))
        ctx.exit(EXIT_ERROR)
    outcome = run(config)
    if not config.output:
        write_json(outcome.record)
    ctx.exit(outcome.exit_code)


_MODEL = click.option("--model", help="Spec file path or preset name (see `catalog list`).")
_H = click.option("--h", "h", callback=_floats, help="Weight vector h_0..h_m, e.g. 1,1.")
_TOL = click.option("--tol", "rel_tol", type=float, help="Relative tail tolerance ε_rel.")
_MAX_LEVEL = click.option("--max-level", type=int, help="Largest truncation level scanned.")
_OUTPUT = click.option("--output", "-o", type=click.Path(dir_okay=False), help="Write the JSON record here instead of stdout.")


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              help="YAML file whose keys override the command-line flags.")
@click.option("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR (default from SHARP_LOG_LEVEL).")
@click.pass_context
def cli(ctx: click.Context, config_path: Optional[str], log_level: Optional[str]) -> None:
    """Sharp constants of Taikov, Hardy–Littlewood–Pólya, Stechkin and Solyar type inequalities."""
    configure_logging(log_level)
    ctx.ensure_object(dict)
    ctx.obj["overrides"] = _load_overrides(config_path)


@cli.command()
@_MODEL
@click.option("--mean-squared", "mode", flag_value="mean-squared", help="K² = ~Σ c/b_h (default).")
@click.option("--multiplicative", "mode", flag_value="multiplicative", help="C = sup_h ∏h^λ K²(h).")
@click.option("--additive", "mode", flag_value="additive", help="coef_C, coef_D from the stechkin section.")
@click.option("--finiteness", "mode", flag_value="finiteness", help="Series ~Σ c/∏b^λ.")
@click.option("--hlp", is_flag=True, help="HLP instead of Taikov (combines with --multiplicative).")
@_H
@click.option("--lambda", "lam", callback=_floats, help="Exponents λ_0..λ_m summing to 1.")
@_TOL
@_MAX_LEVEL
@_OUTPUT
@click.option("--curve", type=click.Path(dir_okay=False), help="CSV path for the (N, partial_sum) curve.")
@click.option("--curve-level", type=int, help="Last level of the convergence curve.")
@click.pass_context
def constant(ctx: click.Context, mode: Optional[str], hlp: bool, **values) -> None:
    """Sharp constant of one model."""
    mode = mode or "mean-squared"
    if hlp:
        if mode not in ("mean-squared", "multiplicative"):
            raise click.UsageError("--hlp combines with --mean-squared or --multiplicative only")
        mode = "hlp" if mode == "mean-squared" else "multiplicative-hlp"
    values["lambda"] = values.pop("lam")
    _finish(ctx, "constant", {"mode": mode, **values})


@cli.command()
@_MODEL
@click.option("--budget", "budgets", type=float, multiple=True, help="Budget N (repeatable).")
@click.option("--grid", type=int, help="Number of log-spaced budgets inside (N*, ‖G_0‖).")
@click.option("--convention", type=click.Choice(["as-displayed", "sqrt"]), help="How N relates to ‖G_μ‖.")
@click.option("--lower-level", type=int, help="Also report the lower bound from x^μ truncated at this level.")
@_TOL
@_MAX_LEVEL
@_OUTPUT
@click.option("--curve", type=click.Path(dir_okay=False), help="CSV path for the (N, mu, E_N) trade-off table.")
@click.pass_context
def stechkin(ctx: click.Context, budgets: tuple[float, ...], **values) -> None:
    """Best approximation error E_N and its multiplier μ for given budgets."""
    _finish(ctx, "stechkin", {"budgets": list(budgets), **values})


@cli.command()
@click.argument("kind", type=click.Choice(["taikov", "hlp", "solyar"]))
@_MODEL
@_H
@click.option("--trials", type=int, help="Number of random trials.")
@click.option("--seed", type=int, help="Seed of the trial generators.")
@click.option("--level", type=int, help="Truncation level whose indices random vectors draw from.")
@click.option("--p", type=float, help="Solyar exponent p in [1, inf].")
@click.option("--k", type=float, help="Solyar order k.")
@click.option("--degree", type=int, help="Largest frequency of random polynomials.")
@click.option("--modes", type=int, help="Number of frequencies of random polynomials.")
@click.option("--harmonic", type=int, help="Check the single harmonic e^{int} instead of scanning.")
@_TOL
@_MAX_LEVEL
@_OUTPUT
@click.pass_context
def verify(ctx: click.Context, kind: str, **values) -> None:
    """Random scans that no ratio exceeds the computed constant."""
    _finish(ctx, "verify", {"kind": kind, **values})


@cli.command()
@click.argument("action", type=click.Choice(["list", "show"]))
@click.argument("name", required=False)
@_OUTPUT
@click.pass_context
def catalog(ctx: click.Context, action: str, name: Optional[str], output: Optional[str]) -> None:
    """List the preset models or show one of them."""
    _finish(ctx, "catalog", {"action": action, "name": name, "output": output})


def main() -> None:
    cli(prog_name="sharpconst")
