# Command dispatch shared by the CLI and the HTTP routes: RunConfig → record + artifacts.
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np
import pandas as pd

from app.core.config import settings
from app.core.errors import DomainError, ModelSpecError, SharpConstError
from app.models.run import CatalogAction, Command, ConstantMode, RunConfig, VerifyKind
from app.models.spec import Family, ModelSpec
from app.services.catalog import RdModel, rd_flat_exponents, rd_integral
from app.services.hull import exponent_condition, taikov_hull_certificate
from app.services.mean_squared import (
    ScanKind,
    additive_taikov,
    hlp_constant,
    random_violation_scan,
    taikov_constant,
)
from app.services.model_loader import build_model, build_stechkin, load_model_spec, tail_policy
from app.services.multiplicative import (
    MultStatus,
    finiteness_series_check,
    mult_hlp_constant,
    mult_taikov_constant,
    sharp_factor,
)
from app.services.presets import PRESETS, get_preset, preset_names
from app.services.records import curve_frame, number, plain, sum_fields, tradeoff_frame, write_csv, write_json
from app.services.solyar import TrigPolynomial, solyar_ratio, solyar_scan
from app.services.spectral import ExtendedSum, SpectralModel, convergence_curve
from app.services.stechkin import (
    BudgetConvention,
    budget_grid,
    g_mu_norm_sq,
    stechkin_lower_bound,
    tradeoff_curve,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFINITE = 2

SOLYAR_EQUALITY_TOL = 1e-8


@dataclass
class RunOutcome:
    exit_code: int
    record: dict[str, Any]
    frames: dict[str, pd.DataFrame] = field(default_factory=dict)


def exit_code_for(s: ExtendedSum) -> int:
    if s.is_infinite:
        return EXIT_INFINITE
    return EXIT_OK if s.converged else EXIT_ERROR


def _weights(config: RunConfig, spec: ModelSpec, m: int) -> list[float]:
    return list(config.h or spec.h or [1.0] * (m + 1))


def _exponents(config: RunConfig, spec: ModelSpec, model) -> tuple[float, ...]:
    lam = config.lam or spec.lam
    if lam is not None:
        return tuple(lam)
    if isinstance(model, RdModel) and model.m == model.d:
        lam = rd_flat_exponents(model)
        logger.info("λ defaulted to the barycentric coordinates of k + 1/2: %s", lam)
        return tuple(lam)
    raise DomainError("multiplicative constants need λ (--lambda or 'lambda' in the model spec)")


def _header(command: str, spec: Optional[ModelSpec]) -> dict[str, Any]:
    record: dict[str, Any] = {"command": command}
    if spec is not None:
        record["model"] = spec.name
        record["family"] = spec.family.value
    return record


# ── constant ──────────────────────────────────────────────────────────────────

def _mean_squared(config: RunConfig, spec: ModelSpec, model, record: dict) -> RunOutcome:
    h = _weights(config, spec, model.m)
    policy = tail_policy(spec, config.rel_tol, config.max_level)
    if config.mode == ConstantMode.hlp:
        if isinstance(model, RdModel):
            raise DomainError("the R^d model carries the Taikov integral only")
        s = hlp_constant(model, h, policy)
    elif isinstance(model, RdModel):
        s = rd_integral(model, h)
    else:
        s = taikov_constant(model, h, policy)

    record.update(h=h, **sum_fields(s, "constant_sq"))
    record["constant"] = number(s.sqrt().value)
    frames = {}
    if config.curve and isinstance(model, SpectralModel) and config.mode == ConstantMode.mean_squared:
        levels, partial = convergence_curve(model, h, config.curve_level)
        frames["curve"] = curve_frame(levels, partial)
    return RunOutcome(exit_code_for(s), record, frames)


def _multiplicative(config: RunConfig, spec: ModelSpec, model, record: dict) -> RunOutcome:
    lam = _exponents(config, spec, model)
    policy = tail_policy(spec, config.rel_tol, config.max_level)
    hlp = config.mode == ConstantMode.multiplicative_hlp
    if hlp:
        if isinstance(model, RdModel):
            raise DomainError("the R^d model carries the Taikov integral only")
        result = mult_hlp_constant(model, lam, policy)
    else:
        result = mult_taikov_constant(model, lam, policy)
    factor = sharp_factor(result.constant, lam)

    record.update(**sum_fields(result.constant, "C"))
    record.update(
        sharp_factor=number(factor.value),
        argmax_h=result.argmax_h,
        certificate_gap=result.certificate_gap,
        result_status=result.status.value,
        evaluations=result.evaluations,
        grid=plain(result.grid),
    )
    record["lambda"] = list(lam)

    if spec.family not in (Family.explicit, Family.eigen_table):
        k = np.asarray(spec.k_vector)
        shift = k if hlp else k + 0.5
        record["exponent_condition"] = plain(exponent_condition(shift, spec.r_vectors, lam))
        if not hlp and spec.family in (Family.torus, Family.rd):
            cert = taikov_hull_certificate(spec.k_vector, spec.r_vectors)
            record["hull"] = plain(cert)
            if not cert.inside:
                logger.warning("k + 1/2 is %s the order hull: no finiteness certificate", cert.status.value)

    if result.status in (MultStatus.vacuous, MultStatus.unbounded):
        code = EXIT_INFINITE
    elif result.status == MultStatus.not_converged:
        code = EXIT_ERROR
    else:
        code = EXIT_OK
    return RunOutcome(code, record)


def _additive(config: RunConfig, spec: ModelSpec, record: dict) -> RunOutcome:
    problem = build_stechkin(spec)
    policy = tail_policy(spec, config.rel_tol, config.max_level)
    coeffs = additive_taikov(problem.model_c, problem.model_d, problem.h_c, problem.h_d, policy)
    record.update(coef_c=plain(coeffs.coef_c), coef_d=plain(coeffs.coef_d))
    return RunOutcome(max(exit_code_for(coeffs.coef_c), exit_code_for(coeffs.coef_d)), record)


def _finiteness(config: RunConfig, spec: ModelSpec, model, record: dict) -> RunOutcome:
    if isinstance(model, RdModel):
        raise DomainError("the finiteness series is defined for spectral models")
    lam = _exponents(config, spec, model)
    s = finiteness_series_check(model, lam, tail_policy(spec, config.rel_tol, config.max_level))
    record.update(**sum_fields(s, "series"))
    record["lambda"] = list(lam)
    record["implies_finite"] = not s.is_infinite
    return RunOutcome(exit_code_for(s), record)


def _constant(config: RunConfig) -> RunOutcome:
    spec = load_model_spec(config.model)
    record = _header("constant", spec)
    record["mode"] = config.mode.value
    if config.mode == ConstantMode.additive:
        return _additive(config, spec, record)
    model = build_model(spec)
    if config.mode in (ConstantMode.mean_squared, ConstantMode.hlp):
        return _mean_squared(config, spec, model, record)
    if config.mode == ConstantMode.finiteness:
        return _finiteness(config, spec, model, record)
    return _multiplicative(config, spec, model, record)


# ── stechkin ──────────────────────────────────────────────────────────────────

def _stechkin(config: RunConfig) -> RunOutcome:
    spec = load_model_spec(config.model)
    problem = build_stechkin(spec)
    policy = tail_policy(spec, config.rel_tol, config.max_level)
    conv = BudgetConvention(config.convention or settings.BUDGET_CONVENTION)

    budgets = list(config.budgets)
    if not budgets:
        if not config.grid:
            raise DomainError("stechkin needs --budget or --grid")
        budgets = budget_grid(problem, config.grid, conv, policy)
    solutions = tradeoff_curve(problem, budgets, conv, policy)

    rows = []
    for s in solutions:
        row = {
            "N": s.budget_N,
            "mu": number(s.mu),
            "error": number(s.error_E.value),
            "error_status": s.error_E.status.value,
            "status": s.status.value,
        }
        if config.lower_level:
            bound = stechkin_lower_bound(problem, s.budget_N, config.lower_level, mu=s.mu, convention=conv, policy=policy)
            row.update(lower_bound=number(bound.value), lower_bound_status=bound.status.value)
        rows.append(row)

    record = _header("stechkin", spec)
    record.update(
        convention=conv.value,
        n_star=number(solutions[0].n_star.value),
        g0_norm=number(g_mu_norm_sq(problem, 0.0, policy).value),
        solutions=rows,
    )
    if len(rows) == 1:
        record.update(mu=rows[0]["mu"], error=rows[0]["error"])

    frames = {"curve": tradeoff_frame(solutions)} if config.curve else {}
    if any(s.error_E.is_infinite for s in solutions):
        code = EXIT_INFINITE
    elif any(not s.error_E.converged for s in solutions):
        code = EXIT_ERROR
    else:
        code = EXIT_OK
    return RunOutcome(code, record, frames)


# ── verify ────────────────────────────────────────────────────────────────────

def _verify_solyar(config: RunConfig) -> RunOutcome:
    record = _header("verify", None)
    record.update(kind="solyar", p=number(config.p), k=config.k)
    if config.harmonic is not None:
        ratio = solyar_ratio(TrigPolynomial.harmonic(config.harmonic), config.k, config.p)
        record.update(harmonic=config.harmonic, ratio=ratio)
        return RunOutcome(EXIT_ERROR if ratio > 1 + SOLYAR_EQUALITY_TOL else EXIT_OK, record)

    seed = settings.SEED if config.seed is None else config.seed
    scan = solyar_scan(config.p, config.k, config.trials, seed, degree=config.degree, modes=config.modes)
    record.update(seed=seed, trials=scan.trials, max_ratio=scan.max_ratio, violated=scan.violated, witness=scan.witness)
    return RunOutcome(EXIT_ERROR if scan.violated else EXIT_OK, record)


def _verify(config: RunConfig) -> RunOutcome:
    if config.kind == VerifyKind.solyar:
        return _verify_solyar(config)

    spec = load_model_spec(config.model)
    model = build_model(spec)
    if isinstance(model, RdModel):
        raise DomainError("random scans run over spectral models only")
    h = _weights(config, spec, model.m)
    policy = tail_policy(spec, config.rel_tol, config.max_level)
    kind = ScanKind(config.kind.value)
    constant = taikov_constant(model, h, policy) if kind == ScanKind.taikov else hlp_constant(model, h, policy)

    record = _header("verify", spec)
    record.update(kind=kind.value, h=h, **sum_fields(constant, "constant_sq"))
    if constant.is_infinite:
        logger.info("%s constant is infinite: nothing to verify", kind.value)
        return RunOutcome(EXIT_INFINITE, record)

    seed = settings.SEED if config.seed is None else config.seed
    report = random_violation_scan(model, h, config.trials, seed, kind=kind, level=config.level, constant=constant)
    record.update(
        seed=seed,
        trials=report.trials,
        max_ratio=report.max_ratio,
        violated=report.violated,
        witness=report.witness,
        **report.extra,
    )
    return RunOutcome(EXIT_ERROR if report.violated else exit_code_for(constant), record)


# ── catalog ───────────────────────────────────────────────────────────────────

def _catalog(config: RunConfig) -> RunOutcome:
    record = _header("catalog", None)
    if config.action == CatalogAction.list:
        record["presets"] = [
            {"name": name, "family": PRESETS[name].spec["family"], "description": PRESETS[name].description}
            for name in preset_names()
        ]
        return RunOutcome(EXIT_OK, record)
    preset = get_preset(config.name)
    record.update(
        name=preset.name,
        description=preset.description,
        spec=preset.model_spec().model_dump(mode="json", by_alias=True, exclude_none=True),
    )
    return RunOutcome(EXIT_OK, record)


_DISPATCH: dict[Command, Callable[[RunConfig], RunOutcome]] = {
    Command.constant: _constant,
    Command.stechkin: _stechkin,
    Command.verify:   _verify,
    Command.catalog:  _catalog,
}


# ── Entry points ──────────────────────────────────────────────────────────────

def execute(config: RunConfig) -> RunOutcome:
    """Run one command; SharpConstError subclasses propagate to the caller."""
    logger.info("run: %s", config.command.value)
    outcome = _DISPATCH[config.command](config)
    logger.info("run: %s finished with exit status %d", config.command.value, outcome.exit_code)
    return outcome


def error_record(command: str, exc: Exception) -> dict[str, Any]:
    error: dict[str, Any] = {"type": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ModelSpecError):
        error.update(field=exc.field, line=exc.line)
    return {"command": command, "error": error}


def write_artifacts(config: RunConfig, outcome: RunOutcome) -> None:
    if config.output:
        write_json(outcome.record, config.output)
    if config.curve:
        frame = outcome.frames.get("curve")
        if frame is None:
            logger.warning("no curve available for this command; %s not written", config.curve)
        else:
            write_csv(frame, config.curve)


def run(config: RunConfig) -> RunOutcome:
    """Exit status 0 on success, 2 on Infinite/vacuous results, 1 on errors; artifacts written to the configured paths."""
    try:
        outcome = execute(config)
    except SharpConstError as exc:
        logger.error("%s failed: %s", config.command.value, exc)
        outcome = RunOutcome(EXIT_ERROR, error_record(config.command.value, exc))
    write_artifacts(config, outcome)
    return outcome
