# Stechkin problem: best approximation of f∘A by functionals of norm ≤ N on W_{D,h''}.
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from app.core.config import settings
from app.core.errors import ConvergenceError, DomainError
from app.services.mean_squared import check_shared_models
from app.services.spectral import (
    ExtendedSum,
    SpectralModel,
    TailPolicy,
    WeightVector,
    check_weight_vector,
    model_sum,
)

logger = logging.getLogger(__name__)

_BRACKET_STEPS = 200


class BudgetConvention(str, Enum):
    as_displayed = "as-displayed"   # N equals the displayed sum ~Σ c·c'/(c'+μd)²
    sqrt         = "sqrt"           # N equals the dual norm, the square root of that sum


class SolveStatus(str, Enum):
    solved       = "solved"
    clamped      = "clamped"        # N above ‖G_0‖: G_0 already reproduces f∘A on W
    at_n_star    = "at-n-star"      # N = N*: the μ = +∞ endpoint
    below_n_star = "below-n-star"   # N < N*: E_N = +∞


class BoundStatus(str, Enum):
    ok             = "ok"
    skipped        = "skipped"         # ‖x‖_D = 0 at this truncation
    not_applicable = "not-applicable"  # μ = +∞ or E = +∞


@dataclass(frozen=True)
class StechkinProblem:
    """Split weights b_{n,h} = c_{n,h'} + d_{n,h''} over one index set and one functional."""
    model_c: SpectralModel
    model_d: SpectralModel
    h_c: WeightVector
    h_d: WeightVector

    def __post_init__(self):
        check_shared_models(self.model_c, self.model_d)
        object.__setattr__(self, "h_c", check_weight_vector(self.model_c, self.h_c))
        object.__setattr__(self, "h_d", check_weight_vector(self.model_d, self.h_d))

    def weights(self, tc, td) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return tc.c, tc.combined(self.h_c), td.combined(self.h_d)

    def exponents(self) -> Optional[tuple[float, float, float, float]]:
        """(c, C_max, D_max, shell) growth exponents, when both models declare them."""
        gc, gd = self.model_c.growth, self.model_d.growth
        if gc is None or gd is None:
            return None
        return gc.c, max(gc.b), max(gd.b), gc.shell


@dataclass(frozen=True)
class StechkinSolution:
    mu: float
    budget_N: float
    error_E: ExtendedSum
    n_star: ExtendedSum
    status: SolveStatus = SolveStatus.solved
    convention: BudgetConvention = BudgetConvention.as_displayed


@dataclass(frozen=True)
class LowerBound:
    value: Optional[float]
    level: int
    status: BoundStatus = BoundStatus.ok


def _convention(convention) -> BudgetConvention:
    return BudgetConvention(convention or settings.BUDGET_CONVENTION)


def _sum(problem: StechkinProblem, terms, policy, decay) -> ExtendedSum:
    return model_sum([problem.model_c, problem.model_d], terms, policy, decay)


def _decay(problem: StechkinProblem, numerator: str, mu: float) -> Optional[float]:
    exps = problem.exponents()
    if exps is None:
        return None
    c, c_max, d_max, shell = exps
    top = c + (c_max if numerator == "c" else d_max)
    den = 2 * max(c_max, d_max) if mu > 0 else 2 * c_max
    return den - top - shell


# ── Norm and error series ─────────────────────────────────────────────────────

def g_mu_norm_sq(problem: StechkinProblem, mu: float, policy: Optional[TailPolicy] = None) -> ExtendedSum:
    """~Σ c·c'/(c' + μd)², nonincreasing and continuous in μ ≥ 0."""
    if not mu >= 0:
        raise DomainError(f"μ must be nonnegative, got {mu}")

    def terms(tc, td):
        c, cc, dd = problem.weights(tc, td)
        return c * cc, (cc + mu * dd) ** 2

    return _sum(problem, terms, policy, _decay(problem, "c", mu))


def budget_norm(problem: StechkinProblem, mu: float, convention=None, policy: Optional[TailPolicy] = None) -> ExtendedSum:
    """The budget N that μ solves for under the chosen convention."""
    g = g_mu_norm_sq(problem, mu, policy)
    return g.sqrt() if _convention(convention) == BudgetConvention.sqrt else g


def n_star(problem: StechkinProblem, policy: Optional[TailPolicy] = None) -> ExtendedSum:
    """Σ c/c' over M* = {c' ≠ 0, d = 0}, in the displayed convention."""

    def terms(tc, td):
        c, cc, dd = problem.weights(tc, td)
        in_star = (cc != 0.0) & (dd == 0.0)
        return np.where(in_star, c, 0.0), np.where(in_star, cc, 1.0)

    # growing D weights vanish at finitely many indices only
    exps = problem.exponents()
    finite_support = exps is not None and exps[2] > 0
    return _sum(problem, terms, policy, math.inf if finite_support else None)


def error_e(problem: StechkinProblem, mu: float, policy: Optional[TailPolicy] = None) -> ExtendedSum:
    """E = μ·√(~Σ c·d/(c' + μd)²); zero at μ = 0."""
    if not mu >= 0:
        raise DomainError(f"μ must be nonnegative, got {mu}")
    if mu == 0:
        return ExtendedSum(0.0)

    def terms(tc, td):
        c, cc, dd = problem.weights(tc, td)
        return c * dd, (cc + mu * dd) ** 2

    return _sum(problem, terms, policy, _decay(problem, "d", mu)).sqrt().scaled(mu)


def error_at_infinity(problem: StechkinProblem, policy: Optional[TailPolicy] = None) -> ExtendedSum:
    """E at the μ = +∞ endpoint: √(Σ_{d≠0} c/d)."""

    def terms(tc, td):
        c, _, dd = problem.weights(tc, td)
        return np.where(dd != 0.0, c, 0.0), dd

    exps = problem.exponents()
    decay = None if exps is None else exps[2] - exps[0] - exps[3]
    return _sum(problem, terms, policy, decay).sqrt()


# ── Budget equation ───────────────────────────────────────────────────────────

def _bracket(g, target: float) -> tuple[float, float]:
    """[lo, hi] with g(lo) ≥ target ≥ g(hi), doubling outward from μ = 1."""
    lo = hi = 1.0
    if g(hi) > target:
        for _ in range(_BRACKET_STEPS):
            lo, hi = hi, 2 * hi
            if g(hi) <= target:
                return lo, hi
    else:
        for _ in range(_BRACKET_STEPS):
            lo, hi = lo / 2, lo
            if g(lo) >= target:
                return lo, hi
    raise ConvergenceError(f"could not bracket the budget {target!r} within μ ∈ [2^-{_BRACKET_STEPS}, 2^{_BRACKET_STEPS}]")


def solve_budget(
    problem: StechkinProblem,
    budget: float,
    convention=None,
    policy: Optional[TailPolicy] = None,
) -> StechkinSolution:
    """μ with budget_norm(μ) = N, and the best-approximation error E_N at that μ."""
    conv = _convention(convention)
    if not (budget > 0 and math.isfinite(budget)):
        raise DomainError(f"budget must be a positive finite number, got {budget}")
    target = budget ** 2 if conv == BudgetConvention.sqrt else budget

    star = n_star(problem, policy)
    if star.is_infinite or target < star.value:
        logger.info("budget %.17g lies below N* = %s: error is infinite", budget, star.value)
        return StechkinSolution(math.inf, budget, ExtendedSum.infinite(), star, SolveStatus.below_n_star, conv)
    if target == star.value:
        return StechkinSolution(math.inf, budget, error_at_infinity(problem, policy), star, SolveStatus.at_n_star, conv)

    g0 = g_mu_norm_sq(problem, 0.0, policy)
    if not g0.is_infinite and target >= g0.value:
        status = SolveStatus.solved if target == g0.value else SolveStatus.clamped
        if status == SolveStatus.clamped:
            logger.warning("budget %.17g exceeds ‖G_0‖ = %.17g; clamped to μ = 0", budget, g0.value)
        return StechkinSolution(0.0, budget, ExtendedSum(0.0), star, status, conv)

    def g(mu: float) -> float:
        return g_mu_norm_sq(problem, mu, policy).value

    lo, hi = _bracket(g, target)
    logger.info("budget %.17g bracketed in μ ∈ [%.6g, %.6g]", budget, lo, hi)
    mu = brentq(lambda x: g(x) - target, lo, hi, xtol=np.finfo(float).tiny, rtol=max(settings.ROOT_REL_TOL, 4 * np.finfo(float).eps), maxiter=500)
    return StechkinSolution(float(mu), budget, error_e(problem, mu, policy), star, SolveStatus.solved, conv)


def stechkin_lower_bound(
    problem: StechkinProblem,
    budget: float,
    level: int,
    mu: Optional[float] = None,
    convention=None,
    policy: Optional[TailPolicy] = None,
) -> LowerBound:
    """(|⟨f,Ax⟩| − ‖G‖·‖x‖_{C,h'})/‖x‖_{D,h''} at x = x^μ_{h,L}, a certified lower bound on E_N.

    ‖G‖ is the dual norm of the approximating functional: √N under the displayed
    convention and N itself under the square-root one.
    """
    conv = _convention(convention)
    if mu is None:
        mu = solve_budget(problem, budget, conv, policy).mu
    if not math.isfinite(mu):
        return LowerBound(None, level, BoundStatus.not_applicable)

    tc, td = problem.model_c.table(level), problem.model_d.table(level)
    c, cc, dd = problem.weights(tc, td)
    b = cc + mu * dd
    keep = (b != 0.0) & (c != 0.0)
    x = np.sqrt(c[keep]) / b[keep]
    norm_d = math.sqrt(float(np.sum(x * x * dd[keep])))
    if norm_d == 0.0:
        return LowerBound(None, tc.level, BoundStatus.skipped)
    pairing = float(np.sum(c[keep] / b[keep]))
    norm_c = math.sqrt(float(np.sum(x * x * cc[keep])))
    dual = budget if conv == BudgetConvention.sqrt else math.sqrt(budget)
    return LowerBound((pairing - dual * norm_c) / norm_d, tc.level)


# ── Trade-off curves ──────────────────────────────────────────────────────────

def budget_grid(problem: StechkinProblem, count: int, convention=None, policy: Optional[TailPolicy] = None) -> list[float]:
    """`count` budgets inside (N*, ‖G_0‖), the images of log-spaced μ ∈ [1e-3, 1e3]."""
    if count < 1:
        raise DomainError("budget grid needs at least one point")
    mus = np.logspace(3, -3, count) if count > 1 else np.array([1.0])
    return [budget_norm(problem, float(mu), convention, policy).value for mu in mus]


def tradeoff_curve(
    problem: StechkinProblem,
    budgets: Sequence[float],
    convention=None,
    policy: Optional[TailPolicy] = None,
) -> list[StechkinSolution]:
    solutions = [solve_budget(problem, float(n), convention, policy) for n in budgets]
    logger.info("trade-off curve: %d budgets solved", len(solutions))
    return solutions
