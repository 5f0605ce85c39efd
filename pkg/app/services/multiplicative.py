# Multiplicative Taikov/HLP constants: sup over h of ∏h^λ times the mean-squared constant.
from __future__ import annotations

import itertools
import logging
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.optimize import minimize
from scipy.special import comb, softmax

from app.core.config import settings
from app.core.errors import DomainError
from app.services.catalog import RdModel, rd_integral
from app.services.mean_squared import hlp_constant, taikov_constant
from app.services.spectral import ExtendedSum, SpectralModel, SumStatus, TailPolicy, WeightVector, model_sum

logger = logging.getLogger(__name__)

CERTIFICATE_GAP_TOL = 1e-6
_RAY_STEPS = (1e2, 1e4, 1e8)
# chart coordinates stay within the longest ray: h_j/h_0 in [1e-8, 1e8]
_THETA_BOUND = math.log(_RAY_STEPS[-1])

AnyModel = Union[SpectralModel, RdModel]
Inner = Callable[[WeightVector], ExtendedSum]


class ConstantKind(str, Enum):
    taikov = "taikov"
    hlp    = "hlp"


class MultStatus(str, Enum):
    ok            = "ok"
    zero          = "zero"            # c ≡ 0
    vacuous       = "vacuous"         # inner constant infinite for every h
    unbounded     = "unbounded"       # objective grows without bound along a ray h_j → 0 or ∞
    not_converged = "not-converged"   # inner sums, optimiser, or a sup approached at the simplex boundary


@dataclass(frozen=True)
class GridCertificate:
    best: float
    argmax_h: tuple[float, ...]
    resolution: int
    points: int


@dataclass(frozen=True)
class MultiplicativeResult:
    constant: ExtendedSum
    kind: ConstantKind
    lam: tuple[float, ...]
    argmax_h: Optional[tuple[float, ...]] = None
    certificate_gap: float = 0.0
    status: MultStatus = MultStatus.ok
    evaluations: int = 0
    grid: Optional[GridCertificate] = None


def check_exponents(lam: Sequence[float], m: Optional[int] = None) -> np.ndarray:
    """λ strictly positive, summing to 1 within 1e-12, of length m+1 when m is given."""
    arr = np.atleast_1d(np.asarray(lam, dtype=float))
    if m is not None and arr.size != m + 1:
        raise DomainError(f"λ needs {m + 1} components, got {arr.size}")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise DomainError(f"λ must be strictly positive, got {arr.tolist()}")
    if abs(float(arr.sum()) - 1.0) > 1e-12:
        raise DomainError(f"λ must sum to 1, sums to {float(arr.sum())!r}")
    return arr


def weight_power(lam: Sequence[float]) -> float:
    """∏ λ_j^{λ_j}."""
    lam = np.asarray(lam, dtype=float)
    return float(np.prod(lam ** lam))


def _model_m(model: AnyModel) -> int:
    return model.m


def _inner(model: AnyModel, kind: ConstantKind, policy: Optional[TailPolicy]) -> Inner:
    if isinstance(model, RdModel):
        if kind != ConstantKind.taikov:
            raise DomainError("the R^d model carries the Taikov integral only")
        return lambda h: rd_integral(model, h)
    if kind == ConstantKind.taikov:
        return lambda h: taikov_constant(model, h, policy)
    return lambda h: hlp_constant(model, h, policy)


def _objective_value(inner: Inner, lam: np.ndarray, h: np.ndarray) -> ExtendedSum:
    s = inner(WeightVector.of(h))
    if s.is_infinite:
        return s
    return s.scaled(float(np.exp(lam @ np.log(h))))


def mult_objective(model: AnyModel, lam: Sequence[float], h, kind: ConstantKind = ConstantKind.taikov,
                   policy: Optional[TailPolicy] = None) -> ExtendedSum:
    """∏ h_j^{λ_j} · S(h), invariant under h → t·h."""
    lam = check_exponents(lam, _model_m(model))
    return _objective_value(_inner(model, ConstantKind(kind), policy), lam, WeightVector.of(h).array)


# ── Optimisation over the simplex ─────────────────────────────────────────────

class _SimplexObjective:
    """log F(θ) with h = softmax([0, θ]); counts evaluations and remembers inner statuses."""

    def __init__(self, inner: Inner, lam: np.ndarray):
        self.inner = inner
        self.lam = lam
        self.calls = 0
        self.unsettled = False
        self._lock = threading.Lock()

    def h_of(self, theta: np.ndarray) -> np.ndarray:
        return softmax(np.concatenate([[0.0], np.clip(theta, -_THETA_BOUND, _THETA_BOUND)]))

    def evaluate(self, h: np.ndarray, track: bool = True) -> ExtendedSum:
        with self._lock:
            self.calls += 1
        s = _objective_value(self.inner, self.lam, h)
        if track and not s.converged and not s.is_infinite:
            self.unsettled = True
        return s

    def value(self, h: np.ndarray) -> float:
        return self.evaluate(h).value

    def neg_log(self, theta: np.ndarray) -> float:
        v = self.value(self.h_of(theta))
        return -math.log(v) if v > 0 else math.inf


def _nelder_mead(obj: _SimplexObjective, x0: np.ndarray, max_evaluations: int) -> tuple[float, np.ndarray]:
    m = len(x0)
    simplex = np.vstack([x0, x0 + 0.5 * np.eye(m)])
    res = minimize(
        obj.neg_log,
        x0,
        method="Nelder-Mead",
        options={"initial_simplex": simplex, "maxiter": 200 * (m + 1), "maxfev": max_evaluations,
                 "xatol": 1e-10, "fatol": 1e-14},
    )
    if not res.success:
        logger.debug("Nelder-Mead restart stopped early: %s", res.message)
    return math.exp(-res.fun), np.clip(res.x, -_THETA_BOUND, _THETA_BOUND)


def _restarts(m: int) -> np.ndarray:
    count = max(1, settings.OPT_RESTARTS)
    rng = np.random.default_rng(settings.SEED)
    return np.vstack([np.zeros((1, m)), rng.normal(0.0, 1.5, (count - 1, m))])


def _grows_along_rays(obj: _SimplexObjective, baseline: float, m: int) -> bool:
    """Objective along h ∝ t^{±1} e_j rays; growth past RAY_GROWTH × baseline means +∞.

    A ray stops at its first unsettled inner sum.
    """
    for j in range(m + 1):
        for sign in (1.0, -1.0):
            for t in _RAY_STEPS:
                log_h = np.zeros(m + 1)
                log_h[j] = sign * math.log(t)
                s = obj.evaluate(softmax(log_h), track=False)
                if s.is_infinite or s.value > settings.RAY_GROWTH * baseline:
                    logger.info("objective grows to %.3g along ray e_%d^(%+d) at t=%.0e", s.value, j, int(sign), t)
                    return True
                if not s.converged:
                    break
    return False


def _grid_points(m: int, resolution: int) -> tuple[np.ndarray, int]:
    """Interior compositions of `resolution` into m+1 parts, coarsened to GRID_MAX_POINTS."""
    while resolution > m + 1 and comb(resolution - 1, m, exact=True) > settings.GRID_MAX_POINTS:
        resolution //= 2
    resolution = max(resolution, m + 1)
    cuts = np.array(list(itertools.combinations(range(1, resolution), m)), dtype=float).reshape(-1, m)
    edges = np.hstack([np.zeros((len(cuts), 1)), cuts, np.full((len(cuts), 1), resolution)])
    return np.diff(edges, axis=1) / resolution, resolution


def simplex_grid_certificate(objective: Callable[[np.ndarray], float], m: int, resolution: Optional[int] = None) -> GridCertificate:
    """Grid maximum of the objective over the open simplex at the given resolution."""
    points, resolution = _grid_points(m, resolution or settings.GRID_RESOLUTION)
    values = np.array([objective(h) for h in points])
    best = int(np.argmax(values))
    return GridCertificate(float(values[best]), tuple(float(v) for v in points[best]), resolution, len(points))


def _maximise(model: AnyModel, lam: Sequence[float], kind: ConstantKind, policy: Optional[TailPolicy]) -> MultiplicativeResult:
    m = _model_m(model)
    lam = check_exponents(lam, m)
    obj = _SimplexObjective(_inner(model, kind, policy), lam)
    lam_t = tuple(float(v) for v in lam)

    center = np.full(m + 1, 1.0 / (m + 1))
    first = _objective_value(obj.inner, lam, center)
    if first.is_infinite:
        logger.info("inner %s constant is infinite: multiplicative inequality is vacuous", kind.value)
        return MultiplicativeResult(ExtendedSum.infinite(status=first.status), kind, lam_t, status=MultStatus.vacuous)
    if first.value == 0.0:
        return MultiplicativeResult(ExtendedSum(0.0), kind, lam_t, tuple(center), status=MultStatus.zero)
    if m == 0:
        return MultiplicativeResult(first, kind, lam_t, (1.0,), evaluations=1)

    if _grows_along_rays(obj, first.value, m):
        return MultiplicativeResult(ExtendedSum.infinite(status=SumStatus.divergent), kind, lam_t,
                                    status=MultStatus.unbounded, evaluations=obj.calls)

    starts = _restarts(m)
    # one share of the evaluation budget per restart, one more for polishing
    share = max(20 * (m + 1), settings.OPT_MAX_EVALUATIONS // (len(starts) + 1))
    with ThreadPoolExecutor(max_workers=max(1, settings.THREADS)) as pool:
        runs = list(pool.map(lambda x0: _nelder_mead(obj, x0, share), starts))
    best_value, best_theta = max(runs, key=lambda r: r[0])
    best_h = obj.h_of(best_theta)
    logger.info("%s: optimiser value %.17g at h=%s", kind.value, best_value, np.round(best_h, 6).tolist())

    grid = simplex_grid_certificate(obj.value, m)
    gap = max(0.0, (grid.best - best_value) / best_value)
    if gap > CERTIFICATE_GAP_TOL:
        logger.warning("grid beats the optimiser by %.3g; polishing from the grid argmax", gap)
        log_h = np.log(np.asarray(grid.argmax_h))
        value, theta = _nelder_mead(obj, log_h[1:] - log_h[0], share)
        if value > best_value:
            best_value, best_theta, best_h = value, theta, obj.h_of(theta)
        gap = max(0.0, (grid.best - best_value) / best_value)

    final = _objective_value(obj.inner, lam, best_h)
    on_boundary = bool(np.any(np.abs(best_theta) >= _THETA_BOUND - 1e-9))
    status = MultStatus.ok
    if on_boundary:
        status = MultStatus.not_converged
        logger.warning("%s: supremum is approached at the simplex boundary, h=%s; value is a lower bound",
                       kind.value, np.round(best_h, 12).tolist())
    elif obj.unsettled or not final.converged:
        status = MultStatus.not_converged
        logger.warning("%s: some inner evaluations did not meet the tail policy", kind.value)
    constant = ExtendedSum(best_value, final.status, final.level, final.tail_bound)
    return MultiplicativeResult(
        constant, kind, lam_t, tuple(float(v) for v in best_h), gap, status, obj.calls, grid,
    )


def mult_taikov_constant(model: AnyModel, lam: Sequence[float], policy: Optional[TailPolicy] = None) -> MultiplicativeResult:
    """C = sup_h ∏ h_j^{λ_j} · ~Σ c(n)/b_{n,h}."""
    return _maximise(model, lam, ConstantKind.taikov, policy)


def mult_hlp_constant(model: SpectralModel, lam: Sequence[float], policy: Optional[TailPolicy] = None) -> MultiplicativeResult:
    """𝔠 = sup_h ∏ h_j^{λ_j} · ~sup_n c(n)/b_{n,h}."""
    return _maximise(model, lam, ConstantKind.hlp, policy)


# ── Closed-form companions ────────────────────────────────────────────────────

def sharp_factor(constant: ExtendedSum, lam: Sequence[float]) -> ExtendedSum:
    """√(C · ∏ λ_j^{−λ_j})."""
    lam = check_exponents(lam)
    if constant.is_infinite:
        return constant
    return ExtendedSum(math.sqrt(constant.value / weight_power(lam)), constant.status, constant.level)


def finiteness_series_check(model: SpectralModel, lam: Sequence[float], policy: Optional[TailPolicy] = None) -> ExtendedSum:
    """~Σ c(n)/∏ b_j(n)^{λ_j}; finite implies C finite, infinite is inconclusive."""
    lam = check_exponents(lam, model.m)
    decay = None
    if model.growth is not None:
        decay = model.growth.decay(model.growth.c, float(lam @ np.asarray(model.growth.b)))

    def terms(t):
        with np.errstate(divide="ignore"):
            den = np.exp(np.log(t.b) @ lam)
        return t.c, den

    return model_sum([model], terms, policy, decay)


def class_approx_error(K: float, lam: Sequence[float], t: Sequence[float]) -> float:
    """λ₀ K^{1/λ₀} ∏_{j≥1} (λ_j/t_j)^{λ_j/λ₀}."""
    lam = check_exponents(lam)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if t.size != lam.size - 1:
        raise DomainError(f"t needs {lam.size - 1} components, got {t.size}")
    if K <= 0 or np.any(t <= 0):
        raise DomainError("K and every t_j must be positive")
    lam0, rest = lam[0], lam[1:]
    log_value = math.log(lam0) + math.log(K) / lam0 + float(rest @ (np.log(rest) - np.log(t))) / lam0
    return math.exp(log_value)


def equality_ratio(model: SpectralModel, lam: Sequence[float], level: int) -> tuple[np.ndarray, np.ndarray]:
    """‖Ae_n‖/∏ ‖B_j e_n‖^{λ_j} on the indices of M_level with c(n) ≠ 0."""
    lam = check_exponents(lam, model.m)
    table = model.table(level)
    keep = table.c != 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        log_ratio = 0.5 * (np.log(table.c[keep]) - np.log(table.b[keep]) @ lam)
    return table.indices[keep], np.exp(log_ratio)
