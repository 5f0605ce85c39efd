# Mean-squared Taikov and HLP constants, additive coefficients and sharpness checks.
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from app.core.config import settings
from app.core.errors import DomainError, SharpnessViolation
from app.services.spectral import (
    ExtendedSum,
    SpectralModel,
    TailPolicy,
    check_weight_vector,
    convergence_curve,
    model_sum,
    model_sup,
)

logger = logging.getLogger(__name__)

VIOLATION_REL_TOL = 1e-10


class ScanKind(str, Enum):
    taikov = "taikov"
    hlp    = "hlp"


class RatioStatus(str, Enum):
    ok                      = "ok"
    insufficient_truncation = "insufficient-truncation"


@dataclass(frozen=True)
class AdditiveCoeffs:
    coef_c: ExtendedSum
    coef_d: ExtendedSum


@dataclass(frozen=True)
class ExtremalElement:
    indices: np.ndarray        # (K, d) support
    coefficients: np.ndarray   # (K,) values √c(n)/b_{n,h}
    level: int

    def as_dict(self) -> dict[tuple[int, ...], float]:
        return {tuple(int(v) for v in n): float(x) for n, x in zip(self.indices, self.coefficients)}

    def __len__(self) -> int:
        return len(self.coefficients)


@dataclass(frozen=True)
class SharpnessRatio:
    value: Optional[float]
    partial_sum: float
    level: int
    status: RatioStatus = RatioStatus.ok


@dataclass
class ScanReport:
    kind: ScanKind
    constant: float
    max_ratio: float = 0.0
    trials: int = 0
    witness: Optional[dict] = None
    violated: bool = False
    extra: dict = field(default_factory=dict)


def _decay(model: SpectralModel, *, shell: bool = True) -> Optional[float]:
    g = model.growth
    if g is None:
        return None
    return max(g.b) - g.c - (g.shell if shell else 0.0)


# ── Constants ─────────────────────────────────────────────────────────────────

def taikov_constant(model: SpectralModel, h, policy: Optional[TailPolicy] = None) -> ExtendedSum:
    """K² = ~Σ c(n)/b_{n,h}; the sharp constant is its square root, +∞ means vacuous."""
    h = check_weight_vector(model, h)
    return model_sum([model], lambda t: (t.c, t.combined(h)), policy, _decay(model))


def hlp_constant(model: SpectralModel, h, policy: Optional[TailPolicy] = None) -> ExtendedSum:
    """~sup_n ‖Ae_n‖²/b_{n,h}, valid when the images Ae_n are pairwise orthogonal."""
    if not model.orthogonal_images:
        raise DomainError(f"{model.name}: HLP constant needs pairwise orthogonal images Ae_n")
    h = check_weight_vector(model, h)
    return model_sup([model], lambda t: (t.c, t.combined(h)), policy, _decay(model, shell=False))


def check_shared_models(model_c: SpectralModel, model_d: SpectralModel) -> None:
    if model_c.index_set != model_d.index_set:
        raise DomainError("C and D models must share one index set")
    level = min(8, model_c.index_set.default_max_level())
    if not np.array_equal(model_c.table(level).c, model_d.table(level).c):
        raise DomainError("C and D models must carry the same functional coefficients c")


def _split_decay(model_c: SpectralModel, model_d: SpectralModel, part: str) -> Optional[float]:
    gc, gd = model_c.growth, model_d.growth
    if gc is None or gd is None:
        return None
    c_max, d_max = max(gc.b), max(gd.b)
    top = c_max if part == "c" else d_max
    return gc.decay(gc.c + top, 2 * max(c_max, d_max))


def additive_taikov(
    model_c: SpectralModel,
    model_d: SpectralModel,
    h1,
    h2,
    policy: Optional[TailPolicy] = None,
) -> AdditiveCoeffs:
    """Coefficients of |⟨f,Ax⟩| ≤ coef_C ‖x‖_{C,h'} + coef_D ‖x‖_{D,h''}, each √(~Σ c·w/b²)."""
    check_shared_models(model_c, model_d)
    h1 = check_weight_vector(model_c, h1)
    h2 = check_weight_vector(model_d, h2)

    def part(which: str):
        def terms(tc, td):
            cc, dd = tc.combined(h1), td.combined(h2)
            return tc.c * (cc if which == "c" else dd), (cc + dd) ** 2
        return terms

    coef_c = model_sum([model_c, model_d], part("c"), policy, _split_decay(model_c, model_d, "c"))
    coef_d = model_sum([model_c, model_d], part("d"), policy, _split_decay(model_c, model_d, "d"))
    return AdditiveCoeffs(coef_c.sqrt(), coef_d.sqrt())


# ── Extremal elements ─────────────────────────────────────────────────────────

def extremal_element(model: SpectralModel, h, level: int) -> ExtremalElement:
    """x_{h,N} = Σ_{M_N, b≠0} conj⟨f,Ae_n⟩/b_{n,h} e_n, with the phase of ⟨f,Ae_n⟩ taken real positive."""
    h = check_weight_vector(model, h)
    table = model.table(level)
    b = table.combined(h)
    keep = (b != 0.0) & (table.c != 0.0)
    coef = np.sqrt(table.c[keep]) / b[keep]
    return ExtremalElement(table.indices[keep], coef, level)


def sharpness_ratio(model: SpectralModel, h, level: int) -> SharpnessRatio:
    """|⟨f,Ax_{h,N}⟩|²/‖x_{h,N}‖²_{B,h}, equal to the partial tilde-sum over M_N.

    `level` echoes the requested N, also when a finite index set runs out before it.
    """
    h = check_weight_vector(model, h)
    table = model.table(level)
    b = table.combined(h)
    keep = (b != 0.0) & (table.c != 0.0)
    root_c, bk = np.sqrt(table.c[keep]), b[keep]
    coef = root_c / bk
    partial = float(np.sum(table.c[keep] / bk))
    norm_sq = float(np.sum(coef * coef * bk))
    if norm_sq == 0.0:
        return SharpnessRatio(None, partial, level, RatioStatus.insufficient_truncation)
    return SharpnessRatio(float(np.sum(root_c * coef)) ** 2 / norm_sq, partial, level)


# ── Random scans ──────────────────────────────────────────────────────────────

def _trial_ratio(kind: ScanKind, root_c: np.ndarray, c: np.ndarray, b: np.ndarray, seed: int, trial: int):
    rng = np.random.default_rng([seed, trial])
    size = int(rng.integers(1, len(c) + 1))
    support = np.sort(rng.choice(len(c), size=size, replace=False))
    x = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    weight = np.abs(x) ** 2
    den = float(np.sum(b[support] * weight))
    if kind == ScanKind.taikov:
        num = float(abs(np.sum(root_c[support] * x)) ** 2)
    else:
        num = float(np.sum(c[support] * weight))
    if den == 0.0:
        return 0.0, support, x
    return num / den, support, x


def random_violation_scan(
    model: SpectralModel,
    h,
    trials: int,
    seed: Optional[int] = None,
    *,
    kind: ScanKind = ScanKind.taikov,
    level: Optional[int] = None,
    constant: Optional[ExtendedSum] = None,
    policy: Optional[TailPolicy] = None,
    raise_on_violation: bool = False,
) -> ScanReport:
    """Max of the inequality ratio over seeded random finitely-supported vectors in M_level.

    Trial i draws from its own generator seeded with (seed, i), so the report does
    not depend on the thread count.
    """
    kind = ScanKind(kind)
    seed = settings.SEED if seed is None else seed
    level = level or settings.SCAN_LEVEL
    h = check_weight_vector(model, h)
    if constant is None:
        constant = taikov_constant(model, h, policy) if kind == ScanKind.taikov else hlp_constant(model, h, policy)
    if constant.is_infinite:
        raise DomainError(f"{kind.value} constant is infinite; nothing to verify")
    report = ScanReport(kind, constant.value, trials=trials)
    if trials <= 0:
        return report

    table = model.table(level)
    c, b = table.c, table.combined(h)
    root_c = np.sqrt(c)

    def chunk(lo: int, hi: int):
        best = (-1.0, None, None, -1)
        for trial in range(lo, hi):
            ratio, support, x = _trial_ratio(kind, root_c, c, b, seed, trial)
            if ratio > best[0]:
                best = (ratio, support, x, trial)
        return best

    workers = max(1, settings.THREADS)
    bounds = np.linspace(0, trials, workers + 1).astype(int)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(chunk, bounds[:-1], bounds[1:]))
    ratio, support, x, trial = max(results, key=lambda r: (r[0], -r[3]))

    report.max_ratio = max(ratio, 0.0)
    if support is not None:
        report.witness = {
            "trial": int(trial),
            "indices": table.indices[support].tolist(),
            "re": x.real.tolist(),
            "im": x.imag.tolist(),
        }
    report.violated = report.max_ratio > constant.value * (1 + VIOLATION_REL_TOL)
    report.extra = {"level": int(table.level), "support_pool": int(len(c))}
    logger.info("%s scan: %d trials, max ratio %.17g vs constant %.17g", kind.value, trials, report.max_ratio, constant.value)
    if report.violated:
        logger.warning("%s scan exceeded the constant at trial %d", kind.value, trial)
        if raise_on_violation:
            raise SharpnessViolation(f"ratio {report.max_ratio!r} exceeds constant {constant.value!r}", report.witness)
    return report


__all__ = [
    "AdditiveCoeffs",
    "ExtremalElement",
    "RatioStatus",
    "ScanKind",
    "ScanReport",
    "SharpnessRatio",
    "additive_taikov",
    "check_shared_models",
    "convergence_curve",
    "extremal_element",
    "hlp_constant",
    "random_violation_scan",
    "sharpness_ratio",
    "taikov_constant",
]
