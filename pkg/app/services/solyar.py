# Solyar-type inequality ‖Δ^k x‖₂² ≤ ‖x‖_p ‖Δ^{2k} x‖_q checked on trigonometric polynomials over T.
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np
from scipy.optimize import minimize_scalar

from app.core.config import settings
from app.core.errors import DomainError, SharpnessViolation

logger = logging.getLogger(__name__)

VIOLATION_TOL = 1e-8
RICHARDSON_TOL = 1e-12


@dataclass(frozen=True)
class TrigPolynomial:
    """Σ a_n e^{int} over a finite set of nonzero frequencies (zero mean)."""
    freqs: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        freqs = np.asarray(self.freqs, dtype=np.int64).reshape(-1)
        coeffs = np.asarray(self.coeffs, dtype=complex).reshape(-1)
        if freqs.shape != coeffs.shape:
            raise DomainError("one coefficient per frequency is required")
        if np.any(freqs == 0):
            raise DomainError("trigonometric polynomials here have zero mean: frequency 0 is not allowed")
        if len(np.unique(freqs)) != len(freqs):
            raise DomainError("frequencies must be distinct")
        if not np.all(np.isfinite(coeffs)):
            raise DomainError("coefficients must be finite")
        order = np.argsort(freqs)
        object.__setattr__(self, "freqs", freqs[order])
        object.__setattr__(self, "coeffs", coeffs[order])

    @classmethod
    def from_dict(cls, terms: Mapping[int, complex]) -> "TrigPolynomial":
        return cls(np.fromiter(terms.keys(), dtype=np.int64), np.array(list(terms.values()), dtype=complex))

    @classmethod
    def harmonic(cls, n: int, a: complex = 1.0) -> "TrigPolynomial":
        return cls(np.array([n]), np.array([a]))

    @property
    def degree(self) -> int:
        return int(np.abs(self.freqs).max()) if len(self.freqs) else 0

    @property
    def is_zero(self) -> bool:
        return not np.any(self.coeffs != 0)

    def on_grid(self, size: int) -> np.ndarray:
        """Values at t_i = 2πi/size via one inverse FFT."""
        if 2 * self.degree >= size:
            raise DomainError(f"grid of {size} points aliases degree {self.degree}")
        spectrum = np.zeros(size, dtype=complex)
        spectrum[self.freqs % size] = self.coeffs
        return size * np.fft.ifft(spectrum)

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.exp(1j * np.multiply.outer(t, self.freqs)) @ self.coeffs

    def as_dict(self) -> dict[str, list]:
        return {"freqs": self.freqs.tolist(), "re": self.coeffs.real.tolist(), "im": self.coeffs.imag.tolist()}


def fractional_laplacian(x: TrigPolynomial, s: float) -> TrigPolynomial:
    """Δ^s x: coefficient at n multiplied by |n|^{2s}."""
    return TrigPolynomial(x.freqs, x.coeffs * np.abs(x.freqs).astype(float) ** (2.0 * s))


def parseval_norm(x: TrigPolynomial) -> float:
    """Exact L² norm, √(2π Σ |a_n|²)."""
    return math.sqrt(2 * math.pi * float(np.sum(np.abs(x.coeffs) ** 2)))


def _grid_size(x: TrigPolynomial, grid: Optional[int]) -> int:
    size = grid or settings.SOLYAR_GRID
    while 2 * x.degree >= size:
        size *= 2
    return size


def _power_integral(x: TrigPolynomial, p: float, size: int) -> float:
    values = np.abs(x.on_grid(size))
    return 2 * math.pi * float(np.mean(values ** p))


def _sup_norm(x: TrigPolynomial, size: int) -> float:
    values = np.abs(x.on_grid(size))
    i = int(np.argmax(values))
    step = 2 * math.pi / size
    t0 = i * step
    res = minimize_scalar(lambda t: -abs(x(t)), bounds=(t0 - step, t0 + step), method="bounded",
                          options={"xatol": 1e-14})
    return max(float(values[i]), float(-res.fun))


def lp_norm(x: TrigPolynomial, p: float, grid: Optional[int] = None) -> float:
    """(∫_T |x|^p dt)^{1/p} by the periodic trapezoid rule, with a Richardson check on the doubled grid.

    p = ∞ takes the grid maximum and refines it around the argmax.
    """
    if not p >= 1:
        raise DomainError(f"p must lie in [1, ∞], got {p}")
    if x.is_zero:
        return 0.0
    size = _grid_size(x, grid)
    if math.isinf(p):
        return _sup_norm(x, size)
    coarse = _power_integral(x, p, size)
    fine = _power_integral(x, p, 2 * size)
    if abs(fine - coarse) > RICHARDSON_TOL * fine:
        logger.debug("L^%g integral moved by %.3g between %d and %d points", p, abs(fine - coarse), size, 2 * size)
    return fine ** (1.0 / p)


def conjugate_exponent(p: float) -> float:
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1)


def solyar_ratio(x: TrigPolynomial, k: float, p: float, grid: Optional[int] = None) -> float:
    """‖Δ^k x‖₂² / (‖x‖_p ‖Δ^{2k} x‖_q) with q = p/(p−1); at most 1 up to quadrature error."""
    if x.is_zero:
        raise DomainError("the ratio is undefined for x ≡ 0")
    if k < 0.5 * (0.5 - 1.0 / p):
        logger.warning("k=%g is below (1/2)(1/2 − 1/p) = %g", k, 0.5 * (0.5 - 1.0 / p))
    q = conjugate_exponent(p)
    num = parseval_norm(fractional_laplacian(x, k)) ** 2
    den = lp_norm(x, p, grid) * lp_norm(fractional_laplacian(x, 2 * k), q, grid)
    return num / den


def random_trig_polynomial(rng: np.random.Generator, degree: int = 20, modes: int = 20) -> TrigPolynomial:
    """`modes` distinct frequencies from ±1..±degree with standard complex Gaussian coefficients."""
    pool = np.concatenate([-np.arange(degree, 0, -1), np.arange(1, degree + 1)])
    modes = min(modes, len(pool))
    freqs = rng.choice(pool, size=modes, replace=False)
    coeffs = rng.standard_normal(modes) + 1j * rng.standard_normal(modes)
    return TrigPolynomial(freqs, coeffs)


@dataclass
class SolyarScan:
    p: float
    k: float
    trials: int
    max_ratio: float = 0.0
    witness: Optional[dict] = None
    violated: bool = False


def solyar_scan(
    p: float,
    k: float,
    trials: int,
    seed: Optional[int] = None,
    *,
    degree: int = 20,
    modes: int = 20,
    grid: Optional[int] = None,
    raise_on_violation: bool = False,
) -> SolyarScan:
    """Max ratio over seeded random polynomials; trial i uses the generator seeded with (seed, i)."""
    seed = settings.SEED if seed is None else seed
    report = SolyarScan(p, k, trials)
    if trials <= 0:
        return report

    def chunk(lo: int, hi: int):
        best = (-1.0, None, -1)
        for trial in range(lo, hi):
            x = random_trig_polynomial(np.random.default_rng([seed, trial]), degree, modes)
            ratio = solyar_ratio(x, k, p, grid)
            if ratio > best[0]:
                best = (ratio, x, trial)
        return best

    workers = max(1, settings.THREADS)
    bounds = np.linspace(0, trials, workers + 1).astype(int)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(chunk, bounds[:-1], bounds[1:]))
    ratio, x, trial = max(results, key=lambda r: (r[0], -r[2]))

    report.max_ratio = ratio
    report.witness = {"trial": int(trial), **x.as_dict()}
    report.violated = ratio > 1 + VIOLATION_TOL
    logger.info("solyar scan p=%g k=%g: %d trials, max ratio %.17g", p, k, trials, ratio)
    if report.violated:
        logger.warning("solyar ratio %.17g exceeds 1 at trial %d", ratio, trial)
        if raise_on_violation:
            raise SharpnessViolation(f"ratio {ratio!r} exceeds 1", report.witness)
    return report
