# Quadrature on the unit cube for power-law integrands mapped from R^d_+.
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from app.core.config import settings

logger = logging.getLogger(__name__)

# Vectorised integrand on (0, 1)^d: (K, d) points → (K,) values.
CubeIntegrand = Callable[[np.ndarray], np.ndarray]

_GRADING_LEVELS = 40    # geometric panels 2^-1 … 2^-40 toward each endpoint
_SLAB_POINTS = 2_000_000


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    converged: bool
    evaluations: int


def unit_to_half_line(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """log t and log dt/du for t = u/(1−u), u ∈ (0, 1)."""
    log1m = np.log1p(-u)
    return np.log(u) - log1m, -2.0 * log1m


def graded_breaks(levels: int = _GRADING_LEVELS) -> np.ndarray:
    """Panel breakpoints on [0, 1] graded geometrically toward both endpoints."""
    left = 0.5 ** np.arange(levels, 0, -1)
    return np.concatenate([[0.0], left, 1.0 - left[::-1][1:], [1.0]])


def _panel_rule(lo: np.ndarray, hi: np.ndarray, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss–Legendre points and weights on each [lo_i, hi_i], shape (P, nodes)."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    half = 0.5 * (hi - lo)[:, None]
    mid = 0.5 * (hi + lo)[:, None]
    return mid + half * x[None, :], half * w[None, :]


def _panel_sums(f: Callable[[np.ndarray], np.ndarray], lo: np.ndarray, hi: np.ndarray, nodes: int) -> np.ndarray:
    pts, wts = _panel_rule(lo, hi, nodes)
    vals = np.asarray(f(pts.reshape(-1)), dtype=float).reshape(pts.shape)
    return (vals * wts).sum(axis=1)


def integrate_unit_interval(
    f: Callable[[np.ndarray], np.ndarray],
    rel_tol: float | None = None,
    nodes: int | None = None,
    max_panels: int | None = None,
) -> QuadResult:
    """Adaptive composite Gauss–Legendre on (0, 1).

    Every panel is compared against its two halves; panels whose error exceeds an
    equal share of the global budget are bisected until the summed error drops
    below rel_tol · |value|.
    """
    rel_tol = rel_tol or settings.QUAD_REL_TOL
    nodes = nodes or settings.QUAD_NODES
    max_panels = max_panels or settings.QUAD_MAX_PANELS

    breaks = graded_breaks()
    lo, hi = breaks[:-1], breaks[1:]
    evaluations = 0
    while True:
        mid = 0.5 * (lo + hi)
        coarse = _panel_sums(f, lo, hi, nodes)
        fine = _panel_sums(f, lo, mid, nodes) + _panel_sums(f, mid, hi, nodes)
        evaluations += 3 * nodes * len(lo)
        if not np.all(np.isfinite(fine)):
            logger.warning("integrand is not finite on (0, 1)")
            return QuadResult(math.inf, math.inf, False, evaluations)

        value = float(fine.sum())
        err = np.abs(fine - coarse)
        total_err = float(err.sum())
        budget = rel_tol * abs(value)
        if total_err <= budget:
            return QuadResult(value, total_err, True, evaluations)

        split = (err > budget / len(lo)) & (hi - lo > 1e-15)
        if not split.any() or len(lo) + int(split.sum()) > max_panels:
            logger.warning("quadrature stopped at %d panels (error %.3g, value %.17g)", len(lo), total_err, value)
            return QuadResult(value, total_err, False, evaluations)
        lo = np.concatenate([lo[~split], lo[split], mid[split]])
        hi = np.concatenate([hi[~split], mid[split], hi[split]])
        order = np.argsort(lo, kind="stable")
        lo, hi = lo[order], hi[order]


def _tensor_sum(f: CubeIntegrand, x: np.ndarray, w: np.ndarray, d: int) -> float:
    """Σ f(x_i1..x_id) w_i1…w_id, evaluated in slabs over the first axis."""
    per_slab = max(1, _SLAB_POINTS // len(x) ** (d - 1))
    rest = np.stack(np.meshgrid(*([x] * (d - 1)), indexing="ij"), axis=-1).reshape(-1, d - 1)
    rest_w = np.prod(np.stack(np.meshgrid(*([w] * (d - 1)), indexing="ij"), axis=-1).reshape(-1, d - 1), axis=1)
    total = 0.0
    for start in range(0, len(x), per_slab):
        head, head_w = x[start: start + per_slab], w[start: start + per_slab]
        pts = np.concatenate([np.repeat(head, len(rest))[:, None], np.tile(rest, (len(head), 1))], axis=1)
        vals = np.asarray(f(pts), dtype=float).reshape(len(head), len(rest))
        total += float(head_w @ (vals @ rest_w))
    return total


def integrate_unit_cube(f: CubeIntegrand, d: int, rel_tol: float | None = None) -> QuadResult:
    """Tensor graded Gauss–Legendre on (0, 1)^d for d ≥ 2.

    Each refinement deepens the endpoint grading and raises the node count; the
    run stops when two successive estimates agree or the point budget is spent.
    """
    rel_tol = rel_tol or settings.QUAD_REL_TOL
    nodes, levels = (10, 10) if d == 2 else (6, 8)
    previous, evaluations = math.nan, 0
    while True:
        breaks = graded_breaks(levels)
        pts, wts = _panel_rule(breaks[:-1], breaks[1:], nodes)
        x, w = pts.reshape(-1), wts.reshape(-1)
        if len(x) ** d > settings.QUAD_MAX_TENSOR_POINTS:
            logger.warning("tensor quadrature hit the point budget (d=%d, last estimate %.17g)", d, previous)
            return QuadResult(previous, math.inf, False, evaluations)

        value = _tensor_sum(f, x, w, d)
        evaluations += len(x) ** d
        if not math.isfinite(value):
            return QuadResult(math.inf, math.inf, False, evaluations)
        err = abs(value - previous) if math.isfinite(previous) else math.inf
        if err <= rel_tol * abs(value):
            return QuadResult(value, err, True, evaluations)
        previous = value
        nodes += 2
        levels += 6


def integrate_iterated(f: CubeIntegrand, d: int, rel_tol: float | None = None) -> QuadResult:
    """Iterated adaptive quadrature for d > 3; cost grows like (evaluations per axis)^d."""
    rel_tol = rel_tol or settings.QUAD_REL_TOL
    calls = 0

    def scalar(*u: float) -> float:
        nonlocal calls
        calls += 1
        return float(f(np.asarray(u, dtype=float).reshape(1, d))[0])

    value, err = integrate.nquad(scalar, [[0.0, 1.0]] * d, opts={"epsrel": rel_tol, "limit": 100})
    return QuadResult(float(value), float(err), err <= 10 * rel_tol * abs(value), calls)
