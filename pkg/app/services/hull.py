# Convex-hull membership certificates for order vectors r⁰..r^m.
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog, nnls

from app.core.errors import DomainError

logger = logging.getLogger(__name__)

HULL_TOL = 1e-10


class HullStatus(str, Enum):
    interior = "interior"
    boundary = "boundary"
    outside  = "outside"


@dataclass(frozen=True)
class HullCertificate:
    status: HullStatus
    coefficients: Optional[tuple[float, ...]] = None   # barycentric, when not outside
    depth: float = 0.0                                  # min coefficient of the deepest combination
    affine_dim: int = 0
    residual: float = 0.0
    dimension: int = 0

    @property
    def degenerate(self) -> bool:
        return self.affine_dim < self.dimension

    @property
    def inside(self) -> bool:
        return self.status != HullStatus.outside


@dataclass(frozen=True)
class ExponentCondition:
    combination: tuple[float, ...]   # Σ λ_j r^j
    equal: bool                      # Σ λ_j r^j = k + ½·1
    dominated: bool                  # Σ λ_j r^j ≤ k + ½·1 componentwise


def _as_orders(target: Sequence[float], r_list: Sequence[Sequence[float]]) -> tuple[np.ndarray, np.ndarray]:
    x = np.atleast_1d(np.asarray(target, dtype=float))
    R = np.asarray(r_list, dtype=float)
    if R.ndim == 1:
        R = R.reshape(-1, 1)
    if R.ndim != 2 or R.shape[1] != x.size:
        raise DomainError(f"order vectors must have {x.size} components, got shape {R.shape}")
    if not (np.all(np.isfinite(R)) and np.all(np.isfinite(x))):
        raise DomainError("order vectors must be finite")
    return x, R


def affine_dimension(r_list: Sequence[Sequence[float]]) -> int:
    R = np.asarray(r_list, dtype=float)
    R = R.reshape(len(R), -1)
    if len(R) < 2:
        return 0
    return int(np.linalg.matrix_rank(R[1:] - R[0], tol=HULL_TOL))


def hull_membership(target: Sequence[float], r_list: Sequence[Sequence[float]], tol: float = HULL_TOL) -> HullCertificate:
    """Locate `target` relative to the convex hull S(r⁰, …, r^m) in R^d.

    Membership comes from non-negative least squares on the barycentric system;
    depth from the LP max δ s.t. Σ w_j r^j = target, Σ w_j = 1, w_j ≥ δ. A point is
    interior when δ > 0 and the hull is full-dimensional.
    """
    x, R = _as_orders(target, r_list)
    n_pts, d = R.shape
    affine_dim = affine_dimension(R)
    A = np.vstack([R.T, np.ones((1, n_pts))])
    rhs = np.concatenate([x, [1.0]])

    w, residual = nnls(A, rhs)
    scale = max(1.0, float(np.abs(A).max()), float(np.abs(rhs).max()))
    if residual > tol * scale:
        return HullCertificate(HullStatus.outside, None, 0.0, affine_dim, float(residual), d)

    # maximise δ: variables (w_0..w_m, δ)
    cost = np.zeros(n_pts + 1)
    cost[-1] = -1.0
    A_ub = np.hstack([-np.eye(n_pts), np.ones((n_pts, 1))])
    A_eq = np.hstack([A, np.zeros((d + 1, 1))])
    bounds = [(0, None)] * n_pts + [(None, 1.0)]
    lp = linprog(cost, A_ub=A_ub, b_ub=np.zeros(n_pts), A_eq=A_eq, b_eq=rhs, bounds=bounds, method="highs")
    if lp.status == 0:
        w, depth = lp.x[:-1], float(lp.x[-1])
    else:
        logger.warning("depth LP failed (%s); using the NNLS combination", lp.message)
        depth = float(w.min())

    support = w > tol
    polished, *_ = np.linalg.lstsq(A[:, support], rhs, rcond=None)
    if np.all(polished >= 0):
        w = np.zeros(n_pts)
        w[support] = polished

    interior = depth > tol and affine_dim == d
    if affine_dim < d:
        logger.info("order vectors span an affine subspace of dimension %d < %d", affine_dim, d)
    status = HullStatus.interior if interior else HullStatus.boundary
    return HullCertificate(status, tuple(float(v) for v in w), max(depth, 0.0), affine_dim, float(residual), d)


def taikov_hull_certificate(k: Sequence[float], r_list: Sequence[Sequence[float]]) -> HullCertificate:
    """Certificate for the finiteness condition k + ½·1 ∈ int S(r⁰, …, r^m)."""
    shift = np.atleast_1d(np.asarray(k, dtype=float)) + 0.5
    return hull_membership(shift, r_list)


def exponent_condition(
    k_shift: Sequence[float],
    r_list: Sequence[Sequence[float]],
    lam: Sequence[float],
    tol: float = 1e-12,
) -> ExponentCondition:
    """Compare Σ λ_j r^j against the shifted order k + ½·1."""
    x, R = _as_orders(k_shift, r_list)
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (len(R),):
        raise DomainError(f"need one exponent per order vector ({len(R)}), got {lam.size}")
    combo = lam @ R
    return ExponentCondition(
        combination=tuple(float(v) for v in combo),
        equal=bool(np.allclose(combo, x, rtol=0.0, atol=tol)),
        dominated=bool(np.all(combo <= x + tol)),
    )
