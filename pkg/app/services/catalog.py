# Builders for the concrete spectral models: torus, CROSS manifolds, R^d and g-power multipliers.
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import gamma, gammaln, logsumexp

from app.core.errors import DomainError
from app.models.spec import CROSS_FAMILIES, Family, Functional, GLawKind, GLawSpec
from app.services.hull import HullStatus, taikov_hull_certificate
from app.services.quadrature import (
    integrate_iterated,
    integrate_unit_cube,
    integrate_unit_interval,
    unit_to_half_line,
)
from app.services.spectral import (
    ExtendedSum,
    Growth,
    IndexSet,
    Membership,
    SpectralModel,
    SumStatus,
    WeightVector,
)

logger = logging.getLogger(__name__)


def _orders(values, dim: int, what: str) -> tuple[float, ...]:
    vec = tuple(float(v) for v in np.atleast_1d(np.asarray(values, dtype=float)))
    if len(vec) == 1 and dim > 1:
        vec = vec * dim
    if len(vec) != dim or not all(math.isfinite(v) for v in vec):
        raise DomainError(f"{what} needs {dim} finite components, got {values!r}")
    return vec


def _power_law(values: np.ndarray, orders: Sequence[float]) -> np.ndarray:
    """∏_i values_i^{2·orders_i} with 0⁰ = 1."""
    return np.prod(np.power(values, 2.0 * np.asarray(orders, dtype=float)), axis=1)


# ── Torus ─────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class TorusModel:
    a: int
    k: tuple[float, ...]
    r_list: tuple[tuple[float, ...], ...]
    functional: Functional = Functional.point_evaluation
    damping: Optional[tuple[float, ...]] = None
    unfolded: bool = False

    def __post_init__(self):
        if self.a < 1:
            raise DomainError(f"torus dimension must be positive, got {self.a}")
        if not self.r_list:
            raise DomainError("torus model needs at least one constraint order")
        object.__setattr__(self, "k", _orders(self.k, self.a, "k"))
        object.__setattr__(self, "r_list", tuple(_orders(r, self.a, "r") for r in self.r_list))
        object.__setattr__(self, "functional", Functional(self.functional))
        if self.damping is not None:
            rho = _orders(self.damping, self.a, "damping")
            if any(v < 0 for v in rho):
                raise DomainError("damping rates must be nonnegative")
            object.__setattr__(self, "damping", rho)


def build_torus(spec: TorusModel) -> SpectralModel:
    """Weights |n|^{2k}, |n|^{2r^j} on T^a.

    Folded models run over N^a and carry the factor 2^a of the ± pairs in the
    point-evaluation coefficient; unfolded ones run over Z^a_* directly.
    """
    membership = Membership.nonzero_lattice if spec.unfolded else Membership.positive_integers
    index_set = IndexSet(dimension=spec.a, membership=membership)
    factor = 1.0
    if spec.functional == Functional.point_evaluation and not spec.unfolded:
        factor = float(2 ** spec.a)
    k, damping = spec.k, spec.damping

    def c(idx: np.ndarray) -> np.ndarray:
        n = np.abs(idx).astype(float)
        out = factor * _power_law(n, k)
        if damping is not None:
            out = out * np.exp(-2.0 * (n @ np.asarray(damping)))
        return out

    laws = [lambda idx, r=r: _power_law(np.abs(idx).astype(float), r) for r in spec.r_list]
    growth = None
    if spec.a == 1 and spec.damping is None:
        growth = Growth(c=2 * k[0], b=tuple(2 * r[0] for r in spec.r_list))
    name = f"torus(a={spec.a}, {spec.functional.value})"
    return SpectralModel(index_set, c, laws, growth=growth, name=name)


# ── Compact rank-one symmetric spaces ─────────────────────────────────────────

@dataclass(frozen=True)
class CrossSpace:
    family: Family
    b: int = 2

    def __post_init__(self):
        family = Family(self.family)
        if family not in CROSS_FAMILIES:
            raise DomainError(f"{family.value} is not a compact rank-one symmetric space")
        object.__setattr__(self, "family", family)
        if family == Family.cayley_plane:
            object.__setattr__(self, "b", 2)
        elif self.b < 1:
            raise DomainError(f"rank parameter must be positive, got {self.b}")

    @property
    def d(self) -> int:
        return {
            Family.sphere: self.b,
            Family.real_projective: self.b,
            Family.complex_projective: 2 * self.b,
            Family.quaternionic_projective: 4 * self.b,
            Family.cayley_plane: 16,
        }[self.family]

    @property
    def alpha(self) -> float:
        return (self.d - 2) / 2

    @property
    def beta(self) -> float:
        return {
            Family.sphere: self.alpha,
            Family.real_projective: -0.5,
            Family.complex_projective: 0.0,
            Family.quaternionic_projective: 1.0,
            Family.cayley_plane: 3.0,
        }[self.family]

    @property
    def label(self) -> str:
        short = {
            Family.sphere: "S",
            Family.real_projective: "RP",
            Family.complex_projective: "CP",
            Family.quaternionic_projective: "HP",
        }
        return "CaP2" if self.family == Family.cayley_plane else f"{short[self.family]}^{self.b}"


def cross_eigenvalue_sq(space: CrossSpace, j) -> np.ndarray:
    """γ_j² of the Laplace–Beltrami operator, vectorised over j ≥ 0."""
    j = np.asarray(j, dtype=float)
    b = space.b
    if space.family == Family.sphere:
        return j * (j + b - 1)
    if space.family == Family.real_projective:
        return 2 * j * (2 * j + b - 1)
    if space.family == Family.complex_projective:
        return 4 * j * (j + b)
    if space.family == Family.quaternionic_projective:
        return 4 * j * (j + 2 * b + 1)
    return 4 * j * (j + 11)


def cross_multiplicity(space: CrossSpace, j) -> np.ndarray:
    """ν_j = dimension of the j-th eigenspace, through log-Gamma; ν_0 = 1."""
    j_arr = np.asarray(j, dtype=float)
    if np.any(j_arr < 0) or np.any(j_arr != np.floor(j_arr)):
        raise DomainError(f"eigenvalue index must be a nonnegative integer, got {j!r}")
    a, b = space.alpha, space.beta
    with np.errstate(divide="ignore"):
        log_nu = (
            np.log(2 * j_arr + a + b + 1)
            + gammaln(b + 1) + gammaln(j_arr + a + 1) + gammaln(j_arr + a + b + 1)
            - gammaln(a + b + 2) - gammaln(a + 1) - gammaln(j_arr + 1) - gammaln(j_arr + b + 1)
        )
    nu = np.where(j_arr == 0, 1.0, np.exp(log_nu))
    return nu if nu.ndim else float(nu)


def weyl_ratio(space: CrossSpace, j: int) -> float:
    """γ_j / (Σ_{i≤j} ν_i)^{1/d}: eigenvalue root over the d-th root of the eigenvalue count."""
    if j < 1:
        raise DomainError("Weyl ratio needs j ≥ 1")
    count = 1.0 + float(np.sum(cross_multiplicity(space, np.arange(1, j + 1))))
    return math.sqrt(float(cross_eigenvalue_sq(space, j))) / count ** (1.0 / space.d)


def _check_increasing(r_list: Sequence) -> None:
    first = [float(np.atleast_1d(r)[0]) for r in r_list]
    if any(b <= a for a, b in zip(first, first[1:])):
        logger.warning("constraint orders %s are not strictly increasing", first)


def build_cross(
    space: CrossSpace,
    k: float,
    r_list: Sequence[float],
    functional: Functional = Functional.point_evaluation,
    damping: Optional[float] = None,
) -> SpectralModel:
    """Model indexed by eigenvalue j ≥ 1: c(j) = ν_j γ_j^{4k} e^{-2ρj}, b_l(j) = γ_j^{4 r^l}."""
    k = float(np.atleast_1d(k)[0])
    orders = [float(np.atleast_1d(r)[0]) for r in r_list]
    if not orders:
        raise DomainError("CROSS model needs at least one constraint order")
    if damping is not None and not damping >= 0:
        raise DomainError("damping rates must be nonnegative")
    _check_increasing(orders)
    point = Functional(functional) == Functional.point_evaluation

    def c(idx: np.ndarray) -> np.ndarray:
        j = idx[:, 0]
        out = np.power(cross_eigenvalue_sq(space, j), 2.0 * k)
        if damping:
            out = out * np.exp(-2.0 * damping * j)
        return out * cross_multiplicity(space, j) if point else out

    laws = [lambda idx, r=r: np.power(cross_eigenvalue_sq(space, idx[:, 0]), 2.0 * r) for r in orders]
    growth = None
    if not damping:
        growth = Growth(c=(space.d - 1 if point else 0) + 4 * k, b=tuple(4 * r for r in orders))
    return SpectralModel(IndexSet(1), c, laws, growth=growth, name=f"{space.label}({Functional(functional).value})")


def build_cross_product(
    space: CrossSpace,
    a: int,
    k: Sequence[float],
    r_list: Sequence[Sequence[float]],
    damping: Optional[Sequence[float]] = None,
) -> SpectralModel:
    """a-fold product over N^a: c = 2^a ∏ ν_{j_i} γ_{j_i}^{4k_i} e^{-2ρ_i j_i}, b_l = ∏ γ_{j_i}^{4 r^l_i}."""
    k = _orders(k, a, "k")
    orders = [_orders(r, a, "r") for r in r_list]
    _check_increasing(orders)
    rho = None
    if damping is not None:
        rho = np.asarray(_orders(damping, a, "damping"))
        if np.any(rho < 0):
            raise DomainError("damping rates must be nonnegative")

    def c(idx: np.ndarray) -> np.ndarray:
        gam = cross_eigenvalue_sq(space, idx)
        nu = cross_multiplicity(space, idx)
        out = float(2 ** a) * np.prod(nu * np.power(gam, 2.0 * np.asarray(k)), axis=1)
        if rho is not None:
            out = out * np.exp(-2.0 * (idx @ rho))
        return out

    laws = [
        lambda idx, r=r: np.prod(np.power(cross_eigenvalue_sq(space, idx), 2.0 * np.asarray(r)), axis=1)
        for r in orders
    ]
    return SpectralModel(IndexSet(a), c, laws, name=f"{space.label}^{a}")


def build_eigen_table(
    mu: Sequence[float],
    phi_sq: Sequence[float],
    k: float,
    r_list: Sequence[float],
) -> SpectralModel:
    """Finite model from user-supplied pairs (μ_j, |φ_j(ξ)|²): c = μ^{4k} φ², b_l = μ^{4 r^l}."""
    mu = np.asarray(mu, dtype=float)
    phi_sq = np.asarray(phi_sq, dtype=float)
    if mu.shape != phi_sq.shape or mu.size == 0:
        raise DomainError("eigen table needs matching, non-empty μ and φ² columns")
    orders = [float(np.atleast_1d(r)[0]) for r in r_list]
    _check_increasing(orders)
    c = np.power(mu, 4.0 * float(k)) * phi_sq
    b = np.column_stack([np.power(mu, 4.0 * r) for r in orders])
    return SpectralModel.from_entries(list(range(1, mu.size + 1)), c, b, name="eigen-table")


# ── g-power multipliers ───────────────────────────────────────────────────────

@dataclass(frozen=True)
class GPowerModel:
    g: GLawSpec
    k: tuple[float, ...]
    r_list: tuple[tuple[float, ...], ...]
    a: int = 1
    functional: Functional = Functional.norm

    def __post_init__(self):
        object.__setattr__(self, "k", _orders(self.k, self.a, "k"))
        object.__setattr__(self, "r_list", tuple(_orders(r, self.a, "r") for r in self.r_list))
        object.__setattr__(self, "functional", Functional(self.functional))
        if self.g.kind == GLawKind.table and self.a != 1:
            raise DomainError("a tabulated g law is one-dimensional")

    def g_values(self, idx: np.ndarray) -> np.ndarray:
        n = np.abs(idx)
        if self.g.kind == GLawKind.abs:
            return self.g.scale * n.astype(float)
        if self.g.kind == GLawKind.exp:
            return np.exp(-self.g.scale * n.astype(float))
        table = np.asarray(self.g.values, dtype=float)
        return table[n - 1]


def build_gpower(spec: GPowerModel) -> SpectralModel:
    """‖Ae_n‖ = g_n^k and ‖B_j e_n‖ = g_n^{r^j}, coordinatewise products, 0⁰ = 1."""
    if spec.g.kind == GLawKind.table:
        entries = tuple((n,) for n in range(1, len(spec.g.values) + 1))
        index_set = IndexSet(1, Membership.explicit, entries)
    else:
        index_set = IndexSet(spec.a, Membership.positive_integers)
    factor = 1.0 if spec.functional == Functional.norm else float(2 ** spec.a)

    def c(idx: np.ndarray) -> np.ndarray:
        return factor * _power_law(spec.g_values(idx), spec.k)

    laws = [lambda idx, r=r: _power_law(spec.g_values(idx), r) for r in spec.r_list]
    growth = None
    if spec.a == 1 and spec.g.kind == GLawKind.abs:
        growth = Growth(c=2 * spec.k[0], b=tuple(2 * r[0] for r in spec.r_list))
    return SpectralModel(index_set, c, laws, growth=growth, name=f"gpower({spec.g.kind.value})")


# ── Continuous model on R^d ───────────────────────────────────────────────────

@dataclass(frozen=True)
class RdModel:
    d: int
    k: tuple[float, ...]
    r_list: tuple[tuple[float, ...], ...]
    quad_rel_tol: Optional[float] = None

    def __post_init__(self):
        if self.d < 1:
            raise DomainError(f"dimension must be positive, got {self.d}")
        object.__setattr__(self, "k", _orders(self.k, self.d, "k"))
        object.__setattr__(self, "r_list", tuple(_orders(r, self.d, "r") for r in self.r_list))
        if len(self.r_list) < 2:
            raise DomainError("the R^d model needs at least two constraint orders")

    @property
    def m(self) -> int:
        return len(self.r_list) - 1


def _rd_integrand(model: RdModel, h: WeightVector):
    two_k = 2.0 * np.asarray(model.k)
    two_r = 2.0 * np.asarray(model.r_list)          # (m+1, d)
    log_h = np.log(h.array)

    def f(u: np.ndarray) -> np.ndarray:
        log_t, log_jac = unit_to_half_line(u)
        den = log_h[None, :] + log_t @ two_r.T
        return np.exp(log_t @ two_k - logsumexp(den, axis=1) + log_jac.sum(axis=1))

    return f


def rd_integral(model: RdModel, h) -> ExtendedSum:
    """(1/π^d) ∫_{R^d_+} t^{2k} dt / Σ_l h_l t^{2r^l}; +∞ unless k + ½·1 is interior to the order hull."""
    h = WeightVector.of(h)
    if len(h) != model.m + 1:
        raise DomainError(f"weight vector has {len(h)} components, model needs {model.m + 1}")
    cert = taikov_hull_certificate(model.k, model.r_list)
    if cert.status != HullStatus.interior:
        logger.info("k + 1/2 is %s the order hull: integral diverges", cert.status.value)
        return ExtendedSum.infinite(status=SumStatus.divergent)

    f = _rd_integrand(model, h)
    if model.d == 1:
        res = integrate_unit_interval(lambda u: f(u[:, None]), model.quad_rel_tol)
    elif model.d <= 3:
        res = integrate_unit_cube(f, model.d, model.quad_rel_tol)
    else:
        logger.info("d=%d: iterated quadrature, expect a long run", model.d)
        res = integrate_iterated(f, model.d, model.quad_rel_tol)

    if not math.isfinite(res.value):
        raise DomainError(f"quadrature failed on the R^{model.d} model")
    scale = math.pi ** -model.d
    status = SumStatus.converged if res.converged else SumStatus.not_converged
    logger.debug("R^%d integral: %.17g ± %.3g after %d evaluations", model.d, res.value, res.error, res.evaluations)
    return ExtendedSum(res.value * scale, status, 0, res.error * scale)


def _diagonal_exponents(model: RdModel) -> tuple[np.ndarray, np.ndarray]:
    """a_l = (2k_l+1)/(2ρ_l) when r⁰ = 0 and r^l = ρ_l e_l; DomainError otherwise."""
    R = np.asarray(model.r_list)
    if model.m != model.d or np.any(R[0] != 0):
        raise DomainError("closed form needs m = d and r⁰ = 0")
    rho = np.diag(R[1:])
    if np.any(R[1:] - np.diag(rho) != 0) or np.any(rho <= 0):
        raise DomainError("closed form needs r^l = ρ_l e_l with ρ_l > 0")
    return (2 * np.asarray(model.k) + 1) / (2 * rho), rho


def rd_diagonal_closed_form(model: RdModel, h) -> ExtendedSum:
    """Exact value of rd_integral for diagonal orders through Gamma functions."""
    h = WeightVector.of(h).array
    a, rho = _diagonal_exponents(model)
    total = float(a.sum())
    if np.any(a <= 0) or total >= 1:
        return ExtendedSum.infinite(status=SumStatus.divergent)
    value = (
        h[0] ** (total - 1)
        * np.prod(h[1:] ** -a)
        * np.prod(gamma(a) / (2 * rho))
        * gamma(1 - total)
        / math.pi ** model.d
    )
    return ExtendedSum(float(value))


def rd_flat_exponents(model: RdModel) -> tuple[float, ...]:
    """For m = d the exponents that make ∏h^λ · I(h) constant: barycentric coordinates of k + ½·1."""
    if model.m != model.d:
        raise DomainError("the objective is flat in h only when m = d")
    cert = taikov_hull_certificate(model.k, model.r_list)
    if cert.status != HullStatus.interior:
        raise DomainError(f"k + 1/2 is {cert.status.value} the order hull")
    return cert.coefficients


def rd_flat_constant(model: RdModel) -> tuple[tuple[float, ...], ExtendedSum]:
    """(λ, C) for m = d, where the objective is constant in h and C is its value at h = 1."""
    lam = rd_flat_exponents(model)
    return lam, rd_integral(model, np.ones(model.m + 1))
