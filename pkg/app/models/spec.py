# Pydantic schema for model spec files (YAML) and the preset catalog.
from __future__ import annotations

from enum import Enum
from fractions import Fraction
from typing import Optional, Union

from pydantic import BaseModel, Field, field_validator, model_validator

# Order values may be written as numbers or as exact decimal / rational strings.
OrderValue = Union[float, int, str]


# Enums

class Family(str, Enum):
    torus                   = "torus"
    sphere                  = "sphere"
    real_projective         = "real-projective"
    complex_projective      = "complex-projective"
    quaternionic_projective = "quaternionic-projective"
    cayley_plane            = "cayley-plane"
    rd                      = "rd"
    gpower                  = "gpower"
    eigen_table             = "eigen-table"
    explicit                = "explicit"


CROSS_FAMILIES = (
    Family.sphere,
    Family.real_projective,
    Family.complex_projective,
    Family.quaternionic_projective,
    Family.cayley_plane,
)


class Functional(str, Enum):
    point_evaluation = "point-evaluation"   # Taikov: f = δ_ξ, c = |⟨f, Ae_n⟩|²
    norm             = "norm"               # HLP: c = ‖Ae_n‖²


class GLawKind(str, Enum):
    abs   = "abs"     # g_n = scale·|n|
    exp   = "exp"     # g_n = exp(−scale·|n|)
    table = "table"   # g_n listed for n = 1..K


def parse_order(value: OrderValue) -> float:
    """Exact decimal/rational parse of one order component, rounded once to float."""
    if isinstance(value, bool):
        raise ValueError("orders must be numbers, not booleans")
    if isinstance(value, (int, float)):
        return float(value)
    try:
        return float(Fraction(str(value).strip()))
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"cannot parse order {value!r}") from exc


def _order_vector(value, dim: int, what: str) -> tuple[float, ...]:
    items = value if isinstance(value, (list, tuple)) else [value]
    vec = tuple(parse_order(v) for v in items)
    if len(vec) == 1 and dim > 1:
        vec = vec * dim
    if len(vec) != dim:
        raise ValueError(f"{what} needs {dim} components, got {len(vec)}")
    return vec


# Sections

class TruncationSpec(BaseModel):
    max_level : Optional[int] = Field(None, ge=8, description="last truncation level M_N scanned")
    min_level : Optional[int] = Field(None, ge=8, description="first checkpoint of the doubling schedule")


class ToleranceSpec(BaseModel):
    rel      : Optional[float] = Field(None, gt=0, lt=1, description="tail policy ε_rel")
    quad_rel : Optional[float] = Field(None, gt=0, lt=1, description="quadrature relative tolerance")


class GLawSpec(BaseModel):
    kind   : GLawKind              = GLawKind.abs
    scale  : float                 = Field(1.0, gt=0)
    values : Optional[list[float]] = Field(None, description="g_1..g_K for kind=table")

    @model_validator(mode="after")
    def _table_values(self) -> "GLawSpec":
        if self.kind == GLawKind.table:
            if not self.values:
                raise ValueError("g law 'table' needs a non-empty 'values' list")
            if any(v < 0 for v in self.values):
                raise ValueError("g values must be nonnegative")
        return self


class ExplicitEntry(BaseModel):
    index : Union[int, list[int]]
    c     : float                  = Field(..., ge=0)
    b     : list[float]            = Field(..., min_length=1, description="b_0..b_m (C-weights for stechkin)")
    d     : Optional[list[float]]  = Field(None, description="D-weights for stechkin problems")

    @field_validator("b", "d")
    @classmethod
    def _nonnegative(cls, v):
        if v is not None and any(x < 0 for x in v):
            raise ValueError("weights must be nonnegative")
        return v


class EigenPair(BaseModel):
    mu     : float = Field(..., ge=0, description="eigenvalue root μ_j (Δ e_j = μ_j² e_j)")
    phi_sq : float = Field(..., ge=0, description="|φ_j(ξ)|² summed over the eigenspace")


class StechkinSpec(BaseModel):
    c_orders : list[OrderValue | list[OrderValue]] = Field(..., min_length=1)
    d_orders : list[OrderValue | list[OrderValue]] = Field(..., min_length=1)
    h_c      : Optional[list[float]]               = None
    h_d      : Optional[list[float]]               = None

    @model_validator(mode="after")
    def _weights(self) -> "StechkinSpec":
        for name, orders in (("h_c", self.c_orders), ("h_d", self.d_orders)):
            h = getattr(self, name)
            if h is None:
                setattr(self, name, [1.0] * len(orders))
            elif len(h) != len(orders) or any(x <= 0 for x in h):
                raise ValueError(f"{name} needs {len(orders)} strictly positive weights")
        return self


# Model spec

class ModelSpec(BaseModel):
    """One spectral model: family, orders, functional and per-run numerics."""
    name              : Optional[str]                         = None
    family            : Family
    dimension         : int                                   = Field(1, ge=1, description="torus/gpower/product dimension a, or d for rd")
    rank              : Optional[int]                         = Field(None, ge=1, description="b of S^b, RP^b, CP^b, HP^b")
    k                 : OrderValue | list[OrderValue]         = 0
    r_list            : list[OrderValue | list[OrderValue]]   = Field(default_factory=list)
    functional        : Functional                            = Functional.point_evaluation
    unfolded          : bool                                  = Field(False, description="torus over Z^a_* instead of folded N^a")
    damping           : Optional[list[float]]                 = None
    g                 : Optional[GLawSpec]                    = None
    eigenpairs        : Optional[list[EigenPair]]             = None
    entries           : Optional[list[ExplicitEntry]]         = None
    orthogonal_images : bool                                  = True
    h                 : Optional[list[float]]                 = None
    lam               : Optional[list[float]]                 = Field(None, alias="lambda")
    stechkin          : Optional[StechkinSpec]                = None
    truncation        : TruncationSpec                        = Field(default_factory=TruncationSpec)
    tolerance         : ToleranceSpec                         = Field(default_factory=ToleranceSpec)

    model_config = {"use_enum_values": False, "populate_by_name": True, "extra": "forbid"}

    @property
    def order_dim(self) -> int:
        return self.dimension

    @property
    def k_vector(self) -> tuple[float, ...]:
        return _order_vector(self.k, self.order_dim, "k")

    @property
    def r_vectors(self) -> tuple[tuple[float, ...], ...]:
        return tuple(_order_vector(r, self.order_dim, f"r_list[{i}]") for i, r in enumerate(self.r_list))

    @property
    def m(self) -> int:
        if self.family == Family.explicit:
            return len(self.entries[0].b) - 1
        return len(self.r_list) - 1

    @model_validator(mode="after")
    def _consistency(self) -> "ModelSpec":
        self.k_vector
        self.r_vectors

        if self.family == Family.explicit:
            if not self.entries:
                raise ValueError("family 'explicit' needs 'entries'")
            widths = {len(e.b) for e in self.entries}
            if len(widths) != 1:
                raise ValueError("every explicit entry needs the same number of b weights")
        elif not self.r_list:
            raise ValueError(f"family '{self.family.value}' needs a non-empty 'r_list'")

        if self.family in CROSS_FAMILIES and self.family != Family.cayley_plane and self.rank is None:
            raise ValueError(f"family '{self.family.value}' needs 'rank'")
        if self.family == Family.gpower and self.g is None:
            self.g = GLawSpec()
        if self.family == Family.eigen_table and not self.eigenpairs:
            raise ValueError("family 'eigen-table' needs 'eigenpairs'")
        if self.damping is not None:
            if self.family != Family.torus and self.family not in CROSS_FAMILIES:
                raise ValueError("damping is only defined for the torus and CROSS families")
            if len(self.damping) not in (1, self.dimension) or any(x < 0 for x in self.damping):
                raise ValueError(f"damping needs 1 or {self.dimension} nonnegative rates")

        m1 = self.m + 1
        if self.h is not None and (len(self.h) != m1 or any(x <= 0 for x in self.h)):
            raise ValueError(f"h needs {m1} strictly positive components")
        if self.lam is not None:
            if len(self.lam) != m1 or any(x <= 0 for x in self.lam):
                raise ValueError(f"lambda needs {m1} strictly positive components")
            if abs(sum(self.lam) - 1.0) > 1e-12:
                raise ValueError(f"lambda must sum to 1, sums to {sum(self.lam)!r}")
        return self
