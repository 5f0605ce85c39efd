# Pydantic models for one run: the CLI's RunConfig and the HTTP request bodies.
from __future__ import annotations

from enum import Enum
from typing import Any, Optional, Union

from pydantic import BaseModel, Field, model_validator

from app.services.stechkin import BudgetConvention


# Enums

class Command(str, Enum):
    constant = "constant"
    stechkin = "stechkin"
    verify   = "verify"
    catalog  = "catalog"


class ConstantMode(str, Enum):
    mean_squared     = "mean-squared"       # K² = ~Σ c/b_h
    hlp              = "hlp"                # ~sup c/b_h
    multiplicative   = "multiplicative"     # C = sup_h ∏h^λ K²(h)
    multiplicative_hlp = "multiplicative-hlp"
    additive         = "additive"           # coef_C, coef_D from the stechkin section
    finiteness       = "finiteness"         # ~Σ c/∏b^λ


class VerifyKind(str, Enum):
    taikov = "taikov"
    hlp    = "hlp"
    solyar = "solyar"


class CatalogAction(str, Enum):
    list = "list"
    show = "show"


# Run config

class RunConfig(BaseModel):
    """Everything one command needs; built from CLI flags, a --config YAML file or an HTTP body."""
    command      : Command
    model        : Optional[Union[str, dict[str, Any]]] = Field(None, description="spec file path, preset name or inline spec")
    mode         : ConstantMode                = ConstantMode.mean_squared
    h            : Optional[list[float]]       = None
    lam          : Optional[list[float]]       = Field(None, alias="lambda")

    # stechkin
    budgets      : list[float]                 = Field(default_factory=list)
    grid         : Optional[int]               = Field(None, ge=1, description="number of log-spaced budgets")
    convention   : Optional[BudgetConvention]  = None
    lower_level  : Optional[int]               = Field(None, ge=1, description="truncation L of the lower-bound check")

    # verify
    kind         : Optional[VerifyKind]        = None
    trials       : int                         = Field(1000, ge=0)
    seed         : Optional[int]               = None
    level        : Optional[int]               = Field(None, ge=1, description="support pool M_level of the scan")
    p            : float                       = Field(2.0, ge=1)
    k            : float                       = Field(1.0, ge=0)
    degree       : int                         = Field(20, ge=1)
    modes        : int                         = Field(20, ge=1)
    harmonic     : Optional[int]               = Field(None, description="single harmonic e^{int} instead of a scan")

    # catalog
    action       : CatalogAction               = CatalogAction.list
    name         : Optional[str]               = None

    # numerics and artifacts
    rel_tol      : Optional[float]             = Field(None, gt=0, lt=1)
    max_level    : Optional[int]               = Field(None, ge=8)
    output       : Optional[str]               = None
    curve        : Optional[str]               = Field(None, description="CSV path for the convergence or trade-off curve")
    curve_level  : int                         = Field(1000, ge=1)

    model_config = {"populate_by_name": True, "extra": "forbid"}

    @model_validator(mode="after")
    def _requirements(self) -> "RunConfig":
        if self.command in (Command.constant, Command.stechkin) and self.model is None:
            raise ValueError(f"'{self.command.value}' needs a model")
        if self.command == Command.verify:
            if self.kind is None:
                raise ValueError("'verify' needs a kind: taikov, hlp or solyar")
            if self.kind != VerifyKind.solyar and self.model is None:
                raise ValueError(f"'verify {self.kind.value}' needs a model")
        if self.command == Command.catalog and self.action == CatalogAction.show and not self.name:
            raise ValueError("'catalog show' needs a preset name")
        return self


# Request bodies

class ConstantRequest(BaseModel):
    model : Union[str, dict[str, Any]]
    mode  : ConstantMode            = ConstantMode.mean_squared
    h     : Optional[list[float]]   = None
    lam   : Optional[list[float]]   = Field(None, alias="lambda")

    model_config = {"populate_by_name": True}


class StechkinRequest(BaseModel):
    model       : Union[str, dict[str, Any]]
    budgets     : list[float]                = Field(default_factory=list)
    grid        : Optional[int]              = Field(None, ge=1, le=200)
    convention  : Optional[BudgetConvention] = None
    lower_level : Optional[int]              = Field(None, ge=1)


class VerifyRequest(BaseModel):
    model    : Optional[Union[str, dict[str, Any]]] = None
    h        : Optional[list[float]]                = None
    trials   : int                                  = Field(1000, ge=0, le=100_000)
    seed     : Optional[int]                        = None
    p        : float                                = Field(2.0, ge=1)
    k        : float                                = Field(1.0, ge=0)
    harmonic : Optional[int]                        = None
