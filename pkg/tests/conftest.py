"""Shared models and problems for the test suites."""
import math

import numpy as np
import pytest

from app.core.config import settings
from app.models.spec import Family, Functional
from app.services.catalog import CrossSpace, TorusModel, build_cross, build_torus
from app.services.spectral import SpectralModel, TailPolicy
from app.services.stechkin import StechkinProblem

# Σ_{n≥1} 2/(1+n²)
TORUS_K2 = math.pi / math.tanh(math.pi) - 1.0


@pytest.fixture
def policy():
    return TailPolicy(rel_tol=1e-10)


@pytest.fixture
def torus():
    """T¹, point evaluation, k=0, r=(0,1)."""
    return build_torus(TorusModel(a=1, k=(0.0,), r_list=((0.0,), (1.0,))))


@pytest.fixture
def torus_hlp():
    """T¹, norm functional, k=1/2, r=(0,1)."""
    return build_torus(TorusModel(a=1, k=(0.5,), r_list=((0.0,), (1.0,)), functional=Functional.norm))


@pytest.fixture
def sphere():
    """S², point evaluation, k=0, r=(0,1)."""
    return build_cross(CrossSpace(Family.sphere, 2), 0.0, [0.0, 1.0])


@pytest.fixture
def sphere_hlp():
    return build_cross(CrossSpace(Family.sphere, 2), 0.5, [0.0, 1.0], Functional.norm)


@pytest.fixture
def torus_stechkin():
    """C = identity, D = second-order weights n⁴, point evaluation at k=0."""
    model_c = build_torus(TorusModel(a=1, k=(0.0,), r_list=((0.0,),)))
    model_d = build_torus(TorusModel(a=1, k=(0.0,), r_list=((2.0,),)))
    return StechkinProblem(model_c, model_d, (1.0,), (1.0,))


@pytest.fixture
def single_mode():
    """One index with c = 1 and C-, D-weights 1: N = 1/4 gives μ = 1, E = 1/2."""
    model_c = SpectralModel.from_entries([1], [1.0], [[1.0]], name="C")
    model_d = SpectralModel.from_entries([1], [1.0], [[1.0]], name="D")
    return StechkinProblem(model_c, model_d, (1.0,), (1.0,))


@pytest.fixture
def threads(monkeypatch):
    """Set settings.THREADS for one test."""
    def _set(count: int):
        monkeypatch.setattr(settings, "THREADS", count)
    return _set


def explicit_model(c, b) -> SpectralModel:
    c = np.asarray(c, dtype=float)
    return SpectralModel.from_entries(list(range(1, len(c) + 1)), c, np.asarray(b, dtype=float))
