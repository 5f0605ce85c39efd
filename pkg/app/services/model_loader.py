# Model spec loading: YAML files or preset names → validated ModelSpec → concrete models.
from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Optional, Sequence, Union

import yaml
from pydantic import ValidationError

from app.core.config import settings
from app.core.errors import ModelSpecError
from app.models.spec import CROSS_FAMILIES, Family, Functional, ModelSpec
from app.services.catalog import (
    CrossSpace,
    GPowerModel,
    RdModel,
    TorusModel,
    build_cross,
    build_cross_product,
    build_eigen_table,
    build_gpower,
    build_torus,
)
from app.services.presets import PRESETS, get_preset
from app.services.spectral import SpectralModel, TailPolicy
from app.services.stechkin import StechkinProblem

logger = logging.getLogger(__name__)

AnyModel = Union[SpectralModel, RdModel]


# ── Parsing ───────────────────────────────────────────────────────────────────

def _node_line(root: Optional[yaml.Node], loc: Sequence[Any]) -> Optional[int]:
    """1-based line of the deepest YAML node reachable along a pydantic error location."""
    if root is None or not loc:
        return None
    node = root
    for key in loc:
        child = None
        if isinstance(node, yaml.MappingNode):
            child = next((v for k, v in node.value if k.value == str(key)), None)
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            child = node.value[key]
        if child is None:
            break
        node = child
    return node.start_mark.line + 1


def _field_path(loc: Sequence[Any]) -> Optional[str]:
    parts = [str(p) for p in loc]
    return ".".join(parts) if parts else None


def validate_spec(data: Any, root: Optional[yaml.Node] = None) -> ModelSpec:
    """ModelSpec from parsed data; the first validation error becomes a ModelSpecError."""
    if not isinstance(data, dict):
        raise ModelSpecError("a model spec must be a mapping", line=1 if root is not None else None)
    try:
        return ModelSpec.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        loc = first.get("loc", ())
        message = first.get("msg", str(exc))
        raise ModelSpecError(message, field=_field_path(loc), line=_node_line(root, loc)) from exc


def parse_spec_text(text: str) -> ModelSpec:
    try:
        data = yaml.safe_load(text)
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ModelSpecError(f"YAML syntax error: {getattr(exc, 'problem', exc)}", line=line) from exc
    return validate_spec(data, root)


def load_model_spec(source: Union[str, Path, dict, ModelSpec]) -> ModelSpec:
    """Spec from a ModelSpec, a mapping, a preset name or a YAML file path."""
    if isinstance(source, ModelSpec):
        return source
    if isinstance(source, dict):
        return validate_spec(source)
    path = Path(source)
    if not path.exists():
        if str(source) in PRESETS:
            logger.info("model: preset %s", source)
            return get_preset(str(source)).model_spec()
        raise ModelSpecError(f"no spec file or preset named {str(source)!r}", field="model")
    spec = parse_spec_text(path.read_text(encoding="utf-8"))
    if spec.name is None:
        spec = spec.model_copy(update={"name": path.stem})
    logger.info("model: %s (%s) from %s", spec.name, spec.family.value, path)
    return spec


# ── Construction ──────────────────────────────────────────────────────────────

def tail_policy(spec: Optional[ModelSpec] = None, rel_tol: Optional[float] = None,
                max_level: Optional[int] = None) -> TailPolicy:
    """Tail policy from settings, overridden by the model spec, overridden again by explicit values."""
    rel = settings.TAIL_REL_TOL
    top = settings.MAX_LEVEL or None
    low = settings.MIN_LEVEL
    if spec is not None:
        rel = spec.tolerance.rel or rel
        top = spec.truncation.max_level or top
        low = spec.truncation.min_level or low
    rel = rel_tol or rel
    top = max_level or top
    if top is not None:
        low = min(low, top)
    return TailPolicy(rel_tol=rel, max_level=top, min_level=max(low, 8))


def build_model(spec: ModelSpec) -> AnyModel:
    """The concrete model a spec describes."""
    family = spec.family
    k, r_list = spec.k_vector, spec.r_vectors

    if family == Family.torus:
        model = build_torus(TorusModel(
            a=spec.dimension, k=k, r_list=r_list, functional=spec.functional,
            damping=tuple(spec.damping) if spec.damping else None, unfolded=spec.unfolded,
        ))
    elif family in CROSS_FAMILIES:
        space = CrossSpace(family, spec.rank or 2)
        if spec.dimension == 1:
            model = build_cross(space, k[0], [r[0] for r in r_list], spec.functional, spec.damping[0] if spec.damping else None)
        elif spec.functional == Functional.point_evaluation:
            model = build_cross_product(space, spec.dimension, k, r_list, tuple(spec.damping) if spec.damping else None)
        else:
            raise ModelSpecError("product CROSS models carry point evaluation only", field="functional")
    elif family == Family.rd:
        return RdModel(spec.dimension, k, r_list, spec.tolerance.quad_rel)
    elif family == Family.gpower:
        model = build_gpower(GPowerModel(spec.g, k, r_list, a=spec.dimension, functional=spec.functional))
    elif family == Family.eigen_table:
        pairs = spec.eigenpairs
        model = build_eigen_table([p.mu for p in pairs], [p.phi_sq for p in pairs], k[0], [r[0] for r in r_list])
    else:
        entries = spec.entries
        model = SpectralModel.from_entries(
            [e.index for e in entries], [e.c for e in entries], [e.b for e in entries],
            name=spec.name or "explicit",
        )

    model.orthogonal_images = spec.orthogonal_images
    if spec.name:
        model.name = spec.name
    logger.info("built %r", model)
    return model


def build_stechkin(spec: ModelSpec) -> StechkinProblem:
    """The C/D split described by the model spec's `stechkin` section."""
    section = spec.stechkin
    if section is None:
        raise ModelSpecError("model has no 'stechkin' section", field="stechkin")
    if spec.family == Family.rd:
        raise ModelSpecError("the Stechkin problem needs a spectral model, not rd", field="family")

    if spec.family == Family.explicit:
        entries = spec.entries
        if any(e.d is None for e in entries):
            raise ModelSpecError("every explicit entry needs 'd' weights for a Stechkin problem", field="entries")
        if len(section.h_c) != len(entries[0].b) or any(len(e.d) != len(section.h_d) for e in entries):
            raise ModelSpecError("h_c/h_d lengths must match the b/d weight lists", field="stechkin")
        indices, c = [e.index for e in entries], [e.c for e in entries]
        model_c = SpectralModel.from_entries(indices, c, [e.b for e in entries], name="C")
        model_d = SpectralModel.from_entries(indices, c, [e.d for e in entries], name="D")
    else:
        try:
            model_c = build_model(spec.model_copy(update={"r_list": section.c_orders, "h": None, "lam": None}))
            model_d = build_model(spec.model_copy(update={"r_list": section.d_orders, "h": None, "lam": None}))
        except ValueError as exc:
            raise ModelSpecError(str(exc), field="stechkin") from exc
    return StechkinProblem(model_c, model_d, section.h_c, section.h_d)
