# Named ready-made model specs for `catalog list|show` and `--model NAME`.

from dataclasses import dataclass, field
from typing import Any

from app.core.errors import ModelSpecError
from app.models.spec import ModelSpec


@dataclass
class Preset:
    name: str
    description: str
    spec: dict[str, Any] = field(default_factory=dict)

    def model_spec(self) -> ModelSpec:
        return ModelSpec.model_validate({"name": self.name, **self.spec})


# Registry

PRESETS: dict[str, Preset] = {

    # Torus
    "torus-taikov": Preset(
        name="torus-taikov",
        description=("T¹, point evaluation, k=0, r=(0,1), h=(1,1): K² = π coth π − 1. "
                     "Multiplicative: the sup π is approached as h₁/h₀ → 0 and reports not-converged"),
        spec={"family": "torus", "k": 0, "r_list": [0, 1], "h": [1, 1], "lambda": [0.5, 0.5]},
    ),
    "torus-unfolded": Preset(
        name="torus-unfolded",
        description="Same model indexed over Z_* instead of folded pairs",
        spec={"family": "torus", "k": 0, "r_list": [0, 1], "h": [1, 1], "unfolded": True},
    ),
    "torus-hlp": Preset(
        name="torus-hlp",
        description="T¹ norm functional, k=1/2, r=(0,1), λ=(1/2,1/2): sharp HLP factor 1",
        spec={"family": "torus", "functional": "norm", "k": "1/2", "r_list": [0, 1],
              "h": [1, 1], "lambda": [0.5, 0.5]},
    ),
    "torus-hlp-m2": Preset(
        name="torus-hlp-m2",
        description="T¹ norm functional with three constraints, k = Σ λ_j r^j = 3/4",
        spec={"family": "torus", "functional": "norm", "k": "3/4", "r_list": [0, 1, 2],
              "h": [1, 1, 1], "lambda": [0.5, 0.25, 0.25]},
    ),
    "torus-2d": Preset(
        name="torus-2d",
        description="T², point evaluation, k=0, r=((0,0),(2,0),(0,2))",
        spec={"family": "torus", "dimension": 2, "k": 0, "r_list": [[0, 0], [2, 0], [0, 2]],
              "h": [1, 1, 1], "lambda": [0.5, 0.25, 0.25]},
    ),
    "torus-stechkin": Preset(
        name="torus-stechkin",
        description="T¹ Stechkin problem: C = identity, D = second-order weights n⁴",
        spec={"family": "torus", "k": 0, "r_list": [0, 2], "h": [1, 1],
              "stechkin": {"c_orders": [0], "d_orders": [2]}},
    ),

    # CROSS manifolds
    "sphere-s2": Preset(
        name="sphere-s2",
        description="S², point evaluation, k=0, r=(0,1)",
        spec={"family": "sphere", "rank": 2, "k": 0, "r_list": [0, 1], "h": [1, 1]},
    ),
    "sphere-s2-hlp": Preset(
        name="sphere-s2-hlp",
        description="S², norm functional, k=1/2, r=(0,1)",
        spec={"family": "sphere", "rank": 2, "functional": "norm", "k": "1/2",
              "r_list": [0, 1], "h": [1, 1], "lambda": [0.5, 0.5]},
    ),
    "cp2": Preset(
        name="cp2",
        description="CP², point evaluation, k=0, r=(0,2)",
        spec={"family": "complex-projective", "rank": 2, "k": 0, "r_list": [0, 2], "h": [1, 1]},
    ),
    "cayley-plane": Preset(
        name="cayley-plane",
        description="Cayley plane (d=16), point evaluation, k=0, r=(0,5)",
        spec={"family": "cayley-plane", "k": 0, "r_list": [0, 5], "h": [1, 1]},
    ),

    # R^d
    "rd-1d": Preset(
        name="rd-1d",
        description="R, k=0, r=(0,1), λ=(1/2,1/2): ∫ dt/(1+t²) closed form",
        spec={"family": "rd", "k": 0, "r_list": [0, 1], "h": [1, 1], "lambda": [0.5, 0.5]},
    ),
    "rd-1d-k1r3": Preset(
        name="rd-1d-k1r3",
        description="R, k=1, r=(0,3), λ=(1/2,1/2)",
        spec={"family": "rd", "k": 1, "r_list": [0, 3], "h": [1, 1], "lambda": [0.5, 0.5]},
    ),
    "rd-2d-diagonal": Preset(
        name="rd-2d-diagonal",
        description="R², k=0, r=((0,0),(2,0),(0,2)): the objective is flat in h",
        spec={"family": "rd", "dimension": 2, "k": 0, "r_list": [[0, 0], [2, 0], [0, 2]],
              "h": [1, 1, 1], "lambda": [0.5, 0.25, 0.25]},
    ),

    # g-power multipliers
    "gpower-hlp": Preset(
        name="gpower-hlp",
        description="g_n = n over N, norm functional, k=1/2, r=(0,1)",
        spec={"family": "gpower", "functional": "norm", "g": {"kind": "abs"}, "k": "1/2",
              "r_list": [0, 1], "h": [1, 1], "lambda": [0.5, 0.5]},
    ),
    "gpower-hlp-m2": Preset(
        name="gpower-hlp-m2",
        description="g_n = n, three constraints, k = Σ λ_j r^j = 3/4",
        spec={"family": "gpower", "functional": "norm", "g": {"kind": "abs"}, "k": "3/4",
              "r_list": [0, 1, 2], "h": [1, 1, 1], "lambda": [0.5, 0.25, 0.25]},
    ),

    # Explicit
    "stechkin-single": Preset(
        name="stechkin-single",
        description="One mode with c=1, C-weight 1, D-weight 1: N=1/4 gives μ=1, E=1/2",
        spec={"family": "explicit",
              "entries": [{"index": 1, "c": 1.0, "b": [1.0], "d": [1.0]}],
              "stechkin": {"c_orders": [0], "d_orders": [0]}},
    ),
}


def preset_names() -> list[str]:
    return sorted(PRESETS)


def get_preset(name: str) -> Preset:
    """Look up a preset; raises ModelSpecError for unknown names."""
    preset = PRESETS.get(name)
    if preset is None:
        raise ModelSpecError(f"unknown preset {name!r}; known: {', '.join(preset_names())}", field="model")
    return preset
