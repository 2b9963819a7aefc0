from __future__ import annotations

from typing import Any

from ltebid.env.contexts import ContextKind, ContextLaw
from ltebid.env.model import EnvironmentSpec
from ltebid.env.noise import NoiseFamily, NoiseModel

_PRESETS: dict[str, dict[str, Any]] = {
    "default": {
        "theta_star": [0.5, 0.4, 0.3],
        "phi_star": [0.3, 0.2, 0.2],
        "context_law": ContextLaw(kind=ContextKind.SPHERE_POSITIVE, dimension=3),
        "noise": NoiseModel(family=NoiseFamily.GAUSSIAN, scale=0.25),
    },
    # theta'x is 0.99 on both segments and m lies in [-0.05, 0.25]; delta_S is about 0.6
    "generous_slater": {
        "theta_star": [0.7071, 0.7071],
        "phi_star": [0.0707, 0.0707],
        "context_law": ContextLaw(
            kind=ContextKind.FIXED_POOL,
            dimension=2,
            pool=[[0.6, 0.8], [0.8, 0.6]],
        ),
        "noise": NoiseModel(family=NoiseFamily.TRUNCATED_GAUSSIAN, scale=0.05),
    },
    "simplex": {
        "theta_star": [0.6, 0.3, 0.1],
        "phi_star": [0.2, 0.3, 0.4],
        "context_law": ContextLaw(kind=ContextKind.SIMPLEX, dimension=3),
        "noise": NoiseModel(family=NoiseFamily.UNIFORM_SMOOTH, scale=0.2),
    },
    "pool": {
        "theta_star": [0.7, 0.2],
        "phi_star": [0.3, 0.3],
        "context_law": ContextLaw(
            kind=ContextKind.FIXED_POOL,
            dimension=2,
            pool=[[1.0, 0.0], [0.0, 1.0], [0.6, 0.8], [0.8, 0.6]],
        ),
        "noise": NoiseModel(family=NoiseFamily.GAUSSIAN, scale=0.2),
    },
}

PRESET_NAMES = tuple(_PRESETS)


def build_preset(name: str, horizon: int = 1000, seed: int = 0, ros_target: float = 1.0) -> EnvironmentSpec:
    """Shipped environment by name."""
    try:
        fields = _PRESETS[name]
    except KeyError as exc:
        raise ValueError(f"unknown environment preset {name!r}; choose from {', '.join(PRESET_NAMES)}") from exc
    return EnvironmentSpec(horizon=horizon, seed=seed, ros_target=ros_target, **fields)
