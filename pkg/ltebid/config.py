from __future__ import annotations

import math
from dataclasses import dataclass
from enum import StrEnum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ltebid.env.noise import NoiseModel
from ltebid.learning.cdf import ridge_floor


class RidgePreset(StrEnum):
    ALGORITHM = "algorithm"
    UNIFORM = "uniform"


class AgentConstants(BaseModel):
    """Tunable agent constants; ``None`` derives the value from (d, T) at resolve time."""

    model_config = ConfigDict(extra="forbid")

    alpha: float | None = Field(default=None, gt=0.0)
    eta: float | None = Field(default=None, gt=0.0)
    ridge: float | None = Field(default=None, gt=0.0)
    ridge_preset: RidgePreset = RidgePreset.ALGORITHM
    grid_size: int | None = Field(default=None, ge=1)
    c_eps: float = Field(default=0.5, gt=0.0)
    c_beta: float = Field(default=0.5, gt=0.0)
    c_br: float = Field(default=1.0, gt=0.0)
    c_ros: float = Field(default=1.0, gt=0.0)
    c_frak: float = Field(default=0.1, gt=0.0)
    c_r: float = Field(default=3.0, gt=0.0)
    lambda_max: float = Field(default=100.0, gt=0.0)
    density_bound: float | None = Field(default=None, gt=0.0)
    slater_ridge: float = Field(default=1.0, gt=0.0)
    mu_init: float = Field(default=1.0, ge=0.0, le=1.0)

    def resolve(self, dimension: int, horizon: int, noise: NoiseModel | None = None) -> ResolvedConstants:
        log_t = math.log(horizon) if horizon > 1 else 0.0
        floor = ridge_floor(dimension, horizon, uniform=self.ridge_preset is RidgePreset.UNIFORM)
        ridge = self.ridge if self.ridge is not None else floor
        if self.density_bound is not None:
            bound = self.density_bound
        elif noise is not None:
            bound = noise.bound
        else:
            raise ValueError("density_bound is required when no noise model is given")
        return ResolvedConstants(
            dimension=dimension,
            horizon=horizon,
            alpha=(
                self.alpha
                if self.alpha is not None
                else math.sqrt(horizon / (dimension * dimension * (1.0 + log_t)))
            ),
            eta=self.eta if self.eta is not None else 1.0 / math.sqrt(horizon),
            ridge=ridge,
            min_ridge=ridge_floor(dimension, horizon),
            grid_size=self.grid_size if self.grid_size is not None else math.ceil(math.sqrt(horizon)),
            c_eps=self.c_eps,
            c_beta=self.c_beta,
            c_br=self.c_br,
            c_ros=self.c_ros,
            c_frak=self.c_frak,
            c_r=self.c_r,
            lambda_max=self.lambda_max,
            density_bound=bound,
            slater_ridge=self.slater_ridge,
            mu_init=self.mu_init,
        )


@dataclass(frozen=True)
class ResolvedConstants:
    dimension: int
    horizon: int
    alpha: float
    eta: float
    ridge: float
    min_ridge: float
    grid_size: int
    c_eps: float
    c_beta: float
    c_br: float
    c_ros: float
    c_frak: float
    c_r: float
    lambda_max: float
    density_bound: float
    slater_ridge: float
    mu_init: float = 1.0

    @property
    def grid(self) -> np.ndarray:
        """Uniform bid grid B_K = {0, 1/K, ..., 1}."""
        return np.linspace(0.0, 1.0, self.grid_size + 1)

    @property
    def dual_floor(self) -> float:
        return 1.0 / math.sqrt(self.horizon)
