from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ltebid.env.contexts import ContextLaw
from ltebid.env.noise import NoiseModel
from ltebid.utils import round_rng

_NORM_TOLERANCE = 1e-12


class MisconfiguredEnvironment(ValueError):
    """Environment truth violates the constraints of the auction model."""


class EnvironmentSpec(BaseModel):
    """Ground truth of a synthetic auction stream. Agents never see these fields."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    theta_star: list[float]
    phi_star: list[float]
    context_law: ContextLaw = Field(default_factory=ContextLaw)
    noise: NoiseModel = Field(default_factory=NoiseModel)
    horizon: int = Field(default=1000, gt=0)
    ros_target: float = Field(default=1.0, ge=0.0)
    seed: int = 0

    @model_validator(mode="after")
    def _check_truth(self) -> EnvironmentSpec:
        d = self.context_law.dimension
        for name, vector in (("theta_star", self.theta_star), ("phi_star", self.phi_star)):
            if len(vector) != d:
                raise ValueError(f"{name} has length {len(vector)}, context dimension is {d}")
            if float(np.linalg.norm(vector)) > 1.0 + _NORM_TOLERANCE:
                raise ValueError(f"{name} lies outside the unit ball")
        theta = self.theta
        if self.context_law.nonnegative:
            # nonnegative contexts of norm <= 1 keep theta'x in [0, ||theta||]
            if np.any(theta < 0.0):
                raise ValueError(f"{self.context_law.kind} contexts need theta_star >= 0 componentwise")
        else:
            uplifts = self.context_law.pool_array() @ theta
            if np.any(uplifts < -_NORM_TOLERANCE) or np.any(uplifts > 1.0 + _NORM_TOLERANCE):
                raise ValueError("theta_star'x leaves [0, 1] on the context pool")
        return self

    @property
    def dimension(self) -> int:
        return self.context_law.dimension

    @property
    def theta(self) -> np.ndarray:
        return np.asarray(self.theta_star, dtype=float)

    @property
    def phi(self) -> np.ndarray:
        return np.asarray(self.phi_star, dtype=float)


@dataclass(frozen=True, slots=True)
class RoundSample:
    x: np.ndarray
    m: float
    v1: float
    v0: float

    def observed_value(self, won: bool) -> float:
        return self.v1 if won else self.v0


def context_at(spec: EnvironmentSpec, env_seed: int, t: int) -> np.ndarray:
    """Context of round t, identical to the one ``sample_round`` draws from the same stream."""
    return spec.context_law.sample(round_rng(env_seed, t))


def sample_round(spec: EnvironmentSpec, rng: np.random.Generator) -> RoundSample:
    """Draw (x, m, v1, v0).

    Potential outcomes share one uniform latent U: v0 = 1[U < p0] and
    v1 = 1[U < p0 + theta'x] with p0 = (1 - theta'x) / 2, so v1 >= v0 pathwise
    and E[v1 - v0 | x] = theta'x.
    """
    x = spec.context_law.sample(rng)
    effect = float(x @ spec.theta)
    if effect < -_NORM_TOLERANCE or effect > 1.0 + _NORM_TOLERANCE:
        raise MisconfiguredEnvironment(f"theta_star'x = {effect} outside [0, 1] at x = {x.tolist()}")
    effect = min(max(effect, 0.0), 1.0)
    m = float(x @ spec.phi) + float(spec.noise.sample(rng))
    latent = rng.random()
    base = (1.0 - effect) / 2.0
    return RoundSample(x=x, m=m, v1=float(latent < base + effect), v0=float(latent < base))


def sample_outcomes(
    spec: EnvironmentSpec, x: np.ndarray, rng: np.random.Generator, size: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``size`` independent (m, v1, v0) draws at a fixed context, same law as ``sample_round``."""
    effect = min(max(float(x @ spec.theta), 0.0), 1.0)
    m = float(x @ spec.phi) + np.asarray(spec.noise.sample(rng, size), dtype=float)
    latent = rng.random(size)
    base = (1.0 - effect) / 2.0
    return m, (latent < base + effect).astype(float), (latent < base).astype(float)


def uplift(spec: EnvironmentSpec, x: ArrayLike) -> np.ndarray | float:
    values = np.asarray(x, dtype=float) @ spec.theta
    return float(values) if np.ndim(values) == 0 else values


def true_win_prob(spec: EnvironmentSpec, x: ArrayLike, b: ArrayLike) -> np.ndarray | float:
    """F(b | x) = Psi(b - phi'x).

    A single context broadcasts against any bid array; a context matrix (n, d) with a
    bid array of shape (G,) yields an (n, G) table.
    """
    contexts = np.asarray(x, dtype=float)
    bids = np.asarray(b, dtype=float)
    shift = contexts @ spec.phi
    if contexts.ndim == 2 and bids.ndim == 1:
        values = spec.noise.cdf(bids[None, :] - shift[:, None])
    else:
        values = spec.noise.cdf(bids - shift)
    return float(values) if np.ndim(values) == 0 else values


def _value_table(spec: EnvironmentSpec, x: ArrayLike, b: ArrayLike) -> tuple[np.ndarray, np.ndarray]:
    contexts = np.asarray(x, dtype=float)
    bids = np.asarray(b, dtype=float)
    effect = np.asarray(uplift(spec, contexts))
    if contexts.ndim == 2 and bids.ndim == 1:
        effect = effect[:, None]
        bids = bids[None, :]
    return effect, bids


def _scalar(values: np.ndarray) -> np.ndarray | float:
    return float(values) if np.ndim(values) == 0 else values


def expected_reward(spec: EnvironmentSpec, x: ArrayLike, b: ArrayLike) -> np.ndarray | float:
    effect, bids = _value_table(spec, x, b)
    return _scalar(np.asarray(true_win_prob(spec, x, b)) * (effect - bids))


def expected_cost(spec: EnvironmentSpec, x: ArrayLike, b: ArrayLike) -> np.ndarray | float:
    _, bids = _value_table(spec, x, b)
    return _scalar(np.asarray(true_win_prob(spec, x, b)) * bids)


def expected_margin(spec: EnvironmentSpec, x: ArrayLike, b: ArrayLike) -> np.ndarray | float:
    effect, bids = _value_table(spec, x, b)
    win = np.asarray(true_win_prob(spec, x, b))
    return _scalar(win * (effect - (1.0 + spec.ros_target) * bids))


def realized_reward(sample: RoundSample, b: float) -> float:
    """1[b >= m] (v1 - v0 - b); ties count as wins."""
    if b >= sample.m:
        return sample.v1 - sample.v0 - b
    return 0.0
