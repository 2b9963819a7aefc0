from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike
from scipy import linalg

_MAX_WEIGHT = 0.25


def _scalar(values: np.ndarray) -> np.ndarray | float:
    return float(values) if np.ndim(values) == 0 else values


def ipw_pseudo_outcome(
    f_hat: ArrayLike, epsilon: ArrayLike, won: ArrayLike, v_observed: ArrayLike
) -> np.ndarray | float:
    """Truncated IPW pseudo-outcome; denominators are floored at epsilon**2."""
    f = np.asarray(f_hat, dtype=float)
    value = np.asarray(v_observed, dtype=float)
    floor = np.square(np.asarray(epsilon, dtype=float))
    treated = value / np.maximum(floor, f)
    control = -value / np.maximum(floor, 1.0 - f)
    return _scalar(np.where(np.asarray(won, dtype=bool), treated, control))


def variance_weight(f_hat: ArrayLike) -> np.ndarray | float:
    """omega = F(1 - F), the inverse IPW variance proxy; lies in [0, 1/4]."""
    f = np.asarray(f_hat, dtype=float)
    return _scalar(f * (1.0 - f))


@dataclass
class WlsState:
    """Ridge-weighted least squares statistics A = ridge*I + sum w x x', u = sum w x y."""

    ridge: float
    dimension: int
    horizon: int
    A: np.ndarray = field(repr=False)
    u: np.ndarray = field(repr=False)
    t: int = 0
    sum_eps: float = 0.0
    sum_eps_sq: float = 0.0

    @classmethod
    def create(cls, dimension: int, ridge: float, horizon: int) -> WlsState:
        if ridge <= 0:
            raise ValueError(f"ridge must be > 0, got {ridge}")
        return cls(
            ridge=ridge,
            dimension=dimension,
            horizon=horizon,
            A=ridge * np.eye(dimension),
            u=np.zeros(dimension),
        )

    def theta_hat(self) -> np.ndarray:
        return linalg.cho_solve(linalg.cho_factor(self.A), self.u)

    def inverse_norm(self, x: np.ndarray) -> float:
        """||x||_{A^-1}."""
        solved = linalg.cho_solve(linalg.cho_factor(self.A), x)
        return math.sqrt(max(float(x @ solved), 0.0))

    @property
    def delta_1(self) -> float:
        return self.sum_eps

    @property
    def delta_2(self) -> float:
        return 1.0 + self.sum_eps_sq

    @property
    def delta_2_bar(self) -> float:
        return self.dimension + self.delta_2


def wls_update(
    state: WlsState,
    x: np.ndarray,
    weight: float,
    pseudo_outcome: float,
    epsilon: float | None = None,
) -> WlsState:
    """Absorb one round in place; epsilon, when given, feeds the beta schedule."""
    if not -1e-15 <= weight <= _MAX_WEIGHT + 1e-12:
        raise ValueError(f"weight must lie in [0, 1/4], got {weight}")
    state.A += weight * np.outer(x, x)
    state.u += weight * pseudo_outcome * x
    state.t += 1
    if epsilon is not None:
        state.sum_eps += epsilon
        state.sum_eps_sq += epsilon**2
    return state


def beta_schedule(state: WlsState, c_beta: float) -> float:
    """beta_t = C (sqrt(d log(1 + t/ridge) + log T) + sqrt(sum eps^2) + sqrt(ridge))."""
    design = state.dimension * math.log1p(state.t / state.ridge) + math.log(state.horizon)
    return c_beta * (math.sqrt(design) + math.sqrt(state.sum_eps_sq) + math.sqrt(state.ridge))


def confidence_radius(state: WlsState, x: np.ndarray, beta: float) -> float:
    return beta * state.inverse_norm(np.asarray(x, dtype=float))
