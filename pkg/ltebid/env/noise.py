from __future__ import annotations

import math
from enum import StrEnum

import numpy as np
from numpy.typing import ArrayLike
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import special, stats

_TRUNCATION = 3.0
_RAMP_FRACTION = 0.25
_INVERSE_GRID = 8193


class NoiseFamily(StrEnum):
    GAUSSIAN = "gaussian"
    TRUNCATED_GAUSSIAN = "truncated_gaussian"
    UNIFORM_SMOOTH = "uniform_smooth"


class NoiseModel(BaseModel):
    """Law of the competing-bid noise xi, with CDF Psi and density f.

    ``scale == 0`` is the degenerate point mass at zero for every family: the CDF is
    the unit step and the density bound is infinite.

    ``uniform_smooth`` has support [-scale, scale]: a flat plateau joined to zero
    by C1 sine-squared ramps of width scale/4 at both edges.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    family: NoiseFamily = NoiseFamily.GAUSSIAN
    scale: float = Field(default=0.25, ge=0.0)
    density_bound: float | None = Field(default=None, gt=0.0)

    @model_validator(mode="after")
    def _check_supplied_bound(self) -> NoiseModel:
        if self.density_bound is not None and not self.check_density_bound():
            raise ValueError(
                f"density_bound={self.density_bound} is below the {self.family} density maximum"
            )
        return self

    @property
    def degenerate(self) -> bool:
        return self.scale == 0.0

    @property
    def support(self) -> tuple[float, float]:
        if self.degenerate:
            return 0.0, 0.0
        if self.family is NoiseFamily.GAUSSIAN:
            return -math.inf, math.inf
        if self.family is NoiseFamily.TRUNCATED_GAUSSIAN:
            return -_TRUNCATION * self.scale, _TRUNCATION * self.scale
        return -self.scale, self.scale

    @property
    def bound(self) -> float:
        """Density bound L: the supplied value, else the analytic maximum."""
        if self.density_bound is not None:
            return self.density_bound
        return self.analytic_density_max()

    @property
    def density_floor(self) -> float:
        """Smallest density on the family's working window.

        Gaussian uses u in [-1, 2], the range of b - phi'x for b in [0, 1] and
        phi'x in [-1, 1], so the floor sits at |u| = 2. Truncated Gaussian uses
        its support endpoints. The smoothed uniform ramps down to zero.
        """
        if self.degenerate or self.family is NoiseFamily.UNIFORM_SMOOTH:
            return 0.0
        if self.family is NoiseFamily.GAUSSIAN:
            return float(self.pdf(2.0))
        return float(self.pdf(_TRUNCATION * self.scale * (1.0 - 1e-12)))

    @property
    def sub_gaussian_proxy(self) -> float:
        """Variance proxy sigma with E exp(s xi) <= exp(s**2 sigma**2 / 2).

        The truncated Gaussian keeps the scale of its parent. The smoothed uniform
        lives on [-scale, scale], and Hoeffding's lemma bounds it by the scale.
        """
        return self.scale

    def analytic_density_max(self) -> float:
        if self.degenerate:
            return math.inf
        return float(self.pdf(0.0))

    def cdf(self, u: ArrayLike) -> np.ndarray:
        values = np.asarray(u, dtype=float)
        if self.degenerate:
            return (values >= 0.0).astype(float)
        if self.family is NoiseFamily.GAUSSIAN:
            return special.ndtr(values / self.scale)
        if self.family is NoiseFamily.TRUNCATED_GAUSSIAN:
            return self._truncated().cdf(values)
        return self._smooth_uniform_cdf(values)

    def pdf(self, u: ArrayLike) -> np.ndarray:
        values = np.asarray(u, dtype=float)
        if self.degenerate:
            return np.where(values == 0.0, np.inf, 0.0)
        if self.family is NoiseFamily.GAUSSIAN:
            return stats.norm.pdf(values, scale=self.scale)
        if self.family is NoiseFamily.TRUNCATED_GAUSSIAN:
            return self._truncated().pdf(values)
        return self._smooth_uniform_pdf(values)

    def sample(self, rng: np.random.Generator, size: int | None = None) -> float | np.ndarray:
        if self.degenerate:
            return 0.0 if size is None else np.zeros(size)
        if self.family is NoiseFamily.GAUSSIAN:
            return rng.normal(0.0, self.scale, size=size)
        if self.family is NoiseFamily.TRUNCATED_GAUSSIAN:
            draw = self._truncated().rvs(size=size, random_state=rng)
            return float(draw) if size is None else np.asarray(draw)
        grid = np.linspace(-self.scale, self.scale, _INVERSE_GRID)
        draw = np.interp(rng.random(size), self._smooth_uniform_cdf(grid), grid)
        return float(draw) if size is None else draw

    def check_density_bound(self, points: int = 20001) -> bool:
        """Whether the bound L dominates the analytic density on a fine grid."""
        if self.degenerate:
            return math.isinf(self.bound)
        lo, hi = self._check_window()
        grid = np.linspace(lo, hi, points)
        return bool(np.max(self.pdf(grid)) <= self.bound + 1e-9)

    def check_log_concave(self, points: int = 4001) -> bool:
        """Numerical log-concavity check f' * Psi <= f**2 on the support interior."""
        if self.degenerate:
            return True
        lo, hi = self._check_window()
        margin = (hi - lo) * 1e-3
        grid = np.linspace(lo + margin, hi - margin, points)
        density = self.pdf(grid)
        slope = np.gradient(density, grid)
        gap = slope * self.cdf(grid) - density**2
        tolerance = 1e-6 * float(np.max(density**2))
        return bool(np.all(gap <= tolerance))

    def _check_window(self) -> tuple[float, float]:
        lo, hi = self.support
        if math.isinf(lo):
            return -8.0 * self.scale, 8.0 * self.scale
        return lo, hi

    def _truncated(self) -> stats.rv_continuous:
        return stats.truncnorm(-_TRUNCATION, _TRUNCATION, loc=0.0, scale=self.scale)

    def _ramp(self) -> tuple[float, float]:
        width = _RAMP_FRACTION * self.scale
        height = 1.0 / (2.0 * self.scale - width)
        return width, height

    def _smooth_uniform_pdf(self, values: np.ndarray) -> np.ndarray:
        width, height = self._ramp()
        edge = self.scale - np.abs(values)
        ramp = height * np.sin(np.pi * np.clip(edge, 0.0, width) / (2.0 * width)) ** 2
        return np.where(edge >= width, height, np.where(edge > 0.0, ramp, 0.0))

    def _smooth_uniform_cdf(self, values: np.ndarray) -> np.ndarray:
        width, height = self._ramp()

        def left_mass(u: np.ndarray) -> np.ndarray:
            s = np.clip(u + self.scale, 0.0, width)
            ramp = height * (s / 2.0 - width / (2.0 * np.pi) * np.sin(np.pi * s / width))
            plateau = height * np.clip(u + self.scale - width, 0.0, None)
            return ramp + plateau

        inside = np.where(values <= 0.0, left_mass(values), 1.0 - left_mass(-values))
        return np.clip(inside, 0.0, 1.0)
