from __future__ import annotations

from enum import StrEnum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class ContextKind(StrEnum):
    SPHERE_POSITIVE = "sphere_positive"
    SIMPLEX = "simplex"
    FIXED_POOL = "fixed_pool"


class ContextLaw(BaseModel):
    """I.i.d. context distribution; every draw has Euclidean norm at most one."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: ContextKind = ContextKind.SPHERE_POSITIVE
    dimension: int = Field(default=3, ge=1)
    pool: list[list[float]] | None = None

    @model_validator(mode="after")
    def _check_pool(self) -> ContextLaw:
        if self.kind is ContextKind.FIXED_POOL:
            if not self.pool:
                raise ValueError("fixed_pool contexts require a non-empty pool")
            for row in self.pool:
                if len(row) != self.dimension:
                    raise ValueError(f"pool vector {row} does not have dimension {self.dimension}")
                if float(np.linalg.norm(row)) > 1.0 + 1e-12:
                    raise ValueError(f"pool vector {row} has norm above 1")
        elif self.pool is not None:
            raise ValueError(f"pool is only valid for {ContextKind.FIXED_POOL}")
        return self

    @property
    def nonnegative(self) -> bool:
        return self.kind in {ContextKind.SPHERE_POSITIVE, ContextKind.SIMPLEX}

    def pool_array(self) -> np.ndarray:
        if self.pool is None:
            raise ValueError("context law has no pool")
        return np.asarray(self.pool, dtype=float)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return self.sample_many(rng, 1)[0]

    def sample_many(self, rng: np.random.Generator, n: int) -> np.ndarray:
        d = self.dimension
        if self.kind is ContextKind.SPHERE_POSITIVE:
            draws = np.abs(rng.standard_normal((n, d)))
            norms = np.linalg.norm(draws, axis=1, keepdims=True)
            return draws / np.maximum(norms, 1e-300)
        if self.kind is ContextKind.SIMPLEX:
            return rng.dirichlet(np.ones(d), size=n)
        pool = self.pool_array()
        return pool[rng.integers(len(pool), size=n)]

    def second_moment(self, rng: np.random.Generator | None = None, samples: int = 20000) -> np.ndarray:
        """E[x x^T]; exact for a pool, Monte Carlo otherwise."""
        if self.kind is ContextKind.FIXED_POOL:
            pool = self.pool_array()
            return pool.T @ pool / len(pool)
        generator = rng if rng is not None else np.random.default_rng(0)
        draws = self.sample_many(generator, samples)
        return draws.T @ draws / samples

    def min_eigenvalue(self, rng: np.random.Generator | None = None, samples: int = 20000) -> float:
        """Context non-degeneracy kappa_x."""
        return float(np.linalg.eigvalsh(self.second_moment(rng, samples))[0])
