from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike
from scipy import linalg

_INVERSE_SLACK = 1e-12


def ridge_floor(dimension: int, horizon: int, *, uniform: bool = False) -> float:
    """Smallest admissible ridge: 16 log(dT), or 16 log(dT^2) for a union bound over rounds."""
    rounds = horizon**2 if uniform else horizon
    return 16.0 * math.log(dimension * rounds)


def warm_start_rounds(horizon: int) -> int:
    """t_warm = ceil(8 ln T) + 1."""
    return math.ceil(8.0 * math.log(horizon)) + 1


class AuctionHistory:
    """Append-only record of (x_s, m_s) with the ridge Gram matrix Sigma_t."""

    def __init__(self, dimension: int, ridge: float, capacity: int = 256) -> None:
        if ridge <= 0:
            raise ValueError(f"ridge must be > 0, got {ridge}")
        self.dimension = dimension
        self.ridge = ridge
        self._contexts = np.zeros((max(capacity, 1), dimension))
        self._bids = np.zeros(max(capacity, 1))
        self._size = 0
        self.gram = ridge * np.eye(dimension)

    def __len__(self) -> int:
        return self._size

    @property
    def contexts(self) -> np.ndarray:
        return self._contexts[: self._size]

    @property
    def competing_bids(self) -> np.ndarray:
        return self._bids[: self._size]

    def append(self, x: np.ndarray, m: float) -> None:
        if self._size == len(self._bids):
            self._contexts = np.concatenate([self._contexts, np.zeros_like(self._contexts)])
            self._bids = np.concatenate([self._bids, np.zeros_like(self._bids)])
        self._contexts[self._size] = x
        self._bids[self._size] = m
        self._size += 1
        self.gram += np.outer(x, x)

    def extend(self, contexts: np.ndarray, bids: np.ndarray) -> None:
        """Bulk append, equivalent to appending the rows one by one."""
        rows = np.atleast_2d(np.asarray(contexts, dtype=float))
        values = np.asarray(bids, dtype=float).reshape(-1)
        if len(rows) != len(values):
            raise ValueError(f"got {len(rows)} contexts for {len(values)} bids")
        needed = self._size + len(values)
        if needed > len(self._bids):
            grow = max(needed, 2 * len(self._bids)) - len(self._bids)
            self._contexts = np.concatenate([self._contexts, np.zeros((grow, self.dimension))])
            self._bids = np.concatenate([self._bids, np.zeros(grow)])
        self._contexts[self._size : needed] = rows
        self._bids[self._size : needed] = values
        self._size = needed
        self.gram += rows.T @ rows

    def recomputed_gram(self) -> np.ndarray:
        return self.ridge * np.eye(self.dimension) + self.contexts.T @ self.contexts


def random_split(n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Independent fair coin per index: heads go to the train split."""
    mask = rng.random(n) < 0.5
    return np.flatnonzero(mask), np.flatnonzero(~mask)


def fit_phi(contexts: np.ndarray, bids: np.ndarray, ridge: float) -> np.ndarray:
    """Ridge estimate (ridge*I + X'X)^-1 X'm."""
    if ridge <= 0:
        raise ValueError(f"ridge must be > 0, got {ridge}")
    d = contexts.shape[1]
    if len(bids) == 0:
        return np.zeros(d)
    gram = ridge * np.eye(d) + contexts.T @ contexts
    return linalg.solve(gram, contexts.T @ bids, assume_a="pos")


@dataclass(frozen=True)
class SplitCdfEstimate:
    """Step CDF of shifted evaluation residuals at the current context.

    The warm-start estimate is the identity CDF on [0, 1] with radius 1.
    """

    phi_hat: np.ndarray
    eval_points: np.ndarray
    epsilon: float
    warm_start: bool
    t: int

    @classmethod
    def warm(cls, dimension: int, t: int) -> SplitCdfEstimate:
        return cls(phi_hat=np.zeros(dimension), eval_points=np.zeros(0), epsilon=1.0, warm_start=True, t=t)

    @property
    def size(self) -> int:
        return len(self.eval_points)

    @property
    def jump(self) -> float:
        """Largest step of the CDF, 1/|eval points|."""
        return 0.0 if self.warm_start else 1.0 / self.size

    def eval(self, b: ArrayLike) -> np.ndarray | float:
        bids = np.asarray(b, dtype=float)
        if self.warm_start:
            values = np.clip(bids, 0.0, 1.0)
        else:
            values = np.searchsorted(self.eval_points, bids, side="right") / self.size
        return float(values) if values.ndim == 0 else values

    def _inverse_rank(self, u: float) -> int:
        return math.ceil(u * self.size - _INVERSE_SLACK)

    def generalized_inverse(self, u: float) -> float:
        """inf{b in [0, 1] : eval(b) >= u}; returns 1 when no bid attains u."""
        if self.warm_start:
            return min(max(float(u), 0.0), 1.0)
        if u <= 0.0:
            return 0.0
        rank = self._inverse_rank(u)
        if rank > self.size:
            return 1.0
        return min(max(float(self.eval_points[rank - 1]), 0.0), 1.0)

    def inverse_attainable(self, u: float) -> bool:
        if self.warm_start or u <= 0.0:
            return True
        rank = self._inverse_rank(u)
        return rank <= self.size and float(self.eval_points[rank - 1]) <= 1.0


def estimate_cdf(
    history: AuctionHistory,
    x_t: np.ndarray,
    ridge: float,
    horizon: int,
    c_eps: float,
    rng: np.random.Generator,
    *,
    min_ridge: float | None = None,
) -> SplitCdfEstimate:
    """Split-sample bilinear CDF estimate for round t = len(history) + 1.

    The split is drawn every round, warm start included, so the random stream
    advances identically whatever branch is taken.
    """
    d = history.dimension
    floor = ridge_floor(d, horizon) if min_ridge is None else min_ridge
    if ridge < floor - 1e-9:
        raise ValueError(f"ridge {ridge:.4f} is below the required floor {floor:.4f}")
    t = len(history) + 1
    train, evaluation = random_split(len(history), rng)
    if t <= warm_start_rounds(horizon) or len(evaluation) == 0:
        return SplitCdfEstimate.warm(d, t)

    contexts = history.contexts
    bids = history.competing_bids
    phi_hat = fit_phi(contexts[train], bids[train], ridge)
    residuals = bids[evaluation] - contexts[evaluation] @ phi_hat + float(x_t @ phi_hat)

    log_t = math.log(horizon)
    leverage = float(x_t @ linalg.solve(history.gram, x_t, assume_a="pos"))
    epsilon = c_eps * (log_t * math.sqrt(d / t) + log_t * math.sqrt(max(leverage, 0.0)))
    return SplitCdfEstimate(
        phi_hat=phi_hat,
        eval_points=np.sort(residuals),
        epsilon=min(epsilon, 1.0),
        warm_start=False,
        t=t,
    )


def spectral_split_check(history: AuctionHistory, train: np.ndarray, ridge: float) -> bool:
    """Whether ridge*I + sum_{s in S} x_s x_s' dominates Sigma_t / 4."""
    rows = history.contexts[train]
    split_gram = ridge * np.eye(history.dimension) + rows.T @ rows
    gap = split_gram - history.gram / 4.0
    return bool(np.linalg.eigvalsh(gap)[0] >= -1e-9)
