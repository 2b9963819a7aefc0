from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ltebid.learning.cdf import SplitCdfEstimate

_MEMBERSHIP_TOLERANCE = 1e-12


@dataclass(frozen=True)
class SafeGridPoint:
    b: float
    f_hat: float
    q_dagger: float
    c_dagger: float


@dataclass(frozen=True)
class SafeGrid:
    """Safe bids (ascending) with optimistic allocation q = min(1, F + eps) and payment c = b q."""

    bids: np.ndarray
    f_hat: np.ndarray
    q_dagger: np.ndarray
    c_dagger: np.ndarray

    def __len__(self) -> int:
        return len(self.bids)

    def point(self, index: int) -> SafeGridPoint:
        return SafeGridPoint(
            b=float(self.bids[index]),
            f_hat=float(self.f_hat[index]),
            q_dagger=float(self.q_dagger[index]),
            c_dagger=float(self.c_dagger[index]),
        )

    def points(self) -> list[SafeGridPoint]:
        return [self.point(index) for index in range(len(self))]


@dataclass(frozen=True)
class LowerHull:
    """Lower convex chain over (q, c); ``indices`` point into the input arrays."""

    indices: np.ndarray
    q: np.ndarray
    c: np.ndarray
    slopes: np.ndarray

    def __len__(self) -> int:
        return len(self.indices)


def annotate(bids: np.ndarray, estimate: SplitCdfEstimate) -> SafeGrid:
    f_hat = np.asarray(estimate.eval(bids), dtype=float)
    q_dagger = np.minimum(1.0, f_hat + estimate.epsilon)
    return SafeGrid(bids=bids, f_hat=f_hat, q_dagger=q_dagger, c_dagger=bids * q_dagger)


def build_safe_grid(estimate: SplitCdfEstimate, z: float, grid_size: int) -> tuple[SafeGrid, bool]:
    """Endpoint-augmented grid filtered to F in [z, 1 - z].

    Returns the grid and whether it fell back to the lone median planning point.
    """
    if not 0.0 <= z <= 0.5:
        raise ValueError(f"z must lie in [0, 1/2], got {z}")
    median = estimate.generalized_inverse(0.5)
    extras = [estimate.generalized_inverse(z), estimate.generalized_inverse(1.0 - z)]
    if z >= 0.5 - _MEMBERSHIP_TOLERANCE:
        extras.append(median)
    bids = np.unique(np.clip(np.concatenate([np.linspace(0.0, 1.0, grid_size + 1), extras]), 0.0, 1.0))
    f_hat = np.asarray(estimate.eval(bids), dtype=float)
    keep = (f_hat >= z - _MEMBERSHIP_TOLERANCE) & (f_hat <= 1.0 - z + _MEMBERSHIP_TOLERANCE)
    if not np.any(keep):
        return annotate(np.array([median]), estimate), True
    return annotate(bids[keep], estimate), False


def lower_hull(q: np.ndarray, c: np.ndarray) -> LowerHull:
    """Monotone-chain lower hull; tied q keeps the lowest c and collinear middles are dropped."""
    if len(q) == 0:
        raise ValueError("lower_hull needs at least one point")
    order = np.lexsort((c, q))
    chain: list[int] = []
    for index in order:
        if chain and abs(q[index] - q[chain[-1]]) <= _MEMBERSHIP_TOLERANCE:
            continue
        while len(chain) >= 2:
            o, a = chain[-2], chain[-1]
            cross = (q[a] - q[o]) * (c[index] - c[o]) - (c[a] - c[o]) * (q[index] - q[o])
            if cross > 0.0:
                break
            chain.pop()
        chain.append(int(index))
    indices = np.asarray(chain, dtype=int)
    hull_q, hull_c = q[indices], c[indices]
    return LowerHull(
        indices=indices,
        q=hull_q,
        c=hull_c,
        slopes=np.diff(hull_c) / np.diff(hull_q),
    )
