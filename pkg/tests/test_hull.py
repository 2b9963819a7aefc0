from __future__ import annotations

import numpy as np
import pytest

from ltebid.agents.hull import build_safe_grid, lower_hull
from ltebid.learning.cdf import SplitCdfEstimate


def _brute_force_hull(q: np.ndarray, c: np.ndarray) -> set[int]:
    """Vertices strictly below every chord spanning them; lowest c wins a tied q."""
    best: dict[float, int] = {}
    for index in range(len(q)):
        key = float(q[index])
        if key not in best or c[index] < c[best[key]]:
            best[key] = index
    points = sorted(best.values(), key=lambda index: q[index])
    vertices = set()
    for i in points:
        strictly_below = True
        for j in points:
            for k in points:
                if not q[j] < q[i] < q[k]:
                    continue
                chord = c[j] + (c[k] - c[j]) * (q[i] - q[j]) / (q[k] - q[j])
                if c[i] >= chord:
                    strictly_below = False
        if strictly_below:
            vertices.add(i)
    return vertices


def test_lower_hull_matches_brute_force_on_random_instances() -> None:
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        n = int(rng.integers(1, 51))
        q = rng.random(n)
        c = rng.random(n)
        hull = lower_hull(q, c)
        assert set(hull.indices.tolist()) == _brute_force_hull(q, c)
        assert np.all(np.diff(hull.q) > 0.0)
        assert np.all(np.diff(hull.slopes) > 0.0)


def test_lower_hull_drops_collinear_points_and_tied_allocations() -> None:
    q = np.array([0.0, 0.5, 1.0, 0.5])
    c = np.array([0.0, 0.5, 1.0, 0.9])
    hull = lower_hull(q, c)
    assert hull.indices.tolist() == [0, 2]
    np.testing.assert_allclose(hull.slopes, [1.0])


def test_lower_hull_of_a_single_point() -> None:
    hull = lower_hull(np.array([0.3]), np.array([0.1]))
    assert hull.indices.tolist() == [0]
    assert len(hull.slopes) == 0
    with pytest.raises(ValueError):
        lower_hull(np.array([]), np.array([]))


def _estimate(points: np.ndarray, epsilon: float = 0.05) -> SplitCdfEstimate:
    return SplitCdfEstimate(
        phi_hat=np.zeros(1), eval_points=np.sort(points), epsilon=epsilon, warm_start=False, t=len(points) + 1
    )


def test_safe_grid_keeps_bids_inside_the_quantile_band() -> None:
    est = _estimate(np.linspace(0.01, 0.99, 50))
    safe, empty = build_safe_grid(est, 0.2, 20)
    assert not empty
    assert np.all(safe.f_hat >= 0.2 - 1e-12)
    assert np.all(safe.f_hat <= 0.8 + 1e-12)
    assert est.generalized_inverse(0.2) in safe.bids
    np.testing.assert_allclose(safe.q_dagger, np.minimum(1.0, safe.f_hat + 0.05))
    np.testing.assert_allclose(safe.c_dagger, safe.bids * safe.q_dagger)
    point = safe.point(0)
    assert point.b == safe.bids[0]
    assert len(safe.points()) == len(safe)


def test_safe_grid_falls_back_to_the_median() -> None:
    est = _estimate(np.array([2.0, 3.0]))
    safe, empty = build_safe_grid(est, 0.25, 10)
    assert empty
    assert safe.bids.tolist() == [1.0]


def test_safe_grid_rejects_out_of_range_thresholds() -> None:
    with pytest.raises(ValueError):
        build_safe_grid(_estimate(np.array([0.5])), 0.6, 10)
