from __future__ import annotations

import math

import numpy as np
import pytest

from ltebid.env import build_preset, sample_round, true_win_prob
from ltebid.learning.cdf import (
    AuctionHistory,
    SplitCdfEstimate,
    estimate_cdf,
    random_split,
    ridge_floor,
    spectral_split_check,
    warm_start_rounds,
)
from ltebid.utils import round_rng


def _estimate(points: list[float]) -> SplitCdfEstimate:
    return SplitCdfEstimate(
        phi_hat=np.zeros(2),
        eval_points=np.sort(np.asarray(points)),
        epsilon=0.1,
        warm_start=False,
        t=len(points) + 1,
    )


def _history(rounds: int, seed: int = 0) -> AuctionHistory:
    spec = build_preset("default", horizon=rounds)
    history = AuctionHistory(spec.dimension, ridge_floor(spec.dimension, rounds))
    for t in range(1, rounds + 1):
        sample = sample_round(spec, round_rng(seed, t))
        history.append(sample.x, sample.m)
    return history


def test_ridge_floor_and_warm_start_constants() -> None:
    assert ridge_floor(3, 1000) == pytest.approx(16.0 * math.log(3000))
    assert ridge_floor(3, 1000, uniform=True) == pytest.approx(16.0 * math.log(3_000_000))
    assert warm_start_rounds(1000) == math.ceil(8.0 * math.log(1000)) + 1


def test_warm_start_estimate_is_the_identity() -> None:
    history = AuctionHistory(3, ridge_floor(3, 1000))
    est = estimate_cdf(history, np.ones(3) / math.sqrt(3), history.ridge, 1000, 0.5, np.random.default_rng(0))
    assert est.warm_start
    assert est.epsilon == 1.0
    assert est.eval(0.3) == pytest.approx(0.3)
    assert est.generalized_inverse(0.7) == pytest.approx(0.7)
    assert est.jump == 0.0


def test_ridge_below_floor_is_rejected() -> None:
    history = AuctionHistory(3, 1.0)
    with pytest.raises(ValueError):
        estimate_cdf(history, np.ones(3) / 2.0, 1.0, 1000, 0.5, np.random.default_rng(0))


def test_step_cdf_and_generalized_inverse() -> None:
    est = _estimate([0.4, 0.1, 0.3, 0.2])
    assert est.eval(0.2) == pytest.approx(0.5)
    assert est.eval(0.05) == 0.0
    assert est.generalized_inverse(0.5) == pytest.approx(0.2)
    assert est.generalized_inverse(0.51) == pytest.approx(0.3)
    assert est.generalized_inverse(0.0) == 0.0
    assert est.jump == pytest.approx(0.25)
    for u in (0.1, 0.25, 0.6, 1.0):
        assert est.eval(est.generalized_inverse(u)) >= u - 1e-12


def test_generalized_inverse_overshoots_by_at_most_one_step() -> None:
    est = _estimate(np.random.default_rng(4).uniform(0.0, 1.0, 37).tolist())
    for u in np.linspace(0.001, 1.0, 400):
        value = est.eval(est.generalized_inverse(float(u)))
        assert u - 1e-12 <= value <= u + est.jump + 1e-12


def test_inverse_beyond_the_unit_interval_is_flagged() -> None:
    est = _estimate([0.2, 0.5, 1.5])
    assert est.generalized_inverse(1.0) == 1.0
    assert not est.inverse_attainable(1.0)
    assert est.inverse_attainable(0.5)


def test_extend_matches_row_by_row_append() -> None:
    rng = np.random.default_rng(3)
    contexts = rng.random((300, 3))
    bids = rng.random(300)
    one, bulk = AuctionHistory(3, 2.0, capacity=4), AuctionHistory(3, 2.0, capacity=4)
    for x, m in zip(contexts, bids, strict=True):
        one.append(x, m)
    bulk.extend(contexts[:100], bids[:100])
    bulk.extend(contexts[100:], bids[100:])
    assert len(bulk) == 300
    np.testing.assert_allclose(bulk.gram, one.gram)
    np.testing.assert_allclose(bulk.gram, bulk.recomputed_gram())
    np.testing.assert_array_equal(bulk.competing_bids, one.competing_bids)


def test_random_split_partitions_indices() -> None:
    train, evaluation = random_split(101, np.random.default_rng(9))
    assert sorted(np.concatenate([train, evaluation]).tolist()) == list(range(101))


def test_spectral_check_holds_for_the_full_history() -> None:
    history = _history(300)
    assert spectral_split_check(history, np.arange(300), history.ridge)


def test_random_splits_keep_the_spectral_event() -> None:
    history = _history(1000, seed=2)
    rng = np.random.default_rng(5)
    passes = 0
    for _ in range(300):
        train, _ = random_split(len(history), rng)
        passes += spectral_split_check(history, train, history.ridge)
    assert passes / 300 >= 0.99


def test_split_estimate_tracks_the_true_cdf() -> None:
    history = _history(2000)
    spec = build_preset("default", horizon=2000)
    x = np.array([0.6, 0.0, 0.8])
    est = estimate_cdf(history, x, history.ridge, 2000, 0.5, np.random.default_rng(1))
    assert not est.warm_start
    assert 0 < est.size < 2000
    bids = np.linspace(0.0, 1.0, 101)
    error = np.abs(np.asarray(est.eval(bids)) - np.asarray(true_win_prob(spec, x, bids)))
    assert float(error.max()) < 0.15
    assert 0.0 < est.epsilon <= 1.0


def test_estimate_consumes_the_split_stream_during_warm_start() -> None:
    history = _history(10)
    first, second = np.random.default_rng(4), np.random.default_rng(4)
    estimate_cdf(history, np.ones(3) / 2.0, history.ridge, 10, 0.5, first)
    random_split(len(history), second)
    assert first.random() == second.random()
