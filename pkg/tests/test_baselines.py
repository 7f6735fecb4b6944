import math

import numpy as np
import pytest

from multisource.baselines import (
    MedianOfProbsEnsemble,
    NormalizationStats,
    aggregate_predictors,
    apply_normalization,
    componentwise_median,
    fit_normalization,
    geometric_median,
    huber_logistic_loss,
    median_of_probabilities,
    train_local_models,
)
from multisource.data import Dataset, SourcePool
from multisource.models import HUBER_C, LinearPredictor, TrainConfig, logistic_loss, train_erm


def _objective(z, pts):
    return float(np.linalg.norm(pts - z, axis=1).sum())


def test_geometric_median_identical_points():
    pts = np.tile([2.0, -3.0], (5, 1))
    assert np.array_equal(geometric_median(pts), [2.0, -3.0])


def test_geometric_median_is_1d_median():
    pts = np.array([[0.0], [0.0], [10.0]])
    assert abs(geometric_median(pts)[0]) <= 1e-6


def test_geometric_median_equilateral_triangle():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]])
    center = pts.mean(axis=0)
    assert np.max(np.abs(geometric_median(pts) - center)) <= 1e-6


def test_geometric_median_single_point():
    assert np.array_equal(geometric_median(np.array([[4.0, 5.0]])), [4.0, 5.0])


def test_geometric_median_optimality_spot_check():
    rng = np.random.default_rng(0)
    for _ in range(20):
        pts = rng.standard_normal((int(rng.integers(3, 12)), 2)) * 3
        z = geometric_median(pts)
        assert _objective(z, pts) <= _objective(pts.mean(axis=0), pts) + 1e-9
        for p in pts:
            assert _objective(z, pts) <= _objective(p, pts) + 1e-9


def test_geometric_median_matches_exact_median_on_odd_1d_sets():
    rng = np.random.default_rng(1)
    for _ in range(10):
        n = int(rng.integers(1, 8)) * 2 + 1  # odd count: unique minimizer
        pts = rng.standard_normal((n, 1)) * 5
        assert abs(geometric_median(pts)[0] - np.median(pts)) <= 1e-6


def test_geometric_median_empty():
    with pytest.raises(ValueError):
        geometric_median(np.empty((0, 2)))


def test_componentwise_median():
    pts = np.array([[0.0, 1.0], [1.0, 0.0], [5.0, 5.0]])
    assert np.array_equal(componentwise_median(pts), [1.0, 1.0])
    assert np.array_equal(componentwise_median(np.array([[3.0, 4.0]])), [3.0, 4.0])
    assert np.array_equal(componentwise_median(np.array([[0.0], [2.0]])), [1.0])


def _model_with_probability(p):
    # constant-score model: sigmoid(bias) = p everywhere
    return LinearPredictor(np.zeros(1), math.log(p / (1 - p)))


def test_median_of_probabilities():
    models = [_model_with_probability(p) for p in (0.2, 0.6, 0.9)]
    assert median_of_probabilities(models, np.zeros(1)) == 1.0
    models = [_model_with_probability(p) for p in (0.2, 0.4, 0.45)]
    assert median_of_probabilities(models, np.zeros(1)) == -1.0


def test_median_of_probabilities_tie_goes_positive():
    models = [_model_with_probability(0.4), _model_with_probability(0.6)]
    assert median_of_probabilities(models, np.zeros(1)) == 1.0


def test_median_of_probabilities_identical_models():
    rng = np.random.default_rng(2)
    model = LinearPredictor(rng.standard_normal(3), 0.1)
    x = rng.standard_normal(3)
    expected = model.predict_labels(x[None, :])[0]
    assert median_of_probabilities([model] * 5, x) == expected


def test_median_of_probabilities_odd_count_matches_median_model():
    rng = np.random.default_rng(3)
    models = [LinearPredictor(rng.standard_normal(2), float(rng.standard_normal()))
              for _ in range(7)]
    for _ in range(20):
        x = rng.standard_normal(2)
        probs = [float(m.probabilities(x)) for m in models]
        median_model = models[int(np.argsort(probs)[3])]
        assert median_of_probabilities(models, x) == median_model.predict_labels(x[None, :])[0]


def test_median_of_probs_ensemble_matches_pointwise():
    rng = np.random.default_rng(4)
    models = [LinearPredictor(rng.standard_normal(2), float(rng.standard_normal()))
              for _ in range(4)]
    X = rng.standard_normal((10, 2))
    ensemble = MedianOfProbsEnsemble(models)
    batch = ensemble.predict_labels(X)
    for i in range(10):
        assert batch[i] == median_of_probabilities(models, X[i])


def test_huber_logistic_first_branch():
    pred = LinearPredictor(np.zeros(2), 0.0)
    x = np.ones(2)
    assert huber_logistic_loss(pred, x, 1.0) == pytest.approx(math.log(2), abs=1e-15)


def test_huber_logistic_knot_continuity():
    # margin chosen so the plain logistic loss equals exactly c
    margin = -math.log(math.expm1(HUBER_C))
    pred = LinearPredictor(np.array([margin]), 0.0)
    x = np.array([1.0])
    ell = logistic_loss(pred, x, 1.0)
    assert ell == pytest.approx(HUBER_C, abs=1e-12)
    upper_branch = 2.0 * math.sqrt(HUBER_C * ell) - HUBER_C
    assert abs(upper_branch - ell) <= 1e-12


def test_huber_logistic_at_four_c():
    margin = -math.log(math.expm1(4 * HUBER_C))
    pred = LinearPredictor(np.array([margin]), 0.0)
    value = huber_logistic_loss(pred, np.array([1.0]), 1.0)
    assert value == pytest.approx(3 * HUBER_C, rel=1e-12)
    assert value == pytest.approx(5.427075, abs=1e-9)


def test_huber_never_exceeds_logistic():
    pred = LinearPredictor(np.array([1.0]), 0.0)
    for margin in np.linspace(-30, 30, 1000):
        x = np.array([margin])
        hub = huber_logistic_loss(pred, x, 1.0)
        log = logistic_loss(pred, x, 1.0)
        assert hub <= log + 1e-12
        if log <= HUBER_C:
            assert hub == log


def test_huber_requires_positive_c():
    with pytest.raises(ValueError):
        huber_logistic_loss(LinearPredictor(np.ones(1), 0.0), np.ones(1), 1.0, c=0.0)


def test_normalization_identity():
    rng = np.random.default_rng(5)
    ds = Dataset(rng.standard_normal((40, 3)) * 4 + 2, np.where(rng.random(40) < 0.5, 1.0, -1.0))
    out = apply_normalization(ds, fit_normalization(ds))
    assert np.max(np.abs(out.features.mean(axis=0))) <= 1e-10
    assert np.max(np.abs(out.features.std(axis=0) - 1.0)) <= 1e-10
    assert np.array_equal(out.labels, ds.labels)


def test_normalization_degenerate_column():
    ds = Dataset(np.column_stack([np.full(5, 7.0), np.arange(5.0)]),
                 np.ones(5))
    out = apply_normalization(ds, fit_normalization(ds))
    assert np.array_equal(out.features[:, 0], np.zeros(5))


def test_normalization_is_affine():
    # for fixed stats, T(a x + c) = a T(x) + ((a - 1) mean + c) / std
    rng = np.random.default_rng(6)
    ds = Dataset(rng.standard_normal((20, 2)), np.ones(20))
    stats = fit_normalization(ds)
    a, c = 3.0, -1.5
    scaled = Dataset(a * ds.features + c, ds.labels)
    out_scaled = apply_normalization(scaled, stats).features
    out_plain = apply_normalization(ds, stats).features
    shift = ((a - 1.0) * stats.mean + c) / stats.std
    assert np.max(np.abs(out_scaled - (a * out_plain + shift))) <= 1e-9


def test_normalization_stats_validation():
    with pytest.raises(ValueError):
        NormalizationStats(np.zeros(2), np.array([-1.0, 1.0]))
    empty = Dataset(np.empty((0, 2)), np.empty(0))
    with pytest.raises(ValueError):
        fit_normalization(empty)


def test_train_local_models_identical_sources():
    rng = np.random.default_rng(7)
    ds = Dataset(rng.standard_normal((30, 2)), np.where(rng.random(30) < 0.5, 1.0, -1.0))
    pool = SourcePool((ds, ds, ds), ds)
    cfg = TrainConfig(ridge_strength=1e-2)
    models = train_local_models(pool, cfg)
    for m in models[1:]:
        assert np.max(np.abs(m.weights - models[0].weights)) <= 1e-8
    single = train_erm(ds, "logistic", cfg)
    assert np.max(np.abs(models[0].weights - single.weights)) <= 1e-12


def test_train_local_models_permutation_equivariant():
    rng = np.random.default_rng(8)
    sets = [Dataset(rng.standard_normal((20, 2)), np.where(rng.random(20) < 0.5, 1.0, -1.0))
            for _ in range(3)]
    cfg = TrainConfig(ridge_strength=1e-2)
    forward = train_local_models(SourcePool(tuple(sets), sets[0]), cfg)
    backward = train_local_models(SourcePool(tuple(sets[::-1]), sets[0]), cfg)
    for a, b in zip(forward, backward[::-1]):
        assert np.array_equal(a.weights, b.weights) and a.bias == b.bias


def test_aggregate_predictors():
    models = [LinearPredictor(np.array([0.0, 1.0]), 5.0),
              LinearPredictor(np.array([1.0, 0.0]), 1.0),
              LinearPredictor(np.array([5.0, 5.0]), 0.0)]
    agg = aggregate_predictors(models, "componentwise_median")
    assert np.array_equal(agg.weights, [1.0, 1.0])
    assert agg.bias == 1.0
    same = aggregate_predictors([models[0]] * 3, "geometric_median")
    assert np.allclose(same.weights, models[0].weights, atol=1e-12)
