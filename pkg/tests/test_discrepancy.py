import numpy as np
import pytest

from helpers import brute_force_threshold_gap, random_dataset, spearman
from multisource.data import Dataset
from multisource.discrepancy import (
    DiscrepancyEstimate,
    empirical_discrepancy,
    exact_discrepancy_oracle,
)

ONE_D_REFERENCE = Dataset([[0.0], [1.0]], [-1.0, 1.0])
ONE_D_SOURCE = Dataset([[0.0], [1.0]], [-1.0, -1.0])


def test_estimate_validation():
    DiscrepancyEstimate(value=0.25, solver_risk=0.75)
    with pytest.raises(ValueError):
        DiscrepancyEstimate(value=1.5, solver_risk=0.0)
    with pytest.raises(ValueError):
        DiscrepancyEstimate(value=0.3, solver_risk=0.3)


def test_self_discrepancy_is_exactly_zero():
    rng = np.random.default_rng(1)
    for _ in range(10):
        n = int(rng.integers(3, 40))
        d = int(rng.integers(1, 6))
        ds = random_dataset(rng, n, d)
        estimate = empirical_discrepancy(ds, ds)
        assert estimate.value == 0.0
        assert estimate.solver_risk == 1.0


def test_flipped_separable_reaches_one():
    # symmetric instance: the least-squares fit separates it exactly
    reference = Dataset([[-1.0], [-0.9], [0.9], [1.0]], [-1.0, -1.0, 1.0, 1.0])
    source = reference.with_arrays(labels=-reference.labels)
    estimate = empirical_discrepancy(source, reference)
    assert estimate.value == 1.0
    assert estimate.solver_risk == 0.0


def test_one_dimensional_instance_brute_force_agreement():
    # independent enumeration, then the library oracle, then the stated value
    brute = brute_force_threshold_gap(ONE_D_SOURCE, ONE_D_REFERENCE)
    assert brute == pytest.approx(0.5, abs=1e-15)
    oracle = exact_discrepancy_oracle(ONE_D_SOURCE, ONE_D_REFERENCE, "thresholds_1d")
    assert oracle == pytest.approx(0.5, abs=1e-12)


def test_oracle_identical_datasets():
    rng = np.random.default_rng(2)
    ds = random_dataset(rng, 15, 2)
    assert exact_discrepancy_oracle(ds, ds, "lines_2d") == 0.0
    one_d = random_dataset(rng, 15, 1)
    assert exact_discrepancy_oracle(one_d, one_d, "thresholds_1d") == 0.0


def test_oracle_matches_brute_force_on_random_1d():
    rng = np.random.default_rng(3)
    for _ in range(25):
        src = random_dataset(rng, int(rng.integers(2, 20)), 1, flip=float(rng.random()))
        ref = random_dataset(rng, int(rng.integers(2, 20)), 1)
        lib = exact_discrepancy_oracle(src, ref, "thresholds_1d")
        brute = brute_force_threshold_gap(src, ref)
        assert lib == pytest.approx(brute, abs=1e-12)


def test_oracle_symmetry_is_exact():
    rng = np.random.default_rng(4)
    for _ in range(10):
        a = random_dataset(rng, 12, 2)
        b = random_dataset(rng, 9, 2)
        assert exact_discrepancy_oracle(a, b, "lines_2d") == exact_discrepancy_oracle(
            b, a, "lines_2d"
        )


def test_oracle_range():
    rng = np.random.default_rng(5)
    for _ in range(10):
        a = random_dataset(rng, 10, 2, flip=0.5)
        b = random_dataset(rng, 10, 2)
        assert 0.0 <= exact_discrepancy_oracle(a, b, "lines_2d") <= 1.0


def test_relaxed_estimate_bounded_by_full_class_oracle():
    # the relaxed solver is one feasible classifier, so its estimated gap can
    # never exceed the exact supremum over the whole linear class
    rng = np.random.default_rng(6)
    for _ in range(50):
        src = random_dataset(rng, int(rng.integers(5, 16)), 2, flip=float(rng.random()))
        ref = random_dataset(rng, int(rng.integers(5, 16)), 2)
        relaxed = empirical_discrepancy(src, ref).value
        oracle = exact_discrepancy_oracle(src, ref, "lines_2d")
        assert relaxed <= oracle + 1e-12
        assert relaxed <= oracle + 0.15


def test_relaxed_estimate_tracks_oracle():
    rng = np.random.default_rng(7)
    relaxed, oracle = [], []
    for k in range(50):
        flip = k / 50.0
        src = random_dataset(rng, 14, 2, flip=flip)
        ref = random_dataset(rng, 14, 2)
        relaxed.append(empirical_discrepancy(src, ref).value)
        oracle.append(exact_discrepancy_oracle(src, ref, "lines_2d"))
    assert spearman(relaxed, oracle) > 0.0


def test_collinear_points_are_handled():
    # all points on one line: the oracle must still sweep along that line
    src = Dataset([[0.0, 0.0], [1.0, 1.0]], [-1.0, -1.0])
    ref = Dataset([[0.0, 0.0], [1.0, 1.0]], [-1.0, 1.0])
    assert exact_discrepancy_oracle(src, ref, "lines_2d") == pytest.approx(0.5, abs=1e-12)


def test_discrepancy_errors():
    a = Dataset([[1.0]], [1.0])
    b = Dataset([[1.0, 2.0]], [1.0])
    with pytest.raises(ValueError, match="feature"):
        empirical_discrepancy(a, b)
    empty = Dataset(np.empty((0, 1)), np.empty(0))
    with pytest.raises(ValueError, match="nonempty"):
        empirical_discrepancy(a, empty)
    with pytest.raises(ValueError, match="thresholds_1d"):
        exact_discrepancy_oracle(b, b, "thresholds_1d")
    with pytest.raises(ValueError, match="lines_2d"):
        exact_discrepancy_oracle(a, a, "lines_2d")
    with pytest.raises(ValueError, match="unknown hypothesis"):
        exact_discrepancy_oracle(a, a, "cubes_3d")
    rng = np.random.default_rng(8)
    big = random_dataset(rng, 150, 1)
    with pytest.raises(ValueError, match="limited"):
        exact_discrepancy_oracle(big, big, "thresholds_1d")


def test_unequal_sizes_are_weighted_not_resampled():
    # hand-checkable instance: source 1 point, reference 4 points
    src = Dataset([[2.0]], [-1.0])
    ref = Dataset([[-2.0], [-1.0], [1.0], [2.0]], [-1.0, -1.0, 1.0, 1.0])
    oracle = exact_discrepancy_oracle(src, ref, "thresholds_1d")
    # threshold at 0, positive side +1: reference risk 0, source risk 1
    assert oracle == pytest.approx(1.0, abs=1e-12)
    estimate = empirical_discrepancy(src, ref)
    assert 0.0 <= estimate.value <= 1.0
