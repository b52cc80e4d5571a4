import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from fairhealth.errors import CorruptUpdateError, InvalidConfigError, InvalidInputError
from fairhealth.privacy import (
    PrivacyBudget,
    SparseUpdate,
    add_gaussian_noise,
    clip_weights,
    comm_cost,
    densify,
    dp_fedavg_aggregate,
    gaussian_sigma,
    keep_count,
    sparsify,
    standard_normal,
)

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)
vectors = arrays(np.float64, st.integers(1, 60), elements=finite)


def test_sigma_matches_closed_form():
    assert gaussian_sigma(1.0, 1.0, 1e-5) == pytest.approx(4.844805262605389, rel=1e-15)
    for c, e, d in [(0.5, 0.3, 1e-6), (2.0, 1.0, 1e-3)]:
        assert gaussian_sigma(c, e, d) == pytest.approx(oracles.gaussian_sigma(c, e, d), rel=1e-14)
    assert gaussian_sigma(1.0, math.inf) == 0.0


def test_sigma_warns_above_one():
    with pytest.warns(UserWarning):
        gaussian_sigma(1.0, 2.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        gaussian_sigma(1.0, 1.0)


def test_noise_statistics():
    draws = add_gaussian_noise(np.zeros(100_000), 1.0, 1e-5, 1.0, seed=3)
    sigma = oracles.gaussian_sigma(1.0, 1.0, 1e-5)
    assert abs(draws.std() / sigma - 1.0) < 0.05
    assert abs(draws.mean()) < 5 * sigma / math.sqrt(draws.size)


def test_standard_normal_moments_and_determinism():
    z = standard_normal(11, 200_001)
    assert z.shape == (200_001,)
    assert abs(z.mean()) < 0.01 and abs(z.var() - 1.0) < 0.01
    assert np.array_equal(standard_normal(11, 10), standard_normal(11, 10))
    assert not np.array_equal(standard_normal(11, 10), standard_normal(12, 10))


def test_infinite_epsilon_is_identity():
    w = np.array([0.1, -2.5, 3.0e-300, 7.0])
    out = add_gaussian_noise(w, epsilon=math.inf)
    assert out.tobytes() == w.tobytes()
    assert out is not w


@settings(max_examples=200, deadline=None)
@given(vectors, st.floats(0.01, 100.0))
def test_clip_properties(w, c):
    out = clip_weights(w, c)
    assert np.linalg.norm(out) <= c
    assert np.array_equal(clip_weights(out, c), out)
    if np.linalg.norm(w) <= c:
        assert np.array_equal(out, w)
    else:
        # direction is preserved
        assert np.allclose(out * np.linalg.norm(w), w * np.linalg.norm(out), rtol=1e-9, atol=1e-300)


def test_keep_count_snap():
    assert keep_count(1000, 0.975) == 25
    assert keep_count(1000, 0.9) == 100
    assert keep_count(10, 0.95) == 1
    assert keep_count(7, 0.5) == 4
    assert keep_count(5, 0.0) == 5
    for bad in (-0.1, 1.0):
        with pytest.raises(InvalidConfigError):
            keep_count(10, bad)


def test_sparsify_reference_case():
    rng = np.random.default_rng(0)
    w = rng.standard_normal(1000)
    update, rate = sparsify(w, 0.975)
    assert update.indices.size == 25
    assert rate == 0.975
    top = set(np.argsort(-np.abs(w))[:25].tolist())
    assert set(update.indices.tolist()) == top
    assert np.array_equal(update.values, w[update.indices])


def test_sparsify_tie_break_prefers_lower_index():
    update, _ = sparsify([1.0, -1.0, 1.0, 0.5], 0.5)
    assert update.indices.tolist() == [0, 1]


@settings(max_examples=200, deadline=None)
@given(vectors, st.floats(0.0, 0.99))
def test_sparsify_densify_round_trip(w, s):
    update, rate = sparsify(w, s)
    dense = densify(update)
    k = keep_count(w.size, s)
    assert update.indices.size == k
    assert rate == (w.size - k) / w.size
    assert np.array_equal(dense[update.indices], w[update.indices])
    dropped = np.setdiff1d(np.arange(w.size), update.indices)
    assert np.all(dense[dropped] == 0)
    if dropped.size:
        assert np.abs(w[dropped]).max() <= np.abs(w[update.indices]).min()


def test_zero_sparsity_is_lossless():
    w = np.array([3.0, 0.0, -1.0])
    assert np.array_equal(densify(sparsify(w, 0.0)[0]), w)


def test_comm_cost():
    c = comm_cost(1000, 0.975)
    assert c == (4000, 100, 0.975)
    assert c.reduction == 0.975
    idx = comm_cost(1000, 0.975, mode="value_plus_index")
    assert idx.sparse_bytes == 200 and idx.reduction == 0.95
    with pytest.raises(InvalidConfigError):
        comm_cost(10, 0.5, mode="bits")


def test_corrupt_updates():
    with pytest.raises(CorruptUpdateError):
        SparseUpdate(np.array([0, 5]), np.array([1.0, 2.0]), 5)
    with pytest.raises(CorruptUpdateError):
        SparseUpdate(np.array([2, 1]), np.array([1.0, 2.0]), 5)
    with pytest.raises(CorruptUpdateError):
        SparseUpdate(np.array([1]), np.array([1.0, 2.0]), 5)


def test_aggregate_without_noise_is_mean_of_clipped():
    ups = [np.array([3.0, 4.0]), np.array([0.3, 0.4]), np.array([0.0, -2.0])]
    out = dp_fedavg_aggregate(ups, clip_norm=1.0, epsilon=math.inf)
    expected = (np.array([0.6, 0.8]) + np.array([0.3, 0.4]) + np.array([0.0, -1.0])) / 3
    assert np.allclose(out, expected, atol=1e-15)


def test_aggregate_noise_scale_uses_mean_sensitivity():
    m = 4
    ups = [np.zeros(50_000)] * m
    out = dp_fedavg_aggregate(ups, clip_norm=1.0, epsilon=1.0, seed=5)
    expected = oracles.gaussian_sigma(1.0 / m, 1.0, 1e-5)
    assert abs(out.std() / expected - 1.0) < 0.02
    again = dp_fedavg_aggregate(ups, clip_norm=1.0, epsilon=1.0, seed=5)
    assert np.array_equal(out, again)


def test_budget_and_input_validation():
    assert PrivacyBudget().disabled
    for eps in (0.0, -1.0, math.nan):
        with pytest.raises(InvalidConfigError):
            PrivacyBudget(eps)
    with pytest.raises(InvalidConfigError):
        PrivacyBudget(1.0, 1.0)
    with pytest.raises(InvalidConfigError):
        clip_weights([1.0], 0.0)
    with pytest.raises(InvalidInputError):
        clip_weights([1.0, math.nan])
    with pytest.raises(InvalidInputError):
        dp_fedavg_aggregate([[1.0], [1.0, 2.0]])
    with pytest.raises(InvalidInputError):
        dp_fedavg_aggregate([])
