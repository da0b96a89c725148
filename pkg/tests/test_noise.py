"""Stable-increment sampler tests: characteristic-function oracles, Gaussian
normalization, self-similarity, isotropy, and stream determinism."""

import numpy as np
import pytest

from kinchaos.noise import (
    NoiseSpec,
    StreamKey,
    empirical_chf,
    sample_increment,
    sample_increments,
    stable_chf,
)

CHF_PAIRS = [
    (0.25, (0.5,)), (0.25, (2.0,)), (0.5, (1.0,)), (1.0, (0.7,)),
    (1.0, (1.5,)), (2.0, (0.4,)),
]


@pytest.mark.parametrize("alpha", [1.3, 1.5, 1.8, 2.0])
def test_chf_matches_exact_1d(alpha):
    spec = NoiseSpec(alpha, 1)
    for i, (t, xi) in enumerate(CHF_PAIRS):
        est, se_re, _ = empirical_chf(spec, t, np.array(xi), 200_000, seed=i)
        exact = stable_chf(alpha, t, np.array(xi))
        assert abs(est.real - exact) <= max(4.0 * se_re, 0.01)
        assert abs(est.imag) <= 0.01  # symmetric law: purely real chf


def test_chf_isotropy_2d():
    spec = NoiseSpec(1.5, 2)
    xi1 = np.array([1.0, 0.0])
    xi2 = np.array([1.0, 1.0]) / np.sqrt(2.0)
    e1, _, _ = empirical_chf(spec, 0.5, xi1, 200_000, seed=3)
    e2, _, _ = empirical_chf(spec, 0.5, xi2, 200_000, seed=4)
    exact = stable_chf(1.5, 0.5, xi1)
    assert abs(e1.real - exact) < 0.01
    assert abs(e2.real - exact) < 0.01


def test_gaussian_variance_is_2t():
    spec = NoiseSpec(2.0, 1)
    for t in (0.25, 1.0):
        draws = sample_increments(spec, t, 0, 0, 200_000, seed=0)
        var = draws.var()
        se = var * np.sqrt(2.0 / (draws.size - 1))
        assert abs(var - 2.0 * t) < 4.0 * se


def test_self_similarity_in_law():
    # L_{ct} has the same law as c^{1/alpha} L_t: compare empirical quantiles.
    alpha, c = 1.5, 4.0
    spec = NoiseSpec(alpha, 1)
    a = sample_increments(spec, c * 0.25, 0, 0, 100_000, seed=1)[:, 0]
    b = c ** (1.0 / alpha) * sample_increments(spec, 0.25, 0, 1, 100_000, seed=1)[:, 0]
    qs = np.linspace(0.05, 0.95, 19)
    qa, qb = np.quantile(a, qs), np.quantile(b, qs)
    assert np.allclose(qa, qb, rtol=0.05, atol=0.02)


def test_row_stability_across_batch_size():
    spec = NoiseSpec(1.7, 1)
    small = sample_increments(spec, 0.1, 2, 5, 64, seed=9)
    large = sample_increments(spec, 0.1, 2, 5, 4096, seed=9)
    assert np.array_equal(small, large[:64])


def test_determinism_and_key_separation():
    spec = NoiseSpec(2.0, 2)
    a = sample_increments(spec, 0.1, 1, 3, 16, seed=7)
    b = sample_increments(spec, 0.1, 1, 3, 16, seed=7)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, sample_increments(spec, 0.1, 1, 4, 16, seed=7))
    assert not np.array_equal(a, sample_increments(spec, 0.1, 2, 3, 16, seed=7))
    assert not np.array_equal(a, sample_increments(spec, 0.1, 1, 3, 16, seed=8))


def test_single_particle_matches_batch_row():
    spec = NoiseSpec(1.5, 1)
    batch = sample_increments(spec, 0.2, 0, 2, 10, seed=5)
    one = sample_increment(spec, 0.2, StreamKey(replica=0, particle=7, step=2), seed=5)
    assert np.array_equal(one, batch[7])


def test_zero_dt_returns_zeros():
    spec = NoiseSpec(1.5, 3)
    assert not sample_increments(spec, 0.0, 0, 0, 5, seed=0).any()


def test_invalid_spec_rejected():
    with pytest.raises(ValueError):
        NoiseSpec(1.0, 1)
    with pytest.raises(ValueError):
        NoiseSpec(2.1, 1)
    with pytest.raises(ValueError):
        NoiseSpec(2.0, 0)
    with pytest.raises(ValueError):
        sample_increments(NoiseSpec(2.0, 1), -0.1, 0, 0, 1, seed=0)


def test_heavy_tails_below_two():
    # alpha < 2 has infinite variance: extreme draws must dwarf the Gaussian's.
    g = sample_increments(NoiseSpec(2.0, 1), 1.0, 0, 0, 100_000, seed=2)
    s = sample_increments(NoiseSpec(1.3, 1), 1.0, 0, 0, 100_000, seed=2)
    assert np.abs(s).max() > 10.0 * np.abs(g).max()
