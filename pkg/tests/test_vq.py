import math

import numpy as np
import pytest

from rotquant.core import RotationSpec, apply_rotation, fwht, layer_signs
from rotquant.metrics import conditional_cov_exact
from rotquant.rng import Xoshiro256pp, derive_seeds
from rotquant.vq import (
    Codebook,
    VqReport,
    conditional_cov_trials,
    rms_conditional_cov,
    stein_diagnostic_constant,
    train_gaussian_codebook,
    verify_codebook_universality,
    vq_decode,
    vq_encode,
)
from _oracles import STEIN_A4

RNG = np.random.default_rng(11)


def two_spike(d):
    x = np.zeros(d)
    x[0] = x[1] = 1.0 / math.sqrt(2.0)
    return x


# --- smoothness diagnostic ----------------------------------------------------

def test_stein_constant_values():
    assert stein_diagnostic_constant(1) == 49.4
    assert math.isclose(stein_diagnostic_constant(4), STEIN_A4, rel_tol=1e-12)


def test_stein_constant_monotone():
    vals = [stein_diagnostic_constant(k) for k in range(1, 65)]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    with pytest.raises(ValueError):
        stein_diagnostic_constant(0)


# --- codebook container -------------------------------------------------------

def test_codebook_validation():
    c = RNG.standard_normal((8, 4))
    cb = Codebook.from_centroids(c, train_seed=3)
    assert cb.n_centroids == 8
    assert not cb.centroids.flags.writeable
    with pytest.raises(ValueError):
        Codebook(block_dim=4, centroids=c, train_seed=3, radius=cb.radius + 1.0)
    with pytest.raises(ValueError):
        Codebook(block_dim=5, centroids=c, train_seed=3, radius=cb.radius)
    bad = c.copy()
    bad[0, 0] = np.nan
    with pytest.raises(ValueError):
        Codebook.from_centroids(bad, train_seed=3)


def test_report_validation():
    VqReport(d=8, err_rht=1.0, err_gauss=0.75, gap=0.25, gap_se=0.01,
             rms_cov=0.1, stein_bound=58.0, trials=10)
    with pytest.raises(ValueError):
        VqReport(d=8, err_rht=1.0, err_gauss=0.75, gap=0.3, gap_se=0.01,
                 rms_cov=0.1, stein_bound=58.0, trials=10)
    with pytest.raises(ValueError):
        VqReport(d=8, err_rht=-1.0, err_gauss=0.75, gap=1.75, gap_se=0.01,
                 rms_cov=0.1, stein_bound=58.0, trials=10)


# --- training -----------------------------------------------------------------

def test_training_is_deterministic():
    a = train_gaussian_codebook(4, 8, train_seed=99, n_samples=2000)
    b = train_gaussian_codebook(4, 8, train_seed=99, n_samples=2000)
    assert np.array_equal(a.centroids, b.centroids)
    assert a.radius == b.radius
    c = train_gaussian_codebook(4, 8, train_seed=100, n_samples=2000)
    assert not np.array_equal(a.centroids, c.centroids)


def test_training_validation():
    with pytest.raises(ValueError):
        train_gaussian_codebook(0, 4, train_seed=0)
    with pytest.raises(ValueError):
        train_gaussian_codebook(4, 0, train_seed=0)
    with pytest.raises(ValueError):
        train_gaussian_codebook(4, 100, train_seed=0, n_samples=500)


def test_single_centroid_is_near_zero_mean():
    # one Lloyd cluster converges to the sample mean, which for a million
    # standard-normal blocks is within a few sqrt(k/n) of the origin
    n = 1_000_000
    cb = train_gaussian_codebook(4, 1, train_seed=5, n_samples=n)
    assert cb.n_centroids == 1
    assert np.linalg.norm(cb.centroids[0]) <= 4.0 * math.sqrt(4.0 / n)


def test_two_centroids_match_folded_mean():
    # scalar 2-means on a standard normal sits at +-E|Z| = +-sqrt(2/pi)
    cb = train_gaussian_codebook(1, 2, train_seed=17)
    vals = np.sort(cb.centroids[:, 0])
    want = math.sqrt(2.0 / math.pi)
    assert abs(-vals[0] - want) <= 0.01
    assert abs(vals[1] - want) <= 0.01


def test_block_sampler_second_moment():
    samples = Xoshiro256pp(derive_seeds(31, 0, 20000)).gaussians(4)
    sq = np.einsum("ij,ij->i", samples, samples)
    se = sq.std(ddof=1) / math.sqrt(sq.size)
    assert abs(sq.mean() - 4.0) <= 5.0 * se


# --- encode / decode ----------------------------------------------------------

def test_nearest_ties_break_to_lowest_index():
    from rotquant.vq import _nearest_sq_dist

    row = np.array([0.5, 0.3])
    cents = np.array([[0.0, 0.0], [1.0, 0.0], row, [2.0, 2.0], [3.0, 3.0], row])
    cb = Codebook.from_centroids(cents, train_seed=0)
    dist, j = _nearest_sq_dist(row[None, :], cb.centroids)
    assert j[0] == 2
    assert dist[0] == 0.0


def test_codebook_of_realized_blocks_gives_zero_error():
    d, k = 32, 4
    x = RNG.standard_normal(d)
    spec = RotationSpec(dim=d, layers=3, seed=77)
    y = apply_rotation(x, spec)
    scale = float(np.linalg.norm(y)) / math.sqrt(d)
    blocks = (y / scale).reshape(-1, k)
    cb = Codebook.from_centroids(blocks, train_seed=0)
    idx, s = vq_encode(x, spec, cb)
    assert idx.tolist() == list(range(d // k))
    back = vq_decode(idx, s, spec, cb)
    assert np.max(np.abs(back - x)) <= 1e-9


def test_zero_centroid_decodes_to_zero():
    cb = Codebook.from_centroids(np.zeros((1, 4)), train_seed=0)
    out = vq_decode(np.zeros(8, dtype=np.uint32), 3.7,
                    RotationSpec(dim=32, layers=2, seed=4), cb)
    assert np.array_equal(out, np.zeros(32))


def test_indices_are_scale_invariant():
    d = 64
    x = RNG.standard_normal(d)
    spec = RotationSpec(dim=d, layers=3, seed=8)
    cb = train_gaussian_codebook(4, 16, train_seed=2024, n_samples=4000)
    i1, s1 = vq_encode(x, spec, cb)
    i2, s2 = vq_encode(1e3 * x, spec, cb)
    assert np.array_equal(i1, i2)
    assert math.isclose(s2, 1e3 * s1, rel_tol=1e-12)
    r1 = vq_decode(i1, s1, spec, cb)
    r2 = vq_decode(i2, s2, spec, cb)
    v1 = np.sum((r1 - x) ** 2) / np.sum(x**2)
    v2 = np.sum((r2 - 1e3 * x) ** 2) / np.sum((1e3 * x) ** 2)
    assert math.isclose(v1, v2, rel_tol=1e-9)


def test_reconstruction_error_decomposes_over_blocks():
    # the rotation is orthogonal, so |xhat - x|^2 = scale^2 sum_blk |U_blk - c|^2
    d, k = 128, 4
    x = RNG.standard_normal(d)
    spec = RotationSpec(dim=d, layers=2, seed=21)
    cb = train_gaussian_codebook(k, 16, train_seed=2024, n_samples=4000)
    idx, scale = vq_encode(x, spec, cb)
    u = apply_rotation(x, spec) / scale
    block_err = np.sum((u.reshape(-1, k) - cb.centroids[idx.astype(np.int64)]) ** 2)
    lhs = float(np.sum((vq_decode(idx, scale, spec, cb) - x) ** 2))
    assert math.isclose(lhs, scale**2 * block_err, rel_tol=1e-9)


def test_decode_validation():
    cb = train_gaussian_codebook(4, 8, train_seed=1, n_samples=2000)
    spec = RotationSpec(dim=32, layers=2, seed=0)
    with pytest.raises(ValueError):
        vq_decode(np.zeros(7, dtype=np.uint32), 1.0, spec, cb)
    with pytest.raises(ValueError):
        vq_decode(np.full(8, 8, dtype=np.uint32), 1.0, spec, cb)
    with pytest.raises(ValueError):
        vq_encode(np.ones(32), RotationSpec(dim=32, layers=2, seed=0),
                  train_gaussian_codebook(3, 4, train_seed=1, n_samples=1000))


# --- final-layer conditional covariance ---------------------------------------

def test_pair_covariance_two_spike_is_two_valued():
    d = 64
    covs, linf = conditional_cov_trials(two_spike(d), 0, 1, layers=2, trials=64)
    assert np.all(np.abs(np.abs(covs) - 1.0) <= 5e-16)
    assert (covs > 0).any() and (covs < 0).any()
    # with 2 layers the pre-final vector is the input itself
    assert np.allclose(linf, 0.5, atol=1e-15)


def test_pair_covariance_matches_exact_formula():
    d = 32
    x = RNG.standard_normal(d)
    xu = x / np.linalg.norm(x)
    seeds = derive_seeds(0, 0, 8)
    covs2, _ = conditional_cov_trials(x, 3, 9, layers=2, trials=8)
    covs3, linf3 = conditional_cov_trials(x, 3, 9, layers=3, trials=8)
    for t in range(8):
        w_in = layer_signs(seeds[t : t + 1], 1, d)[0] * xu
        assert abs(covs2[t] - conditional_cov_exact(xu, layer_signs(seeds[t : t + 1], 1, d)[0], 3, 9)) <= 1e-12
        a = fwht(w_in, normalize=True)
        assert abs(covs3[t] - conditional_cov_exact(a, layer_signs(seeds[t : t + 1], 2, d)[0], 3, 9)) <= 1e-12
        assert abs(linf3[t] - np.max(np.abs(a)) ** 2) <= 1e-15


def test_flat_input_covariance_second_moment():
    # for the flat vector every pair has E[C^2] = 2/d over the sign plane
    d, trials = 64, 3000
    covs, _ = conditional_cov_trials(np.full(d, 1.0), 0, 5, layers=2, trials=trials)
    sq = covs * covs
    se = sq.std(ddof=1) / math.sqrt(trials)
    assert abs(sq.mean() - 2.0 / d) <= 5.0 * se + 1e-12


def test_rms_covariance_validation():
    x = two_spike(16)
    with pytest.raises(ValueError):
        rms_conditional_cov(x, 0, 1, layers=2, trials=50)
    with pytest.raises(ValueError):
        conditional_cov_trials(x, 0, 0, layers=2, trials=100)
    with pytest.raises(ValueError):
        conditional_cov_trials(x, 0, 1, layers=1, trials=100)
    with pytest.raises(ValueError):
        conditional_cov_trials(x, 0, 16, layers=2, trials=100)


# --- universality check -------------------------------------------------------

def test_universality_reports_shape_and_fields():
    cb = train_gaussian_codebook(4, 16, train_seed=2024, n_samples=4000)
    reports = verify_codebook_universality(two_spike(16), cb, dims=(16, 32),
                                           trials=400, gauss_trials=2000,
                                           cov_trials=100)
    assert [r.d for r in reports] == [16, 32]
    for r in reports:
        assert r.gap == abs(r.err_rht - r.err_gauss)
        assert r.err_gauss == reports[0].err_gauss  # shared Gaussian baseline
        assert r.stein_bound == stein_diagnostic_constant(4)
        assert r.layers == 3
        assert r.trials == 400
        assert set(r.extra) == {"rht_se", "gauss_se"}
        assert 0.0 < r.err_rht < 4.0


def test_universality_validation():
    cb = train_gaussian_codebook(4, 8, train_seed=1, n_samples=2000)
    with pytest.raises(ValueError):
        verify_codebook_universality(np.zeros(16), cb, dims=(16,), trials=100)
    with pytest.raises(ValueError):
        verify_codebook_universality(two_spike(16), cb, dims=(20,), trials=100)
    with pytest.raises(ValueError):
        verify_codebook_universality(two_spike(32), cb, dims=(16,), trials=100)
