import math

import numpy as np
import pytest

from rotquant.metrics import (
    BERRY_ESSEEN_C,
    CUBE_RATIO_C,
    KOLMOGOROV_2LAYER_C,
    OUTLIER_2LAYER_C,
    W1_TRANSPORT_C,
    EmpiricalSample,
    conditional_cov_exact,
    empirical_block_cov,
    empirical_kolmogorov,
    empirical_w1,
    linf_sq,
    moment_scan,
    normal_cdf,
    normal_quantile,
    rho3,
)
from _oracles import NORMAL_CDF_ORACLE, QUANTILE_995

RNG = np.random.default_rng(1717)


def test_constants():
    assert CUBE_RATIO_C == 3.0**0.75
    assert BERRY_ESSEEN_C == 0.5606
    assert KOLMOGOROV_2LAYER_C == 1.28
    assert W1_TRANSPORT_C == 3.0
    assert OUTLIER_2LAYER_C == 2.56


# --- moment scan ----------------------------------------------------------

def test_moment_scan_direct_arithmetic():
    s = moment_scan(np.array([3.0, 4.0, 0.0, 0.0]))
    assert (s.sum_sq, s.sum_abs_cubed, s.max_sq, s.count) == (25.0, 91.0, 16.0, 4)


def test_moment_scan_one_hot():
    e0 = np.zeros(8)
    e0[0] = 1.0
    s = moment_scan(e0)
    assert (s.sum_sq, s.sum_abs_cubed, s.max_sq) == (1.0, 1.0, 1.0)


def test_moment_scan_flat_pm_half():
    x = np.array([0.5, -0.5, 0.5, -0.5])
    s = moment_scan(x)
    assert (s.sum_sq, s.sum_abs_cubed, s.max_sq) == (1.0, 0.5, 0.25)
    assert rho3(x) == 0.5


def test_moment_scan_stream_single_pass():
    seen = []

    def gen():
        for v in (3.0, 4.0, 0.0, 0.0):
            seen.append(v)
            yield v

    s = moment_scan(gen())
    assert (s.sum_sq, s.sum_abs_cubed, s.max_sq, s.count) == (25.0, 91.0, 16.0, 4)
    assert len(seen) == 4  # consumed exactly once, no second pass possible


def test_moment_scan_rejects_bad_input():
    with pytest.raises(ValueError):
        moment_scan(np.array([]))
    with pytest.raises(ValueError):
        moment_scan(np.array([1.0, np.nan]))


def test_rho3_linf_examples():
    e0 = np.zeros(16)
    e0[0] = 1.0
    assert rho3(e0) == 1.0
    assert linf_sq(e0) == 1.0
    d = 64
    flat = np.full(d, 1.0 / math.sqrt(d))
    assert abs(rho3(flat) - 1.0 / math.sqrt(d)) <= 1e-15
    assert abs(linf_sq(flat) - 1.0 / d) <= 1e-18
    two = np.zeros(4)
    two[0] = two[1] = 1.0 / math.sqrt(2.0)
    assert abs(rho3(two) - 1.0 / math.sqrt(2.0)) <= 1e-15
    assert abs(linf_sq(two) - 0.5) <= 1e-15


def test_rho3_scale_invariant():
    x = RNG.standard_normal(33)
    assert abs(rho3(x) - rho3(137.0 * x)) <= 1e-13
    assert abs(linf_sq(x) - linf_sq(0.01 * x)) <= 1e-15
    with pytest.raises(ValueError):
        rho3(np.zeros(4))


# --- normal distribution helpers -------------------------------------------

def test_normal_cdf_oracle():
    for t, want in NORMAL_CDF_ORACLE:
        assert abs(float(normal_cdf(t)) - want) <= 1e-14


def test_normal_cdf_symmetry():
    for t in (0.5, 1.0, 2.0, 4.0):
        assert abs(float(normal_cdf(t)) + float(normal_cdf(-t)) - 1.0) <= 1e-13


def test_normal_quantile():
    assert abs(float(normal_quantile(0.995)) - QUANTILE_995) <= 1e-12
    for q in (0.01, 0.25, 0.5, 0.9, 0.995):
        assert abs(float(normal_cdf(normal_quantile(q))) - q) <= 1e-13


# --- empirical distances ----------------------------------------------------

def test_kolmogorov_single_zero():
    assert empirical_kolmogorov(EmpiricalSample.from_values([0.0])) == 0.5


def test_kolmogorov_point_mass_far_right():
    # just left of the atom: F_n = 0 while Phi(10) ~ 1, so the sup is Phi(10)
    ks = empirical_kolmogorov(EmpiricalSample.from_values(np.full(10, 10.0)))
    assert abs(ks - float(normal_cdf(10.0))) <= 1e-12
    assert ks > 0.999999


def test_kolmogorov_grid_scan_oracle():
    """The closed-form order-statistic K-S must agree with a brute scan of
    |F_n(t) - Phi(t)| over a dense grid (grid value is a lower bound that
    approaches the sup)."""
    values = np.array([-1.3, -0.2, 0.1, 0.4, 0.9, 2.2, 2.3])
    ks = empirical_kolmogorov(EmpiricalSample.from_values(values))
    grid = np.linspace(-6.0, 6.0, 2_000_001)
    fn = np.searchsorted(np.sort(values), grid, side="right") / values.size
    scan = np.max(np.abs(fn - normal_cdf(grid)))
    assert scan <= ks + 1e-12
    assert ks - scan <= 1e-5


def test_kolmogorov_exact_quantiles_are_optimal():
    n = 1000
    v = normal_quantile((np.arange(n) + 0.5) / n)
    # quantile placement: K-S is exactly 1/(2n)
    assert abs(empirical_kolmogorov(EmpiricalSample.from_values(v)) - 0.5 / n) <= 1e-12


def test_w1_exact_quantiles_zero():
    n = 500
    v = normal_quantile((np.arange(n) + 0.5) / n)
    assert empirical_w1(EmpiricalSample.from_values(v)) <= 1e-12


def test_w1_translation():
    n = 500
    v = normal_quantile((np.arange(n) + 0.5) / n)
    for c in (0.25, -1.5):
        assert abs(empirical_w1(EmpiricalSample.from_values(v + c)) - abs(c)) <= 1e-12


def test_w1_and_ks_on_true_normal_draws():
    n = 200_000
    v = RNG.standard_normal(n)
    sample = EmpiricalSample.from_values(v)
    # DKW band at alpha=1e-6 and a generous W1 envelope
    assert empirical_kolmogorov(sample) <= math.sqrt(math.log(2e6) / (2 * n))
    assert empirical_w1(sample) <= 5.0 / math.sqrt(n)


# --- conditional covariance --------------------------------------------------

def test_conditional_cov_one_hot_is_zero():
    y = np.zeros(8)
    y[3] = 2.0
    s = np.ones(8)
    for i, j in ((0, 1), (0, 3), (3, 5)):
        assert conditional_cov_exact(y, s, i, j) == 0.0


def test_conditional_cov_xor_identity():
    d = 16
    y = RNG.standard_normal(d)
    s = np.where(RNG.standard_normal(d) < 0, -1.0, 1.0)
    w = s * y
    for i, j in ((0, 1), (2, 9), (5, 10)):
        alpha = i ^ j
        want = float(sum(w[m] * w[m ^ alpha] for m in range(d)))
        got = conditional_cov_exact(y, s, i, j)
        assert abs(got - want) <= 1e-12
        assert got == conditional_cov_exact(y, s, j, i)


def test_conditional_cov_two_spike_hand_value():
    d = 8
    y = np.zeros(d)
    y[0] = y[1] = 1.0 / math.sqrt(2.0)
    s = np.ones(d)
    s[1] = -1.0
    got = conditional_cov_exact(y, s, 0, 1)
    assert abs(got + 1.0) <= 1e-15  # 2 * s0 s1 * (1/sqrt 2)^2 = -1


def test_conditional_cov_diagonal_and_validation():
    y = np.array([1.0, 2.0, 3.0, 4.0])
    s = np.array([1.0, -1.0, 1.0, -1.0])
    # i == j degenerates to the second moment sum w_m^2 = |y|^2
    assert conditional_cov_exact(y, s, 1, 1) == float(np.dot(y, y))
    with pytest.raises(ValueError):
        conditional_cov_exact(y, s, 0, 4)
    with pytest.raises(ValueError):
        conditional_cov_exact(np.ones(3), np.ones(3), 0, 1)


# --- block covariance ---------------------------------------------------------

def test_block_cov_constant_blocks():
    blocks = np.tile(np.array([1.0, -2.0]), (50, 1))
    assert np.max(np.abs(empirical_block_cov(blocks))) == 0.0


def test_block_cov_identity_rows():
    k = 4
    n = 100
    blocks = np.vstack([np.eye(k) * 2.0] * (n // k))  # each 2*e_i, equal frequency
    got = empirical_block_cov(blocks)
    # population: mean 0.5, var 2^2/k - 0.25 = 0.75, cross -0.25; ddof=1 rescales
    want = (np.eye(k) - 0.25) * (n / (n - 1.0))
    assert np.allclose(got, want, atol=1e-12)
    assert np.allclose(got, np.cov(blocks, rowvar=False, ddof=1), atol=1e-12)
