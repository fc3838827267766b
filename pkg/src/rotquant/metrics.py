"""Flatness statistics and distribution-distance metrics.

Closed-form constants used by the guarantees:

* ``CUBE_RATIO_C`` -- after one randomized Hadamard layer the expected
  normalized third-moment ratio is at most ``3**0.75 / sqrt(d)``.
* ``BERRY_ESSEEN_C`` -- the sharp Berry-Esseen constant 0.5606 for weighted
  sign sums; the Kolmogorov distance of a two-layer rotation output obeys
  ``d_K <= BERRY_ESSEEN_C * CUBE_RATIO_C / sqrt(d) <= KOLMOGOROV_2LAYER_C / sqrt(d)``.
* ``W1_TRANSPORT_C`` -- the transport-cost multiplier: ``W1 <= 3 * CUBE_RATIO_C / sqrt(d)``.
* ``OUTLIER_2LAYER_C`` -- quantile transfer: ``P(|U| > t_p) <= p + 2.56 / sqrt(d)``.

The empirical statistics are exact order-statistic formulas, not binned
approximations, so the acceptance checks compare like for like.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

__all__ = [
    "CUBE_RATIO_C",
    "BERRY_ESSEEN_C",
    "KOLMOGOROV_2LAYER_C",
    "W1_TRANSPORT_C",
    "OUTLIER_2LAYER_C",
    "FlatnessStats",
    "moment_scan",
    "rho3",
    "linf_sq",
    "normal_cdf",
    "normal_quantile",
    "EmpiricalSample",
    "empirical_kolmogorov",
    "empirical_w1",
    "conditional_cov_exact",
    "empirical_block_cov",
]

CUBE_RATIO_C = 3.0**0.75          # ~2.2795
BERRY_ESSEEN_C = 0.5606
KOLMOGOROV_2LAYER_C = 1.28        # rounded-up product 0.5606 * 3**0.75
W1_TRANSPORT_C = 3.0
OUTLIER_2LAYER_C = 2.56           # 2 * KOLMOGOROV_2LAYER_C


@dataclass(frozen=True)
class FlatnessStats:
    """Accumulated moments of one vector: sum x^2, sum |x|^3, max x^2."""

    sum_sq: float
    sum_abs_cubed: float
    max_sq: float
    count: int


def moment_scan(x) -> FlatnessStats:
    """Collect ``(sum x^2, sum |x|^3, max x^2)`` in a single pass.

    Accepts a numpy array (vectorized) or any finite iterable of floats,
    which is consumed exactly once -- callers may hand in a stream.
    """
    if isinstance(x, np.ndarray):
        if x.ndim != 1 or x.size == 0:
            raise ValueError("input must be a non-empty 1-d vector")
        if not np.all(np.isfinite(x)):
            raise ValueError("input must be finite")
        sq = x * x
        return FlatnessStats(
            sum_sq=float(np.sum(sq)),
            sum_abs_cubed=float(np.sum(sq * np.abs(x))),
            max_sq=float(np.max(sq)),
            count=x.size,
        )
    sum_sq = 0.0
    sum_cubed = 0.0
    max_sq = 0.0
    n = 0
    for v in x:
        v = float(v)
        if not math.isfinite(v):
            raise ValueError("input must be finite")
        q = v * v
        sum_sq += q
        sum_cubed += q * abs(v)
        if q > max_sq:
            max_sq = q
        n += 1
    if n == 0:
        raise ValueError("input must be a non-empty 1-d vector")
    return FlatnessStats(sum_sq=sum_sq, sum_abs_cubed=sum_cubed, max_sq=max_sq,
                         count=n)


def rho3(x) -> float:
    """Normalized third-moment ratio ``sum |x|^3 / (sum x^2)^{3/2}``.

    Scale-invariant; equals ``sum |u_i|^3`` for the unit vector ``u = x/|x|``.
    """
    s = moment_scan(x)
    if s.sum_sq == 0.0:
        raise ValueError("zero vector has no direction")
    return s.sum_abs_cubed / s.sum_sq**1.5


def linf_sq(x) -> float:
    """Squared max-coordinate of the unit vector: ``max x^2 / sum x^2``."""
    s = moment_scan(x)
    if s.sum_sq == 0.0:
        raise ValueError("zero vector has no direction")
    return s.max_sq / s.sum_sq


def normal_cdf(t):
    """Standard normal CDF, vectorized, absolute error below 1e-14."""
    return ndtr(np.asarray(t, dtype=np.float64))


def normal_quantile(q):
    """Standard normal quantile; satisfies ``|cdf(result) - q| <= 1e-13``."""
    q = np.asarray(q, dtype=np.float64)
    if np.any(q <= 0.0) or np.any(q >= 1.0):
        raise ValueError("quantile argument must lie strictly inside (0, 1)")
    out = ndtri(q)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class EmpiricalSample:
    """A sorted sample of finite draws; the input to the empirical metrics."""

    values: np.ndarray
    n: int

    @classmethod
    def from_values(cls, values) -> "EmpiricalSample":
        v = np.asarray(values, dtype=np.float64).ravel()
        if v.size == 0:
            raise ValueError("sample must be non-empty")
        if not np.all(np.isfinite(v)):
            raise ValueError("sample must be finite")
        v = np.sort(v)
        v.flags.writeable = False
        return cls(values=v, n=int(v.size))


def empirical_kolmogorov(sample: EmpiricalSample) -> float:
    """Exact sup-distance between the empirical CDF and the standard normal.

    For sorted values this is ``max_i max(i/n - F(v_i), F(v_i) - (i-1)/n)``,
    the true supremum over all of R (no grid approximation).
    """
    v = sample.values
    n = sample.n
    f = ndtr(v)
    hi = np.arange(1, n + 1) / n - f
    lo = f - np.arange(0, n) / n
    return float(max(hi.max(), lo.max()))


def empirical_w1(sample: EmpiricalSample) -> float:
    """Order-statistic 1-Wasserstein estimate against the standard normal.

    Couples the i-th order statistic to the plotting-position quantile
    ``ndtri((i - 0.5) / n)`` and averages the absolute gaps.
    """
    v = sample.values
    n = sample.n
    q = ndtri((np.arange(1, n + 1) - 0.5) / n)
    return float(np.mean(np.abs(v - q)))


def conditional_cov_exact(y, signs, i: int, j: int) -> float:
    """Exact covariance of rotated coordinates ``(i, j)`` over a fresh plane.

    Let ``a = Hn diag(signs) y``.  Over a fresh uniform sign plane ``e`` the
    coordinates ``U = sqrt(d) * Hn diag(e) a`` satisfy the closed form

        Cov(U_i, U_j) = sum_l signs[l] signs[l^a] y[l] y[l^a],   a = i XOR j,

    where the sum enumerates every index ``l`` (each unordered pair appears
    twice, which matches the pairwise-sum convention).  Runs in O(d).
    """
    y = np.asarray(y, dtype=np.float64)
    d = check_len = y.size
    if y.ndim != 1 or d == 0:
        raise ValueError("input must be a non-empty 1-d vector")
    if d & (d - 1):
        raise ValueError("dimension must be a power of two")
    s = signs.values() if hasattr(signs, "values") and callable(signs.values) else np.asarray(signs, dtype=np.float64)
    if s.shape != (check_len,):
        raise ValueError("sign plane length does not match the vector")
    if not (0 <= i < d and 0 <= j < d):
        raise ValueError("coordinate indices out of range")
    alpha = i ^ j
    perm = np.arange(d) ^ alpha
    w = s * y
    return float(np.dot(w, w[perm]))


def empirical_block_cov(blocks) -> np.ndarray:
    """Unbiased sample covariance of stacked blocks, shape ``(k, k)``."""
    b = np.asarray(blocks, dtype=np.float64)
    if b.ndim != 2 or b.shape[0] < 2:
        raise ValueError("need at least two block rows")
    return np.cov(b, rowvar=False, ddof=1)
