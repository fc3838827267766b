"""Bounded-support b-bit quantization of rotated coordinates.

After a k-layer rotation the normalized coordinates ``U = sqrt(d) R xu``
are near-Gaussian, so a fixed uniform grid on ``[-t_p, t_p]`` (where ``t_p``
carries standard-normal tail mass ``p`` outside) covers all but a ``p + O(1/sqrt(d))``
fraction of coordinates.  In-range coordinates are stochastically rounded to
a neighboring grid level (unbiased: ``P(up) = (z - q_i)/(q_{i+1} - q_i)``);
the rare escapes are transmitted exactly as (index, value) pairs.

The conditional expected squared rounding error at ``z`` is the closed form
``e(z) = (z - q_i)(q_{i+1} - z)`` inside a cell and 0 outside the support.
``e`` has total variation ``sum_cells w^2/2`` (plus boundary jumps when the
support ends inside a cell), which converts Kolmogorov closeness of ``U`` to
Gaussian into a bound on the achieved error gap: the measured mean of
``e(U)`` differs from ``int e dPhi`` by at most ``1.28 TV(e) / sqrt(d)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .core import RotationSpec, apply_rotation, inverse_rotation, rotate_many
from .metrics import KOLMOGOROV_2LAYER_C, normal_quantile
from .reporting import VerifyReport
from .rng import Xoshiro256pp, derive_seeds

__all__ = [
    "threshold_for_p",
    "BsqConfig",
    "ErrorFunctionSpec",
    "BsqPayload",
    "bsq_encode",
    "bsq_decode",
    "tv_of_error_function",
    "expected_error_gaussian",
    "verify_tv_transfer",
]

MAX_BITS = 20


def threshold_for_p(p: float) -> float:
    """Two-sided tail threshold: ``t_p`` with ``P(|G| > t_p) = p``."""
    if not 0.0 < p < 1.0:
        raise ValueError("tail mass must lie strictly inside (0, 1)")
    return float(normal_quantile(1.0 - p / 2.0))


@dataclass(frozen=True)
class BsqConfig:
    """Grid description: ``2**bits`` uniform levels with endpoints at ``+-t_p``."""

    bits: int
    tail_mass: float

    def __post_init__(self):
        if not 1 <= self.bits <= MAX_BITS:
            raise ValueError(f"bits must be in 1..{MAX_BITS}, got {self.bits}")
        if not 0.0 < self.tail_mass < 1.0:
            raise ValueError("tail mass must lie strictly inside (0, 1)")

    @cached_property
    def threshold(self) -> float:
        return threshold_for_p(self.tail_mass)

    @cached_property
    def n_levels(self) -> int:
        return 1 << self.bits

    @cached_property
    def levels(self) -> np.ndarray:
        lv = np.linspace(-self.threshold, self.threshold, self.n_levels)
        lv.flags.writeable = False
        return lv

    @cached_property
    def cell_width(self) -> float:
        return 2.0 * self.threshold / (self.n_levels - 1) if self.n_levels > 1 else 0.0


@dataclass(frozen=True)
class ErrorFunctionSpec:
    """Piecewise description of the conditional rounding error ``e(z)``.

    ``e(z) = (z - q_i)(q_{i+1} - z)`` on the cell containing ``z`` and zero
    outside ``support``.  Constructed from a config (support = grid ends) or
    from raw levels for analysis.
    """

    levels: np.ndarray
    support: tuple[float, float]

    def __post_init__(self):
        lv = np.asarray(self.levels, dtype=np.float64)
        if lv.ndim != 1 or lv.size < 2 or not np.all(np.diff(lv) > 0):
            raise ValueError("levels must be at least two strictly increasing values")
        if not np.all(np.isfinite(lv)):
            raise ValueError("levels must be finite")
        lv = lv.copy()
        lv.flags.writeable = False
        object.__setattr__(self, "levels", lv)
        lo, hi = self.support
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise ValueError("support must be a finite non-empty interval")

    @classmethod
    def from_config(cls, cfg: BsqConfig) -> "ErrorFunctionSpec":
        return cls(levels=cfg.levels, support=(float(cfg.levels[0]), float(cfg.levels[-1])))

    @classmethod
    def from_levels(cls, levels) -> "ErrorFunctionSpec":
        lv = np.asarray(levels, dtype=np.float64)
        return cls(levels=lv, support=(float(lv[0]), float(lv[-1])))

    def evaluate(self, z):
        """Vectorized ``e(z)``; exact zeros at grid levels and outside support."""
        z = np.asarray(z, dtype=np.float64)
        lv = self.levels
        idx = np.clip(np.searchsorted(lv, z, side="right") - 1, 0, lv.size - 2)
        e = (z - lv[idx]) * (lv[idx + 1] - z)
        lo, hi = self.support
        inside = (z >= lo) & (z <= hi) & (z >= lv[0]) & (z <= lv[-1])
        return np.where(inside, e, 0.0)


def tv_of_error_function(spec: ErrorFunctionSpec) -> float:
    """Total variation of ``e``: each cell of width ``w`` contributes ``w^2/2``
    (rise to ``w^2/4`` and back), plus any jump where the support ends strictly
    inside a cell."""
    w = np.diff(spec.levels)
    tv = float(np.sum(w * w) / 2.0)
    lo, hi = spec.support
    tv += float(spec.evaluate(lo)) + float(spec.evaluate(hi))
    return tv


def expected_error_gaussian(cfg: BsqConfig, nodes: int = 32) -> float:
    """``int e(z) dPhi(z)`` by per-cell Gauss-Legendre quadrature."""
    if nodes < 2:
        raise ValueError("need at least two quadrature nodes")
    spec = ErrorFunctionSpec.from_config(cfg)
    x, wq = np.polynomial.legendre.leggauss(nodes)
    lv = spec.levels
    a, b = lv[:-1], lv[1:]
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    z = mid[:, None] + half[:, None] * x[None, :]
    e = (z - a[:, None]) * (b[:, None] - z)
    phi = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    return float(np.sum(half[:, None] * wq[None, :] * e * phi))


@dataclass(frozen=True)
class BsqPayload:
    """Encoded vector: level codes for in-range coordinates (in coordinate
    order) plus exact (index, value) pairs for the escapes."""

    spec: RotationSpec
    config: BsqConfig
    scale: float
    codes: np.ndarray        # uint32, one per in-range coordinate
    outlier_idx: np.ndarray  # uint32, strictly increasing
    outlier_val: np.ndarray  # float64, |value| > threshold

    def __post_init__(self):
        codes = np.asarray(self.codes, dtype=np.uint32)
        idx = np.asarray(self.outlier_idx, dtype=np.uint32)
        val = np.asarray(self.outlier_val, dtype=np.float64)
        object.__setattr__(self, "codes", codes)
        object.__setattr__(self, "outlier_idx", idx)
        object.__setattr__(self, "outlier_val", val)
        d = self.spec.dim
        if not math.isfinite(self.scale) or self.scale < 0.0:
            raise ValueError("scale must be finite and non-negative")
        if codes.ndim != 1 or idx.ndim != 1 or val.ndim != 1:
            raise ValueError("payload arrays must be 1-d")
        if idx.size != val.size:
            raise ValueError("outlier index/value lengths differ")
        if codes.size + idx.size != d:
            raise ValueError("in-range plus outlier counts must equal the dimension")
        if codes.size and int(codes.max()) >= self.config.n_levels:
            raise ValueError("level code out of range")
        if idx.size:
            if int(idx.max()) >= d:
                raise ValueError("outlier index out of range")
            if idx.size > 1 and not np.all(np.diff(idx.astype(np.int64)) > 0):
                raise ValueError("outlier indices must be strictly increasing")
            if not np.all(np.isfinite(val)):
                raise ValueError("outlier values must be finite")
            if not np.all(np.abs(val) > self.config.threshold):
                raise ValueError("outlier values must exceed the threshold")

    @property
    def sent_fraction(self) -> float:
        """Fraction of coordinates escaping the grid (sent exactly)."""
        return self.outlier_idx.size / self.spec.dim


def _stochastic_codes(z: np.ndarray, cfg: BsqConfig, u: np.ndarray) -> np.ndarray:
    """Unbiased rounding of in-range values ``z`` to grid level codes."""
    if cfg.n_levels == 1:
        return np.zeros(z.shape, dtype=np.uint32)
    w = cfg.cell_width
    pos = (z + cfg.threshold) / w
    base = np.clip(np.floor(pos), 0, cfg.n_levels - 2)
    frac = pos - base
    return (base + (u < frac)).astype(np.uint32)


def bsq_encode(x, spec: RotationSpec, cfg: BsqConfig, noise_seed: int) -> BsqPayload:
    """Rotate, normalize to ``U = sqrt(d) R xu``, grid-quantize in-range
    coordinates with rounding noise drawn from ``noise_seed``."""
    y = apply_rotation(x, spec)
    d = spec.dim
    norm = float(np.linalg.norm(y))  # rotation preserves |x|_2
    scale = norm / math.sqrt(d)
    u_coords = y / scale if scale > 0.0 else np.zeros(d)
    out_mask = np.abs(u_coords) > cfg.threshold
    u_noise = Xoshiro256pp([noise_seed]).uniforms(d)[0]
    in_vals = u_coords[~out_mask]
    codes = _stochastic_codes(in_vals, cfg, u_noise[~out_mask])
    return BsqPayload(
        spec=spec,
        config=cfg,
        scale=scale,
        codes=codes,
        outlier_idx=np.nonzero(out_mask)[0].astype(np.uint32),
        outlier_val=u_coords[out_mask],
    )


def bsq_decode(payload: BsqPayload) -> np.ndarray:
    """Rebuild ``U``, rescale, and invert the rotation (needs only the payload)."""
    d = payload.spec.dim
    u_hat = np.empty(d)
    out_mask = np.zeros(d, dtype=bool)
    out_mask[payload.outlier_idx.astype(np.int64)] = True
    u_hat[~out_mask] = payload.config.levels[payload.codes.astype(np.int64)]
    u_hat[out_mask] = payload.outlier_val
    return inverse_rotation(u_hat * payload.scale, payload.spec)


def verify_tv_transfer(x, cfg: BsqConfig, trials: int, layers: int = 2,
                       master_seed: int = 0) -> VerifyReport:
    """Monte Carlo check of the error-transfer bound.

    Pools ``trials`` independently seeded rotations of ``x``, measures the
    mean of ``e(U)`` over all coordinate draws, and compares against the
    Gaussian expectation within ``1.28 TV(e)/sqrt(d)`` plus four standard
    errors of the trial means.  ``layers=0`` turns the rotation off, which
    is the adversarial (negative-control) configuration.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    x = np.asarray(x, dtype=np.float64)
    d = x.size
    norm = float(np.linalg.norm(x))
    if norm == 0.0 or not np.all(np.isfinite(x)):
        raise ValueError("input must be finite and non-zero")
    efs = ErrorFunctionSpec.from_config(cfg)
    seeds = derive_seeds(master_seed, 0, trials)
    per_trial = np.empty(trials)
    step = max(1, (1 << 22) // d)
    for lo in range(0, trials, step):
        hi = min(lo + step, trials)
        u_rows = rotate_many(x / norm, layers, seeds[lo:hi]) * math.sqrt(d)
        per_trial[lo:hi] = efs.evaluate(u_rows).mean(axis=1)
    measured = float(np.mean(per_trial))
    std_err = float(np.std(per_trial, ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    expected = expected_error_gaussian(cfg)
    tv = tv_of_error_function(efs)
    bound = KOLMOGOROV_2LAYER_C * tv / math.sqrt(d)
    slack = 4.0 * std_err
    statistic = abs(measured - expected)
    return VerifyReport(
        experiment="bsq-transfer",
        d=d,
        statistic=statistic,
        bound=bound,
        slack=slack,
        passed=bool(statistic <= bound + slack),
        trials=trials,
        std_err=std_err,
        claim="quantization-error-transfer",
        slack_kind="4sigma",
        extra={
            "measured_mean_error": measured,
            "gaussian_mean_error": expected,
            "total_variation": tv,
            "layers": layers,
            "sampling_error_small_enough": bool(std_err < bound / 3.0),
            # at d=1 the 1/sqrt(d) bound is vacuous: flag rather than hide
            "degenerate": bool(d == 1),
        },
    )
