"""Gaussian-codebook block vector quantization and its validity checks.

A single codebook is trained once on i.i.d. standard-normal blocks.  Because
a 3-layer rotation makes *any* unit input's normalized coordinates
block-wise near-Gaussian (pairwise correlations conditionally vanish at the
final layer), that one codebook serves every input and every dimension: the
measured distortion gap between rotated data and fresh Gaussian data decays
like sqrt(log d / d).  With only 2 layers an adversarial input keeps a
non-Gaussian block law and the gap stays put - the checks here measure both.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import apply_rotation, check_dim, fwht, inverse_rotation, layer_signs, rotate_many
from .rng import Xoshiro256pp, derive_seed, derive_seeds

__all__ = [
    "Codebook",
    "VqReport",
    "train_gaussian_codebook",
    "vq_encode",
    "vq_decode",
    "stein_diagnostic_constant",
    "conditional_cov_trials",
    "rms_conditional_cov",
    "verify_codebook_universality",
]


@dataclass(frozen=True)
class Codebook:
    """Trained centroids for one block size, plus the training provenance
    needed to reproduce them bit for bit."""

    block_dim: int
    centroids: np.ndarray  # (n_centroids, block_dim) float64
    train_seed: int
    radius: float          # max centroid norm; revalidated when deserialized

    def __post_init__(self):
        c = np.ascontiguousarray(np.asarray(self.centroids, dtype=np.float64))
        if c.ndim != 2 or c.shape[0] < 1 or c.shape[1] != self.block_dim:
            raise ValueError("centroids must be (n_centroids, block_dim)")
        if not np.all(np.isfinite(c)):
            raise ValueError("centroids must be finite")
        c.flags.writeable = False
        object.__setattr__(self, "centroids", c)
        with np.errstate(over="ignore"):
            r = float(np.max(np.linalg.norm(c, axis=1)))
        if not math.isclose(self.radius, r, rel_tol=1e-9, abs_tol=1e-12):
            raise ValueError("stored radius does not match the centroids")

    @property
    def n_centroids(self) -> int:
        return self.centroids.shape[0]

    @classmethod
    def from_centroids(cls, centroids, train_seed: int) -> "Codebook":
        c = np.asarray(centroids, dtype=np.float64)
        radius = float(np.max(np.linalg.norm(c, axis=1)))
        return cls(block_dim=c.shape[1], centroids=c, train_seed=train_seed,
                   radius=radius)


@dataclass
class VqReport:
    """Distortion comparison at one dimension: the same codebook applied to
    rotated blocks and to fresh Gaussian blocks."""

    d: int
    err_rht: float    # measured E min_c |U_block - c|^2
    err_gauss: float  # measured E min_c |Z - c|^2
    gap: float        # |err_rht - err_gauss|
    gap_se: float
    rms_cov: float    # measured RMS final-layer conditional covariance
    stein_bound: float  # smoothness-budget diagnostic, not a pass target
    trials: int
    layers: int = 3
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.err_rht < 0.0 or self.err_gauss < 0.0:
            raise ValueError("distortions must be non-negative")
        if not math.isclose(self.gap, abs(self.err_rht - self.err_gauss),
                            rel_tol=1e-12, abs_tol=1e-15):
            raise ValueError("gap must equal |err_rht - err_gauss|")


def _nearest_sq_dist(points: np.ndarray, centroids: np.ndarray):
    """Squared distance to, and index of, the nearest centroid (ties break
    to the lowest index).  Uses the expanded form with one matmul."""
    p_sq = np.einsum("ij,ij->i", points, points)
    c_sq = np.einsum("ij,ij->i", centroids, centroids)
    d2 = p_sq[:, None] - 2.0 * (points @ centroids.T) + c_sq[None, :]
    np.maximum(d2, 0.0, out=d2)
    idx = np.argmin(d2, axis=1)
    return d2[np.arange(points.shape[0]), idx], idx


def train_gaussian_codebook(block_dim: int, n_centroids: int, train_seed: int,
                            n_samples: int = 1 << 17, max_iters: int = 50,
                            rel_tol: float = 1e-6) -> Codebook:
    """Deterministic Lloyd training on standard-normal blocks.

    Sample row ``j`` comes from its own derived stream (``train_seed`` index
    ``j``) and the initialization stream from index ``n_samples``, so the
    result depends only on the arguments.  Init is distance-squared weighted
    seeding; empty clusters are reseeded from the farthest point; stops on
    ``max_iters`` or relative inertia improvement below ``rel_tol``.
    """
    if block_dim < 1 or n_centroids < 1:
        raise ValueError("block_dim and n_centroids must be positive")
    if n_samples < 10 * n_centroids:
        raise ValueError("need at least 10 samples per centroid")
    keys = derive_seeds(train_seed, 0, n_samples)
    samples = Xoshiro256pp(keys).gaussians(block_dim)
    picks = Xoshiro256pp([derive_seed(train_seed, n_samples)]).uniforms(n_centroids)[0]

    centroids = np.empty((n_centroids, block_dim))
    centroids[0] = samples[min(int(picks[0] * n_samples), n_samples - 1)]
    diff = samples - centroids[0]
    d2 = np.einsum("ij,ij->i", diff, diff)
    for m in range(1, n_centroids):
        total = float(d2.sum())
        if total <= 0.0:
            j = m % n_samples
        else:
            cum = np.cumsum(d2)
            j = min(int(np.searchsorted(cum, picks[m] * total, side="right")),
                    n_samples - 1)
        centroids[m] = samples[j]
        diff = samples - centroids[m]
        np.minimum(d2, np.einsum("ij,ij->i", diff, diff), out=d2)

    prev_inertia = math.inf
    for _ in range(max_iters):
        min_d2, assign = _nearest_sq_dist(samples, centroids)
        counts = np.bincount(assign, minlength=n_centroids)
        for m in np.nonzero(counts == 0)[0]:
            far = int(np.argmax(min_d2))
            assign[far] = m
            min_d2[far] = 0.0
        counts = np.bincount(assign, minlength=n_centroids)
        sums = np.zeros((n_centroids, block_dim))
        for j in range(block_dim):
            sums[:, j] = np.bincount(assign, weights=samples[:, j],
                                     minlength=n_centroids)
        centroids = sums / counts[:, None]
        inertia = float(min_d2.sum())
        if prev_inertia - inertia < rel_tol * max(prev_inertia, 1e-300):
            break
        prev_inertia = inertia
    return Codebook.from_centroids(centroids, train_seed)


def vq_encode(x, spec, codebook: Codebook):
    """Rotate, split ``U = sqrt(d) R xu`` into contiguous blocks, send
    nearest-centroid indices plus the scalar scale.  Returns
    ``(indices, scale)``."""
    y = apply_rotation(x, spec)
    d = spec.dim
    if d % codebook.block_dim != 0:
        raise ValueError("dimension must be a multiple of the block size")
    norm = float(np.linalg.norm(y))  # rotation preserves |x|_2
    scale = norm / math.sqrt(d)
    u_coords = y / scale if scale > 0.0 else np.zeros(d)
    blocks = u_coords.reshape(-1, codebook.block_dim)
    _, idx = _nearest_sq_dist(blocks, codebook.centroids)
    return idx.astype(np.uint32), scale


def vq_decode(indices, scale: float, spec, codebook: Codebook) -> np.ndarray:
    """Rebuild blocks from centroid indices and invert the rotation."""
    idx = np.asarray(indices, dtype=np.int64)
    d = spec.dim
    if idx.size * codebook.block_dim != d:
        raise ValueError("index count does not match the dimension")
    if idx.size and (idx.min() < 0 or idx.max() >= codebook.n_centroids):
        raise ValueError("centroid index out of range")
    u_hat = codebook.centroids[idx].reshape(-1)
    return inverse_rotation(u_hat * scale, spec)


def stein_diagnostic_constant(k: int) -> float:
    """Smoothness budget for k-dim test functions in the block-law
    comparison: ``4 (11.1 + 0.83 ln k) + 4 sqrt(k) + 1``.  Reported as a
    looseness diagnostic, never as a pass/fail target."""
    if k < 1:
        raise ValueError("block dimension must be positive")
    return 4.0 * (11.1 + 0.83 * math.log(k)) + 4.0 * math.sqrt(k) + 1.0


def conditional_cov_trials(x, i: int, j: int, layers: int, trials: int,
                           master_seed: int = 0):
    """Per-trial final-layer conditional covariances.

    The covariance of output pair ``(i, j)`` over the last sign layer equals
    ``sum_m w_m w_{m XOR (i XOR j)}`` where ``w`` is the signed vector
    entering the last Hadamard's preceding stage.  With ``layers=2`` that is
    ``w = D1 xu`` (one random plane); with ``layers=3`` it is ``w = D2 R1 xu``
    (two random planes per trial).  Also returns the per-trial
    ``|a|_inf^2`` of the pre-final vector ``a`` (``xu`` itself for 2 layers,
    ``R1 xu`` for 3), whose mean controls the decay bound.
    Returns ``(covs, linf_sq)`` arrays of length ``trials``.
    """
    if layers not in (2, 3):
        raise ValueError("covariance diagnostics apply to 2 or 3 layers")
    if i == j:
        raise ValueError("need two distinct coordinates")
    x = np.asarray(x, dtype=np.float64)
    d = x.size
    check_dim(d)
    if not (0 <= i < d and 0 <= j < d):
        raise ValueError("coordinate index out of range")
    xu = x / np.linalg.norm(x)
    seeds = derive_seeds(master_seed, 0, trials)
    covs = np.empty(trials)
    linf_sq = np.empty(trials)
    step = max(1, (1 << 21) // d)
    perm = np.arange(d) ^ (i ^ j)
    for lo in range(0, trials, step):
        hi = min(lo + step, trials)
        if layers == 2:
            a = np.broadcast_to(xu, (hi - lo, d))
            w = layer_signs(seeds[lo:hi], 1, d) * a
        else:
            a = fwht(xu[None, :] * layer_signs(seeds[lo:hi], 1, d), normalize=True)
            w = layer_signs(seeds[lo:hi], 2, d) * a
        covs[lo:hi] = np.einsum("ij,ij->i", w, w[:, perm])
        linf_sq[lo:hi] = np.max(np.abs(a), axis=1) ** 2
    return covs, linf_sq


def rms_conditional_cov(x, i: int, j: int, layers: int, trials: int,
                        master_seed: int = 0) -> float:
    """Root mean square of the final-layer conditional covariance over
    ``trials`` draws of the earlier sign planes."""
    if trials < 100:
        raise ValueError("need at least 100 trials for a stable RMS")
    covs, _ = conditional_cov_trials(x, i, j, layers, trials, master_seed)
    return float(np.sqrt(np.mean(covs * covs)))


def verify_codebook_universality(x, codebook: Codebook, dims, trials: int,
                                 master_seed: int = 0, layers: int = 3,
                                 gauss_trials: int = 100_000,
                                 cov_pair: tuple[int, int] = (0, 2),
                                 cov_trials: int = 1000):
    """Distortion-gap measurement for one shared codebook across dimensions.

    The input's pattern is re-embedded (zero-padded, renormalized) at each
    dimension.  For each ``d``: Monte Carlo ``E min_c |U_block - c|^2`` over
    the FIRST block of rotated outputs across seeds, against the same
    codebook on fresh Gaussian blocks.  Returns one ``VqReport`` per dim;
    callers judge the trend of ``gap * sqrt(d / log d)``.
    """
    x = np.asarray(x, dtype=np.float64)
    norm = float(np.linalg.norm(x))
    if norm == 0.0 or not np.all(np.isfinite(x)):
        raise ValueError("input must be finite and non-zero")
    k = codebook.block_dim

    gkeys = derive_seeds(master_seed, trials, gauss_trials)
    gauss_blocks = Xoshiro256pp(gkeys).gaussians(k)
    g_err, _ = _nearest_sq_dist(gauss_blocks, codebook.centroids)
    gauss_mean = float(g_err.mean())
    gauss_se = float(g_err.std(ddof=1) / math.sqrt(gauss_trials))

    reports = []
    for d in dims:
        check_dim(d)
        if d % k != 0:
            raise ValueError("dimension must be a multiple of the block size")
        if x.size > d:
            raise ValueError("input pattern longer than the target dimension")
        xu = np.zeros(d)
        xu[: x.size] = x / norm
        seeds = derive_seeds(master_seed, 0, trials)
        errs = np.empty(trials)
        step = max(1, (1 << 21) // d)
        for lo in range(0, trials, step):
            hi = min(lo + step, trials)
            u_rows = rotate_many(xu, layers, seeds[lo:hi]) * math.sqrt(d)
            e, _ = _nearest_sq_dist(u_rows[:, :k], codebook.centroids)
            errs[lo:hi] = e
        rht_mean = float(errs.mean())
        rht_se = float(errs.std(ddof=1) / math.sqrt(trials))
        cov_layers = layers if layers in (2, 3) else 3
        rms = rms_conditional_cov(xu, cov_pair[0], cov_pair[1], cov_layers,
                                  cov_trials, master_seed)
        reports.append(VqReport(
            d=d,
            err_rht=rht_mean,
            err_gauss=gauss_mean,
            gap=abs(rht_mean - gauss_mean),
            gap_se=math.hypot(rht_se, gauss_se),
            rms_cov=rms,
            stein_bound=stein_diagnostic_constant(k),
            trials=trials,
            layers=layers,
            extra={"rht_se": rht_se, "gauss_se": gauss_se},
        ))
    return reports
