"""Composed randomized Hadamard rotations.

The rotation with ``k`` layers is ``R_k = Hn D_k ... Hn D_1`` where ``Hn`` is
the normalized Walsh-Hadamard matrix ``H / sqrt(d)`` (Sylvester / natural
ordering throughout) and each ``D_l`` is a diagonal of independent random
signs derived deterministically from ``(seed, l)``.  ``R_0`` is the identity
and serves as a debug mode.

Sign plane derivation: layer ``l`` draws from a xoshiro256++ stream keyed by
``seed XOR l`` (see :mod:`rotquant.rng` for the stream conventions).  The
derivation is integer-exact, hence identical on every platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import MASK64, Xoshiro256pp

__all__ = [
    "MAX_LAYERS",
    "check_dim",
    "RotationSpec",
    "SignPlane",
    "DirVector",
    "fwht",
    "derive_signs",
    "layer_signs",
    "sign_vector",
    "unpack_sign_bits",
    "apply_rotation",
    "inverse_rotation",
    "rotate_many",
]

MAX_LAYERS = 3


def check_dim(d) -> int:
    """Validate a transform dimension: a positive power of two."""
    d = int(d)
    if d < 1 or (d & (d - 1)) != 0:
        raise ValueError(f"dimension must be a positive power of two, got {d}")
    return d


@dataclass(frozen=True)
class RotationSpec:
    """Rotation pipeline description: dimension, layer count, seed."""

    dim: int
    layers: int
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "dim", check_dim(self.dim))
        if not 0 <= self.layers <= MAX_LAYERS:
            raise ValueError(f"layers must be in 0..{MAX_LAYERS}, got {self.layers}")
        if not 0 <= self.seed <= MASK64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class SignPlane:
    """One diagonal of signs, stored packed (bit j of byte j//8 = coordinate j).

    A set bit encodes -1, a clear bit +1.
    """

    dim: int
    bits: bytes

    def __post_init__(self):
        check_dim(self.dim)
        if len(self.bits) != (self.dim + 7) // 8:
            raise ValueError("packed sign length does not match dimension")

    def values(self) -> np.ndarray:
        """Unpack to a float64 vector of +/-1."""
        return unpack_sign_bits(self.bits, self.dim)


@dataclass(frozen=True)
class DirVector:
    """A unit-norm direction vector (read-only)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1:
            raise ValueError("direction must be a 1-d vector")
        n = np.linalg.norm(v)
        if not math.isfinite(n) or abs(n - 1.0) > 1e-12:
            raise ValueError("direction must have unit Euclidean norm")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def normalize(cls, x) -> "DirVector":
        x = np.asarray(x, dtype=np.float64)
        n = np.linalg.norm(x)
        if n == 0.0 or not math.isfinite(n):
            raise ValueError("cannot normalize a zero or non-finite vector")
        return cls(x / n)


def fwht(v, normalize: bool = False) -> np.ndarray:
    """Walsh-Hadamard transform along the last axis (Sylvester ordering).

    Accepts a single vector or a batch ``(..., d)``; ``d`` must be a power of
    two.  With ``normalize=True`` the result is divided by ``sqrt(d)``, which
    makes the transform orthogonal and involutive.  Runs in ``O(d log d)``
    per row via the iterative butterfly.
    """
    a = np.array(v, dtype=np.float64, copy=True)
    if a.ndim == 0:
        raise ValueError("input must have at least one axis")
    d = check_dim(a.shape[-1])
    shape = a.shape
    a = a.reshape(-1, d)
    h = 1
    while h < d:
        a3 = a.reshape(a.shape[0], d // (2 * h), 2, h)
        top = a3[:, :, 0, :].copy()
        a3[:, :, 0, :] += a3[:, :, 1, :]
        np.subtract(top, a3[:, :, 1, :], out=a3[:, :, 1, :])
        h *= 2
    a = a.reshape(shape)
    if normalize:
        a /= math.sqrt(d)
    return a


def layer_signs(seeds, layer: int, dim: int) -> np.ndarray:
    """Sign planes for one layer across many seeds, shape ``(n_seeds, dim)``.

    Row ``i`` holds the +/-1 diagonal for layer ``layer`` of a rotation
    seeded by ``seeds[i]``.
    """
    dim = check_dim(dim)
    if not 1 <= layer <= MAX_LAYERS:
        raise ValueError(f"layer must be in 1..{MAX_LAYERS}, got {layer}")
    keys = np.atleast_1d(np.asarray(seeds, dtype=np.uint64)) ^ np.uint64(layer)
    return Xoshiro256pp(keys).sign_values(dim)


def derive_signs(spec: RotationSpec, layer: int) -> SignPlane:
    """The deterministic sign plane for one layer of a rotation spec."""
    if not 1 <= layer <= spec.layers:
        raise ValueError(f"layer must be in 1..{spec.layers}, got {layer}")
    vals = layer_signs([spec.seed], layer, spec.dim)[0]
    packed = np.packbits(vals < 0, bitorder="little").tobytes()
    return SignPlane(dim=spec.dim, bits=packed)


def sign_vector(v) -> bytes:
    """Pack coordinate signs one bit each (clear = +1; sign(0) = +1).

    Bit ``j`` of byte ``j // 8`` holds coordinate ``j``, little-endian
    within each byte.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("input must be a non-empty 1-d vector")
    return np.packbits(v < 0, bitorder="little").tobytes()


def unpack_sign_bits(data: bytes, d: int) -> np.ndarray:
    """Inverse of :func:`sign_vector`: packed bits to a float64 +/-1 vector."""
    if len(data) != (d + 7) // 8:
        raise ValueError("packed sign length does not match dimension")
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")
    return 1.0 - 2.0 * bits[:d].astype(np.float64)


def _as_vector(x, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("input must be a 1-d vector")
    if x.size != dim:
        raise ValueError(f"vector length {x.size} does not match dimension {dim}")
    if not np.all(np.isfinite(x)):
        raise ValueError("input must be finite")
    return x


def rotate_many(x, layers: int, seeds, inverse: bool = False) -> np.ndarray:
    """Apply independently seeded rotations in one numpy batch.

    ``x`` is either a single vector (broadcast to every seed) or a matrix of
    shape ``(n_seeds, d)`` with one row per seed.  Returns ``(n_seeds, d)``.
    Forward maps ``y = R_k x``; ``inverse=True`` maps ``y = R_k^{-1} x``.
    """
    seeds = np.atleast_1d(np.asarray(seeds, dtype=np.uint64))
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        d = check_dim(x.shape[0])
        out = np.broadcast_to(x, (seeds.size, d)).copy()
    elif x.ndim == 2:
        d = check_dim(x.shape[1])
        if x.shape[0] != seeds.size:
            raise ValueError("row count must match the number of seeds")
        out = x.copy()
    else:
        raise ValueError("input must be 1-d or 2-d")
    if not 0 <= layers <= MAX_LAYERS:
        raise ValueError(f"layers must be in 0..{MAX_LAYERS}, got {layers}")
    if not inverse:
        for layer in range(1, layers + 1):
            out *= layer_signs(seeds, layer, d)
            out = fwht(out, normalize=True)
    else:
        for layer in range(layers, 0, -1):
            out = fwht(out, normalize=True)
            out *= layer_signs(seeds, layer, d)
    return out


def apply_rotation(x, spec: RotationSpec) -> np.ndarray:
    """Apply ``R_k`` for ``spec`` to a vector (identity when ``layers=0``)."""
    x = _as_vector(x, spec.dim)
    return rotate_many(x, spec.layers, [spec.seed])[0]


def inverse_rotation(y, spec: RotationSpec) -> np.ndarray:
    """Apply ``R_k^{-1} = D_1 Hn D_2 Hn ... D_k Hn`` for ``spec``."""
    y = _as_vector(y, spec.dim)
    return rotate_many(y, spec.layers, [spec.seed], inverse=True)[0]
