"""Deterministic pseudo-random streams (SplitMix64 + xoshiro256++).

Every random quantity in this package -- sign planes, stochastic-rounding
noise, Gaussian reference samples -- is drawn from the generators in this
module, keyed by explicit 64-bit seeds.  The integer pipeline is exact, so
derived bit streams are identical on every platform.

Stream layout conventions (fixed; changing them changes every measurement):

* ``mix64(x)`` is a single SplitMix64 output step for state ``x``.  Derived
  seeds are ``mix64(master + index)``.
* A xoshiro256++ stream keyed by ``k`` is initialised with the first four
  outputs of the SplitMix64 sequence started at state ``k``.
* Sign bits come off each 64-bit output word most-significant bit first;
  a 0 bit maps to +1 and a 1 bit maps to -1.
* Uniform doubles use the top 53 bits of a word: ``(w >> 11) * 2**-53``.
* Gaussians are Box-Muller pairs; consecutive words feed one pair.

``Xoshiro256pp`` holds one state row per stream so that thousands of
independent trial streams advance in lockstep as numpy vector operations.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "MASK64",
    "splitmix64",
    "mix64",
    "derive_seed",
    "Xoshiro256pp",
]

MASK64 = (1 << 64) - 1

_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a SplitMix64 state by one step; return (new_state, output)."""
    state = (state + _GOLDEN) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return state, z ^ (z >> 31)


def mix64(x: int) -> int:
    """Single SplitMix64 output for state ``x`` (seed-derivation primitive)."""
    return splitmix64(x & MASK64)[1]


def derive_seed(master: int, index: int) -> int:
    """Per-trial seed: ``mix64(master + index)`` with wrapping 64-bit add."""
    if index < 0:
        raise ValueError("index must be non-negative")
    return mix64((master + index) & MASK64)


def derive_seeds(master: int, start: int, count: int) -> np.ndarray:
    """Vector of per-trial seeds for indices ``start .. start+count-1``."""
    if start < 0 or count < 0:
        raise ValueError("start and count must be non-negative")
    base = np.uint64(master & MASK64)
    with np.errstate(over="ignore"):
        states = base + np.arange(start, start + count, dtype=np.uint64)
        return _splitmix_step_vec(states)[1]


def _splitmix_step_vec(state: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    state = state + np.uint64(_GOLDEN)
    z = state.copy()
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return state, z ^ (z >> np.uint64(31))


class Xoshiro256pp:
    """A batch of independent xoshiro256++ streams, one per key.

    Parameters
    ----------
    keys : int or sequence of int
        64-bit stream keys.  Each key seeds one stream via the SplitMix64
        fill described in the module docstring.
    """

    def __init__(self, keys):
        keys = np.atleast_1d(np.asarray(keys, dtype=np.uint64))
        if keys.ndim != 1 or keys.size == 0:
            raise ValueError("keys must be a non-empty 1-d sequence")
        state = np.empty((keys.size, 4), dtype=np.uint64)
        sm = keys.copy()
        with np.errstate(over="ignore"):
            for col in range(4):
                sm, out = _splitmix_step_vec(sm)
                state[:, col] = out
        self._state = state

    @property
    def n_streams(self) -> int:
        return self._state.shape[0]

    def next_words(self) -> np.ndarray:
        """One 64-bit output per stream, shape ``(n_streams,)``."""
        s = self._state
        with np.errstate(over="ignore"):
            s0, s1, s2, s3 = s[:, 0], s[:, 1], s[:, 2], s[:, 3]
            tot = s0 + s3
            result = ((tot << np.uint64(23)) | (tot >> np.uint64(41))) + s0
            t = s1 << np.uint64(17)
            s2 = s2 ^ s0
            s3 = s3 ^ s1
            s1 = s1 ^ s2
            s0 = s0 ^ s3
            s2 = s2 ^ t
            s3 = (s3 << np.uint64(45)) | (s3 >> np.uint64(19))
        self._state = np.stack([s0, s1, s2, s3], axis=1)
        return result

    def words(self, count: int) -> np.ndarray:
        """``count`` successive words per stream, shape ``(n_streams, count)``."""
        if count < 0:
            raise ValueError("count must be non-negative")
        out = np.empty((self.n_streams, count), dtype=np.uint64)
        for j in range(count):
            out[:, j] = self.next_words()
        return out

    def sign_values(self, count: int) -> np.ndarray:
        """``count`` signs per stream as float64 +/-1, MSB-first per word."""
        n_words = (count + 63) // 64
        w = self.words(n_words)
        shifts = np.arange(63, -1, -1, dtype=np.uint64)
        bits = (w[:, :, None] >> shifts) & np.uint64(1)
        bits = bits.reshape(self.n_streams, n_words * 64)[:, :count]
        return 1.0 - 2.0 * bits.astype(np.float64)

    def uniforms(self, count: int) -> np.ndarray:
        """``count`` uniforms in [0, 1) per stream."""
        w = self.words(count)
        return (w >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def gaussians(self, count: int) -> np.ndarray:
        """``count`` standard normals per stream (Box-Muller)."""
        pairs = (count + 1) // 2
        w = self.words(2 * pairs)
        # u1 in (0, 1] so the log is finite; u2 in [0, 1).
        u1 = ((w[:, 0::2] >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53
        u2 = (w[:, 1::2] >> np.uint64(11)).astype(np.float64) * 2.0**-53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = (2.0 * np.pi) * u2
        z = np.empty((self.n_streams, 2 * pairs), dtype=np.float64)
        z[:, 0::2] = r * np.cos(theta)
        z[:, 1::2] = r * np.sin(theta)
        return z[:, :count]
