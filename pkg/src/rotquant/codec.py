"""Bit-exact wire formats for payloads, codebooks, and vectors.

The rotation itself is never stored: the decoder regenerates it from the
64-bit seed in the header (shared randomness), so an encoded vector costs a
16-byte header plus its quantized body.  All multi-byte integers are
little-endian, floats are IEEE-754 binary64, and bit fields pack
little-endian within bytes (coordinate 0 is bit 0 of byte 0).

Header (16 bytes): magic ``RQ01`` | kind u8 | version u8 | flags u16 |
key u64.  The key is the rotation seed for payload kinds, the training seed
for codebooks, and the length for raw vectors.  Flag bit 0 marks a payload
whose seed travels out of band (key written as zero); bits 1-6 carry
log2(d) and bits 7-8 the layer count for payload kinds; the remaining bits
are kind-specific (kind 1: bit 9 = unbiased mode; kind 2: bits 9-13 =
quantizer bits - 1).  Undefined bits must be zero.
"""

from __future__ import annotations

import math
import struct

import numpy as np

from .bsq import BsqConfig, BsqPayload
from .core import MAX_LAYERS, RotationSpec
from .drive import DrivePayload
from .vq import Codebook

__all__ = [
    "FormatError",
    "serialize",
    "deserialize",
    "wire_size",
    "MAGIC",
    "WIRE_VERSION",
    "KIND_DRIVE",
    "KIND_BSQ",
    "KIND_CODEBOOK",
    "KIND_VECTOR",
]

MAGIC = b"RQ01"
WIRE_VERSION = 1
KIND_DRIVE = 1
KIND_BSQ = 2
KIND_CODEBOOK = 3
KIND_VECTOR = 4

_HEADER = struct.Struct("<4sBBHQ")
_F64 = struct.Struct("<d")
_U32 = struct.Struct("<I")
_OUTLIER = struct.Struct("<Id")

_FLAG_SEED_EXTERNAL = 0x0001


class FormatError(ValueError):
    """Malformed wire data; ``field`` names the offending part."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def _require(cond: bool, field: str, message: str):
    if not cond:
        raise FormatError(field, message)


def _spec_flags(spec: RotationSpec, seed_external: bool) -> int:
    log2d = spec.dim.bit_length() - 1
    flags = (log2d << 1) | (spec.layers << 7)
    if seed_external:
        flags |= _FLAG_SEED_EXTERNAL
    return flags


def _read_spec(flags: int, key: int, kind_bits: int) -> tuple[RotationSpec, int]:
    """Decode the shared rotation fields; returns the spec and the
    kind-specific remainder of the flag word."""
    log2d = (flags >> 1) & 0x3F
    layers = (flags >> 7) & 0x3
    _require(layers <= MAX_LAYERS, "flags", f"layer count {layers} out of range")
    seed = 0 if flags & _FLAG_SEED_EXTERNAL else key
    spec = RotationSpec(dim=1 << log2d, layers=layers, seed=seed)
    return spec, flags >> (9 + kind_bits)


def _pack_codes(codes: np.ndarray, bits: int) -> bytes:
    """Pack b-bit codes contiguously, little-endian bit order."""
    if codes.size == 0:
        return b""
    shifts = np.arange(bits, dtype=np.uint32)
    bit_rows = (codes[:, None] >> shifts[None, :]) & np.uint32(1)
    return np.packbits(bit_rows.astype(np.uint8).reshape(-1),
                       bitorder="little").tobytes()


def _unpack_codes(raw: bytes, count: int, bits: int) -> np.ndarray:
    if count == 0:
        return np.zeros(0, dtype=np.uint32)
    flat = np.unpackbits(np.frombuffer(raw, dtype=np.uint8),
                         bitorder="little", count=count * bits)
    weights = (np.uint32(1) << np.arange(bits, dtype=np.uint32))
    return flat.reshape(count, bits).astype(np.uint32) @ weights


def _serialize_drive(p: DrivePayload, seed_external: bool) -> bytes:
    flags = _spec_flags(p.spec, seed_external)
    if p.mode == "unbiased":
        flags |= 1 << 9
    key = 0 if seed_external else p.spec.seed
    return (_HEADER.pack(MAGIC, KIND_DRIVE, WIRE_VERSION, flags, key)
            + _F64.pack(p.scale) + p.sign_bits)


def _deserialize_drive(flags: int, key: int, body: bytes) -> DrivePayload:
    spec, rest = _read_spec(flags, key, kind_bits=1)
    mode = "unbiased" if (flags >> 9) & 1 else "biased"
    _require(rest == 0, "flags", "reserved flag bits set")
    expected = _F64.size + (spec.dim + 7) // 8
    _require(len(body) == expected, "length",
             f"body is {len(body)} bytes, expected {expected}")
    (scale,) = _F64.unpack_from(body, 0)
    try:
        return DrivePayload(mode=mode, spec=spec, scale=scale,
                            sign_bits=body[_F64.size:])
    except ValueError as e:
        raise FormatError("payload", str(e)) from e


def _serialize_bsq(p: BsqPayload, seed_external: bool) -> bytes:
    flags = _spec_flags(p.spec, seed_external) | ((p.config.bits - 1) << 9)
    key = 0 if seed_external else p.spec.seed
    parts = [
        _HEADER.pack(MAGIC, KIND_BSQ, WIRE_VERSION, flags, key),
        _F64.pack(p.config.tail_mass),
        _F64.pack(p.scale),
        _U32.pack(p.outlier_idx.size),
        _pack_codes(p.codes, p.config.bits),
    ]
    for idx, val in zip(p.outlier_idx.tolist(), p.outlier_val.tolist()):
        parts.append(_OUTLIER.pack(idx, val))
    return b"".join(parts)


def _deserialize_bsq(flags: int, key: int, body: bytes) -> BsqPayload:
    spec, rest = _read_spec(flags, key, kind_bits=5)
    bits = ((flags >> 9) & 0x1F) + 1
    _require(rest == 0, "flags", "reserved flag bits set")
    fixed = _F64.size * 2 + _U32.size
    _require(len(body) >= fixed, "length", "body too short for bsq fields")
    (tail_mass,) = _F64.unpack_from(body, 0)
    (scale,) = _F64.unpack_from(body, _F64.size)
    (n_out,) = _U32.unpack_from(body, 2 * _F64.size)
    _require(n_out <= spec.dim, "outliers",
             f"{n_out} outliers exceed dimension {spec.dim}")
    n_codes = spec.dim - n_out
    code_bytes = (n_codes * bits + 7) // 8
    expected = fixed + code_bytes + n_out * _OUTLIER.size
    _require(len(body) == expected, "length",
             f"body is {len(body)} bytes, expected {expected}")
    try:
        cfg = BsqConfig(bits=bits, tail_mass=tail_mass)
    except ValueError as e:
        raise FormatError("config", str(e)) from e
    codes = _unpack_codes(body[fixed:fixed + code_bytes], n_codes, bits)
    tail = body[fixed + code_bytes:]
    out_idx = np.zeros(n_out, dtype=np.uint32)
    out_val = np.zeros(n_out, dtype=np.float64)
    for t in range(n_out):
        out_idx[t], out_val[t] = _OUTLIER.unpack_from(tail, t * _OUTLIER.size)
    try:
        return BsqPayload(spec=spec, config=cfg, scale=scale, codes=codes,
                          outlier_idx=out_idx, outlier_val=out_val)
    except ValueError as e:
        raise FormatError("payload", str(e)) from e


def _serialize_codebook(cb: Codebook) -> bytes:
    return (_HEADER.pack(MAGIC, KIND_CODEBOOK, WIRE_VERSION, 0, cb.train_seed)
            + _U32.pack(cb.block_dim) + _U32.pack(cb.n_centroids)
            + _F64.pack(cb.radius)
            + cb.centroids.astype("<f8").tobytes())


def _deserialize_codebook(flags: int, key: int, body: bytes) -> Codebook:
    _require(flags == 0, "flags", "reserved flag bits set")
    fixed = 2 * _U32.size + _F64.size
    _require(len(body) >= fixed, "length", "body too short for codebook fields")
    (k_blk,) = _U32.unpack_from(body, 0)
    (m,) = _U32.unpack_from(body, _U32.size)
    (radius,) = _F64.unpack_from(body, 2 * _U32.size)
    _require(k_blk >= 1, "block_dim", "block dimension must be positive")
    _require(m >= 1, "n_centroids", "need at least one centroid")
    expected = fixed + 8 * k_blk * m
    _require(len(body) == expected, "length",
             f"body is {len(body)} bytes, expected {expected}")
    cents = np.frombuffer(body, dtype="<f8", count=k_blk * m,
                          offset=fixed).reshape(m, k_blk)
    _require(bool(np.all(np.isfinite(cents))), "centroids",
             "centroids must be finite")
    with np.errstate(over="ignore"):  # corrupt bytes may square to inf
        recomputed = float(np.max(np.linalg.norm(cents, axis=1)))
    _require(math.isfinite(recomputed), "radius", "centroid norms overflow")
    _require(math.isclose(radius, recomputed, rel_tol=1e-9, abs_tol=1e-12),
             "radius", "stored radius does not match the centroids")
    return Codebook(block_dim=int(k_blk), centroids=cents.astype(np.float64),
                    train_seed=int(key), radius=recomputed)


def _serialize_vector(x: np.ndarray) -> bytes:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("vector must be non-empty and 1-d")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector must be finite")
    return (_HEADER.pack(MAGIC, KIND_VECTOR, WIRE_VERSION, 0, v.size)
            + v.astype("<f8").tobytes())


def _deserialize_vector(flags: int, key: int, body: bytes) -> np.ndarray:
    _require(flags == 0, "flags", "reserved flag bits set")
    _require(1 <= key <= (1 << 40), "d", f"vector length {key} out of range")
    _require(len(body) == 8 * key, "length",
             f"body is {len(body)} bytes, expected {8 * key}")
    v = np.frombuffer(body, dtype="<f8").astype(np.float64)
    _require(bool(np.all(np.isfinite(v))), "values", "vector must be finite")
    return v


def serialize(obj, *, seed_external: bool = False) -> bytes:
    """Encode a payload, codebook, or raw vector to its wire bytes.

    ``seed_external`` zeroes the header seed and sets flag bit 0 for
    deployments that derive seeds from a session key; such a stream
    deserializes with seed 0.
    """
    if isinstance(obj, DrivePayload):
        return _serialize_drive(obj, seed_external)
    if isinstance(obj, BsqPayload):
        return _serialize_bsq(obj, seed_external)
    if isinstance(obj, Codebook):
        return _serialize_codebook(obj)
    if isinstance(obj, np.ndarray):
        return _serialize_vector(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def deserialize(data: bytes):
    """Parse wire bytes; raises :class:`FormatError` naming the bad field,
    never returns a partially parsed object."""
    _require(len(data) >= _HEADER.size, "length",
             f"stream is {len(data)} bytes, header needs {_HEADER.size}")
    magic, kind, version, flags, key = _HEADER.unpack_from(data, 0)
    _require(magic == MAGIC, "magic", f"bad magic {magic!r}")
    _require(version == WIRE_VERSION, "version",
             f"unsupported version {version}")
    body = data[_HEADER.size:]
    if kind == KIND_DRIVE:
        return _deserialize_drive(flags, key, body)
    if kind == KIND_BSQ:
        return _deserialize_bsq(flags, key, body)
    if kind == KIND_CODEBOOK:
        return _deserialize_codebook(flags, key, body)
    if kind == KIND_VECTOR:
        return _deserialize_vector(flags, key, body)
    raise FormatError("kind", f"unknown payload kind {kind}")


def wire_size(obj) -> int:
    """Exact wire footprint in bytes, for bandwidth accounting."""
    if isinstance(obj, DrivePayload):
        return _HEADER.size + _F64.size + (obj.spec.dim + 7) // 8
    if isinstance(obj, BsqPayload):
        n_out = obj.outlier_idx.size
        n_codes = obj.spec.dim - n_out
        return (_HEADER.size + 2 * _F64.size + _U32.size
                + (n_codes * obj.config.bits + 7) // 8
                + n_out * _OUTLIER.size)
    if isinstance(obj, Codebook):
        return (_HEADER.size + 2 * _U32.size + _F64.size
                + 8 * obj.block_dim * obj.n_centroids)
    if isinstance(obj, np.ndarray):
        return _HEADER.size + 8 * obj.size
    raise TypeError(f"cannot size {type(obj).__name__}")
