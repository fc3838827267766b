"""Command-line interface.

Subcommands fall into two groups: pipeline plumbing (``transform``,
``encode``, ``decode``, ``check``) operating on vector/payload files, and
verification runs (``verify-*``, ``dme``, ``report``) that print report rows
and exit non-zero when any check lands on the wrong side of its bound.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import codec
from .adaptive import decide_layers
from .bsq import BsqConfig, BsqPayload, bsq_decode, bsq_encode
from .core import RotationSpec, apply_rotation, inverse_rotation
from .drive import DrivePayload, drive_decode, drive_encode
from .experiments import (
    DEFAULT_MASTER_SEED,
    run_adaptive_decisions,
    run_adaptive_soundness,
    run_bsq_outliers,
    run_bsq_transfer,
    run_cd_expansion,
    run_dme,
    run_drive_biased,
    run_drive_unbiased,
    run_lemma_bottleneck,
    run_scalar_convergence,
    run_vq_decorrelation,
    run_vq_universality,
)
from .generators import KINDS, gen_adversarial
from .reporting import ExperimentConfig, all_ok, render_rows

__all__ = ["main"]

ENCODE_MODES = ("drive-biased", "drive-unbiased", "bsq")


def _parse_dims(text: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad dimension list {text!r}")
    if not dims:
        raise argparse.ArgumentTypeError("empty dimension list")
    return dims


def _add_input_flags(p: argparse.ArgumentParser):
    p.add_argument("--in", dest="input", metavar="FILE",
                   help="vector file (wire kind 4)")
    p.add_argument("--gen", choices=KINDS, help="generate the input instead")
    p.add_argument("--d", type=int, default=1024,
                   help="dimension for --gen (default 1024)")
    p.add_argument("--gen-seed", type=int, default=0,
                   help="seed for the random generator kind")
    p.add_argument("--tail-mass", type=float, default=0.01,
                   help="tail mass shaping grid_midpoints / bsq (default 0.01)")
    p.add_argument("--bits", type=int, default=2,
                   help="quantizer bits for grid_midpoints / bsq (default 2)")


def _load_input(args) -> np.ndarray:
    if args.input and args.gen:
        raise SystemExit("give either --in or --gen, not both")
    if args.input:
        obj = codec.deserialize(Path(args.input).read_bytes())
        if not isinstance(obj, np.ndarray):
            raise SystemExit(f"{args.input} is not a vector file")
        return obj
    if args.gen:
        return gen_adversarial(args.gen, args.d, seed=args.gen_seed,
                               tail_mass=args.tail_mass, bits=args.bits)
    raise SystemExit("an input is required: --in FILE or --gen KIND")


def _emit(rows, config: ExperimentConfig, args) -> int:
    text = render_rows(rows, config=config, fmt=args.format)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        summary = "all checks healthy" if all_ok(rows) else "CHECK FAILED"
        print(f"{len(rows)} rows -> {args.out}: {summary}")
    else:
        print(text, end="")
    return 0 if all_ok(rows) else 1


def _print_json(payload: dict):
    print(json.dumps(payload, indent=2, sort_keys=True))


def cmd_transform(args) -> int:
    x = _load_input(args)
    spec = RotationSpec(dim=x.size, layers=args.layers, seed=args.seed)
    y = inverse_rotation(x, spec) if args.inverse else apply_rotation(x, spec)
    if args.out:
        Path(args.out).write_bytes(codec.serialize(y))
        print(f"wrote {args.out} ({codec.wire_size(y)} bytes)")
    else:
        head = [float(v) for v in y[: min(8, y.size)]]
        _print_json({"d": int(y.size), "layers": spec.layers,
                     "seed": spec.seed, "inverse": bool(args.inverse),
                     "norm": float(np.linalg.norm(y)), "head": head})
    return 0


def cmd_encode(args) -> int:
    x = _load_input(args)
    spec = RotationSpec(dim=x.size, layers=args.layers, seed=args.seed)
    if args.mode in ("drive-biased", "drive-unbiased"):
        payload = drive_encode(x, spec, mode=args.mode.split("-", 1)[1])
    else:
        cfg = BsqConfig(bits=args.bits, tail_mass=args.tail_mass)
        payload = bsq_encode(x, spec, cfg, noise_seed=args.noise_seed)
    data = codec.serialize(payload)
    info = {"mode": args.mode, "d": spec.dim, "layers": spec.layers,
            "seed": spec.seed, "wire_bytes": len(data)}
    if isinstance(payload, BsqPayload):
        info["outliers"] = int(payload.outlier_idx.size)
        info["sent_fraction"] = payload.sent_fraction
    if args.out:
        Path(args.out).write_bytes(data)
        print(f"wrote {args.out} ({len(data)} bytes)")
    else:
        _print_json(info)
    return 0


def cmd_decode(args) -> int:
    obj = codec.deserialize(Path(args.input).read_bytes())
    if isinstance(obj, DrivePayload):
        xhat = drive_decode(obj)
        info = {"kind": "drive", "mode": obj.mode, "d": obj.spec.dim,
                "layers": obj.spec.layers, "seed": obj.spec.seed}
    elif isinstance(obj, BsqPayload):
        xhat = bsq_decode(obj)
        info = {"kind": "bsq", "bits": obj.config.bits,
                "tail_mass": obj.config.tail_mass, "d": obj.spec.dim,
                "layers": obj.spec.layers, "seed": obj.spec.seed,
                "outliers": int(obj.outlier_idx.size)}
    else:
        raise SystemExit(f"{args.input} does not hold a decodable payload")
    info["norm"] = float(np.linalg.norm(xhat))
    if args.ref:
        ref = codec.deserialize(Path(args.ref).read_bytes())
        if not isinstance(ref, np.ndarray) or ref.size != xhat.size:
            raise SystemExit("--ref must be a vector file of matching length")
        denom = float(np.dot(ref, ref))
        if denom <= 0.0:
            raise SystemExit("--ref vector must be non-zero")
        info["vnmse"] = float(np.sum((xhat - ref) ** 2) / denom)
    if args.out:
        Path(args.out).write_bytes(codec.serialize(xhat))
        info["wrote"] = args.out
    _print_json(info)
    return 0


def cmd_check(args) -> int:
    decision = decide_layers(_load_input(args), eta3=args.eta3,
                             eta_inf=args.eta_inf)
    _print_json(decision.to_dict())
    return 0


def cmd_verify_scalar(args) -> int:
    rows = run_scalar_convergence(
        args.dims, trials=args.trials, draws=args.draws,
        kind=args.gen or "two_spike", layers=args.layers,
        master_seed=args.master_seed, threads=args.threads)
    config = ExperimentConfig(
        name="scalar-convergence", dims=args.dims,
        trials=args.trials or 0, master_seed=args.master_seed,
        threads=args.threads,
        params={"kind": args.gen or "two_spike", "layers": args.layers,
                "draws": args.draws})
    return _emit(rows, config, args)


def cmd_verify_drive(args) -> int:
    rows = run_drive_biased(d=args.d, trials=args.trials,
                            master_seed=args.master_seed)
    rows += run_drive_unbiased(d=args.d, trials=args.trials,
                               master_seed=args.master_seed)
    config = ExperimentConfig(
        name="drive", dims=(args.d,), trials=args.trials,
        master_seed=args.master_seed, threads=1, params={})
    return _emit(rows, config, args)


def cmd_verify_bsq(args) -> int:
    rows = run_bsq_outliers(dims=args.dims, draws=args.draws,
                            master_seed=args.master_seed,
                            threads=args.threads)
    rows += run_bsq_transfer(d=args.transfer_d, bits=args.bits,
                             tail=args.tail_mass, trials=args.trials,
                             master_seed=args.master_seed)
    config = ExperimentConfig(
        name="bsq", dims=args.dims, trials=args.trials,
        master_seed=args.master_seed, threads=args.threads,
        params={"bits": args.bits, "tail_mass": args.tail_mass,
                "draws": args.draws, "transfer_d": args.transfer_d})
    return _emit(rows, config, args)


def cmd_verify_vq(args) -> int:
    rows = run_lemma_bottleneck(master_seed=args.master_seed)
    rows += run_vq_decorrelation(dims=args.dims, trials=args.cov_trials,
                                 master_seed=args.master_seed)
    rows += run_vq_universality(dims=args.dims, trials=args.trials,
                                train_seed=args.train_seed,
                                master_seed=args.master_seed,
                                include_negative=not args.skip_negative)
    config = ExperimentConfig(
        name="vq", dims=args.dims, trials=args.trials,
        master_seed=args.master_seed, threads=1,
        params={"cov_trials": args.cov_trials,
                "train_seed": args.train_seed})
    return _emit(rows, config, args)


def cmd_dme(args) -> int:
    rows = run_dme(d=args.d, n_clients=args.clients, trials=args.trials,
                   master_seed=args.master_seed)
    config = ExperimentConfig(
        name="dme", dims=(args.d,), trials=args.trials,
        master_seed=args.master_seed, threads=1,
        params={"clients": list(args.clients)})
    return _emit(rows, config, args)


def cmd_report(args) -> int:
    rows = run_scalar_convergence((256, 1024, 4096),
                                  master_seed=args.master_seed,
                                  threads=args.threads)
    rows += run_drive_biased(master_seed=args.master_seed)
    rows += run_drive_unbiased(master_seed=args.master_seed)
    rows += run_dme(master_seed=args.master_seed)
    rows += run_bsq_outliers(master_seed=args.master_seed,
                             threads=args.threads)
    rows += run_bsq_transfer(master_seed=args.master_seed)
    rows += run_lemma_bottleneck(master_seed=args.master_seed)
    rows += run_vq_decorrelation(master_seed=args.master_seed)
    rows += run_vq_universality(master_seed=args.master_seed)
    rows += run_adaptive_decisions(master_seed=args.master_seed)
    rows += run_adaptive_soundness(master_seed=args.master_seed,
                                   threads=args.threads)
    rows += run_cd_expansion()
    config = ExperimentConfig(
        name="full-report", dims=(256, 1024, 4096), trials=0,
        master_seed=args.master_seed, threads=args.threads, params={})
    return _emit(rows, config, args)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="rotquant",
        description="Composed randomized rotations for quantization: "
                    "transform, encode/decode, and verification harness.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, threads=False):
        p.add_argument("--master-seed", type=int, default=DEFAULT_MASTER_SEED,
                       help=f"seed deriving all trial randomness "
                            f"(default {DEFAULT_MASTER_SEED})")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--out", metavar="FILE", help="write the report here")
        if threads:
            p.add_argument("--threads", type=int, default=1,
                           help="worker threads (result-invariant)")

    p = sub.add_parser("transform", help="apply or invert a seeded rotation")
    _add_input_flags(p)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--seed", type=int, default=0, help="rotation seed")
    p.add_argument("--inverse", action="store_true")
    p.add_argument("--out", metavar="FILE", help="write the result vector")
    p.set_defaults(fn=cmd_transform)

    p = sub.add_parser("encode", help="quantize a vector to a payload file")
    _add_input_flags(p)
    p.add_argument("--mode", choices=ENCODE_MODES, required=True)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--seed", type=int, default=0, help="rotation seed")
    p.add_argument("--noise-seed", type=int, default=0,
                   help="stochastic rounding seed (bsq)")
    p.add_argument("--out", metavar="FILE", help="write the payload here")
    p.set_defaults(fn=cmd_encode)

    p = sub.add_parser("decode", help="reconstruct a vector from a payload")
    p.add_argument("--in", dest="input", metavar="FILE", required=True)
    p.add_argument("--ref", metavar="FILE",
                   help="original vector file; prints this realization's vNMSE")
    p.add_argument("--out", metavar="FILE", help="write the reconstruction")
    p.set_defaults(fn=cmd_decode)

    p = sub.add_parser("check", help="O(d) layer-count recommendation")
    _add_input_flags(p)
    p.add_argument("--eta3", type=float, default=None,
                   help="override the third-moment threshold")
    p.add_argument("--eta-inf", dest="eta_inf", type=float, default=None,
                   help="override the max-mass threshold")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("verify-scalar",
                       help="Kolmogorov / Wasserstein convergence checks")
    common(p, threads=True)
    p.add_argument("--gen", choices=KINDS, default="two_spike")
    p.add_argument("--dims", type=_parse_dims, default=(256, 1024, 4096))
    p.add_argument("--trials", type=int, default=None,
                   help="rotations per dimension")
    p.add_argument("--draws", type=int, default=None,
                   help="pooled coordinate draws per dimension")
    p.add_argument("--layers", type=int, default=2)
    p.set_defaults(fn=cmd_verify_scalar)

    p = sub.add_parser("verify-drive", help="sign-quantizer error checks")
    common(p)
    p.add_argument("--d", type=int, default=4096)
    p.add_argument("--trials", type=int, default=10_000)
    p.set_defaults(fn=cmd_verify_drive)

    p = sub.add_parser("verify-bsq",
                       help="outlier-fraction and error-transfer checks")
    common(p, threads=True)
    p.add_argument("--dims", type=_parse_dims, default=(1024, 4096))
    p.add_argument("--draws", type=int, default=1_000_000)
    p.add_argument("--transfer-d", type=int, default=1024)
    p.add_argument("--bits", type=int, default=2)
    p.add_argument("--tail-mass", type=float, default=0.01)
    p.add_argument("--trials", type=int, default=1000)
    p.set_defaults(fn=cmd_verify_bsq)

    p = sub.add_parser("verify-vq",
                       help="bottleneck, decorrelation, and codebook checks")
    common(p)
    p.add_argument("--dims", type=_parse_dims, default=(256, 1024, 4096))
    p.add_argument("--trials", type=int, default=10_000,
                   help="universality rotations per dimension")
    p.add_argument("--cov-trials", type=int, default=1000)
    p.add_argument("--train-seed", type=int, default=2024)
    p.add_argument("--skip-negative", action="store_true",
                   help="skip the 2-layer negative control")
    p.set_defaults(fn=cmd_verify_vq)

    p = sub.add_parser("dme", help="distributed mean estimation simulation")
    common(p)
    p.add_argument("--d", type=int, default=4096)
    p.add_argument("--clients", type=_parse_dims, default=(1, 4, 16))
    p.add_argument("--trials", type=int, default=1000)
    p.set_defaults(fn=cmd_dme)

    p = sub.add_parser("report", help="run every verification at full scale")
    common(p, threads=True)
    p.set_defaults(fn=cmd_report)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
