"""Command-line front end: codebook training, beam grids, Monte-Carlo sweeps.

Exit codes: 0 on success, 2 on configuration errors (bad files, unresolvable
references), 3 on numerical degeneracy.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .codebooks import beamsteering_codebook, load_codebook, save_codebook
from .config import ChannelStats, SystemConfig
from .exceptions import (
    CodebookFormatError,
    ConfigError,
    DegenerateCodewordError,
    EmptyCellError,
    InfeasibleCodebookError,
)
from .greedy import feedback_bits
from .sweep import (
    cluster_sweep,
    load_experiment_config,
    rf_chain_sweep,
    run_sweep,
    write_csv,
    write_json,
)
from .training import BasebandCodebookTrainer, RFCodebookTrainer, build_training_set

_CONFIG_ERRORS = (ConfigError, CodebookFormatError, FileNotFoundError, KeyError, TypeError)
_DEGENERATE_ERRORS = (
    DegenerateCodewordError,
    EmptyCellError,
    InfeasibleCodebookError,
    np.linalg.LinAlgError,
)


def _load_train_config(path):
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read training config {path}: {exc}") from exc
    try:
        system = SystemConfig(**doc.get("system", {}))
        stats_doc = dict(doc.get("channel_stats", {}))
        if "angle_spread_deg" in stats_doc:
            stats_doc["angle_spread"] = float(np.radians(stats_doc.pop("angle_spread_deg")))
        stats = ChannelStats(**stats_doc)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid training config {path}: {exc}") from exc
    return doc, system, stats


def _write_trace(trace: np.ndarray, path) -> None:
    lines = ["iteration,unconstrained_distortion,rf_distortion"]
    for i, row in enumerate(trace):
        rf = row[1] if len(row) > 1 else ""
        lines.append(f"{i},{row[0]!r},{rf!r}" if rf != "" else f"{i},{row[0]!r},")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _cmd_train_rf(args) -> int:
    doc, system, stats = _load_train_config(args.config)
    train_doc = doc.get("training", {})
    seed = args.seed if args.seed is not None else int(doc.get("seed", 0))
    member_rank = train_doc.get("member_rank")
    if member_rank is None:
        member_rank = system.n_s if system.n_s < system.n_rf else system.n_rf

    training = build_training_set(
        system, stats, int(train_doc.get("n_train", 1000)), system.n_rf,
        np.random.default_rng([seed, 0]),
    )
    trainer = RFCodebookTrainer(
        n_codewords=int(train_doc.get("n_codewords", 64)),
        rank=system.n_rf,
        phase_bits=int(train_doc.get("phase_bits", 6)),
        member_rank=int(member_rank),
        max_iter=int(train_doc.get("max_iter", 50)),
        tol=float(train_doc.get("tol", 1e-4)),
        random_state=np.random.default_rng([seed, 1]),
    ).fit(training)
    save_codebook(trainer.to_codebook(), args.out)
    if args.trace:
        _write_trace(trainer.distortion_trace_, args.trace)
    print(
        f"trained rf codebook: size={trainer.codewords_.shape[0]} "
        f"iterations={trainer.n_iter_} "
        f"distortion={trainer.distortion_trace_[-1, 0]:.6f} -> {args.out}"
    )
    return 0


def _cmd_train_bb(args) -> int:
    doc, system, stats = _load_train_config(args.config)
    bb_doc = doc.get("baseband", {})
    train_doc = doc.get("training", {})
    seed = args.seed if args.seed is not None else int(doc.get("seed", 0))
    if system.n_s >= system.n_rf:
        raise ConfigError("baseband codebooks require n_s < n_rf")
    rf_cb = load_codebook(args.rf)
    if rf_cb.kind != "rf-matrix":
        raise ConfigError(f"{args.rf}: expected an rf-matrix codebook, found {rf_cb.kind!r}")

    training = build_training_set(
        system, stats, int(train_doc.get("n_train", 1000)), system.n_rf,
        np.random.default_rng([seed, 0]),
    )
    trainer = BasebandCodebookTrainer(
        rf_codebook=rf_cb,
        n_codewords=int(bb_doc.get("n_codewords", 8)),
        n_streams=system.n_s,
        max_iter=int(bb_doc.get("max_iter", 50)),
        tol=float(bb_doc.get("tol", 1e-4)),
        random_state=np.random.default_rng([seed, 2]),
    ).fit(training)
    save_codebook(trainer.to_codebook(), args.out)
    if args.trace:
        _write_trace(trainer.distortion_trace_, args.trace)
    print(
        f"trained baseband codebook: size={trainer.codewords_.shape[0]} "
        f"iterations={trainer.n_iter_} -> {args.out}"
    )
    return 0


def _cmd_gen_vcb(args) -> int:
    if args.method == "beamsteering":
        cb = beamsteering_codebook(args.size, args.n_bs, args.spacing, args.phase_bits)
    else:
        if not args.config:
            raise ConfigError("--config is required for the lloyd method")
        doc, system, stats = _load_train_config(args.config)
        train_doc = doc.get("training", {})
        seed = args.seed if args.seed is not None else int(doc.get("seed", 0))
        training = build_training_set(
            system, stats, int(train_doc.get("n_train", 1000)), 1,
            np.random.default_rng([seed, 0]),
        )
        trainer = RFCodebookTrainer(
            n_codewords=args.size,
            rank=1,
            phase_bits=args.phase_bits,
            max_iter=int(train_doc.get("max_iter", 50)),
            tol=float(train_doc.get("tol", 1e-4)),
            random_state=np.random.default_rng([seed, 1]),
        ).fit(training)
        cb = trainer.to_codebook()
    save_codebook(cb, args.out)
    print(f"wrote {cb.kind} codebook of size {cb.size} -> {args.out}")
    return 0


def _run_sweep_command(args, runner) -> int:
    cfg = load_experiment_config(args.config, full_scale=args.full_scale)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    result = runner(cfg, args)
    write_csv(result, args.out, timing=args.timing)
    if args.json_out:
        write_json(result, args.json_out, timing=args.timing)
    print(f"wrote {len(result.rows)} rows -> {args.out}")
    return 0


def _cmd_sweep(args) -> int:
    return _run_sweep_command(args, lambda cfg, a: run_sweep(cfg))


def _cmd_cluster_sweep(args) -> int:
    grid = [int(v) for v in args.clusters.split(",")]
    return _run_sweep_command(args, lambda cfg, a: cluster_sweep(cfg, grid))


def _cmd_rfchain_sweep(args) -> int:
    grid = [int(v) for v in args.nrf.split(",")]
    return _run_sweep_command(args, lambda cfg, a: rf_chain_sweep(cfg, grid))


def _cmd_bits(args) -> int:
    kwargs = dict(n_rf=args.n_rf, n_s=args.n_s, k_sub=args.k)
    if args.scheme == "matrix":
        kwargs["rf_size"] = args.rf_size
    else:
        kwargs["vcb_size"] = args.vcb_size
    if args.bb_size is not None:
        kwargs["bb_size"] = args.bb_size
    print(feedback_bits(args.scheme, **kwargs))
    return 0


def _add_sweep_args(p):
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--json-out", default=None, help="optional JSON mirror")
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument("--full-scale", action="store_true",
                   help="use the full-scale K=512 / cp=128 dimensions")
    p.add_argument("--timing", action="store_true",
                   help="record measured wall_ms (off by default so equal-seed "
                        "runs emit byte-identical files)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fshybrid",
        description="Frequency-selective hybrid precoding: codebook training and benchmarks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-rf", help="train an RF matrix codebook")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--trace", default=None, help="optional distortion-trace CSV")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_train_rf)

    p = sub.add_parser("train-bb", help="train an equivalent-baseband codebook")
    p.add_argument("--config", required=True)
    p.add_argument("--rf", required=True, help="trained rf-matrix codebook JSON")
    p.add_argument("--out", required=True)
    p.add_argument("--trace", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_train_bb)

    p = sub.add_parser("gen-vcb", help="generate an RF beamforming vector codebook")
    p.add_argument("--method", choices=("beamsteering", "lloyd"), default="beamsteering")
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--n-bs", type=int, default=32)
    p.add_argument("--spacing", type=float, default=0.5)
    p.add_argument("--phase-bits", type=int, default=6)
    p.add_argument("--config", default=None, help="training config (lloyd method)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_vcb)

    p = sub.add_parser("sweep", help="SNR sweep over the configured schemes")
    _add_sweep_args(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("cluster-sweep", help="sweep over the cluster count (one ray each)")
    _add_sweep_args(p)
    p.add_argument("--clusters", default="1,2,3,4,5,6", help="comma-separated cluster counts")
    p.set_defaults(func=_cmd_cluster_sweep)

    p = sub.add_parser("rfchain-sweep", help="sweep over the RF chain count")
    _add_sweep_args(p)
    p.add_argument("--nrf", default="2,3,4", help="comma-separated RF chain counts")
    p.set_defaults(func=_cmd_rfchain_sweep)

    p = sub.add_parser("bits", help="feedback-bit bill of a quantization scheme")
    p.add_argument("--scheme", choices=("matrix", "vector"), required=True)
    p.add_argument("--n-rf", type=int, required=True)
    p.add_argument("--n-s", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--rf-size", type=int, default=None)
    p.add_argument("--vcb-size", type=int, default=None)
    p.add_argument("--bb-size", type=int, default=None)
    p.set_defaults(func=_cmd_bits)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _DEGENERATE_ERRORS as exc:
        print(f"numerical degeneracy: {exc}", file=sys.stderr)
        return 3
    except _CONFIG_ERRORS as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
