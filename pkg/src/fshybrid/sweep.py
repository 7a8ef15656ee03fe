"""Configuration-driven Monte-Carlo spectral-efficiency experiments.

All schemes within a sweep see the same channel realizations (common random
numbers): the channel for realization ``i`` is drawn from a generator
derived from ``(seed, i)``, so runs are reproducible and parallelizable
without changing results. Output rows hold per-(scheme, SNR) mean spectral
efficiency, its standard error, and the feedback-bit bill of the scheme.
"""

from __future__ import annotations

import json
import time
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .channel import WidebandChannel, channel_rng, generate_channel
from .codebooks import Codebook, load_codebook
from .config import ChannelStats, SystemConfig
from .exceptions import ConfigError
from .greedy import approx_gs_hp, dg_hp, exhaustive_subset_search, feedback_bits, gs_hp
from .precoding import (
    PowerConstraint,
    _effective_svds,
    exhaustive_rf_search,
    mutual_information,
    unconstrained_mi,
)

CSV_COLUMNS = ("scheme", "snr_db", "param", "mean_se", "stderr", "n", "feedback_bits", "wall_ms")


@dataclass
class SweepRow:
    scheme: str
    snr_db: float
    param: str = ""
    mean_se: float = 0.0
    stderr: float = 0.0
    n: int = 0
    feedback_bits: int = 0
    wall_ms: float = 0.0


@dataclass
class SweepResult:
    rows: list[SweepRow] = field(default_factory=list)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(result: SweepResult, path, timing: bool = True) -> None:
    """Fixed-column CSV; the decimal separator is always '.'.

    With ``timing=False`` the wall_ms column is zeroed so that equal-seed
    runs produce byte-identical files.
    """
    lines = [",".join(CSV_COLUMNS)]
    for row in result.rows:
        wall = row.wall_ms if timing else 0.0
        lines.append(
            ",".join(
                [
                    row.scheme,
                    _fmt(float(row.snr_db)),
                    str(row.param),
                    _fmt(float(row.mean_se)),
                    _fmt(float(row.stderr)),
                    str(int(row.n)),
                    str(int(row.feedback_bits)),
                    _fmt(float(wall)),
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_json(result: SweepResult, path, timing: bool = True) -> None:
    doc = [
        {
            "scheme": r.scheme,
            "snr_db": float(r.snr_db),
            "param": r.param,
            "mean_se": float(r.mean_se),
            "stderr": float(r.stderr),
            "n": int(r.n),
            "feedback_bits": int(r.feedback_bits),
            "wall_ms": float(r.wall_ms if timing else 0.0),
        }
        for r in result.rows
    ]
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, sort_keys=True, separators=(",", ":"))
        f.write("\n")


def read_csv(path) -> SweepResult:
    lines = Path(path).read_text(encoding="utf-8").strip().splitlines()
    if lines[0] != ",".join(CSV_COLUMNS):
        raise ConfigError(f"{path}: unexpected CSV header")
    rows = []
    for line in lines[1:]:
        parts = line.split(",")
        rows.append(
            SweepRow(
                scheme=parts[0],
                snr_db=float(parts[1]),
                param=parts[2],
                mean_se=float(parts[3]),
                stderr=float(parts[4]),
                n=int(parts[5]),
                feedback_bits=int(parts[6]),
                wall_ms=float(parts[7]),
            )
        )
    return SweepResult(rows)


# ---------------------------------------------------------------------------
# Schemes


class Scheme:
    """One spectral-efficiency evaluation strategy."""

    name: str

    def evaluate(self, channel: WidebandChannel, rho: float, system: SystemConfig) -> float:
        raise NotImplementedError

    def feedback_bits(self, system: SystemConfig) -> int:
        return 0


class UnconstrainedSVDScheme(Scheme):
    def __init__(self, mode: PowerConstraint):
        self.mode = mode
        self.name = f"unconstrained-svd[{mode.value}]"

    def evaluate(self, channel, rho, system):
        return unconstrained_mi(channel, rho, system.n_s, self.mode)


class ExhaustiveRFScheme(Scheme):
    """Optimal hybrid precoding with exhaustive RF search.

    With an rf-matrix codebook the search runs over the codewords; with an
    rf-vector codebook it runs over every n_rf-subset of the beams (the
    brute-force benchmark for the greedy selectors, unitary mode only).
    """

    def __init__(self, mode: PowerConstraint, codebook: Codebook, bb_size: int | None = None):
        self.mode = mode
        self.codebook = codebook
        self.bb_size = bb_size
        self.name = f"exhaustive-rf[{mode.value}]"

    def evaluate(self, channel, rho, system):
        if self.codebook.kind == "rf-vector":
            if self.mode is not PowerConstraint.UNITARY:
                raise ConfigError("subset-exhaustive search supports unitary mode only")
            return exhaustive_subset_search(
                self.codebook, channel, rho, system.n_rf, system.n_s
            ).mi
        _, mi = exhaustive_rf_search(
            self.codebook.codewords, channel, rho, self.mode, system.n_s
        )
        return mi

    def feedback_bits(self, system):
        kind = "vector" if self.codebook.kind == "rf-vector" else "matrix"
        size_arg = {"vcb_size": self.codebook.size} if kind == "vector" else {
            "rf_size": self.codebook.size
        }
        bb = None if system.n_s == system.n_rf else self.bb_size
        return feedback_bits(
            kind, n_rf=system.n_rf, n_s=system.n_s, k_sub=system.k_sub,
            bb_size=bb, **size_arg,
        )


class LimitedFeedbackScheme(Scheme):
    """Trained RF matrix codebook plus (when n_s < n_rf) a quantized
    equivalent-baseband codebook, both selected by mutual information."""

    def __init__(self, rf_codebook: Codebook, bb_codebook: Codebook | None = None):
        self.rf_codebook = rf_codebook
        self.bb_codebook = bb_codebook
        self.name = "limited-feedback"

    def evaluate(self, channel, rho, system):
        n_s = system.n_s
        idx, mi = exhaustive_rf_search(
            self.rf_codebook.codewords, channel, rho, PowerConstraint.UNITARY, n_s
        )
        if system.n_s == system.n_rf or self.bb_codebook is None:
            return mi
        f_rf = self.rf_codebook.codewords[idx]
        s_bar, v_bar = _effective_svds(channel, f_rf)
        c = rho / n_s
        terms = np.full(channel.k_sub, -np.inf)
        for g in self.bb_codebook.codewords:
            w = (s_bar[:, :, None] * v_bar.conj().transpose(0, 2, 1)) @ g
            gram = w.conj().transpose(0, 2, 1) @ w
            lam = np.clip(np.linalg.eigvalsh(gram), 0.0, None)
            terms = np.maximum(terms, np.sum(np.log1p(c * lam), axis=1) / np.log(2.0))
        return float(np.mean(terms))

    def feedback_bits(self, system):
        bb = None if system.n_s == system.n_rf else (
            self.bb_codebook.size if self.bb_codebook is not None else None
        )
        return feedback_bits(
            "matrix", n_rf=system.n_rf, n_s=system.n_s, k_sub=system.k_sub,
            rf_size=self.rf_codebook.size, bb_size=bb,
        )


class _VectorCodebookScheme(Scheme):
    def __init__(self, vcb: Codebook, bb_size: int | None = None):
        self.vcb = vcb
        self.bb_size = bb_size

    def feedback_bits(self, system):
        bb = None if system.n_s == system.n_rf else self.bb_size
        return feedback_bits(
            "vector", n_rf=system.n_rf, n_s=system.n_s, k_sub=system.k_sub,
            vcb_size=self.vcb.size, bb_size=bb,
        )


class DGHPScheme(_VectorCodebookScheme):
    name = "dg-hp"

    def evaluate(self, channel, rho, system):
        return dg_hp(self.vcb, channel, rho, system.n_rf, system.n_s).mi


class GSHPScheme(_VectorCodebookScheme):
    name = "gs-hp"

    def evaluate(self, channel, rho, system):
        return gs_hp(self.vcb, channel, rho, system.n_rf, system.n_s).mi


class ApproxGSHPScheme(_VectorCodebookScheme):
    name = "approx-gs-hp"

    def evaluate(self, channel, rho, system):
        p = approx_gs_hp(self.vcb, channel, system.n_rf, system.n_s, rho)
        return mutual_information(channel, p, rho)


# ---------------------------------------------------------------------------
# Configuration


@dataclass
class ExperimentConfig:
    system: SystemConfig
    channel_stats: ChannelStats
    schemes: list[Scheme]
    snr_grid_db: list[float]
    n_realizations: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.n_realizations < 1:
            raise ConfigError("n_realizations must be at least 1")
        if not self.schemes:
            raise ConfigError("at least one scheme is required")


def _load_ref(ref, base: Path, expect_kinds) -> Codebook:
    path = Path(ref)
    if not path.is_absolute():
        path = base / path
    if not path.exists():
        raise ConfigError(f"codebook reference {ref!r} does not resolve ({path})")
    cb = load_codebook(path)
    if cb.kind not in expect_kinds:
        raise ConfigError(f"{path}: expected one of {expect_kinds}, found {cb.kind!r}")
    return cb


def scheme_from_dict(spec: dict, base: Path) -> Scheme:
    kind = spec.get("type")
    if kind == "unconstrained-svd":
        return UnconstrainedSVDScheme(PowerConstraint.from_name(spec.get("mode", "unitary")))
    if kind == "exhaustive-rf":
        cb = _load_ref(spec["codebook"], base, ("rf-matrix", "rf-vector"))
        return ExhaustiveRFScheme(
            PowerConstraint.from_name(spec.get("mode", "unitary")), cb, spec.get("bb_size")
        )
    if kind == "limited-feedback":
        rf = _load_ref(spec["rf_codebook"], base, ("rf-matrix",))
        bb = None
        if spec.get("bb_codebook"):
            bb = _load_ref(spec["bb_codebook"], base, ("baseband",))
        return LimitedFeedbackScheme(rf, bb)
    if kind in ("dg-hp", "gs-hp", "approx-gs-hp"):
        vcb = _load_ref(spec["codebook"], base, ("rf-vector",))
        cls = {"dg-hp": DGHPScheme, "gs-hp": GSHPScheme, "approx-gs-hp": ApproxGSHPScheme}[kind]
        return cls(vcb, spec.get("bb_size"))
    raise ConfigError(f"unknown scheme type {kind!r}")


def load_experiment_config(path, full_scale: bool = False) -> ExperimentConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read experiment config {path}: {exc}") from exc
    try:
        system = SystemConfig(**doc.get("system", {}))
        stats_doc = dict(doc.get("channel_stats", {}))
        if "angle_spread_deg" in stats_doc:
            stats_doc["angle_spread"] = float(np.radians(stats_doc.pop("angle_spread_deg")))
        stats = ChannelStats(**stats_doc)
        if full_scale:
            system = replace(system, k_sub=512, cp_len=128)
        schemes = [scheme_from_dict(s, path.parent) for s in doc.get("schemes", [])]
        return ExperimentConfig(
            system=system,
            channel_stats=stats,
            schemes=schemes,
            snr_grid_db=[float(v) for v in doc.get("snr_grid_db", [0.0])],
            n_realizations=int(doc.get("n_realizations", 200)),
            seed=int(doc.get("seed", 0)),
        )
    except (TypeError, ValueError, KeyError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid experiment config {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Runners


def _sweep_once(cfg: ExperimentConfig, param: str = "",
                system: SystemConfig | None = None,
                stats: ChannelStats | None = None) -> list[SweepRow]:
    system = cfg.system if system is None else system
    stats = cfg.channel_stats if stats is None else stats
    shape = (len(cfg.schemes), len(cfg.snr_grid_db))
    se = np.zeros(shape + (cfg.n_realizations,))
    wall = np.zeros(shape)
    for real in range(cfg.n_realizations):
        ch = generate_channel(system, stats, channel_rng(cfg.seed, real))
        for i, scheme in enumerate(cfg.schemes):
            for j, snr_db in enumerate(cfg.snr_grid_db):
                rho = 10.0 ** (snr_db / 10.0)
                t0 = time.perf_counter()
                se[i, j, real] = scheme.evaluate(ch, rho, system)
                wall[i, j] += (time.perf_counter() - t0) * 1e3
    rows = []
    for i, scheme in enumerate(cfg.schemes):
        bits = scheme.feedback_bits(system)
        for j, snr_db in enumerate(cfg.snr_grid_db):
            vals = se[i, j]
            stderr = float(np.std(vals, ddof=1) / np.sqrt(len(vals))) if len(vals) > 1 else 0.0
            rows.append(
                SweepRow(
                    scheme=scheme.name,
                    snr_db=float(snr_db),
                    param=param,
                    mean_se=float(np.mean(vals)),
                    stderr=stderr,
                    n=cfg.n_realizations,
                    feedback_bits=bits,
                    wall_ms=float(wall[i, j]),
                )
            )
    return rows


def run_sweep(cfg: ExperimentConfig) -> SweepResult:
    """Evaluate every (scheme, SNR) pair over shared channel realizations."""
    return SweepResult(_sweep_once(cfg))


def cluster_sweep(cfg: ExperimentConfig, clusters_grid) -> SweepResult:
    """Sweep over the cluster count with a single ray per cluster."""
    rows = []
    for n_clusters in clusters_grid:
        stats = replace(
            cfg.channel_stats, n_clusters=int(n_clusters), rays_per_cluster=1
        )
        rows.extend(_sweep_once(cfg, param=str(int(n_clusters)), stats=stats))
    return SweepResult(rows)


def rf_chain_sweep(cfg: ExperimentConfig, nrf_grid) -> SweepResult:
    """Sweep over the RF chain count at a fixed stream count.

    Channels do not depend on n_rf, so realizations are shared across the
    whole grid; grid entries below n_s are skipped with a warning.
    """
    rows = []
    for n_rf in nrf_grid:
        if n_rf < cfg.system.n_s:
            warnings.warn(f"skipping n_rf={n_rf} < n_s={cfg.system.n_s}")
            continue
        system = replace(cfg.system, n_rf=int(n_rf))
        rows.extend(_sweep_once(cfg, param=str(int(n_rf)), system=system))
    return SweepResult(rows)
