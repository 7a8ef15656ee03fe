"""Geometric wideband cluster channels and their per-subcarrier matrices.

A channel realization is sampled in three stages: draw cluster/ray
parameters, evaluate the pulse-shaped delay taps, and DFT the taps into
per-subcarrier frequency-domain matrices. Subcarriers are indexed
0..K-1 throughout; the exponent set of the tap-to-subcarrier transform
is unchanged by this choice because index K coincides with index 0.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .config import ChannelStats, SystemConfig
from .validation import check_rng

_MAGIC = b"FSHCH1\n"


def array_response_ula(angle: float, n: int, spacing: float) -> np.ndarray:
    """Unit-norm uniform-linear-array response vector.

    Entry m is (1/sqrt(n)) * exp(j * 2*pi * spacing * m * sin(angle)),
    m = 0..n-1, with ``spacing`` in wavelengths.
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"array size must be a positive integer, got {n!r}")
    if not spacing > 0:
        raise ValueError("antenna spacing must be positive")
    phases = 2.0 * np.pi * spacing * np.sin(angle) * np.arange(n)
    return np.exp(1j * phases) / np.sqrt(n)


def raised_cosine(t, rolloff: float):
    """Raised-cosine pulse at ``t`` (sample units), removable singularity included.

    p(t) = sinc(t) * cos(pi*b*t) / (1 - (2*b*t)^2), with the limit value
    (pi/4) * sinc(1/(2*b)) substituted where the denominator vanishes.
    Accepts scalars or arrays.
    """
    if not 0.0 < rolloff <= 1.0:
        raise ValueError(f"rolloff must lie in (0, 1], got {rolloff}")
    t = np.asarray(t, dtype=float)
    denom = 1.0 - (2.0 * rolloff * t) ** 2
    singular = np.abs(denom) < 1e-9
    safe = np.where(singular, 1.0, denom)
    regular = np.sinc(t) * np.cos(np.pi * rolloff * t) / safe
    limit = (np.pi / 4.0) * np.sinc(1.0 / (2.0 * rolloff))
    out = np.where(singular, limit, regular)
    return out if out.ndim else float(out)


@dataclass
class Ray:
    rel_delay: float        # excess delay over the cluster delay, samples
    aoa_shift: float
    aod_shift: float
    gain: complex


@dataclass
class Cluster:
    delay: float            # samples
    aoa: float              # radians in [0, 2*pi)
    aod: float
    rays: list[Ray]


@dataclass
class ClusterSet:
    """Sampled geometry of one channel realization."""

    path_loss: float
    clusters: list[Cluster]

    def __post_init__(self):
        if not self.clusters:
            raise ValueError("a ClusterSet needs at least one cluster")
        for c in self.clusters:
            if not c.rays:
                raise ValueError("every cluster needs at least one ray")


def sample_cluster_set(stats: ChannelStats, cp_len: int, rng) -> ClusterSet:
    """Draw one ClusterSet.

    Cluster center delays are uniform on [0, cp_len]; ray excess delays are
    exponential with mean ``stats.ray_delay_spread``; absolute delays are
    clamped to [0, cp_len]. Center angles are uniform on [0, 2*pi); per-ray
    angle offsets are zero-mean Laplacian with standard deviation
    ``stats.angle_spread``. Ray gains are circular complex Gaussian with
    variance 1/(n_clusters * rays_per_cluster), so the expected channel
    energy does not depend on the cluster count.
    """
    rng = check_rng(rng)
    n_c, n_r = stats.n_clusters, stats.rays_per_cluster
    lap_scale = stats.angle_spread / np.sqrt(2.0)
    gain_std = np.sqrt(1.0 / (2.0 * n_c * n_r))  # per real component

    clusters = []
    for _ in range(n_c):
        delay = rng.uniform(0.0, cp_len)
        aoa = rng.uniform(0.0, 2.0 * np.pi)
        aod = rng.uniform(0.0, 2.0 * np.pi)
        rays = []
        for _ in range(n_r):
            if stats.ray_delay_spread > 0:
                rel = rng.exponential(stats.ray_delay_spread)
            else:
                rel = 0.0
            rel = min(rel, cp_len - delay)  # clamp absolute delay into [0, cp_len]
            aoa_shift = rng.laplace(0.0, lap_scale) if lap_scale > 0 else 0.0
            aod_shift = rng.laplace(0.0, lap_scale) if lap_scale > 0 else 0.0
            gain = complex(rng.normal(0.0, gain_std), rng.normal(0.0, gain_std))
            rays.append(Ray(rel, aoa_shift, aod_shift, gain))
        clusters.append(Cluster(delay, aoa, aod, rays))
    return ClusterSet(path_loss=stats.path_loss, clusters=clusters)


def delay_tap(cs: ClusterSet, d: int, cfg: SystemConfig) -> np.ndarray:
    """The delay-``d`` MIMO tap matrix (n_ms x n_bs) of a cluster set."""
    if not 0 <= d < cfg.cp_len:
        raise ValueError(f"tap index {d} outside [0, {cfg.cp_len})")
    scale = np.sqrt(cfg.n_bs * cfg.n_ms / cs.path_loss)
    h = np.zeros((cfg.n_ms, cfg.n_bs), dtype=np.complex128)
    for cl in cs.clusters:
        for ray in cl.rays:
            p = raised_cosine(d - cl.delay - ray.rel_delay, cfg.rolloff)
            if p == 0.0:
                continue
            a_ms = array_response_ula(cl.aoa - ray.aoa_shift, cfg.n_ms, cfg.antenna_spacing)
            a_bs = array_response_ula(cl.aod - ray.aod_shift, cfg.n_bs, cfg.antenna_spacing)
            h += (ray.gain * p) * np.outer(a_ms, a_bs.conj())
    return scale * h


def delay_taps(cs: ClusterSet, cfg: SystemConfig) -> np.ndarray:
    """All cp_len delay taps, stacked as (cp_len, n_ms, n_bs).

    Vectorized over rays and taps; agrees with :func:`delay_tap` per tap.
    """
    gains, delays, aoas, aods = [], [], [], []
    for cl in cs.clusters:
        for ray in cl.rays:
            gains.append(ray.gain)
            delays.append(cl.delay + ray.rel_delay)
            aoas.append(cl.aoa - ray.aoa_shift)
            aods.append(cl.aod - ray.aod_shift)
    gains = np.asarray(gains, dtype=np.complex128)
    pulse = raised_cosine(
        np.arange(cfg.cp_len)[None, :] - np.asarray(delays)[:, None], cfg.rolloff
    )
    a_ms = np.exp(
        2j * np.pi * cfg.antenna_spacing
        * np.sin(np.asarray(aoas))[:, None] * np.arange(cfg.n_ms)[None, :]
    ) / np.sqrt(cfg.n_ms)
    a_bs = np.exp(
        2j * np.pi * cfg.antenna_spacing
        * np.sin(np.asarray(aods))[:, None] * np.arange(cfg.n_bs)[None, :]
    ) / np.sqrt(cfg.n_bs)
    taps = np.einsum("r,rd,rm,rn->dmn", gains, pulse, a_ms, a_bs.conj())
    return np.sqrt(cfg.n_bs * cfg.n_ms / cs.path_loss) * taps


def to_subcarriers(taps: np.ndarray, k_sub: int, seed: int | None = None) -> "WidebandChannel":
    """DFT the delay taps into K per-subcarrier channel matrices.

    H[k] = sum_d taps[d] * exp(-j*2*pi*k*d/K), k = 0..K-1.
    """
    taps = np.asarray(taps, dtype=np.complex128)
    if taps.ndim != 3 or taps.shape[0] == 0:
        raise ValueError("taps must be a non-empty (D, n_ms, n_bs) stack")
    if taps.shape[0] > k_sub:
        raise ValueError(f"number of taps ({taps.shape[0]}) exceeds k_sub ({k_sub})")
    per_subcarrier = np.fft.fft(taps, n=k_sub, axis=0)
    return WidebandChannel(per_subcarrier, seed=seed)


def truncated_svd(h: np.ndarray, r: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Rank-r truncated SVD ``(u, sigma, v)`` with ``h ~ u @ diag(sigma) @ v*``.

    Singular values come out descending; each right singular vector is
    rotated so its first non-negligible entry is real-positive, which makes
    cached decompositions reproducible.
    """
    h = np.asarray(h, dtype=np.complex128)
    if h.ndim != 2:
        raise ValueError("h must be a matrix")
    if not 1 <= r <= min(h.shape):
        raise ValueError(f"rank {r} outside [1, {min(h.shape)}]")
    u, s, vh = np.linalg.svd(h, full_matrices=False)
    u, s, v = u[:, :r], s[:r], vh.conj().T[:, :r]
    u, v = _fix_svd_phases(u, v)
    return u, s, v


def _fix_svd_phases(u, v):
    """Rotate each (u, v) column pair so v's first non-negligible entry is real-positive."""
    anchor = np.max(np.abs(v), axis=0, initial=0.0)
    for j in range(v.shape[1]):
        if anchor[j] == 0.0:
            continue
        idx = np.argmax(np.abs(v[:, j]) > 1e-12 * anchor[j])
        a = v[idx, j]
        if a != 0.0:
            c = np.conj(a) / abs(a)
            v[:, j] *= c
            u[:, j] *= c
    return u, v


@dataclass
class WidebandChannel:
    """K per-subcarrier channel matrices plus lazily cached truncated SVDs."""

    per_subcarrier: np.ndarray          # (K, n_ms, n_bs)
    seed: int | None = None
    _svd: tuple | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.per_subcarrier = np.asarray(self.per_subcarrier, dtype=np.complex128)
        if self.per_subcarrier.ndim != 3:
            raise ValueError("per_subcarrier must have shape (K, n_ms, n_bs)")

    @property
    def k_sub(self) -> int:
        return self.per_subcarrier.shape[0]

    @property
    def n_ms(self) -> int:
        return self.per_subcarrier.shape[1]

    @property
    def n_bs(self) -> int:
        return self.per_subcarrier.shape[2]

    def svds(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Full-rank truncated SVDs of every subcarrier, cached.

        Returns ``(u, s, v)`` with shapes (K, n_ms, r), (K, r), (K, n_bs, r)
        and r = min(n_ms, n_bs).
        """
        if self._svd is None:
            r = min(self.n_ms, self.n_bs)
            us, ss, vs = [], [], []
            for k in range(self.k_sub):
                u, s, v = truncated_svd(self.per_subcarrier[k], r)
                us.append(u)
                ss.append(s)
                vs.append(v)
            self._svd = (np.stack(us), np.stack(ss), np.stack(vs))
        return self._svd

    def right_bases(self, r: int) -> np.ndarray:
        """Top-r right singular bases, shape (K, n_bs, r)."""
        return self.svds()[2][:, :, :r]

    def singular_values(self, r: int | None = None) -> np.ndarray:
        s = self.svds()[1]
        return s if r is None else s[:, :r]


def generate_channel(cfg: SystemConfig, stats: ChannelStats, rng=None) -> WidebandChannel:
    """Sample a ClusterSet and return its wideband channel."""
    rng = check_rng(cfg.rng_seed if rng is None else rng)
    cs = sample_cluster_set(stats, cfg.cp_len, rng)
    return to_subcarriers(delay_taps(cs, cfg), cfg.k_sub)


def channel_rng(seed: int, realization: int) -> np.random.Generator:
    """Generator for one realization, independent across realization indices."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(realization)]))


def save_channel(channel: WidebandChannel, path) -> None:
    """Binary container: JSON header, then per-subcarrier row-major (re, im) float64."""
    header = {
        "n_bs": channel.n_bs,
        "n_ms": channel.n_ms,
        "k_sub": channel.k_sub,
        "seed": channel.seed,
    }
    payload = json.dumps(header, sort_keys=True).encode()
    h = channel.per_subcarrier
    interleaved = np.empty(h.shape + (2,), dtype="<f8")
    interleaved[..., 0] = h.real
    interleaved[..., 1] = h.imag
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<I", len(payload)))
        f.write(payload)
        f.write(interleaved.tobytes())


def load_channel(path) -> WidebandChannel:
    with open(path, "rb") as f:
        magic = f.read(len(_MAGIC))
        if magic != _MAGIC:
            raise ValueError(f"{path}: not a channel container")
        (n,) = struct.unpack("<I", f.read(4))
        header = json.loads(f.read(n).decode())
        shape = (header["k_sub"], header["n_ms"], header["n_bs"], 2)
        flat = np.frombuffer(f.read(), dtype="<f8").reshape(shape)
    per_subcarrier = flat[..., 0] + 1j * flat[..., 1]
    return WidebandChannel(per_subcarrier, seed=header.get("seed"))
