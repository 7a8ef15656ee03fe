"""System and channel-statistics configuration records."""

from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass
class SystemConfig:
    """Dimensions and operating point of one OFDM transmit link.

    Delays are expressed in sample units (the symbol period is normalized
    to 1), so the cyclic prefix length ``cp_len`` is both a duration and a
    tap count.
    """

    n_bs: int = 32          # transmit (BS) antennas
    n_ms: int = 16          # receive (MS) antennas
    n_rf: int = 3           # RF chains
    n_s: int = 3            # data streams
    k_sub: int = 64         # subcarriers
    cp_len: int = 16        # cyclic prefix length / number of delay taps
    snr_db: float = 0.0
    antenna_spacing: float = 0.5   # element spacing over wavelength
    rolloff: float = 1.0
    rng_seed: int = 0

    def __post_init__(self):
        for name in ("n_bs", "n_ms", "n_rf", "n_s", "k_sub", "cp_len"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if not self.n_s <= self.n_rf <= min(self.n_bs, self.n_ms):
            raise ValueError(
                f"need n_s <= n_rf <= min(n_bs, n_ms), got "
                f"n_s={self.n_s}, n_rf={self.n_rf}, n_bs={self.n_bs}, n_ms={self.n_ms}"
            )
        if not self.cp_len < self.k_sub:
            raise ValueError(f"cp_len ({self.cp_len}) must be smaller than k_sub ({self.k_sub})")
        if not self.antenna_spacing > 0:
            raise ValueError("antenna_spacing must be positive")
        if not 0.0 < self.rolloff <= 1.0:
            raise ValueError(f"rolloff must lie in (0, 1], got {self.rolloff}")

    @property
    def snr_linear(self) -> float:
        return 10.0 ** (self.snr_db / 10.0)


@dataclass
class ChannelStats:
    """Statistics of the geometric cluster channel sampler.

    ``angle_spread`` is the standard deviation (radians) of the Laplacian
    per-ray angle offsets; the Laplacian scale is ``angle_spread / sqrt(2)``.
    ``ray_delay_spread`` is the mean of the exponential per-ray excess delay
    (samples); 0 puts every ray at its cluster delay.
    """

    n_clusters: int = 6
    rays_per_cluster: int = 5
    angle_spread: float = math.radians(10.0)
    ray_delay_spread: float = 1.0
    path_loss: float = 1.0   # linear path loss rho_PL, absorbed into SNR by default

    def __post_init__(self):
        if not isinstance(self.n_clusters, int) or self.n_clusters < 1:
            raise ValueError(f"n_clusters must be a positive integer, got {self.n_clusters!r}")
        if not isinstance(self.rays_per_cluster, int) or self.rays_per_cluster < 1:
            raise ValueError(
                f"rays_per_cluster must be a positive integer, got {self.rays_per_cluster!r}"
            )
        if self.angle_spread < 0:
            raise ValueError("angle_spread must be non-negative")
        if self.ray_delay_spread < 0:
            raise ValueError("ray_delay_spread must be non-negative")
        if not self.path_loss > 0:
            raise ValueError("path_loss must be positive")
