"""Optimal hybrid precoding for a fixed RF precoder, and mutual information.

The composite transmit filter is a frequency-flat RF matrix times a
per-subcarrier baseband matrix. For a fixed RF matrix the optimal baseband
precoders have a closed form built from the SVD of the effective channel
``Sigma V* F_rf (F_rf* F_rf)^(-1/2)``; the power modes differ only in the
diagonal loading applied on top of that structure.

Mutual information is evaluated through eigenvalues of small Gram matrices
rather than determinants of receive-sized matrices, which conditions better
and is cheaper.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np

from .channel import WidebandChannel
from .exceptions import DegenerateChannelWarning
from .validation import as_matrix, check_full_column_rank

_LN2 = np.log(2.0)


class PowerConstraint(enum.Enum):
    """Power constraint on the composite precoder."""

    TOTAL = "total"                    # sum_k ||F_rf F[k]||_F^2 = K * n_s
    PER_SUBCARRIER = "per-subcarrier"  # ||F_rf F[k]||_F^2 = n_s for every k
    UNITARY = "unitary"                # F_rf F[k] semi-unitary for every k

    @classmethod
    def from_name(cls, name: str) -> "PowerConstraint":
        key = str(name).strip().lower().replace("_", "-")
        aliases = {"persub": "per-subcarrier", "per-sub": "per-subcarrier"}
        key = aliases.get(key, key)
        for member in cls:
            if member.value == key:
                return member
        raise ValueError(f"unknown power constraint {name!r}")


@dataclass
class WaterfillResult:
    """Diagonal power loading. ``lam`` holds the per-stream amplitudes."""

    lam: np.ndarray              # (K, n_streams), entries of the diagonal Lambda[k]
    water_level: np.ndarray      # scalar array (pooled budget) or (K,) (per-subcarrier)

    @property
    def power(self) -> np.ndarray:
        return self.lam**2


@dataclass
class EffectiveSvd:
    """SVD of the effective channel seen through an orthonormalized RF matrix."""

    u_bar: np.ndarray
    sigma_bar: np.ndarray
    v_bar: np.ndarray


@dataclass
class HybridPrecoder:
    """Frequency-flat RF matrix plus K baseband matrices.

    ``g`` optionally carries the equivalent baseband precoders
    ``(F_rf* F_rf)^(1/2) F[k]``, whose column structure is what limited
    feedback quantizes when n_s < n_rf.
    """

    f_rf: np.ndarray             # (n_bs, n_rf)
    f_bb: np.ndarray             # (K, n_rf, n_s)
    g: np.ndarray | None = None  # (K, n_rf, n_s)

    def composite(self) -> np.ndarray:
        """Per-subcarrier composite precoders F_rf @ F[k], shape (K, n_bs, n_s)."""
        return self.f_rf @ self.f_bb

    @property
    def n_streams(self) -> int:
        return self.f_bb.shape[-1]


def orthonormal_factor(f_rf: np.ndarray) -> np.ndarray:
    """Semi-unitary factor F (F*F)^(-1/2), computed as the polar factor of F."""
    f_rf = check_full_column_rank(f_rf, "f_rf")
    u, _, vh = np.linalg.svd(f_rf, full_matrices=False)
    return u @ vh


def _gram_power(f_rf: np.ndarray, exponent: float) -> np.ndarray:
    """(F*F)^exponent for a full-column-rank F, via the Hermitian eigendecomposition."""
    f_rf = check_full_column_rank(f_rf, "f_rf")
    gram = f_rf.conj().T @ f_rf
    w, q = np.linalg.eigh(gram)
    w = np.maximum(w, 1e-30 * w[-1])
    return (q * w**exponent) @ q.conj().T


def inv_sqrt_gram(f_rf: np.ndarray) -> np.ndarray:
    return _gram_power(f_rf, -0.5)


def effective_svd(h_svd, f_rf: np.ndarray) -> EffectiveSvd:
    """SVD of Sigma V* F_rf (F_rf* F_rf)^(-1/2) for one subcarrier.

    ``h_svd`` is a ``(u, sigma, v)`` triple as returned by
    :func:`fshybrid.channel.truncated_svd`; ``u`` is not used.
    """
    _, sigma, v = h_svd
    q = orthonormal_factor(f_rf)
    m = (np.asarray(sigma)[:, None] * v.conj().T) @ q
    u_bar, s_bar, vh_bar = np.linalg.svd(m, full_matrices=False)
    return EffectiveSvd(u_bar, s_bar, vh_bar.conj().T)


def _effective_svds(channel: WidebandChannel, f_rf: np.ndarray):
    """Batched effective SVDs over all subcarriers.

    Returns ``(s_bar, v_bar)`` with shapes (K, m) and (K, n_rf, m),
    m = min(rank, n_rf).
    """
    _, s_h, v_h = channel.svds()
    q = orthonormal_factor(f_rf)
    m = (s_h[:, :, None] * v_h.conj().transpose(0, 2, 1)) @ q    # (K, r, n_rf)
    _, s_bar, vh_bar = np.linalg.svd(m, full_matrices=False)
    return s_bar, vh_bar.conj().transpose(0, 2, 1)


def _bisect_water_level(cutoffs: np.ndarray, budget: float) -> float:
    """Solve sum_j (mu - cutoffs_j)^+ = budget for mu by bisection."""
    lo = float(cutoffs.min())
    hi = lo + budget
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        residual = float(np.sum(np.maximum(mid - cutoffs, 0.0))) - budget
        if abs(residual) <= 1e-12 * max(budget, 1.0):
            return mid
        if residual > 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def waterfill(gains, rho: float, n_s: int, mode: PowerConstraint) -> WaterfillResult:
    """Water-filling power loading over effective gains.

    ``gains`` holds the squared effective singular values, shape
    (K, n_streams). Pooled mode (TOTAL) solves one water level for the
    budget K*n_s; PER_SUBCARRIER solves one level per subcarrier for the
    budget n_s. Entries with zero gain receive zero power.
    """
    if mode is PowerConstraint.UNITARY:
        raise ValueError("unitary mode carries no power loading")
    gains = np.atleast_2d(np.asarray(gains, dtype=float))
    if np.any(gains < 0):
        raise ValueError("gains must be non-negative")
    k_sub = gains.shape[0]
    power = np.zeros_like(gains)
    active = gains > 0.0

    if mode is PowerConstraint.TOTAL:
        budget = float(k_sub * n_s)
        if not active.any():
            warnings.warn(
                "all effective gains are zero; returning zero power (budget unmet)",
                DegenerateChannelWarning,
            )
            return WaterfillResult(np.sqrt(power), np.asarray(0.0))
        cutoffs = n_s / (rho * gains[active])
        mu = _bisect_water_level(cutoffs, budget)
        power[active] = np.maximum(mu - cutoffs, 0.0)
        return WaterfillResult(np.sqrt(power), np.asarray(mu))

    levels = np.zeros(k_sub)
    degenerate = False
    for k in range(k_sub):
        row = active[k]
        if not row.any():
            degenerate = True
            continue
        cutoffs = n_s / (rho * gains[k, row])
        mu = _bisect_water_level(cutoffs, float(n_s))
        power[k, row] = np.maximum(mu - cutoffs, 0.0)
        levels[k] = mu
    if degenerate:
        warnings.warn(
            "some subcarriers have all-zero gains; their budget is unmet",
            DegenerateChannelWarning,
        )
    return WaterfillResult(np.sqrt(power), levels)


def optimal_baseband(
    f_rf: np.ndarray,
    channel: WidebandChannel,
    rho: float,
    mode: PowerConstraint,
    n_s: int,
) -> HybridPrecoder:
    """Optimal baseband precoders for a fixed RF matrix under ``mode``.

    F[k] = (F_rf* F_rf)^(-1/2) Vbar_s[k] Lambda[k], where Vbar_s collects the
    n_s dominant right singular vectors of the effective channel and Lambda
    is the water-filling diagonal (identity in unitary mode).
    """
    f_rf = as_matrix(f_rf, "f_rf")
    a_inv_sqrt = inv_sqrt_gram(f_rf)
    s_bar, v_bar = _effective_svds(channel, f_rf)
    v_s = v_bar[:, :, :n_s]

    if mode is PowerConstraint.UNITARY:
        g = v_s
    else:
        wf = waterfill(s_bar[:, :n_s] ** 2, rho, n_s, mode)
        g = v_s * wf.lam[:, None, :]
    return HybridPrecoder(f_rf=f_rf, f_bb=a_inv_sqrt @ g, g=g)


def _mi_terms_from_gains(loaded_gains: np.ndarray, rho_over_ns: float) -> np.ndarray:
    """Per-subcarrier log2 det terms for diagonal effective gains (K, n)."""
    return np.sum(np.log1p(rho_over_ns * loaded_gains), axis=-1) / _LN2


def _mi_from_effective(b: np.ndarray, rho_over_ns: float) -> float:
    """Mean over subcarriers of log2|I + c B*B| for B stacks (K, n_ms, n_s)."""
    gram = b.conj().transpose(0, 2, 1) @ b
    lam = np.clip(np.linalg.eigvalsh(gram), 0.0, None)
    return float(np.mean(_mi_terms_from_gains(lam, rho_over_ns)))


def mutual_information(channel: WidebandChannel, p: HybridPrecoder, rho: float) -> float:
    """Subcarrier-averaged mutual information in bits/s/Hz."""
    n_s = p.n_streams
    b = channel.per_subcarrier @ p.composite()
    return _mi_from_effective(b, rho / n_s)


def projection_mi(
    channel: WidebandChannel, basis: np.ndarray, rho: float, n_s_scale: int
) -> float:
    """MI of unitary precoding straight onto an orthonormal basis.

    The per-stream SNR scaling uses ``n_s_scale`` regardless of the basis
    width, which lets greedy selection score partial precoders consistently.
    """
    b = channel.per_subcarrier @ basis
    return _mi_from_effective(b, rho / n_s_scale)


def hybrid_mi_for_rf(
    f_rf: np.ndarray,
    channel: WidebandChannel,
    rho: float,
    mode: PowerConstraint,
    n_s: int,
) -> float:
    """Optimal-hybrid mutual information for one RF matrix, in closed form.

    Equals ``mutual_information(channel, optimal_baseband(...), rho)``; only
    the effective singular values are needed because the optimal baseband
    diagonalizes the composite channel.
    """
    s_bar, _ = _effective_svds(channel, f_rf)
    gains = s_bar[:, :n_s] ** 2
    if mode is PowerConstraint.UNITARY:
        loaded = gains
    else:
        wf = waterfill(gains, rho, n_s, mode)
        loaded = gains * wf.power
    return float(np.mean(_mi_terms_from_gains(loaded, rho / n_s)))


def unconstrained_mi(
    channel: WidebandChannel, rho: float, n_s: int, mode: PowerConstraint
) -> float:
    """Fully digital per-subcarrier SVD precoding benchmark."""
    if n_s > min(channel.n_ms, channel.n_bs):
        raise ValueError("n_s exceeds the channel rank bound")
    gains = channel.singular_values(n_s) ** 2
    if mode is PowerConstraint.UNITARY:
        loaded = gains
    else:
        wf = waterfill(gains, rho, n_s, mode)
        loaded = gains * wf.power
    return float(np.mean(_mi_terms_from_gains(loaded, rho / n_s)))


def exhaustive_rf_search(
    codewords,
    channel: WidebandChannel,
    rho: float,
    mode: PowerConstraint,
    n_s: int,
) -> tuple[int, float]:
    """Argmax of :func:`hybrid_mi_for_rf` over a codebook; ties keep the lowest index."""
    codewords = list(codewords)
    if not codewords:
        raise ValueError("codebook is empty")
    best_idx, best_mi = 0, -np.inf
    for idx, f_rf in enumerate(codewords):
        mi = hybrid_mi_for_rf(f_rf, channel, rho, mode, n_s)
        if mi > best_mi:
            best_idx, best_mi = idx, mi
    return best_idx, best_mi


def equivalent_baseband_split(f_rf: np.ndarray, f_bb: np.ndarray) -> np.ndarray:
    """Equivalent baseband precoder(s) G = (F_rf* F_rf)^(1/2) F.

    Accepts a single (n_rf, n_s) matrix or a (K, n_rf, n_s) stack. The map is
    norm-preserving on the composite: ||G||_F = ||F_rf F||_F.
    """
    sqrt_gram = _gram_power(f_rf, 0.5)
    return sqrt_gram @ np.asarray(f_bb, dtype=np.complex128)
