"""Greedy RF beam selection: direct, Gram-Schmidt, and approximate variants.

All three pick RF beamforming vectors one per RF chain from a shared vector
codebook, without replacement, breaking score ties toward the lowest
codeword index so runs are reproducible. The Gram-Schmidt variant scores
candidates after projecting them onto the orthogonal complement of the
already-selected beams, which provably selects the same beams as the direct
search while allowing cheap incremental eigenvalue updates.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .channel import WidebandChannel
from .codebooks import Codebook
from .exceptions import InfeasibleCodebookError
from .grassmann import complement_projector
from .precoding import HybridPrecoder, PowerConstraint, optimal_baseband

_LN2 = np.log(2.0)
_PROJ_TOL = 1e-10  # projected-norm floor below which a candidate adds no dimension


@dataclass
class GreedyState:
    """Internal per-iteration state of the greedy selectors."""

    f_rf_partial: np.ndarray                    # (n_bs, i) original codewords
    projected_basis: np.ndarray                 # (n_bs, i) orthonormal
    pi: np.ndarray | None = None                # deflated target matrix
    t_accum: np.ndarray | None = field(default=None, repr=False)  # (K, n_ms, n_ms)


@dataclass
class GreedyResult:
    f_rf: np.ndarray
    mi: float
    indices: list[int]


def _as_vectors(vcb) -> np.ndarray:
    if isinstance(vcb, Codebook):
        return vcb.vectors()
    v = np.asarray(vcb, dtype=np.complex128)
    if v.ndim != 2:
        raise ValueError("vector codebook must have shape (size, n_bs)")
    return v


def _score_terms(gram_stack: np.ndarray, rho_over_ns: float) -> np.ndarray:
    """Sum over eigenvalues of log2(1 + c*lam), batched over leading axes."""
    lam = np.clip(np.linalg.eigvalsh(gram_stack), 0.0, None)
    return np.sum(np.log1p(rho_over_ns * lam), axis=-1) / _LN2


def dg_hp(vcb, channel: WidebandChannel, rho: float, n_rf: int, n_s: int | None = None):
    """Direct greedy selection: per iteration, the unused codeword whose

    augmented RF matrix maximizes the optimal-unitary-baseband mutual
    information is appended. Candidates that leave the RF matrix rank
    deficient are skipped.
    """
    vectors = _as_vectors(vcb)
    n_s = n_rf if n_s is None else n_s
    n_cb, n_bs = vectors.shape
    if n_cb < n_rf:
        raise InfeasibleCodebookError(f"codebook of size {n_cb} cannot fill {n_rf} chains")
    h = channel.per_subcarrier
    c = rho / n_s

    selected: list[int] = []
    f = np.empty((n_bs, 0), dtype=np.complex128)
    mi = 0.0
    for _ in range(n_rf):
        remaining = [n for n in range(n_cb) if n not in selected]
        cands = np.stack([np.column_stack([f, vectors[n]]) for n in remaining])
        u, s, vh = np.linalg.svd(cands, full_matrices=False)
        ok = s[:, -1] > 1e-10 * s[:, 0]
        q = u @ vh                                       # batched polar factors
        b = np.einsum("kmn,cni->ckmi", h, q)
        scores = _score_terms(b.conj().transpose(0, 1, 3, 2) @ b, c).mean(axis=1)
        scores[~ok] = -np.inf
        best = int(np.argmax(scores))
        if not np.isfinite(scores[best]):
            raise InfeasibleCodebookError("no rank-compatible codeword left to select")
        selected.append(remaining[best])
        f = np.column_stack([f, vectors[selected[-1]]])
        mi = float(scores[best])
    return GreedyResult(f_rf=f, mi=mi, indices=selected)


def gs_hp(
    vcb,
    channel: WidebandChannel,
    rho: float,
    n_rf: int,
    n_s: int | None = None,
    eig_method: str = "full",
):
    """Gram-Schmidt greedy selection, exactly equivalent to :func:`dg_hp`.

    Candidates are projected onto the orthogonal complement of the selected
    beams before scoring; the returned RF matrix stores the original
    codewords. ``eig_method='rank1'`` scores through the accumulated
    receive-side Gram matrix plus a rank-1 term instead of re-orthonormalizing
    the augmented RF matrix per candidate.
    """
    if eig_method not in ("full", "rank1"):
        raise ValueError(f"eig_method must be 'full' or 'rank1', got {eig_method!r}")
    vectors = _as_vectors(vcb)
    n_s = n_rf if n_s is None else n_s
    n_cb, n_bs = vectors.shape
    if n_cb < n_rf:
        raise InfeasibleCodebookError(f"codebook of size {n_cb} cannot fill {n_rf} chains")
    h = channel.per_subcarrier
    k_sub, n_ms, _ = h.shape
    c = rho / n_s

    state = GreedyState(
        f_rf_partial=np.empty((n_bs, 0), dtype=np.complex128),
        projected_basis=np.empty((n_bs, 0), dtype=np.complex128),
        t_accum=np.zeros((k_sub, n_ms, n_ms), dtype=np.complex128),
    )
    selected: list[int] = []
    mi = 0.0
    for _ in range(n_rf):
        remaining = [n for n in range(n_cb) if n not in selected]
        q_prev = state.projected_basis
        cand = vectors[remaining].T                       # (n_bs, C)
        resid = cand - q_prev @ (q_prev.conj().T @ cand)
        norms = np.linalg.norm(resid, axis=0)
        ok = norms > _PROJ_TOL

        if eig_method == "full":
            scores = np.full(len(remaining), -np.inf)
            for j, n in enumerate(remaining):
                if not ok[j]:
                    continue
                fbar = np.column_stack([state.f_rf_partial, resid[:, j]])
                u, s, vh = np.linalg.svd(fbar, full_matrices=False)
                if s[-1] <= 1e-10 * s[0]:
                    continue
                b = h @ (u @ vh)
                scores[j] = float(
                    np.mean(_score_terms(b.conj().transpose(0, 2, 1) @ b, c))
                )
        else:
            qn = np.where(ok, norms, 1.0)
            unit = resid / qn                              # (n_bs, C)
            v = np.einsum("kmn,nc->ckm", h, unit)          # (C, K, n_ms)
            gram = state.t_accum[None] + v[:, :, :, None] * v.conj()[:, :, None, :]
            scores = _score_terms(gram, c).mean(axis=1)
            scores[~ok] = -np.inf

        best = int(np.argmax(scores))
        if not np.isfinite(scores[best]):
            raise InfeasibleCodebookError("no rank-compatible codeword left to select")
        idx = remaining[best]
        qn_vec = resid[:, best] / norms[best]
        selected.append(idx)
        state.f_rf_partial = np.column_stack([state.f_rf_partial, vectors[idx]])
        state.projected_basis = np.column_stack([state.projected_basis, qn_vec])
        vk = h @ qn_vec
        state.t_accum = state.t_accum + vk[:, :, None] * vk.conj()[:, None, :]
        mi = float(scores[best])
    return GreedyResult(f_rf=state.f_rf_partial, mi=mi, indices=selected)


def approx_gs_hp(
    vcb,
    channel: WidebandChannel,
    n_rf: int,
    n_s: int,
    rho: float,
    trunc_rank: int | None = None,
) -> HybridPrecoder:
    """Approximate Gram-Schmidt selection by maximum projection.

    Builds the weighted right-singular target matrix, repeatedly picks the
    codeword with the largest projection onto it, deflates the target by the
    selected beams' complement projector, and finishes with the optimal
    unitary-mode baseband. ``trunc_rank`` controls how many singular
    directions per subcarrier enter the target (default ``n_s``).
    """
    vectors = _as_vectors(vcb)
    n_cb, n_bs = vectors.shape
    if n_cb < n_rf:
        raise InfeasibleCodebookError(f"codebook of size {n_cb} cannot fill {n_rf} chains")
    r = n_s if trunc_rank is None else trunc_rank
    s = channel.singular_values(r)                        # (K, r)
    v = channel.right_bases(r)                            # (K, n_bs, r)
    pi = np.ascontiguousarray(
        (v * s[:, None, :]).transpose(1, 0, 2).reshape(n_bs, -1)
    )
    a_cb = vectors.T

    state = GreedyState(
        f_rf_partial=np.empty((n_bs, 0), dtype=np.complex128),
        projected_basis=np.empty((n_bs, 0), dtype=np.complex128),
        pi=pi,
    )
    selected: list[int] = []
    for _ in range(n_rf):
        psi = state.pi.conj().T @ a_cb                    # (K*r, n_cb)
        scores = np.linalg.norm(psi, axis=0)
        q_prev = state.projected_basis
        resid = a_cb - q_prev @ (q_prev.conj().T @ a_cb)
        degenerate = np.linalg.norm(resid, axis=0) <= _PROJ_TOL
        scores[degenerate] = -np.inf
        if selected:
            scores[selected] = -np.inf
        best = int(np.argmax(scores))
        if not np.isfinite(scores[best]):
            raise InfeasibleCodebookError("no rank-compatible codeword left to select")
        selected.append(best)
        state.f_rf_partial = np.column_stack([state.f_rf_partial, vectors[best]])
        state.projected_basis = np.column_stack(
            [state.projected_basis, resid[:, best] / np.linalg.norm(resid[:, best])]
        )
        state.pi = complement_projector(state.f_rf_partial) @ state.pi

    precoder = optimal_baseband(
        state.f_rf_partial, channel, rho, PowerConstraint.UNITARY, n_s
    )
    return precoder


def exhaustive_subset_search(
    vcb, channel: WidebandChannel, rho: float, n_rf: int, n_s: int
) -> GreedyResult:
    """Optimal unitary-baseband MI over every n_rf-subset of the vector codebook.

    The brute-force counterpart of the greedy selectors; cost grows as
    C(size, n_rf). Subsets are enumerated in lexicographic order and ties
    keep the first maximizer. Rank-deficient subsets are skipped.
    """
    from itertools import combinations

    vectors = _as_vectors(vcb)
    n_cb = vectors.shape[0]
    if n_cb < n_rf:
        raise InfeasibleCodebookError(f"codebook of size {n_cb} cannot fill {n_rf} chains")
    h = channel.per_subcarrier
    c = rho / n_s
    best: GreedyResult | None = None
    for combo in combinations(range(n_cb), n_rf):
        f = vectors[list(combo)].T
        u, s, vh = np.linalg.svd(f, full_matrices=False)
        if s[-1] <= 1e-10 * s[0]:
            continue
        b = h @ (u @ vh)
        mi = float(np.mean(_score_terms(b.conj().transpose(0, 2, 1) @ b, c)))
        if best is None or mi > best.mi:
            best = GreedyResult(f_rf=f, mi=mi, indices=list(combo))
    if best is None:
        raise InfeasibleCodebookError("no rank-compatible subset exists")
    return best


def feedback_bits(
    scheme: str,
    *,
    n_rf: int,
    n_s: int,
    k_sub: int,
    rf_size: int | None = None,
    vcb_size: int | None = None,
    bb_size: int | None = None,
) -> int:
    """Total feedback bits of a limited-feedback scheme.

    ``scheme`` is ``'matrix'`` (one index into an RF matrix codebook of
    ``rf_size``) or ``'vector'`` (``n_rf`` indices into a beam codebook of
    ``vcb_size``). With fewer streams than RF chains every subcarrier feeds
    back one equivalent-baseband index into a codebook of ``bb_size``.
    Non-power-of-two sizes round up to the next whole bit, with a warning.
    """

    def bits_of(size: int, what: str) -> int:
        if size is None or size < 1:
            raise ValueError(f"{what} must be given and positive for this scheme")
        exact = math.log2(size)
        if 2 ** round(exact) != size:
            warnings.warn(f"{what}={size} is not a power of two; rounding bits up")
            return math.ceil(exact)
        return round(exact)

    if scheme == "matrix":
        total = bits_of(rf_size, "rf_size")
    elif scheme == "vector":
        total = n_rf * bits_of(vcb_size, "vcb_size")
    else:
        raise ValueError(f"scheme must be 'matrix' or 'vector', got {scheme!r}")
    if n_s < n_rf:
        total += k_sub * bits_of(bb_size, "bb_size")
    return total
