"""Lloyd-type training of RF and equivalent-baseband precoding codebooks.

The trainers follow the sklearn estimator protocol: hyperparameters in
``__init__``, learned state on ``fit`` with trailing underscores, nearest
codeword assignment via ``predict``. Training alternates nearest-neighbor
partitioning under the average (generalized) squared chordal distance with
projection-mean recentering; RF codebooks additionally project every
centroid onto the quantized phase grid each round.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .channel import generate_channel
from .codebooks import Codebook, from_phase_indices, rf_phase_indices
from .config import ChannelStats, SystemConfig
from .exceptions import EmptyCellError
from .grassmann import karcher_centroid
from .validation import check_rng

_ASSIGN_CHUNK = 4096  # member-basis matrices per cross-energy block


@dataclass
class TrainingSet:
    """Per-member truncated right-singular data of sampled channels.

    ``bases`` has shape (n_members, K, n, r) and ``sigmas`` (n_members, K, r),
    both ordered by descending singular value.
    """

    bases: np.ndarray
    sigmas: np.ndarray

    def __post_init__(self):
        self.bases = np.asarray(self.bases, dtype=np.complex128)
        self.sigmas = np.asarray(self.sigmas, dtype=float)
        if self.bases.ndim != 4:
            raise ValueError("bases must have shape (n_members, K, n, r)")
        if self.sigmas.shape != self.bases.shape[:2] + (self.bases.shape[3],):
            raise ValueError("sigmas shape must match bases")

    @property
    def n_members(self) -> int:
        return self.bases.shape[0]

    @property
    def rank(self) -> int:
        return self.bases.shape[3]


def build_training_set(
    cfg: SystemConfig, stats: ChannelStats, n_train: int, r: int, rng
) -> TrainingSet:
    """Sample ``n_train`` channels and keep their rank-``r`` truncated SVDs."""
    if n_train < 1:
        raise ValueError("n_train must be positive")
    rng = check_rng(rng)
    bases, sigmas = [], []
    for _ in range(n_train):
        ch = generate_channel(cfg, stats, rng)
        bases.append(ch.right_bases(r))
        sigmas.append(ch.singular_values(r))
    return TrainingSet(np.stack(bases), np.stack(sigmas))


def init_codebook(n_cb: int, n: int, r: int, rng) -> np.ndarray:
    """Random semi-unitary codewords (orthonormalized Gaussian), shape (n_cb, n, r)."""
    if n_cb < 1:
        raise ValueError("n_cb must be positive")
    if r > n:
        raise ValueError(f"subspace rank {r} exceeds ambient dimension {n}")
    rng = check_rng(rng)
    raw = rng.normal(size=(n_cb, n, r)) + 1j * rng.normal(size=(n_cb, n, r))
    q, _ = np.linalg.qr(raw)
    return q


def _member_bases(training: TrainingSet, member_rank: int | None) -> np.ndarray:
    bases = training.bases
    if member_rank is not None:
        if member_rank > bases.shape[3]:
            raise ValueError(
                f"member_rank {member_rank} exceeds stored training rank {bases.shape[3]}"
            )
        bases = bases[:, :, :, :member_rank]
    return bases


def _cross_distortion(points: np.ndarray, bases: np.ndarray) -> np.ndarray:
    """d[c, m]: average squared (generalized) chordal distance of codeword c to member m.

    ``points`` (n_cb, n, r_c) must be semi-unitary; ``bases`` (M, K, n, r_m).
    """
    n_cb, n, r_c = points.shape
    n_m, k_sub, _, r_m = bases.shape
    r_min = min(r_c, r_m)
    flat = bases.reshape(-1, n, r_m)
    energy = np.empty((n_cb, flat.shape[0]))
    for start in range(0, flat.shape[0], _ASSIGN_CHUNK):
        block = flat[start : start + _ASSIGN_CHUNK]
        proj = np.einsum("cnr,bns->cbrs", points.conj(), block)
        energy[:, start : start + block.shape[0]] = np.sum(np.abs(proj) ** 2, axis=(2, 3))
    dist = r_min - energy.reshape(n_cb, n_m, k_sub).mean(axis=2)
    return np.clip(dist, 0.0, r_min)


def _assign(points: np.ndarray, bases: np.ndarray):
    """Nearest codeword per member; ties go to the lowest codeword index."""
    d = _cross_distortion(points, bases)
    assign = np.argmin(d, axis=0)
    return assign, d[assign, np.arange(d.shape[1])]


def partition(points, training: TrainingSet, generalized: bool = False, member_rank=None):
    """Voronoi cells of the training members under the average chordal distance.

    ``generalized`` only documents intent; unequal codeword/member ranks
    always use the generalized distance (they agree when ranks match).
    Returns a list of member-index lists, one per codeword.
    """
    points = np.asarray(points, dtype=np.complex128)
    if points.ndim != 3 or points.shape[0] == 0:
        raise ValueError("codebook must be a non-empty (n_cb, n, r) stack")
    if training.n_members == 0:
        raise ValueError("training set is empty")
    bases = _member_bases(training, member_rank)
    assign, _ = _assign(points, bases)
    return [list(np.nonzero(assign == c)[0]) for c in range(points.shape[0])]


def recenter(
    cells,
    training: TrainingSet,
    rank: int,
    member_rank: int | None = None,
    member_dists: np.ndarray | None = None,
) -> np.ndarray:
    """Projection-mean centroid of each cell, shape (n_cells, n, rank).

    Empty cells are reseeded at the member carrying the worst current
    distortion (one distinct member per empty cell), which implicitly splits
    the heaviest cell. Reseeding needs ``member_dists`` (from the preceding
    partition); without it an empty cell raises :class:`EmptyCellError`.
    """
    bases = _member_bases(training, member_rank)
    centroids: list = []
    empty: list[int] = []
    for idx, cell in enumerate(cells):
        if len(cell) == 0:
            centroids.append(None)
            empty.append(idx)
            continue
        centroids.append(karcher_centroid([bases[m] for m in cell], rank))
    if empty:
        if member_dists is None:
            raise EmptyCellError(
                f"{len(empty)} empty cell(s) and no member distortions to reseed from"
            )
        dists = np.array(member_dists, dtype=float)
        for idx in empty:
            worst = int(np.argmax(dists))
            centroids[idx] = karcher_centroid([bases[worst]], rank)
            dists[worst] = -np.inf
    return np.stack(centroids)


def codebook_distortion(points, training: TrainingSet, generalized: bool = False,
                        member_rank=None) -> float:
    """Mean over members of the min-over-codewords average chordal distance."""
    points = np.asarray(points, dtype=np.complex128)
    if points.ndim != 3 or points.shape[0] == 0 or training.n_members == 0:
        raise ValueError("need a non-empty codebook and training set")
    d = _cross_distortion(points, _member_bases(training, member_rank))
    return float(np.mean(np.min(d, axis=0)))


def rf_left_bases(codewords: np.ndarray) -> np.ndarray:
    """Dominant left singular bases of each RF codeword, shape (n_cb, n, r)."""
    codewords = np.asarray(codewords, dtype=np.complex128)
    u, _, _ = np.linalg.svd(codewords, full_matrices=False)
    return u


class RFCodebookTrainer(BaseEstimator):
    """Lloyd-type trainer for frequency-flat RF precoding matrix codebooks.

    Alternates nearest-neighbor partitioning of training channel subspaces
    with projection-mean recentering, then snaps each unconstrained centroid
    onto the unit-modulus quantized-phase grid. When ``member_rank`` is
    smaller than ``rank`` (fewer streams than RF chains) the generalized
    chordal distance drives the iteration.

    Parameters
    ----------
    n_codewords : int
        Codebook size.
    rank : int
        Columns per codeword (number of RF chains).
    phase_bits : int
        Phase-shifter resolution; phases live on a 2**phase_bits grid.
    member_rank : int or None
        Rank of the training subspaces entering the metric; defaults to
        ``rank``.
    max_iter : int
    tol : float
        Relative improvement of the unconstrained distortion below which
        training stops.
    random_state : int, Generator or None

    Attributes
    ----------
    twins_ : ndarray of shape (n_codewords, n, rank)
        Unconstrained semi-unitary centroids.
    phase_indices_ : ndarray of the same shape, int
    codewords_ : ndarray, unit-modulus quantized codewords
    distortion_trace_ : ndarray of shape (n_iter_, 2)
        Per-iteration (unconstrained, rf-projected) training distortion.
    n_iter_ : int
    """

    def __init__(self, n_codewords=64, rank=3, phase_bits=6, member_rank=None,
                 max_iter=50, tol=1e-4, random_state=None):
        self.n_codewords = n_codewords
        self.rank = rank
        self.phase_bits = phase_bits
        self.member_rank = member_rank
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state

    def fit(self, X: TrainingSet, y=None):
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        rng = check_rng(self.random_state)
        bases = _member_bases(X, self.member_rank)
        n = bases.shape[2]
        twins = init_codebook(self.n_codewords, n, self.rank, rng)

        def snapshot(current):
            idx = rf_phase_indices(current, self.phase_bits)
            cw = from_phase_indices("rf-matrix", idx, self.phase_bits).codewords
            d_unc = codebook_distortion(current, X, member_rank=self.member_rank)
            d_rf = codebook_distortion(rf_left_bases(cw), X, member_rank=self.member_rank)
            return idx, cw, d_unc, d_rf

        phase_idx, rf_cw, d_unc, d_rf = snapshot(twins)
        trace = [(d_unc, d_rf)]   # entry 0: the random initial codebook
        prev = d_unc
        for _ in range(self.max_iter):
            assign, dists = _assign(twins, bases)
            cells = [list(np.nonzero(assign == c)[0]) for c in range(self.n_codewords)]
            twins = recenter(cells, X, self.rank, self.member_rank, member_dists=dists)
            phase_idx, rf_cw, d_unc, d_rf = snapshot(twins)
            trace.append((d_unc, d_rf))
            if prev - d_unc < self.tol * max(prev, 1e-15):
                break
            prev = d_unc

        self.twins_ = twins
        self.phase_indices_ = phase_idx
        self.codewords_ = rf_cw
        self.distortion_trace_ = np.asarray(trace)
        self.n_iter_ = len(trace) - 1
        return self

    def predict(self, X: TrainingSet) -> np.ndarray:
        """Index of the nearest unconstrained centroid for every member."""
        assign, _ = _assign(self.twins_, _member_bases(X, self.member_rank))
        return assign

    def distortion(self, X: TrainingSet, constrained: bool = False) -> float:
        """Training-metric distortion of the learned codebook on ``X``."""
        points = rf_left_bases(self.codewords_) if constrained else self.twins_
        return codebook_distortion(points, X, member_rank=self.member_rank)

    def to_codebook(self) -> Codebook:
        kind = "rf-vector" if self.rank == 1 else "rf-matrix"
        return from_phase_indices(kind, self.phase_indices_, self.phase_bits, twins=self.twins_)


class BasebandCodebookTrainer(BaseEstimator):
    """Lloyd-type trainer for semi-unitary equivalent-baseband codebooks.

    Only meaningful with fewer streams than RF chains; with equal counts the
    spectral efficiency is invariant to the equivalent baseband precoder and
    no baseband feedback is needed, so ``fit`` refuses that case.

    The RF and baseband codebooks are designed sequentially: each training
    member is first matched to its best RF codeword (by the same subspace
    metric the RF codebook was trained under), and the Lloyd iteration then
    runs over the induced effective-channel right-singular bases.

    Parameters
    ----------
    rf_codebook : Codebook or ndarray of shape (size, n_bs, n_rf)
    n_codewords : int
    n_streams : int
    max_iter, tol, random_state : as in :class:`RFCodebookTrainer`

    Attributes
    ----------
    codewords_ : ndarray of shape (n_codewords, n_rf, n_streams), semi-unitary
    distortion_trace_ : ndarray of shape (n_iter_, 1)
    rf_assignments_ : ndarray, RF codeword index chosen per training member
    n_iter_ : int
    """

    def __init__(self, rf_codebook=None, n_codewords=8, n_streams=2,
                 max_iter=50, tol=1e-4, random_state=None):
        self.rf_codebook = rf_codebook
        self.n_codewords = n_codewords
        self.n_streams = n_streams
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state

    def _rf_codewords(self) -> np.ndarray:
        if self.rf_codebook is None:
            raise ValueError("rf_codebook must be set before fitting")
        if isinstance(self.rf_codebook, Codebook):
            return self.rf_codebook.codewords
        return np.asarray(self.rf_codebook, dtype=np.complex128)

    def fit(self, X: TrainingSet, y=None):
        from .precoding import orthonormal_factor

        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        rf_cw = self._rf_codewords()
        n_rf = rf_cw.shape[2]
        if self.n_streams >= n_rf:
            raise ValueError(
                f"baseband quantization needs n_streams < n_rf, got "
                f"{self.n_streams} >= {n_rf}"
            )
        if X.rank < self.n_streams:
            raise ValueError("training set rank is below n_streams")
        rng = check_rng(self.random_state)

        u_rf = rf_left_bases(rf_cw)
        self.rf_assignments_, _ = _assign(u_rf, _member_bases(X, self.n_streams))

        # effective right-singular bases seen through each member's RF codeword
        ortho = np.stack([orthonormal_factor(rf_cw[c]) for c in range(rf_cw.shape[0])])
        v_bar = np.empty(
            (X.n_members, X.bases.shape[1], n_rf, self.n_streams), dtype=np.complex128
        )
        for m in range(X.n_members):
            q = ortho[self.rf_assignments_[m]]
            eff = (X.sigmas[m][:, :, None] * X.bases[m].conj().transpose(0, 2, 1)) @ q
            _, _, vh = np.linalg.svd(eff, full_matrices=False)
            v_bar[m] = vh.conj().transpose(0, 2, 1)[:, :, : self.n_streams]
        targets = TrainingSet(v_bar, np.zeros(v_bar.shape[:2] + (self.n_streams,)))

        codewords = init_codebook(self.n_codewords, n_rf, self.n_streams, rng)
        prev = codebook_distortion(codewords, targets)
        trace = [(prev,)]   # entry 0: the random initial codebook
        for _ in range(self.max_iter):
            assign, dists = _assign(codewords, targets.bases)
            cells = [list(np.nonzero(assign == c)[0]) for c in range(self.n_codewords)]
            codewords = recenter(cells, targets, self.n_streams, member_dists=dists)
            d = codebook_distortion(codewords, targets)
            trace.append((d,))
            if prev - d < self.tol * max(prev, 1e-15):
                break
            prev = d

        self.codewords_ = codewords
        self.distortion_trace_ = np.asarray(trace)
        self.n_iter_ = len(trace) - 1
        self.targets_ = targets
        return self

    def to_codebook(self) -> Codebook:
        return Codebook(kind="baseband", codewords=self.codewords_)
