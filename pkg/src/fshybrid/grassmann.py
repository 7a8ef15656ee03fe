"""Subspace geometry: chordal distances, projection means, complement projectors.

Subspaces are represented by semi-unitary basis matrices. All distances are
squared chordal distances, clamped to their valid range so round-off cannot
produce slightly negative values.
"""

from __future__ import annotations

import numpy as np

from .exceptions import EmptyCellError
from .validation import as_matrix, check_full_column_rank


def chordal_sq(x: np.ndarray, y: np.ndarray) -> float:
    """Squared chordal distance r - ||X*Y||_F^2 between equal-rank subspaces."""
    x, y = as_matrix(x, "x"), as_matrix(y, "y")
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    r = x.shape[1]
    d = r - np.linalg.norm(x.conj().T @ y) ** 2
    return float(min(max(d, 0.0), r))


def generalized_chordal_sq(u: np.ndarray, v: np.ndarray) -> float:
    """min(r1, r2) - ||U*V||_F^2 for subspaces of possibly different rank."""
    u, v = as_matrix(u, "u"), as_matrix(v, "v")
    if u.shape[0] != v.shape[0]:
        raise ValueError(f"ambient dimension mismatch: {u.shape[0]} vs {v.shape[0]}")
    r = min(u.shape[1], v.shape[1])
    d = r - np.linalg.norm(u.conj().T @ v) ** 2
    return float(min(max(d, 0.0), r))


def avg_chordal(x: np.ndarray, ys, generalized: bool = False) -> float:
    """Mean squared (generalized) chordal distance from ``x`` to the bases ``ys``.

    ``ys`` may be a list of matrices or a (K, n, r) stack.
    """
    ys = np.asarray(ys, dtype=np.complex128)
    if ys.ndim == 2:
        ys = ys[None]
    if ys.ndim != 3 or ys.shape[0] == 0:
        raise ValueError("ys must be a non-empty stack of basis matrices")
    dist = generalized_chordal_sq if generalized else chordal_sq
    return float(np.mean([dist(x, ys[k]) for k in range(ys.shape[0])]))


def karcher_centroid(members, n_s: int) -> np.ndarray:
    """Minimizer of the average squared chordal distance to the member bases.

    ``members`` is a list of (K, n, r) stacks (one per training member); the
    centroid is the dominant-``n_s`` eigenbasis of the summed projectors
    sum_m sum_k V V*. With degenerate eigenvalue ties any eigenvector choice
    is acceptable; callers compare distortions, not bases.
    """
    if len(members) == 0:
        raise EmptyCellError("cannot average an empty set of subspaces")
    first = np.asarray(members[0], dtype=np.complex128)
    n = first.shape[-2]
    acc = np.zeros((n, n), dtype=np.complex128)
    for m in members:
        bases = np.asarray(m, dtype=np.complex128)
        if bases.ndim == 2:
            bases = bases[None]
        for k in range(bases.shape[0]):
            v = bases[k]
            acc += v @ v.conj().T
    w, q = np.linalg.eigh(acc)          # ascending eigenvalues
    return np.ascontiguousarray(q[:, ::-1][:, :n_s])


def complement_projector(f: np.ndarray) -> np.ndarray:
    """Orthogonal projector onto the complement of span(f): I - F (F*F)^-1 F*."""
    f = check_full_column_rank(f, "f")
    q, _ = np.linalg.qr(f)
    p = np.eye(f.shape[0], dtype=np.complex128) - q @ q.conj().T
    return (p + p.conj().T) / 2.0
