"""Codebook containers, phase-grid projection, beamsteering grids, file I/O.

RF codewords live on a quantized phase grid; files for RF kinds store the
integer grid indices so that serialized codebooks are bit-exact across
platforms. Baseband (equivalent precoder) codebooks store complex entries
as [re, im] pairs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .channel import array_response_ula
from .exceptions import CodebookFormatError

FILE_VERSION = 1
KINDS = ("rf-matrix", "rf-vector", "baseband")


def rf_phase_indices(f_u: np.ndarray, phase_bits: int) -> np.ndarray:
    """Nearest grid index for each entry's phase, on the 2**phase_bits uniform grid.

    Distances are wrapped; exact ties go to the smaller grid angle. Entries
    with zero modulus get phase 0.
    """
    if not isinstance(phase_bits, (int, np.integer)) or phase_bits < 1:
        raise ValueError(f"phase_bits must be a positive integer, got {phase_bits!r}")
    levels = 1 << int(phase_bits)
    step = 2.0 * np.pi / levels
    phases = np.angle(np.asarray(f_u, dtype=np.complex128))
    x = np.mod(phases, 2.0 * np.pi) / step          # in [0, levels)
    lo = np.floor(x).astype(np.int64)
    d_lo = x - lo
    d_hi = 1.0 - d_lo
    hi = np.mod(lo + 1, levels)
    lo = np.mod(lo, levels)
    pick = np.where(d_lo < d_hi, lo, np.where(d_hi < d_lo, hi, np.minimum(lo, hi)))
    return pick


def phases_from_indices(indices: np.ndarray, phase_bits: int) -> np.ndarray:
    step = 2.0 * np.pi / (1 << int(phase_bits))
    return np.exp(1j * step * np.asarray(indices, dtype=float))


def rf_project(f_u: np.ndarray, phase_bits: int) -> np.ndarray:
    """Project a matrix onto unit-modulus entries with quantized phases."""
    return phases_from_indices(rf_phase_indices(f_u, phase_bits), phase_bits)


@dataclass
class Codebook:
    """A finite set of precoding codewords.

    ``codewords`` has shape (size, n, r). For the RF kinds the entries are
    unit modulus with phases on the ``phase_bits`` grid and
    ``phase_indices`` holds the grid indices; ``twins`` optionally keeps the
    unconstrained semi-unitary centroids a trained RF codebook came from
    (in memory only, not serialized).
    """

    kind: str
    codewords: np.ndarray
    phase_bits: int | None = None
    phase_indices: np.ndarray | None = None
    twins: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        self.codewords = np.asarray(self.codewords, dtype=np.complex128)
        if self.codewords.ndim != 3:
            raise ValueError("codewords must have shape (size, n, r)")
        if self.kind in ("rf-matrix", "rf-vector"):
            if self.phase_bits is None or self.phase_indices is None:
                raise ValueError(f"{self.kind} codebooks need phase_bits and phase_indices")
            self.phase_indices = np.asarray(self.phase_indices, dtype=np.int64)
        if self.kind == "rf-vector" and self.codewords.shape[2] != 1:
            raise ValueError("rf-vector codewords must have a single column")

    @property
    def size(self) -> int:
        return self.codewords.shape[0]

    @property
    def n(self) -> int:
        return self.codewords.shape[1]

    @property
    def r(self) -> int:
        return self.codewords.shape[2]

    def vectors(self) -> np.ndarray:
        """Rank-1 codewords flattened to shape (size, n)."""
        if self.r != 1:
            raise ValueError("vectors() is only defined for rank-1 codebooks")
        return self.codewords[:, :, 0]


def from_phase_indices(kind: str, indices: np.ndarray, phase_bits: int, twins=None) -> Codebook:
    indices = np.asarray(indices, dtype=np.int64)
    return Codebook(
        kind=kind,
        codewords=phases_from_indices(indices, phase_bits),
        phase_bits=int(phase_bits),
        phase_indices=indices,
        twins=twins,
    )


def beamsteering_codebook(
    n_cb: int, n_bs: int, spacing: float = 0.5, phase_bits: int = 6
) -> Codebook:
    """RF vector codebook of array responses on a uniform sin-angle grid.

    Steering directions satisfy sin(phi_j) = -1 + 2j/n_cb; entries are
    rescaled to unit modulus and the phases land on the quantized grid. With
    n_cb = n_bs and half-wavelength spacing the codewords coincide (as a
    set) with the columns of the unitary DFT matrix scaled to unit modulus.
    """
    if n_cb < 1:
        raise ValueError("n_cb must be positive")
    u_grid = -1.0 + 2.0 * np.arange(n_cb) / n_cb
    cols = []
    for u in u_grid:
        v = array_response_ula(float(np.arcsin(u)), n_bs, spacing)
        cols.append(v * np.sqrt(n_bs))     # unit modulus per entry
    raw = np.stack(cols)[:, :, None]
    indices = rf_phase_indices(raw, phase_bits)
    return from_phase_indices("rf-vector", indices, phase_bits)


def _complex_to_pairs(a: np.ndarray):
    return np.stack([a.real, a.imag], axis=-1).tolist()


def _pairs_to_complex(pairs) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float)
    return arr[..., 0] + 1j * arr[..., 1]


def save_codebook(cb: Codebook, path) -> None:
    doc = {
        "version": FILE_VERSION,
        "kind": cb.kind,
        "n": cb.n,
        "r": cb.r,
        "phase_bits": cb.phase_bits,
    }
    if cb.kind in ("rf-matrix", "rf-vector"):
        doc["phase_indices"] = cb.phase_indices.tolist()
    else:
        doc["codewords"] = _complex_to_pairs(cb.codewords)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, sort_keys=True, separators=(",", ":"))
        f.write("\n")


def load_codebook(path) -> Codebook:
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    version = doc.get("version")
    if version != FILE_VERSION:
        raise CodebookFormatError(f"{path}: unsupported codebook version {version!r}")
    kind = doc.get("kind")
    if kind not in KINDS:
        raise CodebookFormatError(f"{path}: unknown codebook kind {kind!r}")
    try:
        if kind in ("rf-matrix", "rf-vector"):
            return from_phase_indices(kind, np.asarray(doc["phase_indices"]), doc["phase_bits"])
        codewords = _pairs_to_complex(doc["codewords"])
        return Codebook(kind=kind, codewords=codewords)
    except (KeyError, ValueError) as exc:
        raise CodebookFormatError(f"{path}: malformed codebook payload ({exc})") from exc
