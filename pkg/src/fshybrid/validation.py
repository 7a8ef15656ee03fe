"""Input validation helpers, in the spirit of sklearn's ``check_array``."""

from __future__ import annotations

import numbers

import numpy as np

from .exceptions import DegenerateCodewordError

# sigma_min / sigma_max above this counts as full column rank
RANK_RTOL = 1e-10


def check_rng(random_state) -> np.random.Generator:
    """Coerce seeds / Generators to a ``numpy.random.Generator``."""
    if isinstance(random_state, np.random.Generator):
        return random_state
    if random_state is None or isinstance(random_state, numbers.Integral):
        return np.random.default_rng(random_state)
    raise TypeError(f"random_state must be None, an int or a Generator, got {random_state!r}")


def as_matrix(a, name: str = "array") -> np.ndarray:
    """Return ``a`` as a 2-D complex128 ndarray."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim == 1:
        m = m[:, None]
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {m.shape}")
    return m


def check_full_column_rank(m: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Raise :class:`DegenerateCodewordError` unless ``m`` has full column rank."""
    m = as_matrix(m, name)
    s = np.linalg.svd(m, compute_uv=False)
    if s[0] == 0.0 or s[-1] <= RANK_RTOL * s[0]:
        raise DegenerateCodewordError(
            f"{name} is rank deficient (sigma_min/sigma_max = "
            f"{0.0 if s[0] == 0 else s[-1] / s[0]:.2e})"
        )
    return m


def check_semi_unitary(m: np.ndarray, tol: float = 1e-10, name: str = "matrix") -> np.ndarray:
    m = as_matrix(m, name)
    gram = m.conj().T @ m
    err = np.max(np.abs(gram - np.eye(m.shape[1])))
    if err > tol:
        raise ValueError(f"{name} is not semi-unitary (max |M*M - I| = {err:.2e})")
    return m


def check_positive_int(value, name: str) -> int:
    if not isinstance(value, numbers.Integral) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)
