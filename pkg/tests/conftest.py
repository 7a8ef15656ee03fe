import numpy as np
import pytest

from fshybrid.channel import WidebandChannel


def gaussian_channel(rng, n_ms=8, n_bs=16, k_sub=8, n_taps=4) -> WidebandChannel:
    """Random multi-tap channel for precoder tests (model-agnostic)."""
    taps = (
        rng.normal(size=(n_taps, n_ms, n_bs)) + 1j * rng.normal(size=(n_taps, n_ms, n_bs))
    ) / np.sqrt(2 * n_taps)
    h = np.fft.fft(taps, n=k_sub, axis=0)
    return WidebandChannel(h)


def random_rf(rng, n_bs, n_rf) -> np.ndarray:
    """Unit-modulus random-phase RF matrix."""
    return np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, size=(n_bs, n_rf)))


def random_semi_unitary(rng, n, r) -> np.ndarray:
    q, _ = np.linalg.qr(rng.normal(size=(n, r)) + 1j * rng.normal(size=(n, r)))
    return q


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
