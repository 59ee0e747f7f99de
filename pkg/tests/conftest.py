import numpy as np
import pytest

from torwave import GridSpec, SpectralField, WaveState


@pytest.fixture
def grid8():
    return GridSpec(8, 3.0, 0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def zero_state(grid8):
    return WaveState(0.0, SpectralField.zero(grid8), SpectralField.zero(grid8))


def brute_force_dft(values: np.ndarray) -> np.ndarray:
    """O(n^6) direct DFT, the independent oracle for the forward transform."""
    n = values.shape[0]
    out = np.zeros((n, n, n), dtype=np.complex128)
    x = 2.0 * np.pi * np.arange(n) / n
    for k1 in range(n):
        for k2 in range(n):
            for k3 in range(n):
                kk = np.array([((k + n // 2) % n) - n // 2 for k in (k1, k2, k3)])
                phase = np.exp(-1j * (kk[0] * x[:, None, None] + kk[1] * x[None, :, None] + kk[2] * x[None, None, :]))
                out[k1, k2, k3] = np.sum(values * phase) / n**3
    return out
