import numpy as np
import pytest

from wishart_sum.halfdeg import HalfDegenerateModel

NINE_LEVEL_SIGMA_B = (0.02, 0.20, 0.30, 1.50, 2.01, 2.25, 2.27, 4.05, 4.13)


def random_halfdeg(rng, N, max_extra=4):
    """Random half-degenerate model with well separated covariance eigenvalues."""
    while True:
        sA = float(rng.uniform(0.5, 2.0))
        sB = np.sort(rng.uniform(0.2, 3.0, N))
        vals = np.sort(np.r_[sB, sA])
        if np.min(np.diff(vals) / vals[1:]) > 0.05:
            break
    N_A = N + int(rng.integers(0, max_extra + 1))
    N_B = N + int(rng.integers(0, max_extra + 1))
    return HalfDegenerateModel(N, N_A, N_B, sA, tuple(sB))


def random_hpd(rng, N, shift=0.5):
    X = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    return X @ X.conj().T / N + shift * np.eye(N)


def random_unitary(rng, N):
    X = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    Q, R = np.linalg.qr(X)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


@pytest.fixture(scope="session")
def nine_level_small():
    return HalfDegenerateModel(9, 35, 40, 1.0, NINE_LEVEL_SIGMA_B)


@pytest.fixture(scope="session")
def nine_level_large():
    return HalfDegenerateModel(9, 350, 400, 1.0, NINE_LEVEL_SIGMA_B)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
