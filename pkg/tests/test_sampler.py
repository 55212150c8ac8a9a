import numpy as np
import pytest

from conftest import random_hpd, random_unitary
from wishart_sum import halfdeg
from wishart_sum.errors import NotHermitian, NotPositiveDefinite
from wishart_sum.sampler import (CovariancePair, SpectrumHistogram, bin_masses, histogram_tv, mc_density,
                                 sample_eigenvalues, sample_H)


def _draws(c, count, seed=0):
    """count independent H matrices from the chunked sampler streams."""
    from wishart_sum.sampler import CHUNK, _draw, _rng
    parts = [_draw(c, _rng(seed, k), min(CHUNK, count - k * CHUNK)) for k in range(-(-count // CHUNK))]
    return np.concatenate(parts)


def test_scalar_moments():
    """N = 1, unit covariances: H is a sum of two unit exponentials."""
    c = CovariancePair([[1.0]], [[1.0]], 1, 1)
    h = _draws(c, 100000, seed=3)[:, 0, 0].real
    se = np.sqrt(2.0 / h.size)
    assert abs(h.mean() - 2.0) < 4 * se
    # the sample variance has variance (mu4 - var^2)/n; Gamma(2) has mu4 = 24
    se_var = np.sqrt((24.0 - 4.0) / h.size)
    assert abs(h.var() - 2.0) < 4 * se_var


def test_first_moment(rng):
    SA = random_hpd(rng, 3)
    SB = random_hpd(rng, 3, shift=1.0)
    c = CovariancePair(SA, SB, 4, 6)
    H = _draws(c, 100000, seed=7)
    mean = H.mean(axis=0)
    n = H.shape[0]
    expect = 4 * SA + 6 * SB
    assert np.all(np.abs(mean.real - expect.real) < 5 * H.real.std(axis=0) / np.sqrt(n) + 1e-12)
    assert np.all(np.abs(mean.imag - expect.imag) < 5 * H.imag.std(axis=0) / np.sqrt(n) + 1e-12)


def test_sample_H_deterministic(rng):
    c = CovariancePair(random_hpd(rng, 3), random_hpd(rng, 3), 3, 5)
    H1 = sample_H(c, 123)
    H2 = sample_H(c, 123)
    assert H1.tobytes() == H2.tobytes()
    assert not np.array_equal(H1, sample_H(c, 124))


def test_samples_hermitian_positive(rng):
    c = CovariancePair(random_hpd(rng, 4), random_hpd(rng, 4), 4, 5)
    H = _draws(c, 500, seed=1)
    norms = np.linalg.norm(H, axis=(1, 2))
    herm = np.linalg.norm(H - H.conj().transpose(0, 2, 1), axis=(1, 2))
    assert np.all(herm <= 1e-12 * norms)
    assert np.all(np.linalg.eigvalsh(H) > 0)


def test_pair_validation():
    with pytest.raises(NotHermitian):
        CovariancePair([[1.0, 1.0], [0.0, 1.0]], np.eye(2), 2, 2)
    with pytest.raises(NotPositiveDefinite):
        CovariancePair(np.diag([1.0, -1.0]), np.eye(2), 2, 2)
    with pytest.raises(ValueError):
        CovariancePair(np.eye(2), np.eye(3), 3, 3)
    with pytest.raises(ValueError):
        CovariancePair(np.eye(3), np.eye(3), 2, 3)


def test_thread_count_independence(rng):
    c = CovariancePair(random_hpd(rng, 3), random_hpd(rng, 3), 3, 4)
    a = sample_eigenvalues(c, 7000, seed=11, threads=1)
    b = sample_eigenvalues(c, 7000, seed=11, threads=4)
    assert a.tobytes() == b.tobytes()


def test_sample_count_validation():
    c = CovariancePair(np.eye(2), np.eye(2), 2, 2)
    with pytest.raises(ValueError):
        sample_eigenvalues(c, 0, seed=1)
    with pytest.raises(ValueError):
        mc_density(c, 0, seed=1)
    with pytest.raises(ValueError):
        mc_density(c, 10, bins=[0.0, 2.0, 1.0], seed=1)


def test_histogram_integral_is_N(rng):
    c = CovariancePair(random_hpd(rng, 3), random_hpd(rng, 3), 3, 4)
    hist = mc_density(c, 3000, bins=40, seed=2)
    assert np.sum(hist.density * np.diff(hist.bin_edges)) == pytest.approx(3.0, rel=1e-14)
    assert hist.counts.sum() + hist.n_outside == 3000 * 3
    assert np.all(np.diff(hist.bin_edges) > 0)
    assert hist.probabilities().sum() == pytest.approx(1.0)


def test_auto_edges_cover_pilot(rng):
    c = CovariancePair(random_hpd(rng, 3), random_hpd(rng, 3), 3, 4)
    hist = mc_density(c, 2000, bins=30, seed=5)
    assert hist.bin_edges[0] == 0.0
    assert hist.bin_edges.size == 31
    # 1.2 x the pilot maximum leaves essentially nothing outside
    assert hist.n_outside <= 2


def test_unitary_covariance(rng):
    SA = random_hpd(rng, 3)
    SB = random_hpd(rng, 3, shift=0.8)
    U = random_unitary(rng, 3)
    c1 = CovariancePair(SA, SB, 4, 5)
    c2 = CovariancePair(U @ SA @ U.conj().T, U @ SB @ U.conj().T, 4, 5)
    e1 = sample_eigenvalues(c1, 40000, seed=1)
    e2 = sample_eigenvalues(c2, 40000, seed=2)
    for p in (1, 2, 3):
        t1 = np.sum(e1 ** p, axis=1)
        t2 = np.sum(e2 ** p, axis=1)
        se = np.sqrt(t1.var() / t1.size + t2.var() / t2.size)
        assert abs(t1.mean() - t2.mean()) < 5 * se


def test_degenerate_wishart_moments():
    """Sigma_A = Sigma_B = s Id is a single Wishart with N_A + N_B degrees of freedom."""
    N, NA, NB, s = 3, 4, 5, 0.7
    c = CovariancePair(s * np.eye(N), s * np.eye(N), NA, NB)
    ev = sample_eigenvalues(c, 50000, seed=9)
    M = NA + NB
    t1 = ev.sum(axis=1)
    t2 = (ev ** 2).sum(axis=1)
    assert abs(t1.mean() - s * N * M) < 5 * t1.std() / np.sqrt(t1.size)
    assert abs(t2.mean() - s ** 2 * N * M * (N + M)) < 5 * t2.std() / np.sqrt(t2.size)


def test_bin_masses_exact_for_polynomials():
    edges = np.array([0.0, 0.5, 2.0, 3.0])
    m = bin_masses(lambda x: 3 * x ** 2, edges)
    np.testing.assert_allclose(m, np.diff(edges ** 3), rtol=1e-13)


def test_histogram_tv_identical_is_zero():
    edges = np.linspace(0.0, 1.0, 5)
    hist = SpectrumHistogram(edges, np.array([1, 1, 1, 1]), 4, 1)
    assert histogram_tv(hist, lambda x: np.ones_like(x)) == pytest.approx(0.0, abs=1e-14)


@pytest.mark.slow
def test_nine_level_histogram_matches_exact_density(nine_level_small):
    pair = CovariancePair.diagonal(nine_level_small.sigma_A, nine_level_small.sigma_B, nine_level_small.N_A, nine_level_small.N_B)
    ev = halfdeg.KernelEvaluator(nine_level_small)
    hist = mc_density(pair, 100000, bins=100, seed=1)
    assert histogram_tv(hist, lambda t: ev.kernel(t, t)) < 0.02
