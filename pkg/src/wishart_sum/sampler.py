"""Monte Carlo sampling of H = A A^H + B B^H.

A = L_A G_A with L_A L_A^H = Sigma_A and G_A an N x N_A matrix of standard
complex Gaussians (E|G_ij|^2 = 1), likewise for B.

Random streams are keyed by (seed, chunk index) through numpy's SeedSequence,
so a run gives the same eigenvalues regardless of how many worker threads
process the chunks.
"""
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_legendre

from .linalg import cholesky_sqrt

CHUNK = 2000
_PILOT_KEY = 2 ** 31


@dataclass(frozen=True, eq=False)
class CovariancePair:
    """Two Hermitian positive-definite covariances with epoch lengths N_A, N_B."""

    Sigma_A: np.ndarray
    Sigma_B: np.ndarray
    N_A: int
    N_B: int

    def __post_init__(self):
        SA = np.atleast_2d(np.asarray(self.Sigma_A, dtype=complex))
        SB = np.atleast_2d(np.asarray(self.Sigma_B, dtype=complex))
        if SA.shape != SB.shape or SA.shape[0] != SA.shape[1]:
            raise ValueError("Sigma_A and Sigma_B must be square of equal size")
        N = SA.shape[0]
        if self.N_A < N or self.N_B < N:
            raise ValueError(f"need N_A, N_B >= N = {N}")
        # raises NotHermitian / NotPositiveDefinite
        object.__setattr__(self, "L_A", cholesky_sqrt(SA))
        object.__setattr__(self, "L_B", cholesky_sqrt(SB))
        object.__setattr__(self, "Sigma_A", SA)
        object.__setattr__(self, "Sigma_B", SB)

    @property
    def N(self):
        return self.Sigma_A.shape[0]

    @classmethod
    def diagonal(cls, sA, sB, N_A, N_B):
        sA = np.atleast_1d(np.asarray(sA, dtype=float))
        sB = np.atleast_1d(np.asarray(sB, dtype=float))
        if sA.size == 1:
            sA = np.full(sB.size, sA[0])
        return cls(np.diag(sA), np.diag(sB), N_A, N_B)

    def scale(self):
        """Rough location of the upper spectrum: N_A ||Sigma_A|| + N_B ||Sigma_B||."""
        return float(self.N_A * np.linalg.norm(self.Sigma_A, 2) + self.N_B * np.linalg.norm(self.Sigma_B, 2))

    def is_commuting(self, tol=1e-12):
        C = self.Sigma_A @ self.Sigma_B - self.Sigma_B @ self.Sigma_A
        return float(np.max(np.abs(C))) <= tol * max(1.0, float(np.max(np.abs(self.Sigma_A))) *
                                                    float(np.max(np.abs(self.Sigma_B))))


def _complex_gauss(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * np.sqrt(0.5)


def _rng(seed, key):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(key,))))


def _draw(c, rng, count):
    GA = _complex_gauss(rng, (count, c.N, c.N_A))
    GB = _complex_gauss(rng, (count, c.N, c.N_B))
    A = c.L_A @ GA
    B = c.L_B @ GB
    return A @ A.conj().transpose(0, 2, 1) + B @ B.conj().transpose(0, 2, 1)


def sample_H(c, seed):
    """One draw of H for a given seed (bit-reproducible)."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    return _draw(c, rng, 1)[0]


def default_threads():
    env = os.environ.get("WISHART_SUM_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def sample_eigenvalues(c, n_samples, seed, threads=None, key_offset=0):
    """Eigenvalues of n_samples independent draws, shape (n_samples, N)."""
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    nchunks = -(-n_samples // CHUNK)

    def work(k):
        count = min(CHUNK, n_samples - k * CHUNK)
        H = _draw(c, _rng(seed, key_offset + k), count)
        return np.linalg.eigvalsh(H)

    threads = threads or default_threads()
    if threads == 1 or nchunks == 1:
        parts = [work(k) for k in range(nchunks)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, range(nchunks)))
    return np.concatenate(parts, axis=0)


@dataclass
class SpectrumHistogram:
    """Pooled eigenvalue histogram.

    ``counts`` covers eigenvalues inside the edges and ``n_outside`` the rest,
    so counts.sum() + n_outside == n_samples * N.  ``normalization`` converts
    counts to a density whose step-function integral is exactly N.
    """

    bin_edges: np.ndarray
    counts: np.ndarray
    n_samples: int
    N: int
    n_outside: int = 0

    @property
    def normalization(self):
        return self.N / float(self.counts.sum())

    @property
    def density(self):
        return self.counts * self.normalization / np.diff(self.bin_edges)

    @property
    def centers(self):
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    def probabilities(self):
        return self.counts / float(self.counts.sum())


def auto_edges(c, bins, seed, threads=None):
    """[0, 1.2 * largest eigenvalue of a 1000-sample pilot run] split into ``bins``."""
    pilot = sample_eigenvalues(c, 1000, seed, threads, key_offset=_PILOT_KEY)
    return np.linspace(0.0, 1.2 * float(pilot.max()), bins + 1)


def mc_density(c, n_samples, bins=100, seed=0, threads=None):
    """Histogram of pooled eigenvalues.  ``bins`` is a bin count or an edge array."""
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    if np.ndim(bins) == 0:
        edges = auto_edges(c, int(bins), seed, threads)
    else:
        edges = np.asarray(bins, dtype=float)
        if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
            raise ValueError("bin edges must be strictly increasing")
    ev = sample_eigenvalues(c, n_samples, seed, threads).ravel()
    counts, _ = np.histogram(ev, bins=edges)
    return SpectrumHistogram(edges, counts, n_samples, c.N, int(ev.size - counts.sum()))


def bin_masses(func, edges, nodes=12):
    """Integral of a vectorised density over each bin (Gauss-Legendre per bin)."""
    t, w = roots_legendre(nodes)
    edges = np.asarray(edges, dtype=float)
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    x = (0.5 * (hi + lo))[:, None] + half[:, None] * t[None, :]
    vals = np.asarray(func(x.ravel())).reshape(x.shape)
    return np.sum(vals * w[None, :], axis=1) * half


def histogram_tv(hist, func, nodes=12):
    """Total-variation distance between a histogram and an exact density.

    Both sides are turned into bin probabilities after dividing by N, so mass
    the exact density puts outside the histogram range counts as mismatch.
    """
    exact = bin_masses(func, hist.bin_edges, nodes) / hist.N
    mc = hist.counts / float(hist.n_samples * hist.N)
    outside = abs((1.0 - exact.sum()) - (1.0 - mc.sum()))
    return 0.5 * (float(np.sum(np.abs(mc - exact))) + outside)
