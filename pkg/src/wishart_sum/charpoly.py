"""Averages of characteristic polynomials for commuting covariances.

For simultaneously diagonal covariances diag(sA_k), diag(sB_k) the average of
det(x - H) is a double residue

    N_A! N_B! Res Res  e^{z1+z2} z1^{-N_A-1} z2^{-N_B-1} prod_k (x - z1 sA_k - z2 sB_k).

Expanding the product in monomials z1^a z2^b and using
Res e^z z^{-(K+1)} z^a = 1/(K-a)! turns this into a finite sum with no
cancellation: every contribution to a given power of x carries the same sign.

The inverse average 1/det(y - H) is a two-dimensional Gamma-weighted integral
evaluated with tensor Gauss-Laguerre quadrature.
"""
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import QuadratureNotConverged, ZeroImaginaryPart
from .special import gauss_laguerre


@dataclass(frozen=True)
class CommutingCovariances:
    """Paired eigenvalues of two commuting covariance matrices."""

    N: int
    N_A: int
    N_B: int
    sigma_A_eigs: tuple
    sigma_B_eigs: tuple

    def __post_init__(self):
        object.__setattr__(self, "sigma_A_eigs", tuple(float(s) for s in self.sigma_A_eigs))
        object.__setattr__(self, "sigma_B_eigs", tuple(float(s) for s in self.sigma_B_eigs))
        if len(self.sigma_A_eigs) != self.N or len(self.sigma_B_eigs) != self.N:
            raise ValueError("need N eigenvalues for each covariance")
        if min(self.sigma_A_eigs + self.sigma_B_eigs, default=1.0) <= 0:
            raise ValueError("covariance eigenvalues must be positive")
        if self.N_A < 0 or self.N_B < 0:
            raise ValueError("epoch lengths must be nonnegative")


class BivariatePoly:
    """Product of linear forms x - z1*sA - z2*sB, stored homogeneously.

    ``coef[a, b]`` is the coefficient of z1^a z2^b x^(deg-a-b).
    """

    def __init__(self, coef):
        self.coef = np.asarray(coef, dtype=float)
        self.degree = self.coef.shape[0] - 1

    @classmethod
    def from_linear_factors(cls, sA, sB):
        sA = np.asarray(sA, dtype=float)
        sB = np.asarray(sB, dtype=float)
        d = sA.size
        coef = np.zeros((d + 1, d + 1))
        coef[0, 0] = 1.0
        for a_k, b_k in zip(sA, sB):
            new = coef.copy()
            new[1:, :] -= a_k * coef[:-1, :]
            new[:, 1:] -= b_k * coef[:, :-1]
            coef = new
        return cls(coef)

    def x_coefficients(self, a, b):
        """Coefficient of x^(deg-a-b) multiplying z1^a z2^b (zero if out of range)."""
        if a < 0 or b < 0 or a + b > self.degree:
            return 0.0
        return self.coef[a, b]

    def residue(self, KA, KB):
        """Apply z1^a -> KA!/(KA-a)!, z2^b -> KB!/(KB-b)!; ascending x-coefficients."""
        d = self.degree
        a = np.arange(d + 1)
        ffA = _falling(KA, a)
        ffB = _falling(KB, a)
        out = np.zeros(d + 1)
        for k in range(d + 1):
            # terms with a + b = d - k
            s = d - k
            aa = np.arange(s + 1)
            out[k] = np.sum(self.coef[aa, s - aa] * ffA[aa] * ffB[s - aa])
        return out


def _falling(K, a):
    """K!/(K-a)! for an integer array a (0 where a > K)."""
    a = np.asarray(a)
    out = np.zeros(a.shape)
    for i in np.flatnonzero(a <= K):
        v = 1
        for t in range(int(a[i])):
            v *= K - t
        out[i] = float(v)
    return out


def charpoly_coefficients(c):
    """Ascending coefficients of E[det(x - H)] (monic of degree N)."""
    bp = BivariatePoly.from_linear_factors(c.sigma_A_eigs, c.sigma_B_eigs)
    return bp.residue(c.N_A, c.N_B)


def expect_charpoly(c, x):
    """E[det(x - H)] for commuting covariances."""
    coef = charpoly_coefficients(c)
    return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), coef)


def _inverse_charpoly_fixed(c, y, order):
    sA, wA = gauss_laguerre(order, c.N_A - 1)
    sB, wB = gauss_laguerre(order, c.N_B - 1)
    ea = np.asarray(c.sigma_A_eigs)
    eb = np.asarray(c.sigma_B_eigs)
    total = 0j
    # chunk over the first radial variable to bound memory
    step = max(1, 200_000 // (order * max(c.N, 1)))
    for i in range(0, order, step):
        d = y - sA[i:i + step, None, None] * ea - sB[None, :, None] * eb
        logdet = np.sum(np.log(d), axis=-1)
        total += np.sum(wA[i:i + step, None] * wB[None, :] * np.exp(-logdet))
    return complex(total)


def expect_inverse_charpoly(c, y, quad_order=64, rtol=1e-8, max_order=2048):
    """E[1/det(y - H)] for commuting covariances and Im(y) != 0.

    Gauss-Laguerre weights are normalized to total mass one, which fixes the
    overall constant so that y^N E[...] -> 1 as |y| -> infinity.  The order is
    doubled until two successive results agree to ``rtol``.
    """
    y = complex(y)
    if y.imag == 0:
        raise ZeroImaginaryPart("the inverse characteristic polynomial needs Im(y) != 0")
    if quad_order < 50:
        raise ValueError("quad_order must be at least 50")
    if c.N_A < 1 or c.N_B < 1:
        raise ValueError("need N_A, N_B >= 1")
    order = int(quad_order)
    prev = _inverse_charpoly_fixed(c, y, order)
    change = np.inf
    while True:
        nxt = 2 * order
        if nxt > max_order:
            break
        cur = _inverse_charpoly_fixed(c, y, nxt)
        change = abs(cur - prev) / max(abs(cur), 1e-300)
        order, prev = nxt, cur
        if change < rtol:
            return cur
    if change > 1e-6:
        raise QuadratureNotConverged(f"relative change {change:.2e} at order {order}")
    warnings.warn(f"inverse characteristic polynomial stable only to {change:.1e}", RuntimeWarning)
    return prev
