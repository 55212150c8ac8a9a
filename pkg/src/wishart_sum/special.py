"""Special functions for the sum of two Wishart matrices.

The central object is the one-point weight

    phi(lam) = lam**m * exp(-a*lam) * 1F1(n+1; m+1; (a-b)*lam),

with a = 1/sigma_A, b = 1/sigma_Bj, m = N_A+N_B-N and n = N_B-N.  For integer
parameters it is also a finite combination of two exponentials times
polynomials.  Both forms are provided; the elementary one is used whenever its
own rounding-error estimate says it is trustworthy.

Everything is evaluated as log-magnitudes because phi under- and overflows
double precision for epochs in the hundreds.
"""
import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln, logsumexp

from .errors import CancellationLoss, DegenerateSigma, NoConvergence

EPS = np.finfo(float).eps

_LOGFACT = np.array([math.log(math.factorial(k)) for k in range(171)])


def log_factorial(n):
    """ln(n!) for nonnegative integers (scalar or array)."""
    arr = np.asarray(n)
    if np.any(arr < 0):
        raise ValueError("log_factorial needs n >= 0")
    if arr.ndim == 0:
        k = int(arr)
        return float(_LOGFACT[k]) if k <= 170 else math.lgamma(k + 1.0)
    arr = arr.astype(np.int64)
    out = np.empty(arr.shape)
    small = arr <= 170
    out[small] = _LOGFACT[arr[small]]
    out[~small] = gammaln(arr[~small] + 1.0)
    return out


@dataclass(frozen=True)
class WeightParams:
    """Parameters of a single weight phi_j."""

    N: int
    N_A: int
    N_B: int
    sigma_A: float
    sigma_Bj: float

    def __post_init__(self):
        if self.N < 1 or self.N_A < self.N or self.N_B < self.N:
            raise ValueError(f"need N_A >= N and N_B >= N >= 1, got N={self.N}, "
                             f"N_A={self.N_A}, N_B={self.N_B}")
        if not (self.sigma_A > 0 and self.sigma_Bj > 0):
            raise ValueError("covariance eigenvalues must be positive")
        a, b = 1.0 / self.sigma_A, 1.0 / self.sigma_Bj
        if abs(a - b) <= 1e-12 * max(a, b):
            raise DegenerateSigma(f"sigma_Bj={self.sigma_Bj} coincides with sigma_A")

    @property
    def m(self):
        return self.N_A + self.N_B - self.N

    @property
    def n(self):
        return self.N_B - self.N


# ---------------------------------------------------------------------------
# confluent hypergeometric series


def log_hyp1f1_series(alpha, beta, x, max_terms=10_000):
    """ln 1F1(alpha; beta; x) for alpha, beta > 0 and x >= 0 (array x).

    All terms are positive, so summing them in log space loses nothing.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x < 0):
        raise ValueError("log_hyp1f1_series expects x >= 0")
    out = np.zeros(x.shape)
    pos = x > 0
    if not np.any(pos):
        return out
    xp = x[pos]
    xmax = float(xp.max())
    K = int(math.ceil(xmax + 12.0 * math.sqrt(xmax) + 60))
    if K > max_terms:
        raise NoConvergence(f"series for 1F1 needs about {K} terms (cap {max_terms})")
    k = np.arange(K)
    base = np.log(alpha + k) - np.log(beta + k) - np.log1p(k)
    res = np.empty(xp.size)
    # chunk over points to bound memory
    step = max(1, 2_000_000 // K)
    for s in range(0, xp.size, step):
        lx = np.log(xp[s:s + step])[:, None]
        lt = np.cumsum(base[None, :] + lx, axis=1)
        lt = np.concatenate([np.zeros((lt.shape[0], 1)), lt[:, :-1]], axis=1)
        tot = logsumexp(lt, axis=1)
        if np.any(lt[:, -1] - tot > math.log(1e-17)):
            raise NoConvergence("1F1 series truncated before convergence")
        res[s:s + step] = tot
    out[pos] = res
    return out


def hyp1f1_series(alpha, beta, x, max_terms=10_000):
    """1F1(alpha; beta; x) for positive alpha, beta and real x.

    For x < 0 Kummer's transformation 1F1(a;b;x) = e^x 1F1(b-a;b;-x) is applied
    first, so the summed series always has nonnegative terms (needs b >= a).
    """
    x = np.asarray(x, dtype=float)
    xs = np.atleast_1d(x)
    out = np.empty(xs.shape)
    neg = xs < 0
    if np.any(~neg):
        out[~neg] = np.exp(log_hyp1f1_series(alpha, beta, xs[~neg], max_terms))
    if np.any(neg):
        if beta < alpha:
            raise ValueError("negative argument requires beta >= alpha")
        out[neg] = np.exp(xs[neg] + log_hyp1f1_series(beta - alpha, beta, -xs[neg], max_terms))
    return out.reshape(x.shape) if x.ndim else float(out[0])


# ---------------------------------------------------------------------------
# elementary identity for integer parameters


def _identity_terms(a, b, x):
    """Signed log-magnitude terms of the two-sum representation of 1F1(a;b;x)."""
    lb = log_factorial(b - 1)
    lx = math.log(abs(x))
    sx = 1.0 if x > 0 else -1.0
    terms = []
    for j in range(b - a):
        p = a + j
        lmag = lb + log_factorial(a - 1 + j) - log_factorial(j) - log_factorial(b - a - 1 - j) \
            - log_factorial(a - 1) - p * lx
        terms.append(((-1.0) ** a * sx ** p, lmag))
    for j in range(a):
        p = b - a + j
        lmag = lb + log_factorial(b - a - 1 + j) - log_factorial(j) - log_factorial(a - 1 - j) \
            - log_factorial(b - a - 1) - p * lx + x
        terms.append(((-1.0) ** j * sx ** p, lmag))
    return terms


def kummer_identity_1f1(a, b, x, extended=True, rtol=1e-8):
    """1F1(a; b; x) for integers 1 <= a <= b via its elementary two-sum form.

    a = b is the exponential e^x.
    The two sums cancel against each other for |x| small compared with b.  The
    compensated sum comes with an error estimate; if that exceeds ``rtol`` the
    same finite formula is re-evaluated with enough extra decimal digits
    (``extended=True``) or CancellationLoss is raised (``extended=False``).
    """
    a, b = int(a), int(b)
    if not (1 <= a <= b):
        raise ValueError(f"need integers 1 <= a <= b, got a={a}, b={b}")
    x = float(x)
    if a == b:
        return math.exp(x)
    if x == 0.0:
        raise ValueError("x must be nonzero")
    terms = _identity_terms(a, b, x)
    L = max(t[1] for t in terms)
    scaled = [s * math.exp(l - L) for s, l in terms]
    total = math.fsum(scaled)
    mag = math.fsum(abs(t) for t in scaled)
    err = 4 * EPS * (1 + abs(L)) * mag
    if total != 0.0 and err <= rtol * abs(total):
        return total * math.exp(L)
    if not extended:
        raise CancellationLoss(f"1F1({a};{b};{x}) lost about "
                               f"{math.log10(mag / max(abs(total), 1e-300)):.1f} digits")
    # the compensated total may be pure noise; bound the loss with 1F1 >= min(1, e^x)
    lost = (L + math.log(mag) - min(0.0, x)) / math.log(10)
    with mpmath.workdps(int(30 + max(lost, 0))):
        xm = mpmath.mpf(x)
        s = mpmath.mpf(0)
        fb = mpmath.factorial(b - 1)
        for j in range(b - a):
            s += (-1) ** a * fb * mpmath.factorial(a - 1 + j) / (
                mpmath.factorial(j) * mpmath.factorial(b - a - 1 - j) * mpmath.factorial(a - 1)) / xm ** (a + j)
        e = mpmath.exp(xm)
        for j in range(a):
            s += e * (-1) ** j * fb * mpmath.factorial(b - a - 1 + j) / (
                mpmath.factorial(j) * mpmath.factorial(a - 1 - j) * mpmath.factorial(b - a - 1)) / xm ** (b - a + j)
        return float(s)


# ---------------------------------------------------------------------------
# the one-point weight


def _phi_closed_terms(p, lam):
    """Log-magnitudes and signs of the two-exponential form, shape (len(lam), T)."""
    a, b = 1.0 / p.sigma_A, 1.0 / p.sigma_Bj
    NA, n, m = p.N_A, p.n, p.m
    d = b - a
    ld = math.log(abs(d))
    llam = np.log(lam)[:, None]
    lm = log_factorial(m)

    k1 = np.arange(NA)
    c1 = lm + log_factorial(n + k1) - log_factorial(k1) - log_factorial(NA - 1 - k1) - log_factorial(n)
    l1 = c1 + (NA - 1 - k1) * llam - (n + 1 + k1) * ld - a * lam[:, None]
    s1 = (-1.0) ** k1 * np.sign(d) ** (n + 1 + k1)
    w1 = np.abs(c1) + (NA - 1 - k1) * np.abs(llam) + (n + 1 + k1) * abs(ld) + a * lam[:, None]

    k2 = np.arange(n + 1)
    c2 = lm + log_factorial(NA - 1 + k2) - log_factorial(k2) - log_factorial(n - k2) - log_factorial(NA - 1)
    l2 = c2 + (n - k2) * llam - (NA + k2) * ld - b * lam[:, None]
    s2 = (-1.0) ** k2 * (-np.sign(d)) ** (NA + k2)
    w2 = np.abs(c2) + (n - k2) * np.abs(llam) + (NA + k2) * abs(ld) + b * lam[:, None]

    L = np.concatenate([l1, l2], axis=1)
    S = np.concatenate([np.broadcast_to(s1, l1.shape), np.broadcast_to(s2, l2.shape)], axis=1)
    W = np.concatenate([w1, w2], axis=1)
    return L, S, W


def log_phi_closed(p, lam):
    """ln phi from the two-exponential form, with a relative error estimate.

    Returns (logphi, relerr); points where the alternating sum is not positive
    get logphi = nan and relerr = inf.
    """
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    out = np.full(lam.shape, -np.inf)
    err = np.zeros(lam.shape)
    pos = lam > 0
    if not np.any(pos):
        return out, err
    L, S, W = _phi_closed_terms(p, lam[pos])
    top = L.max(axis=1)
    R = np.exp(L - top[:, None])
    vals = np.array([math.fsum(row) for row in S * R])
    # each term carries a relative error of a few ulp times the size of its log
    absErr = EPS * (R * (8.0 + W)).sum(axis=1)
    lo = np.full(vals.shape, np.nan)
    re = np.full(vals.shape, np.inf)
    good = vals > 0
    lo[good] = top[good] + np.log(vals[good])
    re[good] = absErr[good] / vals[good]
    out[pos] = lo
    err[pos] = re
    return out, err


def log_phi_series(p, lam, max_terms=10_000):
    """ln phi from the hypergeometric series (positive terms only)."""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    out = np.full(lam.shape, -np.inf)
    pos = lam > 0
    if not np.any(pos):
        return out
    a, b = 1.0 / p.sigma_A, 1.0 / p.sigma_Bj
    lp = lam[pos]
    if a >= b:
        # rate a, argument (a-b) lam >= 0
        out[pos] = p.m * np.log(lp) - a * lp + log_hyp1f1_series(p.n + 1, p.m + 1, (a - b) * lp, max_terms)
    else:
        # after Kummer's transformation: rate b, first parameter N_A
        out[pos] = p.m * np.log(lp) - b * lp + log_hyp1f1_series(p.N_A, p.m + 1, (b - a) * lp, max_terms)
    return out


def _log_phi_mp(p, lam):
    a, b = mpmath.mpf(1) / p.sigma_A, mpmath.mpf(1) / p.sigma_Bj
    with mpmath.workdps(30):
        lm = mpmath.mpf(lam)
        v = lm ** p.m * mpmath.exp(-a * lm) * mpmath.hyp1f1(p.n + 1, p.m + 1, (a - b) * lm)
        return float(mpmath.log(v))


def log_phi_weight(p, lam, rtol=1e-11, max_terms=2_000_000):
    """ln phi_j(lam); phi is strictly positive for lam > 0 and 0 at lam = 0.

    The elementary form is tried first; points where its error estimate exceeds
    ``rtol`` are recomputed from the positive series (which may need many
    terms at large arguments), and from mpmath as a last resort.
    """
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise ValueError("phi_weight needs lam >= 0")
    flat = np.atleast_1d(lam).ravel()
    out, err = log_phi_closed(p, flat)
    bad = np.flatnonzero((flat > 0) & ~(err <= rtol))
    if bad.size:
        try:
            out[bad] = log_phi_series(p, flat[bad], max_terms)
        except NoConvergence:
            for i in bad:
                try:
                    out[i] = log_phi_series(p, flat[i:i + 1], max_terms)[0]
                except NoConvergence:
                    out[i] = _log_phi_mp(p, flat[i])
    return out.reshape(lam.shape) if lam.ndim else float(out[0])


def phi_weight(p, lam):
    """The one-point weight phi_j(lam) (may underflow to 0 or overflow to inf)."""
    return np.exp(log_phi_weight(p, lam))


# ---------------------------------------------------------------------------


def monic_laguerre(n, alpha, x):
    """Monic generalized Laguerre polynomial (-1)^n n! L_n^alpha(x)."""
    x = np.asarray(x, dtype=float)
    p_prev = np.zeros_like(x)
    p = np.ones_like(x)
    for k in range(n):
        p, p_prev = (x - (2 * k + alpha + 1)) * p - k * (k + alpha) * p_prev, p
    return p if x.ndim else float(p)


@lru_cache(maxsize=64)
def gauss_laguerre(order, alpha):
    """Nodes and probability weights for the Gamma(alpha + 1) distribution.

    Golub-Welsch on the Jacobi matrix; stays accurate at orders where the
    three-term-recurrence route in scipy overflows.  Weights sum to one.
    """
    k = np.arange(order)
    diag = 2.0 * k + alpha + 1.0
    off = np.sqrt((k[1:]) * (k[1:] + float(alpha)))
    x, V = eigh_tridiagonal(diag, off)
    w = V[0] ** 2
    w = w / w.sum()
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w
