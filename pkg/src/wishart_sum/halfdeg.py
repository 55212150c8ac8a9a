"""Exact finite-N statistics when Sigma_A = sigma_A * Id and Sigma_B is diagonal.

The eigenvalues form a bi-orthogonal ensemble with weights phi_j (one per
eigenvalue sigma_Bj of Sigma_B).  The kernel is the single sum

    K(x, y) = sum_j G_j P_j(x) phi_j(y),

where P_j is the averaged characteristic polynomial of the reduced model with
sigma_Bj removed, N -> N-1 and N_B -> N_B-1.  The Gram-matrix form

    K(x, y) = sum_{a,b} x^(a-1) (g^-1)_{ba} phi_b(y),   g_ab = int lam^(a-1) phi_b,

and the (N+k)-dimensional block determinant are kept as independent checks.
"""
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

from .charpoly import CommutingCovariances, charpoly_coefficients
from .curves import DensityCurve
from .errors import DegenerateSigma, IllConditioned, IndexOutOfRange
from .linalg import lu_det_and_solve
from .special import WeightParams, log_factorial, log_phi_weight

SEP_ERROR = 1e-8
SEP_WARN = 1e-4


@dataclass(frozen=True)
class HalfDegenerateModel:
    """sigma_A * Id and diag(sigma_B) with N_A, N_B >= N samples."""

    N: int
    N_A: int
    N_B: int
    sigma_A: float
    sigma_B: tuple

    def __post_init__(self):
        sb = tuple(float(s) for s in np.ravel(self.sigma_B))
        object.__setattr__(self, "sigma_B", sb)
        object.__setattr__(self, "sigma_A", float(self.sigma_A))
        if len(sb) != self.N:
            raise ValueError(f"sigma_B must have N={self.N} entries, got {len(sb)}")
        if self.N < 1 or self.N_A < self.N or self.N_B < self.N:
            raise ValueError("need N_A >= N and N_B >= N >= 1")
        if self.sigma_A <= 0 or min(sb) <= 0:
            raise ValueError("covariance eigenvalues must be positive")
        for i in range(self.N):
            if abs(sb[i] - self.sigma_A) <= SEP_ERROR * max(sb[i], self.sigma_A):
                raise DegenerateSigma(f"sigma_B[{i}] = {sb[i]} coincides with sigma_A", pair=(i, "A"))
            for j in range(i):
                if abs(sb[i] - sb[j]) <= SEP_ERROR * max(sb[i], sb[j]):
                    raise DegenerateSigma(f"sigma_B[{j}] and sigma_B[{i}] coincide ({sb[i]})", pair=(j, i))

    @property
    def m(self):
        return self.N_A + self.N_B - self.N

    @property
    def n(self):
        return self.N_B - self.N

    def weight(self, j):
        """WeightParams of phi_j (0-based j)."""
        return WeightParams(self.N, self.N_A, self.N_B, self.sigma_A, self.sigma_B[j])

    def min_relative_gap(self):
        vals = np.array(sorted(self.sigma_B + (self.sigma_A,)))
        return float(np.min(np.diff(vals) / vals[1:])) if vals.size > 1 else np.inf

    def conditioning_warnings(self):
        gap = self.min_relative_gap()
        if gap < SEP_WARN:
            return [f"covariance eigenvalues nearly coincide (relative gap {gap:.2e})"]
        return []

    def scaled(self, t):
        return HalfDegenerateModel(self.N, self.N_A, self.N_B, t * self.sigma_A,
                                   tuple(t * s for s in self.sigma_B))


@dataclass(frozen=True)
class ModelConstants:
    """Log-domain normalisation constants.

    ``log_C``/``sign_C``: the joint-density constant.  ``log_G``/``sign_G``:
    the kernel coefficients G_j.  ``c_kernel``: N_A!(N_B-N)!/(N_A+N_B-N)!.
    """

    log_C: float
    sign_C: float
    log_G: np.ndarray
    sign_G: np.ndarray
    c_kernel: float

    @property
    def C(self):
        return self.sign_C * math.exp(self.log_C)

    @property
    def G(self):
        return self.sign_G * np.exp(self.log_G)


def _log_vandermonde(s):
    """sign and log|prod_{i<j} (s_j - s_i)|."""
    s = np.asarray(s, dtype=float)
    sign, logabs = 1.0, 0.0
    for j in range(len(s)):
        for i in range(j):
            d = s[j] - s[i]
            sign *= math.copysign(1.0, d)
            logabs += math.log(abs(d))
    return sign, logabs


def model_constants(m):
    N, NA, NB, n, mm = m.N, m.N_A, m.N_B, m.n, m.m
    sA = m.sigma_A
    sB = np.asarray(m.sigma_B)
    sign_v, log_v = _log_vandermonde(sB)
    log_C = (-NA * N * math.log(sA) + (N - NB - 1) * float(np.sum(np.log(sB)))
             - log_factorial(N) - log_v)
    for l in range(N):
        log_C += log_factorial(n) - log_factorial(n + l) - log_factorial(mm)
    log_G = np.empty(N)
    sign_G = np.empty(N)
    base = log_factorial(n) - log_factorial(NB - 1) - log_factorial(mm) - NA * math.log(sA)
    for j in range(N):
        d = sB[j] - np.delete(sB, j)
        log_G[j] = base - (n + 1) * math.log(sB[j]) - float(np.sum(np.log(np.abs(d))))
        sign_G[j] = float(np.prod(np.sign(d)))
    c = math.exp(log_factorial(NA) + log_factorial(n) - log_factorial(mm))
    return ModelConstants(log_C, sign_v, log_G, sign_G, c)


def gram_scaled(m):
    """Gram matrix as (ghat, log_col) with g[p, j] = ghat[p, j] * exp(log_col[j]).

    Moments follow from the Laplace transform m!/((s+1/sA)^N_A (s+1/sBj)^(n+1))
    of phi_j, which gives a finite sum of positive terms.
    """
    N, NA, n = m.N, m.N_A, m.n
    sA = m.sigma_A
    sB = np.asarray(m.sigma_B)
    ghat = np.empty((N, N))
    for p in range(N):
        r = np.arange(p + 1)
        lbin = log_factorial(p) - log_factorial(r) - log_factorial(p - r)
        lrise = (log_factorial(NA + r - 1) - log_factorial(NA - 1)
                 + log_factorial(n + p - r) - log_factorial(n))
        coef = np.exp(lbin + lrise)
        ghat[p] = [np.sum(coef * sA ** r * sb ** (p - r)) for sb in sB]
    log_col = log_factorial(m.m) + NA * math.log(sA) + (n + 1) * np.log(sB)
    return ghat, log_col


def gram_matrix(m):
    """g_ij = int_0^inf lam^(i-1) phi_j(lam) dlam (may overflow for huge models)."""
    ghat, log_col = gram_scaled(m)
    with np.errstate(over="ignore"):
        return ghat * np.exp(log_col)[None, :]


def poly_Pj(m, j):
    """Ascending coefficients of P^(j), the monic degree-(N-1) polynomial (j = 1..N)."""
    if not (1 <= j <= m.N):
        raise IndexOutOfRange(f"j must lie in 1..{m.N}, got {j}")
    sB = list(m.sigma_B)
    del sB[j - 1]
    c = CommutingCovariances(m.N - 1, m.N_A, m.N_B - 1, (m.sigma_A,) * (m.N - 1), sB)
    return charpoly_coefficients(c)


def _falling_int(K, a):
    v = 1
    for t in range(a):
        v *= K - t
    return v if a <= K else 0


def poly_Pj_exact(m, j):
    """poly_Pj in exact rational arithmetic (the float parameters are exact binary rationals)."""
    if not (1 <= j <= m.N):
        raise IndexOutOfRange(f"j must lie in 1..{m.N}, got {j}")
    sA = Fraction(m.sigma_A)
    sB = [Fraction(s) for i, s in enumerate(m.sigma_B) if i != j - 1]
    d = len(sB)
    # coef[(a, b)] multiplies z1^a z2^b x^(d-a-b) in prod_k (x - z1 sA - z2 sBk)
    coef = {(0, 0): Fraction(1)}
    for b_k in sB:
        new = {}
        for (a, b), v in coef.items():
            new[a, b] = new.get((a, b), 0) + v
            new[a + 1, b] = new.get((a + 1, b), 0) - v * sA
            new[a, b + 1] = new.get((a, b + 1), 0) - v * b_k
        coef = new
    out = [Fraction(0)] * (d + 1)
    for (a, b), v in coef.items():
        out[d - a - b] += v * _falling_int(m.N_A, a) * _falling_int(m.N_B - 1, b)
    return out


def gram_scaled_exact(m):
    """Exact rational ghat of gram_scaled (same log_col)."""
    NA, n = m.N_A, m.n
    sA = Fraction(m.sigma_A)
    out = []
    for p in range(m.N):
        terms = [math.comb(p, r) * _falling_int(NA + r - 1, r) * _falling_int(n + p - r, p - r) * sA ** r
                 for r in range(p + 1)]
        row = []
        for s in m.sigma_B:
            sb = Fraction(s)
            row.append(sum(t * sb ** (p - r) for r, t in enumerate(terms)))
        out.append(row)
    return out


def _log_abs_fraction(q):
    return math.log(abs(q.numerator)) - math.log(q.denominator)


def biorthogonality_matrix(m):
    """M[j, k] = G_j int P_j phi_k, which should be the identity.

    The integral is taken termwise from the closed-form moments, in exact
    rational arithmetic: the sum over monomials cancels heavily, so double
    precision loses up to eps times the condition number reported by
    biorthogonality_condition.  Only G_j and the final scaling are rounded.
    """
    G = model_constants(m)
    ghat = gram_scaled_exact(m)
    log_col = log_factorial(m.m) + m.N_A * math.log(m.sigma_A) + (m.n + 1) * np.log(m.sigma_B)
    M = np.zeros((m.N, m.N))
    for j in range(m.N):
        P = poly_Pj_exact(m, j + 1)
        for k in range(m.N):
            s = sum(P[a] * ghat[a][k] for a in range(m.N))
            if s != 0:
                M[j, k] = G.sign_G[j] * math.copysign(1.0, s) * math.exp(
                    _log_abs_fraction(s) + G.log_G[j] + log_col[k])
    return M


def biorthogonality_condition(m):
    """max_jk G_j sum_a |P_j[a]| g[a, k]: the amplification of coefficient rounding."""
    ghat, log_col = gram_scaled(m)
    G = model_constants(m)
    P = np.array([poly_Pj(m, j + 1) for j in range(m.N)])
    with np.errstate(divide="ignore"):
        logc = np.log(np.abs(P) @ np.abs(ghat)) + log_col[None, :] + G.log_G[:, None]
    return float(np.exp(min(np.max(logc), 700.0)))


class KernelEvaluator:
    """Precomputed polynomials and constants for pointwise kernel evaluation."""

    def __init__(self, model):
        self.model = model
        self.constants = model_constants(model)
        self.Pj_coeffs = np.array([poly_Pj(model, j + 1) for j in range(model.N)])
        self.weights = [model.weight(j) for j in range(model.N)]
        lead = self.Pj_coeffs[:, -1]
        if np.max(np.abs(lead - 1.0)) > 1e-10:
            raise ArithmeticError("reduced polynomials are not monic")

    def log_phi(self, y):
        """ln phi_j(y) stacked along the first axis."""
        return np.stack([log_phi_weight(w, y) for w in self.weights])

    def kernel(self, x, y, log_phi=None):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        if log_phi is None:
            log_phi = self.log_phi(y)
        c = self.constants
        out = np.zeros(x.shape)
        for j in range(self.model.N):
            P = np.polynomial.polynomial.polyval(x, self.Pj_coeffs[j])
            out += c.sign_G[j] * np.exp(c.log_G[j] + log_phi[j]) * P
        return out

    def __call__(self, x, y):
        return self.kernel(x, y)


def kernel_evaluator(m):
    return KernelEvaluator(m)


def kernel(m, ev, x, y):
    """K_N(x, y) from the single-sum representation."""
    if ev is None:
        ev = KernelEvaluator(m)
    return ev.kernel(x, y)


def equilibrate(M):
    """M = diag(r) Mh diag(c) with r, c powers of two and Mh of unit row/column scale.

    Rows of moment matrices carry powers lam^a, which would otherwise defeat
    the relative pivot test of the LU.
    """
    r = 2.0 ** np.round(np.log2(np.max(np.abs(M), axis=1)))
    Mh = M / r[:, None]
    c = 2.0 ** np.round(np.log2(np.max(np.abs(Mh), axis=0)))
    return Mh / c[None, :], r, c


def _fraction_det(A):
    """Determinant of a square matrix of Fractions (Gaussian elimination)."""
    M = [list(row) for row in A]
    n = len(M)
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            M[col], M[piv] = M[piv], M[col]
            det = -det
        p = M[col][col]
        det *= p
        for r in range(col + 1, n):
            f = M[r][col] / p
            if f:
                M[r] = [a - f * b for a, b in zip(M[r], M[col])]
    return det


def gram_log_det(m, exact=True):
    """sign and log|det g| of the Gram matrix.

    ``exact`` takes the determinant of the scaled Gram matrix in rational
    arithmetic; otherwise an equilibrated LU is used.
    """
    ghat, log_col = gram_scaled(m)
    if exact:
        det = _fraction_det(gram_scaled_exact(m))
        if det == 0:
            return 0.0, -math.inf
        return float(math.copysign(1.0, det)), _log_abs_fraction(det) + float(np.sum(log_col))
    gh, r, c = equilibrate(ghat)
    det, _ = lu_det_and_solve(gh)
    return float(np.sign(det)), math.log(abs(det)) + float(np.sum(np.log(r)) + np.sum(np.log(c)) + np.sum(log_col))


def _fraction_inverse(A):
    """Inverse of a square matrix of Fractions by Gauss-Jordan elimination."""
    n = len(A)
    M = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(A)]
    for col in range(n):
        piv = next(r for r in range(col, n) if M[r][col] != 0)
        M[col], M[piv] = M[piv], M[col]
        p = M[col][col]
        M[col] = [v / p for v in M[col]]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [a - f * b for a, b in zip(M[r], M[col])]
    return [row[n:] for row in M]


def kernel_gram(m, x, y, exact=True):
    """K_N(x, y) through explicit inversion of the Gram matrix (reference path).

    With ``exact`` the scaled Gram matrix is inverted and contracted with
    x^a and phi_b(y) in rational arithmetic, so only phi_b(y) is rounded
    (the monomial sum cancels heavily beyond N ~ 6).  Otherwise everything
    runs in double precision with an equilibrated LU.
    """
    ghat, log_col = gram_scaled(m)
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    phihat = np.exp(np.stack([log_phi_weight(m.weight(j), y) - log_col[j] for j in range(m.N)]))
    if exact:
        ginv = _fraction_inverse(gram_scaled_exact(m))
        out = np.empty(x.shape)
        for idx in np.ndindex(x.shape):
            xf = Fraction(float(x[idx]))
            tot = Fraction(0)
            for b in range(m.N):
                q = Fraction(0)
                for a in reversed(range(m.N)):
                    q = q * xf + ginv[b][a]
                tot += q * Fraction(float(phihat[(b,) + idx]))
            out[idx] = float(tot)
        return out
    # K = sum_{a,b} x^a (ghat^-1)_{ba} phihat_b(y)
    gh, r, c = equilibrate(ghat)
    _, ginv = lu_det_and_solve(gh, np.eye(m.N))
    ginv = ginv / c[:, None] / r[None, :]
    X = np.stack([x ** a for a in range(m.N)])
    coeff = np.tensordot(ginv, phihat, axes=([0], [0]))  # indexed by a
    return np.sum(X * coeff, axis=0)


def _kernel_matrix_mp(m, pts, dps):
    """K(l_i, l_j) at ``dps`` decimal digits.

    G_j and the coefficients of P_j are exact rationals; only phi_j(l) is
    evaluated in mpmath.
    """
    sA = Fraction(m.sigma_A)
    sB = [Fraction(s) for s in m.sigma_B]
    base = Fraction(math.factorial(m.n), math.factorial(m.N_B - 1) * math.factorial(m.m)) / sA ** m.N_A
    k = len(pts)
    with mpmath.workdps(dps):
        lam = [mpmath.mpf(float(t)) for t in pts]
        a = mpmath.mpf(sA.denominator) / sA.numerator
        K = mpmath.zeros(k, k)
        for j in range(m.N):
            G = base / sB[j] ** (m.n + 1)
            for i in range(m.N):
                if i != j:
                    G /= sB[j] - sB[i]
            G = mpmath.mpf(G.numerator) / G.denominator
            P = [mpmath.mpf(c.numerator) / c.denominator for c in poly_Pj_exact(m, j + 1)]
            b = mpmath.mpf(sB[j].denominator) / sB[j].numerator
            phi = [t ** m.m * mpmath.exp(-a * t) * mpmath.hyp1f1(m.n + 1, m.m + 1, (a - b) * t) for t in lam]
            Px = [mpmath.polyval(P[::-1], t) for t in lam]
            for r in range(k):
                for c in range(k):
                    K[r, c] += G * Px[r] * phi[c]
        return K


def correlation_Rk(m, ev, points, cond_limit=1e6, dps=40):
    """k-point correlation function as det[K(l_i, l_j)].

    Close points make the kernel matrix nearly singular and the determinant
    loses eps * cond digits to rounding in the entries.  Beyond ``cond_limit``
    the matrix is rebuilt and reduced at ``dps`` digits.
    """
    pts = np.asarray(points, dtype=float).ravel()
    k = pts.size
    if not 1 <= k <= m.N:
        raise ValueError(f"need 1 <= k <= N = {m.N}, got k = {k}")
    if ev is None:
        ev = KernelEvaluator(m)
    Kmat = ev.kernel(pts[:, None], pts[None, :])
    if k == 1:
        return float(Kmat[0, 0])
    if np.linalg.cond(Kmat) > cond_limit:
        with mpmath.workdps(dps):
            return float(mpmath.det(_kernel_matrix_mp(m, pts, dps)))
    return float(np.linalg.det(Kmat))


def andreief_Rk(m, points, cond_limit=1e12):
    """k-point correlation from the (N+k)-dimensional block determinant.

    R_k = (-1)^k C N! det [[g, L], [Phi, 0]] with g the Gram matrix,
    L[a, i] = l_i^a and Phi[i, b] = phi_b(l_i).  Columns of g and Phi share
    the scale of phi_b, which is factored out.
    """
    pts = np.asarray(points, dtype=float).ravel()
    k, N = pts.size, m.N
    if not 1 <= k <= N:
        raise ValueError(f"need 1 <= k <= N = {N}, got k = {k}")
    ghat, log_col = gram_scaled(m)
    phihat = np.stack([np.exp(log_phi_weight(m.weight(b), pts) - log_col[b]) for b in range(N)], axis=1)
    L = np.stack([pts ** a for a in range(N)])
    M = np.zeros((N + k, N + k))
    M[:N, :N] = ghat
    M[:N, N:] = L
    M[N:, :N] = phihat
    M, r, cs = equilibrate(M)
    cond = np.linalg.cond(M)
    if cond > cond_limit:
        warnings.warn(f"block matrix condition number {cond:.2e}", IllConditioned)
    det, _ = lu_det_and_solve(M)
    c = model_constants(m)
    logpref = (c.log_C + log_factorial(N) + float(np.sum(log_col))
               + float(np.sum(np.log(r)) + np.sum(np.log(cs))))
    return float((-1) ** k * c.sign_C * det * math.exp(logpref))


def auto_grid(m, count=512):
    """Grid on (0, x_max] wide enough to contain all but a negligible tail."""
    sB = max(m.sigma_B)
    S = m.N_A * m.sigma_A + m.N_B * sB
    sd = math.sqrt(m.N_A * m.sigma_A ** 2 + m.N_B * sB ** 2)
    x_max = max(1.2 * S, S + 12.0 * sd)
    return np.linspace(0.0, x_max, count + 1)[1:]


def density(m, ev=None, grid=None):
    """R_1(x) = K_N(x, x) on a grid (auto grid when None)."""
    if ev is None:
        ev = KernelEvaluator(m)
    if grid is None:
        grid = auto_grid(m)
    grid = np.asarray(grid, dtype=float)
    if np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be positive and strictly ascending")
    vals = ev.kernel(grid, grid)
    meta = {"N": m.N, "N_A": m.N_A, "N_B": m.N_B}
    warn = m.conditioning_warnings()
    if warn:
        meta["warnings"] = warn
    return DensityCurve(grid, vals, "halfdeg-kernel", meta)
