"""Exact one-point density for arbitrary (non-commuting) covariances.

The ratio Z(y, x) = E[det(x - H) / det(y - H)] reduces to a four-dimensional
integral: two radial variables s_A, s_B with Gamma weights and two phases
w_A, w_B on circles.  With

    F_s = (y - s_A Sigma_A - s_B Sigma_B)^-1,   F = (x - w_A Sigma_A - w_B Sigma_B)^-1,
    D = det F^-1,   K1 = Sa Fs Sa, K2 = Sb Fs Sb, K3 = Sa Fs Sb, K4 = Sb Fs Sa,
    t_i = tr(F K_i),

the integrand is det(F_s) times

    N_A N_B/(s_A s_B) D - N_B/s_B D t1 - N_A/s_A D t2
        + D (t1 t2 - t3 t4 - tr(F K1 F K2) + tr(F K3 F K4)).

Each D-weighted term is a polynomial in (w_A, w_B) of degree <= N, and the
phase integrals act on it as the linear functional
w_A^a w_B^b -> N_A!/(N_A-a-dA)! * N_B!/(N_B-b-dB)!, where (dA, dB) is one
when the 1/s_A resp. 1/s_B prefactor is absent.  Those functionals are
evaluated exactly by discrete Fourier sampling on circles of radius ~N_A and
~N_B (sampling the unit circle instead cancels catastrophically, since the
answer is ~1/(N_A-1)! times numbers of order one).

The radial variables are integrated with generalized Gauss-Laguerre rules on
rays rotated into the lower half plane, s = v e^{-i theta}/cos(theta).  For
Im(y) >= 0 the matrix y - s_A Sigma_A - s_B Sigma_B then stays invertible, so
the resolvent can be evaluated directly on the real axis (boundary value from
above).  The density is -Im(d/dx Z)|_{x=y} / pi.
"""
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .curves import DensityCurve
from .errors import EpsilonNotStable, QuadratureNotConverged, ZeroImaginaryPart
from .special import gauss_laguerre

_KRON_BUDGET = 4_000_000


@dataclass(frozen=True)
class EpsilonPolicy:
    """How the imaginary part of the spectral argument is chosen.

    ``initial_eps = 0`` evaluates directly on the real axis (rotated radial
    contours).  A positive value starts there and shrinks by
    ``shrink_factor`` until the polynomial extrapolation to zero is stable to
    ``stability_tol``.
    """

    initial_eps: float = 0.0
    shrink_factor: float = 0.5
    stability_tol: float = 1e-3
    max_halvings: int = 12

    def __post_init__(self):
        if self.initial_eps < 0 or not (0 < self.shrink_factor < 1):
            raise ValueError("need initial_eps >= 0 and 0 < shrink_factor < 1")
        if self.stability_tol <= 0 or self.max_halvings < 1:
            raise ValueError("stability_tol and max_halvings must be positive")


@dataclass(frozen=True)
class SusyQuadrature:
    """Radial order (per variable), angular nodes (per circle) and tolerances.

    ``atol`` is an absolute floor for the density test, relative to |W|:
    near the hard edge the density can be many orders below the resolvent.
    """

    radial: int = 48
    angular: int = 0  # 0 -> smallest even number >= N + 2
    rtol: float = 1e-8
    atol: float = 1e-9
    max_radial: int = 768
    rotation: float = 1.0  # theta = rotation / sqrt(N_A + 1)

    def angular_nodes(self, N):
        M = self.angular or (N + 2)
        return M + (M % 2)


def _falling_over_power(K, delta, M, r):
    """K!/(K-a-delta)! / r^a for a = 0..M-1 (zero past K)."""
    out = np.zeros(M)
    base = 1.0
    for t in range(delta):
        base *= K - t
    if delta > K:
        return out
    v = base
    for a in range(M):
        if a + delta > K:
            break
        out[a] = v
        v *= (K - a - delta) / r
    return out


@lru_cache(maxsize=64)
def _angular_rule(K, M, r):
    """Nodes on |w| = r and weights for the two functionals (delta = 0, 1)."""
    j = np.arange(M)
    u = np.exp(2j * np.pi * (j + 0.5) / M)
    w = r * u
    a = np.arange(M)
    phase = np.exp(-2j * np.pi * np.outer(j + 0.5, a) / M)  # (node, power)
    lam = np.stack([phase @ _falling_over_power(K, d, M, r) / M for d in (0, 1)])
    return w, lam


class _Model:
    def __init__(self, c, quad):
        self.c = c
        self.SA = np.asarray(c.Sigma_A, dtype=complex)
        self.SB = np.asarray(c.Sigma_B, dtype=complex)
        self.N = self.SA.shape[0]
        self.NA, self.NB = c.N_A, c.N_B
        self.quad = quad
        self.M = quad.angular_nodes(self.N)
        self.rA = float(self.NA)
        self.rB = float(self.NB)
        self.wA, self.lamA = _angular_rule(self.NA, self.M, self.rA)
        self.wB, self.lamB = _angular_rule(self.NB, self.M, self.rB)

    def angular(self, x):
        """Per-node quantities of the (w_A, w_B) grid at source point x."""
        I = np.eye(self.N)
        X = (x * I - self.wA[:, None, None, None] * self.SA
             - self.wB[None, :, None, None] * self.SB).reshape(-1, self.N, self.N)
        F = np.linalg.inv(X)
        D = np.linalg.det(X)
        lam = {(dA, dB): np.outer(self.lamA[dA], self.lamB[dB]).ravel()
               for dA in (0, 1) for dB in (0, 1)}
        return F, F @ F, D, lam

    def radial(self, y, order, sign):
        vA, pA = gauss_laguerre(order, self.NA - 1)
        vB, pB = gauss_laguerre(order, self.NB - 1)
        thA = sign * self.quad.rotation / math.sqrt(self.NA + 1)
        thB = sign * self.quad.rotation / math.sqrt(self.NB + 1)
        rhoA = np.exp(-1j * thA) / math.cos(thA)
        rhoB = np.exp(-1j * thB) / math.cos(thB)
        sA = rhoA * vA
        sB = rhoB * vB
        wA = pA * rhoA ** self.NA * np.exp(1j * vA * math.tan(thA))
        wB = pB * rhoB ** self.NB * np.exp(1j * vB * math.tan(thB))
        SA_, SB_ = np.broadcast_arrays(sA[:, None], sB[None, :])
        W = (wA[:, None] * wB[None, :]).ravel()
        return SA_.ravel(), SB_.ravel(), W

    def evaluate(self, y, x, order, sign, derivative):
        """Z(y, x), or d/dx Z(y, x) when ``derivative``, at radial order ``order``."""
        N = self.N
        F, F2, D, lam = self.angular(x)
        sA, sB, wr = self.radial(y, order, sign)
        total = 0j
        n4 = N ** 4
        step = max(1, _KRON_BUDGET // n4)
        I = np.eye(N)
        SA, SB = self.SA, self.SB
        # angular Kronecker factors: FF[w, p, q, r, s] = F_pq F_rs
        FF = np.einsum("wpq,wrs->wpqrs", F, F).reshape(-1, n4)
        if derivative:
            FF2 = (np.einsum("wpq,wrs->wpqrs", F2, F) + np.einsum("wpq,wrs->wpqrs", F, F2)).reshape(-1, n4)
            t0 = np.trace(F, axis1=1, axis2=2)
        for s0 in range(0, sA.size, step):
            a = sA[s0:s0 + step]
            b = sB[s0:s0 + step]
            Y = y * I - a[:, None, None] * SA - b[:, None, None] * SB
            Fs = np.linalg.inv(Y)
            detFs = 1.0 / np.linalg.det(Y)
            K1 = SA @ Fs @ SA
            K2 = SB @ Fs @ SB
            K3 = SA @ Fs @ SB
            K4 = SB @ Fs @ SA
            # t_i[w, s] = tr(F_w K_i,s)
            tr = lambda G, K: np.einsum("wpq,sqp->ws", G, K)  # noqa: E731
            t1, t2, t3, t4 = tr(F, K1), tr(F, K2), tr(F, K3), tr(F, K4)
            # K12[s, p, q, r, s'] = K1_qr K2_s'p  so that FF . K12 = tr(F K1 F K2)
            K12 = np.einsum("tqr,tsp->tpqrs", K1, K2).reshape(-1, n4)
            K34 = np.einsum("tqr,tsp->tpqrs", K3, K4).reshape(-1, n4)
            c12 = FF @ K12.T
            c34 = FF @ K34.T
            Q = t1 * t2 - t3 * t4 - c12 + c34
            # weights are Gamma(N_A) x Gamma(N_B), so the prefactors become polynomial
            cB = a / self.NA
            cA = b / self.NB
            cAB = cA * cB
            if not derivative:
                body = (lam[0, 0][:, None]
                        - cB[None, :] * lam[1, 0][:, None] * t1
                        - cA[None, :] * lam[0, 1][:, None] * t2
                        + cAB[None, :] * lam[1, 1][:, None] * Q)
            else:
                u1, u2, u3, u4 = tr(F2, K1), tr(F2, K2), tr(F2, K3), tr(F2, K4)
                d12 = FF2 @ K12.T
                d34 = FF2 @ K34.T
                dQ = -u1 * t2 - t1 * u2 + u3 * t4 + t3 * u4 + d12 - d34
                T0 = t0[:, None]
                body = (lam[0, 0][:, None] * T0
                        - cB[None, :] * lam[1, 0][:, None] * (T0 * t1 - u1)
                        - cA[None, :] * lam[0, 1][:, None] * (T0 * t2 - u2)
                        + cAB[None, :] * lam[1, 1][:, None] * (T0 * Q + dQ))
            total += np.sum(D @ body * (wr[s0:s0 + step] * detFs))
        return total

    def converged(self, y, x, sign, derivative, imag_only=False):
        """Double the radial order until the result is stable to ``quad.rtol``.

        With ``imag_only`` the test applies to the imaginary part, which is
        what the density needs and which can be far smaller than |Z|; steps
        below ``quad.atol * |Z|`` also count as converged.
        """
        q = self.quad
        order = q.radial
        prev = self.evaluate(y, x, order, sign, derivative)
        change = np.inf
        while 2 * order <= q.max_radial:
            order *= 2
            cur = self.evaluate(y, x, order, sign, derivative)
            if imag_only:
                change = abs(cur.imag - prev.imag) / max(abs(cur.imag), q.atol / q.rtol * abs(cur), 1e-300)
            else:
                change = abs(cur - prev) / max(abs(cur), 1e-300)
            prev = cur
            if change < q.rtol:
                return cur, order, change
        if change < 1e3 * q.rtol:
            return prev, order, change
        raise QuadratureNotConverged(f"radial quadrature changed by {change:.2e} at order {order}")


def generating_function_11(c, y, x, quad=None):
    """Z(y, x) = E[det(x - H) / det(y - H)] for Im(y) != 0.

    x is normally real; complex x is accepted (Z(y, y) = 1).
    """
    y = complex(y)
    if y.imag == 0:
        raise ZeroImaginaryPart("Z(y, x) needs Im(y) != 0")
    mod = _Model(c, quad or SusyQuadrature())
    return mod.converged(y, x, 1.0 if y.imag > 0 else -1.0, False)[0]


def resolvent(c, y, quad=None):
    """E[tr (y - H)^-1]; Im(y) = 0 means the boundary value from above."""
    y = complex(y)
    mod = _Model(c, quad or SusyQuadrature())
    return mod.converged(y, y, -1.0 if y.imag < 0 else 1.0, True)[0]


def _neville_at_zero(xs, ys):
    """Value at 0 of the interpolating polynomial through (xs, ys)."""
    p = list(ys)
    n = len(xs)
    for k in range(1, n):
        for i in range(n - k):
            p[i] = (xs[i + k] * p[i] - xs[i] * p[i + 1]) / (xs[i + k] - xs[i])
    return p[0]


def _density_point(mod, x, eps):
    if eps.initial_eps == 0:
        W, order, _ = mod.converged(complex(x), complex(x), 1.0, True, imag_only=True)
        return -W.imag / math.pi, {"radial_order": order}
    es, vals, extrap = [], [], []
    e = eps.initial_eps
    for k in range(eps.max_halvings + 1):
        W, order, _ = mod.converged(complex(x, e), complex(x, e), 1.0, True, imag_only=True)
        es.append(e)
        vals.append(-W.imag / math.pi)
        if len(es) >= 2:
            extrap.append(_neville_at_zero(es[-3:], vals[-3:]))
        if len(extrap) >= 2:
            a, b = extrap[-2], extrap[-1]
            if abs(a - b) <= eps.stability_tol * max(abs(b), 1e-300):
                return b, {"radial_order": order, "eps_final": e}
        e *= eps.shrink_factor
    raise EpsilonNotStable(f"epsilon extrapolation did not stabilise at x = {x}")


def density_susy(c, grid, eps=None, quad=None):
    """R_1 on a grid for a general covariance pair."""
    eps = eps or EpsilonPolicy()
    quad = quad or SusyQuadrature()
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be positive and strictly ascending")
    mod = _Model(c, quad)
    vals = np.empty(grid.size)
    orders = []
    unstable = []
    for i, x in enumerate(grid):
        try:
            vals[i], info = _density_point(mod, x, eps)
            orders.append(info["radial_order"])
        except (EpsilonNotStable, QuadratureNotConverged) as exc:
            vals[i] = np.nan
            unstable.append(float(x))
            warnings.warn(str(exc), RuntimeWarning)
    meta = {"radial_orders": sorted(set(orders)), "angular_nodes": mod.M,
            "eps": {"initial": eps.initial_eps, "shrink": eps.shrink_factor,
                    "tol": eps.stability_tol, "max_halvings": eps.max_halvings}}
    if unstable:
        meta["unstable_points"] = unstable
    return DensityCurve(grid, vals, "susy", meta)
