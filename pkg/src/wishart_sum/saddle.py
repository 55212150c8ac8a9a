"""Large-N density from the two coupled saddle-point equations.

For y in the upper half plane solve

    1 - N_A/q_A - tr[G Sigma_A] = 0,   1 - N_B/q_B - tr[G Sigma_B] = 0,
    G = (y - q_A Sigma_A - q_B Sigma_B)^-1,

on the branch that tends to (q_A, q_B) = (N_A, N_B) as |y| -> infinity.  The
density is -Im[(q_A + q_B - m)/y] / pi, m = N_A + N_B - N.

The physical branch is reached by a homotopy in Im(y): start far above the
point, where (N_A, N_B) is an excellent guess, and move straight down in
geometric steps, correcting with damped Newton at each step.
"""
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .curves import DensityCurve
from .errors import NoConvergence, WrongBranch

MAX_ITER = 50


@dataclass
class SaddleState:
    y: complex
    qA: complex
    qB: complex
    residual: float
    converged: bool
    m: int = 0

    def density(self):
        """-Im[(q_A + q_B - m)/y] / pi.

        Subtracting m = N_A + N_B - N drops the pole at y = 0 (a point mass at
        the origin that has no weight on x > 0); at a solution the result
        equals -Im tr G / pi.
        """
        return -((self.qA + self.qB - self.m) / self.y).imag / math.pi


class _System:
    """Residuals and Jacobian; commuting covariances use a diagonal fast path."""

    def __init__(self, c):
        self.SA = np.asarray(c.Sigma_A, dtype=complex)
        self.SB = np.asarray(c.Sigma_B, dtype=complex)
        self.NA, self.NB = c.N_A, c.N_B
        self.N = self.SA.shape[0]
        self.I = np.eye(self.N)
        self.a = self.b = None
        _, U = np.linalg.eigh(self.SA + 0.6180339887 * self.SB)
        A = U.conj().T @ self.SA @ U
        B = U.conj().T @ self.SB @ U
        off = max(np.max(np.abs(A - np.diag(np.diag(A)))), np.max(np.abs(B - np.diag(np.diag(B)))))
        if off <= 1e-12 * max(np.max(np.abs(A)), np.max(np.abs(B))):
            self.a = np.diag(A).real.copy()
            self.b = np.diag(B).real.copy()

    def resolvent(self, y, q):
        return np.linalg.inv(y * self.I - q[0] * self.SA - q[1] * self.SB)

    def trace_G(self, y, q):
        if self.a is not None:
            return complex(np.sum(1.0 / (y - q[0] * self.a - q[1] * self.b)))
        return complex(np.trace(self.resolvent(y, q)))

    def residual(self, y, q):
        if self.a is not None:
            g = 1.0 / (y - q[0] * self.a - q[1] * self.b)
            F = np.array([1 - self.NA / q[0] - np.sum(g * self.a),
                          1 - self.NB / q[1] - np.sum(g * self.b)])
            return F, g
        G = self.resolvent(y, q)
        return np.array([1 - self.NA / q[0] - np.trace(G @ self.SA),
                         1 - self.NB / q[1] - np.trace(G @ self.SB)]), G

    def jacobian(self, q, G):
        if self.a is not None:
            g2 = G * G
            ab = np.sum(g2 * self.a * self.b)
            return np.array([[self.NA / q[0] ** 2 - np.sum(g2 * self.a ** 2), -ab],
                             [-ab, self.NB / q[1] ** 2 - np.sum(g2 * self.b ** 2)]])
        GA = G @ self.SA
        GB = G @ self.SB
        return np.array([[self.NA / q[0] ** 2 - np.trace(GA @ GA), -np.trace(GB @ GA)],
                         [-np.trace(GA @ GB), self.NB / q[1] ** 2 - np.trace(GB @ GB)]])

    def newton(self, y, q, tol, max_iter=MAX_ITER):
        q = np.array(q, dtype=complex)
        F, G = self.residual(y, q)
        r = float(np.max(np.abs(F)))
        for _ in range(max_iter):
            if r < tol:
                return q, r, True
            step = np.linalg.solve(self.jacobian(q, G), -F)
            t = 1.0
            while True:
                q_new = q + t * step
                if np.all(q_new != 0):
                    F_new, G_new = self.residual(y, q_new)
                    r_new = float(np.max(np.abs(F_new)))
                    if r_new <= (1 - 1e-4 * t) * r or t < 1e-6:
                        break
                t *= 0.5
            q, F, G, r = q_new, F_new, G_new, r_new
        return q, r, r < tol


def _scale(c):
    return float(c.N_A * np.linalg.norm(c.Sigma_A, 2) + c.N_B * np.linalg.norm(c.Sigma_B, 2))


def solve_saddle(c, y, warm_start=None, tol=1e-11):
    """Physical solution (q_A, q_B) at y (Im y > 0).

    Without ``warm_start`` the branch is followed from y + i*R, R a multiple
    of the spectral scale, straight down to y.
    """
    y = complex(y)
    if y.imag <= 0:
        raise ValueError("solve_saddle needs Im(y) > 0")
    sys = _System(c)
    if warm_start is not None:
        q, r, ok = sys.newton(y, (warm_start.qA, warm_start.qB), tol)
    else:
        R = 10.0 * _scale(c) + abs(y)
        q = np.array([c.N_A, c.N_B], dtype=complex)
        ok = True
        nsteps = max(2, int(math.ceil(math.log(R / y.imag) / math.log(1.25))))
        for eta in np.geomspace(R, y.imag, nsteps):
            q, r, ok = sys.newton(complex(y.real, eta), q, tol)
            if not ok:
                break
    if not ok:
        raise NoConvergence(f"saddle-point Newton failed at y = {y} (residual {r:.2e})")
    state = SaddleState(y, complex(q[0]), complex(q[1]), r, True, c.N_A + c.N_B - sys.N)
    if state.density() < -1e-6:
        warnings.warn(f"negative density {state.density():.3g} at y = {y}", WrongBranch)
    return state


def trace_identity_residual(c, state):
    """q_A + q_B - (N_A + N_B - N) - y tr G, which vanishes at any solution."""
    sys = _System(c)
    trG = sys.trace_G(state.y, np.array([state.qA, state.qB]))
    return complex(state.qA + state.qB - (c.N_A + c.N_B - sys.N) - state.y * trG)


def density_saddle(c, grid, tol=1e-11, eps0=None):
    """Limiting density on an ascending grid, evaluated at x + i*eps0."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly ascending")
    if eps0 is None:
        span = float(grid[-1] - grid[0]) if grid.size > 1 else max(abs(float(grid[0])), 1.0)
        eps0 = 1e-6 * span
    vals = np.empty(grid.size)
    failed = []
    states = []
    for i, x in enumerate(grid):
        try:
            st = solve_saddle(c, complex(x, eps0), None, tol)
            vals[i] = st.density()
            states.append(st)
        except NoConvergence:
            vals[i] = np.nan
            failed.append(float(x))
    meta = {"eps0": eps0, "tol": tol}
    if failed:
        meta["no_convergence"] = failed
    curve = DensityCurve(grid, vals, "saddle", meta)
    return curve
