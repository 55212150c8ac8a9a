"""Self-consistency suites run by ``wishart-sum validate``.

Every check yields a record {check_name, status, measured, tolerance}; status
is "pass", "fail" or "skip".  Nothing here depends on wall-clock time, so the
report of a given model and suite is reproducible byte for byte.
"""
import math

import numpy as np
from scipy.interpolate import CubicSpline

from . import halfdeg, saddle, susy
from .charpoly import CommutingCovariances, expect_charpoly, expect_inverse_charpoly
from .curves import DensityCurve
from .errors import WishartSumError
from .sampler import CovariancePair, histogram_tv, mc_density
from .special import kummer_identity_1f1, hyp1f1_series, log_factorial, monic_laguerre


def _record(name, measured, tol, ok=None):
    measured = float(measured)
    if ok is None:
        ok = bool(np.isfinite(measured) and measured <= tol)
    return {"check_name": name, "status": "pass" if ok else "fail",
            "measured": measured, "tolerance": float(tol)}


def _skip(name, why):
    return {"check_name": name, "status": "skip", "measured": None, "tolerance": None, "reason": why}


def _rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))


def _probe_points(m, count, seed=0):
    """Deterministic points from the bulk (density above 1% of its maximum)."""
    curve = halfdeg.density(m, grid=halfdeg.auto_grid(m, 8 * count))
    bulk = curve.grid[curve.values >= 0.01 * np.max(curve.values)]
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(bulk, min(count, bulk.size), replace=False))


def normalization_check(m):
    sign_g, log_g = halfdeg.gram_log_det(m)
    c = halfdeg.model_constants(m)
    val = c.sign_C * sign_g * math.exp(c.log_C + log_factorial(m.N) + log_g)
    return abs(val - 1.0)


def biorthogonality_check(m):
    """Largest deviation of G_j * int P_j phi_k from the identity."""
    return float(np.max(np.abs(halfdeg.biorthogonality_matrix(m) - np.eye(m.N))))


def fast_halfdeg(m):
    out = []
    ev = halfdeg.KernelEvaluator(m)
    out.append(_record("normalization N! det(g) C = 1", normalization_check(m), 1e-8))
    out.append(_record("bi-orthogonality", biorthogonality_check(m), 1e-8))
    x = _probe_points(m, 20)
    y = _probe_points(m, 20, seed=1)
    out.append(_record("kernel: single sum vs Gram inverse",
                       _rel(ev.kernel(x, y), halfdeg.kernel_gram(m, x, y)), 1e-8))
    if m.N >= 2:
        pts = x[[3, 11]]
        out.append(_record("R_2: kernel determinant vs block determinant",
                           _rel(halfdeg.correlation_Rk(m, ev, pts), halfdeg.andreief_Rk(m, pts)), 1e-7))
    curve = halfdeg.density(m, ev)
    out.append(_record("density integrates to N", abs(curve.integral() - m.N), 1e-6))
    out.append(_record("density non-negative", max(0.0, -float(np.min(curve.values))), 1e-12))
    back = DensityCurve.from_csv(curve.to_csv())
    out.append(_record("CSV round trip", float(np.max(np.abs(back.values - curve.values))), 0.0))
    cc = CommutingCovariances(m.N, m.N_A, m.N_B, (m.sigma_A,) * m.N, m.sigma_B)
    scale = m.N_A * m.sigma_A + m.N_B * max(m.sigma_B)
    y0 = 1e4 * scale * complex(math.cos(0.3), math.sin(0.3))
    out.append(_record("inverse characteristic polynomial monic limit",
                       abs(y0 ** m.N * expect_inverse_charpoly(cc, y0) - 1.0), 1e-3))
    return out


def full_halfdeg(m, seed=0):
    out = fast_halfdeg(m)
    ev = halfdeg.KernelEvaluator(m)
    if m.N >= 3:
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(5):
            pts = np.sort(rng.choice(_probe_points(m, 40, seed=2), 3, replace=False))
            worst = max(worst, _rel(halfdeg.correlation_Rk(m, ev, pts), halfdeg.andreief_Rk(m, pts)))
        out.append(_record("R_3: kernel determinant vs block determinant", worst, 1e-7))
    # Laguerre limit of the averaged characteristic polynomial
    s = m.sigma_A
    cc = CommutingCovariances(m.N, m.N_A, m.N_B, (s,) * m.N, (s,) * m.N)
    xs = np.linspace(0.0, 1.5 * (m.N_A + m.N_B) * s, 25)
    ref = s ** m.N * monic_laguerre(m.N, m.N_A + m.N_B - m.N, xs / s)
    val = expect_charpoly(cc, xs)
    err = float(np.max(np.abs(val - ref)) / max(np.max(np.abs(ref)), 1e-300))
    out.append(_record("Laguerre limit of E[det(x - H)]", err, 1e-10))
    # Kummer identity on the weight parameters of this model
    p = m.weight(0)
    a, b = p.n + 1, p.m + 1
    worst = 0.0
    for xk in (0.01, 0.5, 5.0, 50.0):
        worst = max(worst, _rel(kummer_identity_1f1(a, b, xk), hyp1f1_series(a, b, xk)))
    out.append(_record("Kummer identity vs series", worst, 1e-9))
    # Monte Carlo agreement
    pair = CovariancePair.diagonal(m.sigma_A, m.sigma_B, m.N_A, m.N_B)
    hist = mc_density(pair, 20000, bins=60, seed=seed)
    out.append(_record("Monte Carlo total variation (2e4 samples)",
                       histogram_tv(hist, lambda t: ev.kernel(t, t)), 0.03))
    if m.N <= 4:
        grid = _probe_points(m, 6)
        d_s = susy.density_susy(pair, grid)
        out.append(_record("supersymmetric density vs kernel density",
                           _rel(d_s.values, ev.kernel(grid, grid)), 1e-4))
    else:
        out.append(_skip("supersymmetric density vs kernel density", "N > 4"))
    return out


def fast_general(spec):
    out = []
    pair = spec.pair()
    y = complex(0.5 * spec.scale(), 0.05 * spec.scale())
    st = saddle.solve_saddle(pair, y)
    out.append(_record("saddle residual", st.residual, 1e-10))
    out.append(_record("saddle trace identity",
                       abs(saddle.trace_identity_residual(pair, st)) / max(abs(st.qA + st.qB), 1.0), 1e-9))
    big = 1e6 * spec.scale() * 1j
    far = saddle.solve_saddle(pair, big)
    out.append(_record("saddle asymptotic branch",
                       max(abs(far.qA - spec.N_A) / spec.N_A, abs(far.qB - spec.N_B) / spec.N_B), 1e-6))
    hist = mc_density(pair, 2000, bins=40, seed=0)
    total = (hist.counts.sum() + hist.n_outside) / (hist.n_samples * hist.N)
    out.append(_record("Monte Carlo eigenvalue count", abs(total - 1.0), 0.0))
    if spec.mode != "general":
        cc = spec.commuting()
        y0 = 1e4 * spec.scale() * complex(math.cos(0.3), math.sin(0.3))
        out.append(_record("inverse characteristic polynomial monic limit",
                           abs(y0 ** spec.N * expect_inverse_charpoly(cc, y0) - 1.0), 1e-3))
    return out


def full_general(spec, seed=0):
    out = fast_general(spec)
    pair = spec.pair()
    if spec.N <= 4:
        y = complex(0.5 * spec.scale(), 0.1 * spec.spread())
        z = susy.generating_function_11(pair, y, y)
        out.append(_record("Z(y, y) = 1", abs(z - 1.0), 1e-6))
        lo, hi = 0.02 * spec.scale(), spec.scale() + 6 * spec.spread()
        grid = np.linspace(lo, hi, 40)
        d = susy.density_susy(pair, grid, quad=susy.SusyQuadrature(rtol=1e-6))
        f = CubicSpline(np.r_[0.0, grid], np.r_[0.0, d.values])
        hist = mc_density(pair, 20000, bins=50, seed=seed)
        tv = histogram_tv(hist, lambda t: np.where(t <= hi, f(t), 0.0))
        out.append(_record("supersymmetric density vs Monte Carlo (2e4 samples)", tv, 0.04))
    else:
        out.append(_skip("supersymmetric density checks", "N > 4"))
    return out


def run_suite(spec, suite="fast", seed=0):
    """List of check records; model construction errors become a failed record."""
    if suite not in ("fast", "full"):
        raise ValueError("suite must be 'fast' or 'full'")
    try:
        if spec.mode == "half-degenerate":
            m = spec.halfdeg()
            return fast_halfdeg(m) if suite == "fast" else full_halfdeg(m, seed)
        return fast_general(spec) if suite == "fast" else full_general(spec, seed)
    except WishartSumError as exc:
        return [{"check_name": "model construction", "status": "fail", "measured": None,
                 "tolerance": None, "error": type(exc).__name__, "message": str(exc)}]

