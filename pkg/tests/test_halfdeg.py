import math
from fractions import Fraction
from itertools import permutations

import numpy as np
import pytest
import sympy as sp
from scipy import integrate
from scipy.signal import argrelmax
from scipy.special import roots_genlaguerre

from conftest import NINE_LEVEL_SIGMA_B, random_halfdeg
from wishart_sum import halfdeg
from wishart_sum.errors import DegenerateSigma, IllConditioned, IndexOutOfRange
from wishart_sum.halfdeg import HalfDegenerateModel, KernelEvaluator
from wishart_sum.special import log_phi_weight
from wishart_sum.validation import _probe_points


def _phi(m, j, lam):
    return np.exp(log_phi_weight(m.weight(j), np.asarray(lam, dtype=float)))


def _moment_tensor_rule(m, a, k, order=40):
    """int lam^a phi_k as m! sA^NA sBk^(n+1) E[(sA U + sBk V)^a], U ~ Gamma(N_A), V ~ Gamma(n+1)."""
    u, wu = roots_genlaguerre(order, m.N_A - 1)
    v, wv = roots_genlaguerre(order, m.n)
    wu = wu / math.gamma(m.N_A)
    wv = wv / math.gamma(m.n + 1)
    lam = m.sigma_A * u[:, None] + m.sigma_B[k] * v[None, :]
    mean = float(np.sum(wu[:, None] * wv[None, :] * lam ** a))
    logpre = math.lgamma(m.m + 1) + m.N_A * math.log(m.sigma_A) + (m.n + 1) * math.log(m.sigma_B[k])
    return math.exp(logpre) * mean


def _rational_Pj(N, N_A, N_B, sA, sB, j):
    """Residue extraction done symbolically with sympy."""
    x, z1, z2 = sp.symbols("x z1 z2")
    expr = sp.Integer(1)
    for k, s in enumerate(sB):
        if k != j - 1:
            expr *= x - z1 * sA - z2 * s
    poly = sp.Poly(sp.expand(expr), z1, z2)
    out = sp.Integer(0)
    KA, KB = N_A, N_B - 1
    for (a, b), c in poly.terms():
        if a <= KA and b <= KB:
            out += c * sp.ff(KA, a) * sp.ff(KB, b)
    return [sp.Rational(t) for t in reversed(sp.Poly(out, x).all_coeffs())]


# -------------------------------------------------------------- model checks

def test_degenerate_sigma_reports_pair():
    with pytest.raises(DegenerateSigma) as exc:
        HalfDegenerateModel(3, 4, 5, 1.0, (0.5, 1.5, 0.5))
    assert exc.value.pair == (0, 2)
    with pytest.raises(DegenerateSigma) as exc:
        HalfDegenerateModel(2, 4, 5, 1.0, (1.0, 2.0))
    assert exc.value.pair == (0, "A")


def test_model_validation():
    with pytest.raises(ValueError):
        HalfDegenerateModel(2, 1, 5, 1.0, (0.5, 2.0))
    with pytest.raises(ValueError):
        HalfDegenerateModel(2, 4, 5, 1.0, (0.5,))
    with pytest.raises(ValueError):
        HalfDegenerateModel(2, 4, 5, -1.0, (0.5, 2.0))


def test_conditioning_warning_for_close_values():
    m = HalfDegenerateModel(2, 4, 5, 1.0, (0.5, 0.50001))
    assert m.conditioning_warnings()
    assert not HalfDegenerateModel(2, 4, 5, 1.0, (0.5, 2.0)).conditioning_warnings()


# ---------------------------------------------------------------- constants

def test_constant_N1():
    c = halfdeg.model_constants(HalfDegenerateModel(1, 1, 1, 1.0, (2.0,)))
    assert c.C == pytest.approx(0.5, rel=1e-14)


def test_constant_direct_product():
    m = HalfDegenerateModel(3, 4, 6, 1.3, (0.5, 1.5, 2.5))
    N, n, mm = m.N, m.n, m.m
    sB = m.sigma_B
    vdm = np.prod([sB[j] - sB[i] for j in range(N) for i in range(j)])
    C = m.sigma_A ** (-m.N_A * N) * np.prod(np.power(sB, N - m.N_B - 1)) / (math.factorial(N) * vdm)
    for l in range(N):
        C *= math.factorial(n) / (math.factorial(n + l) * math.factorial(mm))
    assert halfdeg.model_constants(m).C == pytest.approx(C, rel=1e-12)


@pytest.mark.parametrize("model", [
    HalfDegenerateModel(3, 4, 5, 1.0, (0.5, 1.5, 2.5)),
    HalfDegenerateModel(1, 1, 1, 1.0, (2.0,)),
    HalfDegenerateModel(6, 9, 8, 1.1, (0.3, 0.6, 0.9, 1.5, 2.2, 3.0)),
])
def test_normalization_identity(model):
    g = halfdeg.gram_matrix(model)
    C = halfdeg.model_constants(model).C
    assert math.factorial(model.N) * np.linalg.det(g) * C == pytest.approx(1.0, abs=1e-8)


def test_normalization_random(rng):
    for N in range(1, 7):
        for _ in range(3):
            m = random_halfdeg(rng, N)
            sign, logdet = halfdeg.gram_log_det(m)
            c = halfdeg.model_constants(m)
            val = sign * c.sign_C * math.exp(logdet + c.log_C + math.lgamma(N + 1))
            assert val == pytest.approx(1.0, abs=1e-8)


def test_sign_invariant_under_permutation():
    sB = (0.5, 1.5, 2.5)
    signs = set()
    for perm in permutations(range(3)):
        m = HalfDegenerateModel(3, 4, 5, 1.0, tuple(sB[i] for i in perm))
        vs, _ = halfdeg._log_vandermonde(m.sigma_B)
        signs.add(halfdeg.model_constants(m).sign_C * vs)
    assert signs == {1.0}


def test_G_finite_for_large_model(nine_level_large):
    c = halfdeg.model_constants(nine_level_large)
    assert np.all(np.isfinite(c.log_G)) and np.isfinite(c.log_C)


# --------------------------------------------------------------------- Gram

def test_gram_N1_quad():
    m = HalfDegenerateModel(1, 1, 1, 1.0, (2.0,))
    ref, _ = integrate.quad(lambda t: _phi(m, 0, t), 0, np.inf, epsabs=0, epsrel=1e-12)
    assert halfdeg.gram_matrix(m)[0, 0] == pytest.approx(ref, rel=1e-10)


def test_gram_vs_adaptive_quadrature(rng):
    m = random_halfdeg(rng, 4)
    g = halfdeg.gram_matrix(m)
    for a in range(m.N):
        for k in range(m.N):
            ref, _ = integrate.quad(lambda t: t ** a * _phi(m, k, t), 0, np.inf, epsabs=0, epsrel=1e-12,
                                    limit=200)
            assert g[a, k] == pytest.approx(ref, rel=1e-9)


def test_gram_vs_gamma_tensor_rule(rng):
    for N in (2, 5, 8):
        m = random_halfdeg(rng, N)
        g = halfdeg.gram_matrix(m)
        ref = np.array([[_moment_tensor_rule(m, a, k) for k in range(N)] for a in range(N)])
        np.testing.assert_allclose(g, ref, rtol=1e-9)


def test_gram_exact_matches_float(rng):
    m = random_halfdeg(rng, 6)
    ghat, _ = halfdeg.gram_scaled(m)
    exact = np.array([[float(v) for v in row] for row in halfdeg.gram_scaled_exact(m)])
    np.testing.assert_allclose(ghat, exact, rtol=1e-13)


def test_gram_scaling():
    m = HalfDegenerateModel(3, 4, 6, 1.2, (0.4, 1.1, 2.9))
    t = 2.0
    g1 = halfdeg.gram_matrix(m)
    g2 = halfdeg.gram_matrix(m.scaled(t))
    # row i (0-based) of g carries lam^i; phi_j itself scales as t^m
    for i in range(m.N):
        np.testing.assert_allclose(g2[i], t ** (m.m + i + 1) * g1[i], rtol=1e-13)


# --------------------------------------------------------------- polynomials

def test_Pj_N1():
    np.testing.assert_array_equal(halfdeg.poly_Pj(HalfDegenerateModel(1, 3, 2, 1.0, (2.0,)), 1), [1.0])


def test_Pj_N2_example():
    m = HalfDegenerateModel(2, 2, 2, 1.0, (0.5, 2.0))
    np.testing.assert_allclose(halfdeg.poly_Pj(m, 1), [-4.0, 1.0], rtol=1e-15)
    np.testing.assert_allclose(halfdeg.poly_Pj(m, 2), [-2.5, 1.0], rtol=1e-15)


@pytest.mark.parametrize("N,N_A,N_B", [(3, 3, 4), (4, 6, 5), (5, 5, 5)])
def test_Pj_vs_rational_oracle(N, N_A, N_B):
    sA = sp.Rational(3, 4)
    sB = [sp.Rational(2 * k + 1, 8) for k in range(N)]
    m = HalfDegenerateModel(N, N_A, N_B, float(sA), tuple(float(s) for s in sB))
    for j in range(1, N + 1):
        ref = np.array([float(c) for c in _rational_Pj(N, N_A, N_B, sA, sB, j)])
        np.testing.assert_allclose(halfdeg.poly_Pj(m, j), ref, rtol=1e-12, atol=1e-12 * np.max(np.abs(ref)))
        exact = halfdeg.poly_Pj_exact(m, j)
        assert exact == [Fraction(int(c.p), int(c.q)) for c in _rational_Pj(N, N_A, N_B, sA, sB, j)]


def test_Pj_monic(nine_level_large):
    for j in range(1, 10):
        assert halfdeg.poly_Pj(nine_level_large, j)[-1] == pytest.approx(1.0, abs=1e-10)


def test_Pj_index_errors():
    m = HalfDegenerateModel(2, 2, 2, 1.0, (0.5, 2.0))
    for j in (0, 3):
        with pytest.raises(IndexOutOfRange):
            halfdeg.poly_Pj(m, j)
        with pytest.raises(IndexOutOfRange):
            halfdeg.poly_Pj_exact(m, j)


# --------------------------------------------------------- bi-orthogonality

def test_biorthogonality_exact_rational():
    """With exact G_j the identity holds exactly."""
    m = HalfDegenerateModel(4, 5, 6, 0.75, (0.25, 0.5, 1.5, 2.0))
    ghat = halfdeg.gram_scaled_exact(m)
    for j in range(m.N):
        P = halfdeg.poly_Pj_exact(m, j + 1)
        for k in range(m.N):
            s = sum(P[a] * ghat[a][k] for a in range(m.N))
            assert (s == 0) == (j != k)


@pytest.mark.parametrize("N", range(1, 9))
def test_biorthogonality(N, rng):
    for _ in range(4):
        m = random_halfdeg(rng, N)
        M = halfdeg.biorthogonality_matrix(m)
        diag = np.diag(M)
        assert np.max(np.abs(diag - 1.0)) < 1e-8
        off = M - np.diag(diag)
        assert np.max(np.abs(off)) < 1e-8 * np.min(np.abs(diag))


def test_biorthogonality_widely_spread_covariances():
    rng = np.random.default_rng(2)
    ladder = np.geomspace(0.2, 5.0, 36)
    for N in (6, 7, 8):
        for _ in range(4):
            pick = np.sort(rng.choice(ladder, N + 1, replace=False))
            iA = int(rng.integers(0, N + 1))
            m = HalfDegenerateModel(N, N + int(rng.integers(0, 5)), N + int(rng.integers(0, 5)),
                                    pick[iA], tuple(np.delete(pick, iA)))
            assert np.max(np.abs(halfdeg.biorthogonality_matrix(m) - np.eye(N))) < 1e-8


def test_biorthogonality_vs_quadrature(rng):
    m = random_halfdeg(rng, 4)
    G = halfdeg.model_constants(m).G
    for j in range(m.N):
        P = halfdeg.poly_Pj(m, j + 1)
        for k in range(m.N):
            val = G[j] * sum(P[a] * _moment_tensor_rule(m, a, k) for a in range(m.N))
            assert val == pytest.approx(float(j == k), abs=1e-8)


def test_biorthogonality_condition_reported(nine_level_small):
    # the nine-level model is far beyond what a double precision contraction can resolve
    assert halfdeg.biorthogonality_condition(nine_level_small) > 1e10
    assert np.max(np.abs(halfdeg.biorthogonality_matrix(nine_level_small) - np.eye(9))) < 1e-8


# ------------------------------------------------------------------- kernel

@pytest.mark.parametrize("N", range(1, 7))
def test_kernel_vs_gram_inverse(N, rng):
    from wishart_sum.validation import _probe_points
    m = random_halfdeg(rng, N)
    ev = KernelEvaluator(m)
    x = _probe_points(m, 20, seed=0)
    y = _probe_points(m, 20, seed=1)
    ref = halfdeg.kernel_gram(m, x, y)
    np.testing.assert_allclose(ev.kernel(x, y), ref, rtol=1e-8)


def test_kernel_function_matches_evaluator(rng):
    m = random_halfdeg(rng, 3)
    ev = halfdeg.kernel_evaluator(m)
    assert halfdeg.kernel(m, ev, 3.0, 4.0) == ev(3.0, 4.0) == halfdeg.kernel(m, None, 3.0, 4.0)


def test_reproducing_property():
    m = HalfDegenerateModel(3, 4, 5, 1.0, (0.5, 1.5, 2.5))
    ev = KernelEvaluator(m)
    for x, y in [(3.0, 5.0), (8.0, 2.0), (6.0, 6.0)]:
        val, _ = integrate.quad(lambda t: ev.kernel(x, t) * ev.kernel(t, y), 0, np.inf,
                                epsabs=0, epsrel=1e-10, limit=200)
        assert val == pytest.approx(ev.kernel(x, y), rel=1e-6)


def test_sigma_B_exchange_invariance(rng):
    m = random_halfdeg(rng, 5)
    sB = list(m.sigma_B)
    sB[1], sB[3] = sB[3], sB[1]
    m2 = HalfDegenerateModel(m.N, m.N_A, m.N_B, m.sigma_A, tuple(sB))
    x = np.linspace(1.0, 20.0, 15)
    y = x[::-1]
    np.testing.assert_allclose(KernelEvaluator(m2).kernel(x, y), KernelEvaluator(m).kernel(x, y), rtol=1e-12)


def test_scale_covariance(rng):
    m = random_halfdeg(rng, 4)
    t = 2.0
    x = np.linspace(2.0, 25.0, 12)
    y = np.linspace(3.0, 18.0, 12)
    k1 = KernelEvaluator(m).kernel(x, y)
    k2 = KernelEvaluator(m.scaled(t)).kernel(t * x, t * y)
    np.testing.assert_allclose(k2, k1 / t, rtol=1e-9)


def test_evaluator_monic_guard():
    m = HalfDegenerateModel(3, 4, 5, 1.0, (0.5, 1.5, 2.5))
    ev = KernelEvaluator(m)
    assert ev.Pj_coeffs.shape == (3, 3)
    np.testing.assert_allclose(ev.Pj_coeffs[:, -1], 1.0, atol=1e-10)


# ------------------------------------------------------------- correlations

def test_R1_is_density(rng):
    m = random_halfdeg(rng, 3)
    ev = KernelEvaluator(m)
    assert halfdeg.correlation_Rk(m, ev, [4.0]) == ev.kernel(4.0, 4.0)


def test_R2_coincident_points_vanish(rng):
    m = random_halfdeg(rng, 4)
    ev = KernelEvaluator(m)
    x = 6.0
    scale = ev.kernel(x, x) ** 2
    assert abs(halfdeg.correlation_Rk(m, ev, [x, x])) < 1e-12 * scale


@pytest.mark.parametrize("N", [1, 2, 3, 4, 5])
def test_Rk_kernel_vs_andreief(N, rng):
    from wishart_sum.validation import _probe_points
    m = random_halfdeg(rng, N)
    ev = KernelEvaluator(m)
    pool = _probe_points(m, 40, seed=N)
    for k in range(1, min(N, 3) + 1):
        for _ in range(10):
            pts = rng.choice(pool, k, replace=False)
            ref = halfdeg.andreief_Rk(m, pts)
            assert halfdeg.correlation_Rk(m, ev, pts) == pytest.approx(ref, rel=1e-7)


def test_Rk_permutation_invariance(rng):
    m = random_halfdeg(rng, 4)
    ev = KernelEvaluator(m)
    pts = np.array([5.0, 9.0, 13.0])
    vals = [halfdeg.correlation_Rk(m, ev, pts[list(p)]) for p in permutations(range(3))]
    vals_a = [halfdeg.andreief_Rk(m, pts[list(p)]) for p in permutations(range(3))]
    np.testing.assert_allclose(vals, vals[0], rtol=1e-12)
    np.testing.assert_allclose(vals_a, vals_a[0], rtol=1e-10)


def test_Rk_too_many_points():
    m = HalfDegenerateModel(2, 3, 3, 1.0, (0.5, 2.0))
    with pytest.raises(ValueError, match="N = 2"):
        halfdeg.correlation_Rk(m, None, [1.0, 2.0, 3.0])
    with pytest.raises(ValueError, match="N = 2"):
        halfdeg.andreief_Rk(m, [1.0, 2.0, 3.0])


def test_Rk_full_order_positive():
    m = HalfDegenerateModel(3, 4, 5, 1.0, (0.5, 1.5, 2.5))
    ev = KernelEvaluator(m)
    pts = [2.0, 6.0, 11.0]
    val = halfdeg.correlation_Rk(m, ev, pts)
    assert val > 0
    assert halfdeg.andreief_Rk(m, pts) == pytest.approx(val, rel=1e-8)


def test_andreief_ill_conditioned_warning(nine_level_small):
    with pytest.warns(IllConditioned):
        halfdeg.andreief_Rk(nine_level_small, [30.0, 60.0], cond_limit=1.0)


# ------------------------------------------------------------------ density

def test_density_nine_level(nine_level_small):
    curve = halfdeg.density(nine_level_small)
    assert curve.method == "halfdeg-kernel"
    assert np.min(curve.values) >= -1e-10
    assert curve.integral() == pytest.approx(9.0, abs=1e-6)
    peaks = curve.grid[argrelmax(curve.values)[0]]
    assert peaks.size == 9
    # each maximum sits near a deterministic position N_A sA + N_B sBj
    centres = 35 * 1.0 + 40 * np.array(NINE_LEVEL_SIGMA_B)
    assert np.all(np.abs(np.sort(peaks) - np.sort(centres)) < 0.2 * centres + 10)


def test_density_large_model(nine_level_large):
    curve = halfdeg.density(nine_level_large)
    assert np.min(curve.values) >= -1e-10
    assert curve.integral() == pytest.approx(9.0, abs=1e-6)


def test_density_integrates_to_N(rng):
    for N in (1, 3, 6):
        m = random_halfdeg(rng, N)
        ev = KernelEvaluator(m)
        val, _ = integrate.quad(lambda t: ev.kernel(t, t), 0, np.inf, epsabs=0, epsrel=1e-10, limit=400)
        assert val == pytest.approx(N, abs=1e-6)


def test_density_grid_validation():
    m = HalfDegenerateModel(2, 3, 3, 1.0, (0.5, 2.0))
    with pytest.raises(ValueError):
        halfdeg.density(m, grid=[2.0, 1.0])
    with pytest.raises(ValueError):
        halfdeg.density(m, grid=[0.0, 1.0])


def test_density_records_warnings():
    m = HalfDegenerateModel(2, 4, 5, 1.0, (0.5, 0.50001))
    assert "warnings" in halfdeg.density(m).metadata


def test_rk_close_points_extended_precision(rng):
    m = random_halfdeg(rng, 4)
    ev = halfdeg.KernelEvaluator(m)
    x0 = float(_probe_points(m, 1, seed=2)[0])
    pts = np.array([x0, x0 * (1 + 4e-3), x0 * (1 - 5e-3)])
    a = halfdeg.correlation_Rk(m, ev, pts)
    b = halfdeg.andreief_Rk(m, pts)
    assert a == pytest.approx(b, rel=1e-7)
