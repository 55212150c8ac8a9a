"""Spectral statistics of H = A A^H + B B^H for correlated complex Wishart factors.

Exact finite-N results for the half-degenerate case (Sigma_A proportional to
the identity, Sigma_B diagonal) come from a bi-orthogonal kernel; general
covariance pairs are handled by a low-dimensional exact integral and by the
large-N saddle-point equations.  A Monte Carlo sampler is included as an
independent check.
"""
from .charpoly import (BivariatePoly, CommutingCovariances, charpoly_coefficients,
                       expect_charpoly, expect_inverse_charpoly)
from .curves import DensityCurve, total_variation
from .errors import (CancellationLoss, DegenerateSigma, EpsilonNotStable, IllConditioned,
                     IndexOutOfRange, NoConvergence, NotHermitian, NotPositiveDefinite,
                     QuadratureNotConverged, SingularMatrix, SpecError, WishartSumError,
                     WrongBranch, ZeroImaginaryPart)
from .halfdeg import (HalfDegenerateModel, KernelEvaluator, andreief_Rk, biorthogonality_matrix,
                      correlation_Rk, density, gram_matrix, kernel, kernel_evaluator, kernel_gram,
                      model_constants, poly_Pj, poly_Pj_exact)
from .linalg import cholesky_sqrt, hermitian_eigenvalues, lu_det_and_solve
from .saddle import SaddleState, density_saddle, solve_saddle, trace_identity_residual
from .sampler import (CovariancePair, SpectrumHistogram, histogram_tv, mc_density,
                      sample_eigenvalues, sample_H)
from .special import (WeightParams, gauss_laguerre, hyp1f1_series, kummer_identity_1f1,
                      log_factorial, monic_laguerre, phi_weight)
from .susy import EpsilonPolicy, SusyQuadrature, density_susy, generating_function_11, resolvent

__version__ = "0.1.0"
