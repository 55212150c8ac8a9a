"""Exception and warning types shared across the package."""


class WishartSumError(Exception):
    """Base class for all package errors."""


class NotHermitian(WishartSumError, ValueError):
    pass


class NoConvergence(WishartSumError, ArithmeticError):
    pass


class SingularMatrix(WishartSumError, ArithmeticError):
    pass


class NotPositiveDefinite(WishartSumError, ValueError):
    pass


class DegenerateSigma(WishartSumError, ValueError):
    """Two covariance eigenvalues coincide (or nearly so).

    ``pair`` holds the offending indices when known.
    """

    def __init__(self, msg, pair=None):
        super().__init__(msg)
        self.pair = pair


class CancellationLoss(WishartSumError, ArithmeticError):
    pass


class ZeroImaginaryPart(WishartSumError, ValueError):
    pass


class QuadratureNotConverged(WishartSumError, ArithmeticError):
    pass


class EpsilonNotStable(WishartSumError, ArithmeticError):
    pass


class IndexOutOfRange(WishartSumError, IndexError):
    pass


class SpecError(WishartSumError, ValueError):
    """Malformed model specification."""


class IllConditioned(UserWarning):
    pass


class WrongBranch(UserWarning):
    pass
