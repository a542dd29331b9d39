"""Exception types shared across the package."""


class MixMomentsError(Exception):
    """Base class for all package errors."""


class PoleError(MixMomentsError, ZeroDivisionError):
    """Raised when a function is evaluated at (or too near) a pole."""


class GuardError(MixMomentsError, ValueError):
    """Raised when an argument falls in an excluded neighbourhood."""


class NonConvergence(MixMomentsError, ArithmeticError):
    """Raised when a refinement check fails to reach its tolerance."""


class ZeroOnPath(MixMomentsError, ValueError):
    """Raised when a square root is continued through zero."""


class BranchNotClosed(MixMomentsError, ArithmeticError):
    """Raised when a continued square root does not return to itself."""


class EigenPairingError(MixMomentsError, ArithmeticError):
    """Raised when eigenvalues cannot be matched into conjugate pairs."""


class DegenerateSpectrum(MixMomentsError, ArithmeticError):
    """Raised when an eigenangle sits on the evaluation point 1."""


class NearEigenvalue(MixMomentsError, ArithmeticError):
    """Raised when a logarithmic derivative is requested at an eigenvalue."""


class TooFewAccepted(MixMomentsError, RuntimeError):
    """Raised when too few samples survive the excision cut."""


class ParseError(MixMomentsError, ValueError):
    """Raised on malformed input files; carries the offending line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class EmptyDataset(MixMomentsError, ValueError):
    """Raised when an input file holds no records."""
