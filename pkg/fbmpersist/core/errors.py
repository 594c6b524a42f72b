"""
Exception hierarchy for fbmpersist
"""


class FbmPersistError(Exception):
    """Base class for all fbmpersist errors"""

    exit_code = 2


class ConfigValidationError(FbmPersistError):
    """Run configuration is missing or inconsistent"""

    exit_code = 1


class DomainError(FbmPersistError, ValueError):
    """An argument lies outside the domain of an operation"""

    exit_code = 1


class PreconditionViolated(DomainError):
    """A stated precondition of a bound does not hold"""


class NumericalError(FbmPersistError):
    """A numerical routine could not produce a trustworthy result"""

    exit_code = 2


class EmbeddingNotPSD(NumericalError):
    """Circulant embedding has eigenvalues below the clip tolerance"""

    def __init__(self, hurst: float, n_increments: int, min_eigenvalue: float):
        self.hurst = hurst
        self.n_increments = n_increments
        self.min_eigenvalue = min_eigenvalue
        super().__init__(
            f"Circulant embedding not PSD for H={hurst}, n={n_increments}: "
            f"min eigenvalue {min_eigenvalue:.3e}"
        )


class FactorizationFailed(NumericalError):
    """Dense covariance matrix is numerically not positive definite"""


class SizeExceeded(NumericalError):
    """Requested problem size exceeds a configured cap"""

    def __init__(self, what: str, size: int, cap: int):
        self.size = size
        self.cap = cap
        super().__init__(f"{what}: size {size} exceeds cap {cap}")


class DegenerateDesign(NumericalError):
    """Regression design has too few distinct abscissae"""


class CheckFailed(FbmPersistError):
    """One or more verification checks failed"""

    exit_code = 3

    def __init__(self, failed: list):
        self.failed = list(failed)
        super().__init__(f"{len(self.failed)} check(s) failed: {', '.join(self.failed)}")
