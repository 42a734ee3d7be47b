"""Exception types shared across the package.

The CLI maps these onto exit codes: ``DomainError`` -> 3, ``NumericalError`` -> 4.
"""


class SpecCodeError(Exception):
    pass


class DomainError(SpecCodeError, ValueError):
    """Input rejected by a constructor or operation precondition."""


class NonHermitianError(DomainError):
    def __init__(self, asymmetry: float, tol: float):
        self.asymmetry = asymmetry
        self.tol = tol
        super().__init__(
            f"operator is not Hermitian: max |H - H^dag| = {asymmetry:.3e} "
            f"exceeds {tol:.1e} (relative)"
        )


class NumericalError(SpecCodeError, ArithmeticError):
    """A numerical tolerance was breached (quadrature, convergence, ...)."""
