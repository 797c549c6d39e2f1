class MitError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ValidationError(MitError, ValueError):
    """Invalid input: bad dimensions, resistivities, indices or scenario files."""

    exit_code = 2

    def __init__(self, message, field=None):
        self.field = field
        if field:
            message = f"{field}: {message}"
        super().__init__(message)


class DomainError(MitError, ValueError):
    """Evaluation point outside the validity domain lambda > -1/tau_1."""

    exit_code = 3


class NumericError(MitError, ArithmeticError):
    """A factorization or eigensolve failed."""

    exit_code = 4
