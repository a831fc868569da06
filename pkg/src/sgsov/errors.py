"""Typed failures raised by the library.

Degeneracy errors mark parameter points where a genericity assumption fails;
callers (the CLI, test harnesses) may resample on them.  Every other error
signals a genuine violation.
"""


class SgsovError(Exception):
    """Base class for all library errors."""


class ParameterError(SgsovError, ValueError):
    """Model parameters violate the representation constraints."""


class DomainError(SgsovError, ValueError):
    """Evaluation outside the domain of a Laurent polynomial."""


class ConditioningError(SgsovError):
    """An interpolation system is too ill-conditioned to trust."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class NumericError(SgsovError):
    """A numerical kernel (eigen-solve, root finder) failed."""


class SizeError(SgsovError):
    """Hilbert-space dimension exceeds the configured cap."""


class NotApplicableError(SgsovError):
    """Operation is undefined for this chain parity."""


class DegeneracyError(SgsovError):
    """Non-generic parameters: resample and retry."""


class CentralityError(DegeneracyError):
    """An orbit product that should be scalar is not."""


class GaugeError(DegeneracyError):
    """Gauge prescriptions could not be satisfied."""

    def __init__(self, message, roots=()):
        super().__init__(message)
        self.roots = list(roots)


class ConsistencyError(SgsovError):
    """Sampled data is inconsistent with the claimed algebraic structure."""


class SovFormError(SgsovError):
    """An operator does not act in the expected separated form."""


class ConstructionError(SgsovError):
    """The Baxter Q construction failed; diagnostics are attached."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})
