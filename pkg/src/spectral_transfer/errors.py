"""Exception hierarchy.

Input problems derive from :class:`InputError` (a ``ValueError``); numerical
breakdowns derive from :class:`NumericalError`. The CLI maps the first family
to exit code 2 and the second to exit code 3.
"""


class SpectralTransferError(Exception):
    """Base class for all package errors."""


class InputError(SpectralTransferError, ValueError):
    """Invalid argument values or inconsistent shapes."""


class ShapeError(InputError):
    """Array dimensions do not agree."""


class DegenerateInputError(InputError):
    """Input is well-formed but carries no usable information (e.g. constant y)."""


class FormatError(InputError):
    """A data file or manifest could not be parsed."""


class NumericalError(SpectralTransferError, ArithmeticError):
    """A numerical procedure broke down."""


class SingularityError(NumericalError):
    """A factorization failed because the matrix is singular or not positive definite."""


class RankExhaustedError(NumericalError):
    """The deflated data carry no variance left for the requested component."""

    def __init__(self, component: int, message: str | None = None):
        self.component = component
        super().__init__(message or f"rank exhausted at component {component}")


class CollinearityError(NumericalError):
    """The projected loading/weight matrix is numerically singular."""
