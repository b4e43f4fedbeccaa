"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class RoaSelectError(Exception):
    """Base class for all errors raised by :mod:`roa_select`."""


class DimensionError(RoaSelectError, ValueError):
    """Matrix or vector shapes are incompatible."""


class DomainError(RoaSelectError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class ConvergenceError(RoaSelectError):
    """The QR iteration did not converge.

    Attributes
    ----------
    iterations : int
        Number of sweeps spent on the eigenvalue that failed to deflate.
    """

    def __init__(self, message: str, iterations: int):
        super().__init__(message)
        self.iterations = iterations


class ReorderError(RoaSelectError):
    """Swapping two adjacent diagonal blocks of a Schur form failed.

    Attributes
    ----------
    pair : tuple of int
        Starting rows of the two blocks that could not be exchanged.
    """

    def __init__(self, message: str, pair: tuple[int, int]):
        super().__init__(message)
        self.pair = pair


class SingularEquationError(RoaSelectError):
    """A Sylvester equation has overlapping spectra and no unique solution."""


class NoStabilizingSolutionError(RoaSelectError):
    """The Riccati equation has no stabilizing, positive definite solution."""


class CenterSpectrumError(RoaSelectError):
    """Eigenvalues lie too close to the imaginary axis to be classified.

    Attributes
    ----------
    eigenvalues : list of complex
        The offending eigenvalues.
    """

    def __init__(self, message: str, eigenvalues):
        super().__init__(message)
        self.eigenvalues = list(eigenvalues)


class DegenerateInputError(RoaSelectError, ValueError):
    """The input column yields a non-positive quadratic form."""


class ParseError(RoaSelectError, ValueError):
    """A network document failed validation.

    Attributes
    ----------
    path : str
        Location of the offending field, e.g. ``"drivers[2]"``.
    """

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class NoValidCandidatesError(RoaSelectError):
    """Every candidate driver node was rejected."""
