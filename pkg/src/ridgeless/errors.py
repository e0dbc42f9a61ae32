"""Exception types raised by the library."""


class RidgelessError(Exception):
    """Base class for all library errors."""


class ProfileError(RidgelessError, ValueError):
    """A tabulated kernel profile is malformed (asymmetric, non-finite, too short)."""


class DegenerateClassError(RidgelessError):
    """An aliasing class has a vanishing kernel spectrum.

    The kernel matrix is then singular and interpolation through that class
    is impossible.
    """

    def __init__(self, message, classes=()):
        super().__init__(message)
        self.classes = tuple(classes)


class SingularKernelError(DegenerateClassError):
    """The dense kernel matrix is numerically singular."""


class NonConvergenceError(RidgelessError):
    """A quadrature did not settle to the requested tolerance."""


class SolverError(RidgelessError):
    """A linear solve failed its residual check."""
