"""Exception hierarchy.

Every error raised by the package derives from :class:`HybridError`, so
callers can catch the whole family at once. The ``exit_code`` attribute is
what the command line front end returns when the error reaches it.
"""


class HybridError(Exception):
    exit_code = 1


class InvalidStateError(HybridError, ValueError):
    """Matrix is not a density matrix (negative eigenvalue, trace, Hermiticity)."""


class BoundsError(HybridError, IndexError):
    """Site index or kernel support outside the lattice window."""


class TruncationError(HybridError, ValueError):
    """Initial probability mass falls outside the lattice window."""


class UnsupportedDimensionError(HybridError, ValueError):
    pass


class ShapeError(HybridError, ValueError):
    """Array shapes or dimensions do not match."""


class CPViolationError(HybridError, ValueError):
    """A rate matrix is not positive semidefinite.

    ``pair`` holds the offending classical transition ``(destination, source)``
    when known, ``site`` the lattice site for continuum constructions and
    ``slack`` the amount by which the constraint is violated.
    """

    exit_code = 3

    def __init__(self, message, pair=None, site=None, slack=None):
        super().__init__(message)
        self.pair = pair
        self.site = site
        self.slack = slack


class RangeError(HybridError, ValueError):
    """Argument outside the supported range of a special function."""


class DomainError(HybridError, ValueError):
    """Closed form evaluated outside its validity region (a diverging solution)."""

    exit_code = 4


class PreconditionError(HybridError, ValueError):
    pass


class ResourceError(HybridError, MemoryError):
    """Requested dense construction is too large."""


class NumericalError(HybridError, RuntimeError):
    exit_code = 4


class BoundaryLeakError(NumericalError):
    """Probability reached the lattice edges; enlarge the window."""


class InstabilityError(NumericalError):
    """Non-finite values appeared during integration; reduce the time step."""


class ConfigError(HybridError, ValueError):
    exit_code = 2

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
