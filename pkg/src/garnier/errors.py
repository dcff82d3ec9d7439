"""Exception hierarchy shared by all modules.

Each class carries an ``exit_code`` used by the command-line front end.
"""


class GarnierError(Exception):
    exit_code = 1


class DomainError(GarnierError, ValueError):
    """Input outside the domain of an operation (light-cone value, bad axis...)."""

    exit_code = 2


class DegeneratePolygonError(DomainError):
    pass


class ReducibleSystemError(DomainError):
    pass


class ResonanceError(DomainError):
    pass


class PathError(GarnierError):
    """Numerical continuation failed (step underflow near a singularity)."""

    exit_code = 3

    def __init__(self, message, segment=None):
        super().__init__(message)
        self.segment = segment


class NearSingularityError(PathError):
    pass


class RiemannHilbertError(GarnierError):
    exit_code = 3

    def __init__(self, message, best_residual=None, report=None):
        super().__init__(message)
        self.best_residual = best_residual
        self.report = report


class GaugeError(GarnierError):
    exit_code = 3


class NonSimpleZeroError(GarnierError):
    exit_code = 4


class PlateauError(GarnierError):
    exit_code = 4

    def __init__(self, message, best=None, report=None):
        super().__init__(message)
        self.best = best
        self.report = report


class WallError(GarnierError):
    """Deformation or Newton iterate reached the wall of the simplex."""

    exit_code = 5

    def __init__(self, message, closest=None, last_t=None, system=None):
        super().__init__(message)
        self.closest = closest
        self.last_t = last_t
        self.system = system


class PoleError(WallError):
    """A residue blew up along a deformation path (movable pole)."""
