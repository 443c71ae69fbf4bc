"""Exception types shared across the package."""


class DroemError(Exception):
    """Base class for all package-specific errors."""


class PoleError(DroemError):
    """A weight hits a pole of 1/(2h+i) inside the working degree range."""


class DomainError(DroemError):
    """An argument is outside the operation's domain."""


class ShapeError(DroemError):
    """Operands live on different modules or have incompatible shapes."""


class NoSolutionError(DroemError):
    """A linear construction admits no (nonzero) solution at this truncation."""


class NotClosedError(DroemError):
    """A product could not be expressed over the candidate field basis."""


class MissingStructureError(DroemError):
    """No structure data available for the requested field pair."""


class SingularSampleError(DroemError):
    """A sample point hits a pole of a structure coefficient."""


class NoUnitError(DroemError):
    """The field collection has no unit element."""


class EvalDomainError(DroemError):
    """Field evaluation requested outside the admissible annulus."""


class DegenerateDifferenceError(DroemError):
    """The forward difference of the cut-off polynomial vanishes where needed."""


class UnitarizabilityError(DroemError):
    """Adjoint-based construction requested for a non-unitarizable weight."""


class InsufficientDataError(DroemError):
    """Too few grid points for the requested fit."""


class StabilityError(DroemError):
    """Time evolution produced non-finite state entries."""


class RatioError(DroemError):
    """Image-lattice step is not sufficiently coarser than the observation step."""


class PaletteSizeError(DroemError):
    """Palette size does not match the frame's fiber count."""


class ParseError(DroemError):
    """A config, event, or run file failed to parse or validate."""


class ObserverCountError(DroemError):
    """Too few observers for the requested multi-observer operation."""


class BindError(DroemError):
    """The service could not bind its listening port."""
