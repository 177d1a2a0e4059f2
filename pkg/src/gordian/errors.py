"""Exception hierarchy shared by all gordian modules."""


class GordianError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(GordianError, ValueError):
    """Malformed input: too few vertices, repeated points, bad parameters."""


class GeometryError(GordianError):
    """Curves intersect where they must not, or an apex sits on its boundary."""


class DegenerateCurveError(GeometryError):
    """A vertex turns back on itself (cusp) so its turning radius is undefined."""


class GenericityError(GordianError):
    """No sufficiently generic direction or configuration was found."""


class DiagramError(GordianError):
    """A planar diagram is combinatorially inconsistent."""


class ConstructionError(GordianError):
    """The link template failed one of its clearance or shape checks."""


class StallError(GordianError):
    """Constraint projection could not make progress even at the minimum step."""


class InvariantViolation(GordianError):
    """A checked invariant failed during a relaxation run."""
