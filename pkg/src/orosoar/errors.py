"""Exception types shared across the package.

Every domain error derives from OrosoarError so callers can catch the
whole family with one clause. Errors carry the offending value where it
helps diagnosis (coordinates, airspeed, CSV line numbers).
"""


class OrosoarError(Exception):
    """Base class for all orosoar domain errors."""


# wind fields -----------------------------------------------------------

class InsideBody(OrosoarError):
    """Query point lies inside the cylinder body."""


class OutOfBounds(OrosoarError):
    """Query point lies outside a grid field's bounding box."""

    def __init__(self, message, *, axis=None, value=None):
        super().__init__(message)
        self.axis = axis
        self.value = value


class MalformedRow(OrosoarError):
    """A CSV row could not be parsed; carries the 1-based line number."""

    def __init__(self, message, *, line=None):
        super().__init__(message)
        self.line = line


class IncompleteLattice(OrosoarError):
    """Grid CSV rows do not form a complete rectangular lattice."""


class NonMonotoneCoordinates(OrosoarError):
    """Grid coordinates are not strictly increasing."""


# airframe / glide polar ------------------------------------------------

class NonPositiveAirspeed(OrosoarError):
    """Airspeed must be strictly positive."""


class OutOfPolarRange(OrosoarError):
    """Airspeed outside the glide polar's validity range; carries it."""

    def __init__(self, message, *, airspeed=None):
        super().__init__(message)
        self.airspeed = airspeed


class NoInteriorMinimum(OrosoarError):
    """Sink curve has no unique interior minimum on the range."""


class InsufficientSamples(OrosoarError):
    """Too few (distinct) samples for the requested fit."""


class SingularFit(OrosoarError):
    """Least-squares design matrix is rank deficient."""


# analysis --------------------------------------------------------------

class NearHorizontal(OrosoarError):
    """Target line is too close to horizontal to be usable."""


class NoIntersection(OrosoarError):
    """Target line does not cross the zero-excess contour on the range."""


class PointOffTgl(OrosoarError):
    """Point is not on the target line within tolerance."""


class PointNotNearContour(OrosoarError):
    """Point is farther than one cell from every contour vertex."""


class EmptyDomain(OrosoarError):
    """Analysis domain box is empty or degenerate."""


# control ---------------------------------------------------------------

class NonPositiveDt(OrosoarError):
    """Controller time step must be strictly positive."""


class NonPositiveR(OrosoarError):
    """Waypoint distance must be strictly positive."""


# simulation ------------------------------------------------------------

class PolarRangeExceeded(OrosoarError):
    """Simulated airspeed left the polar range; carries a state snapshot."""

    def __init__(self, message, *, state=None):
        super().__init__(message)
        self.state = state


class EmptyLog(OrosoarError):
    """Operation requires a non-empty log."""


class InvalidScenario(OrosoarError):
    """Scenario violates its invariants."""


# service ---------------------------------------------------------------

class PortInUse(OrosoarError):
    """Requested server port is already bound."""
