"""Exception hierarchy shared across the engine."""


class RoadPulseError(Exception):
    """Base class for all engine errors."""


class GraphFormatError(RoadPulseError):
    """Road-graph document is malformed or violates graph invariants."""


class NoRouteError(RoadPulseError):
    """No path exists between the requested endpoints."""


class QueryError(RoadPulseError):
    """Lexical, syntactic or semantic query failure.

    ``position`` is the 0-based character offset at which the problem was
    detected (or the query length for unexpected end of input).
    """

    def __init__(self, message: str, position: int = 0):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class ValidationError(RoadPulseError):
    """Query is well-formed but cannot be bound to the camera registry."""


class StreamFormatError(RoadPulseError):
    """A track-stream line violates the wire schema or timestamp ordering."""

    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class RegistryFormatError(RoadPulseError):
    """Camera registry document is malformed."""


class ScenarioError(RoadPulseError):
    """Simulation scenario is inconsistent or unrenderable."""


class CalibrationError(RoadPulseError):
    """Pixel calibration input is outside permissible physical bounds."""


class TrackTooShortError(RoadPulseError):
    """Track has too few samples or too little time span for the estimate."""
