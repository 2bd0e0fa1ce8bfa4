"""Exception hierarchy shared by all tracking modules."""


class TrackingError(Exception):
    """Base class for every error raised by jipdatrack."""


class ModelInputError(TrackingError, ValueError):
    """Non-finite or malformed input to a motion/measurement model."""


class SingularInnovationError(TrackingError, ArithmeticError):
    """Innovation covariance is singular or not positive definite."""

    def __init__(self, message: str, track_index: int | None = None):
        if track_index is not None:
            message = f"track {track_index}: {message}"
        super().__init__(message)
        self.track_index = track_index


class AssociationContractError(TrackingError, ValueError):
    """Association weights do not form a distribution."""


class DomainError(TrackingError, ValueError):
    """Argument outside the mathematical domain of a function."""


class ParameterError(TrackingError, ValueError):
    """Invalid tracker or model parameter."""


class ConsistencyError(TrackingError, RuntimeError):
    """Internal numerical inconsistency in a posterior computation."""


class CombinatorialBlowupError(TrackingError, RuntimeError):
    """Joint-event enumeration exceeded the configured cap."""

    def __init__(self, count: int, cap: int, frame: int | None = None):
        where = f"frame {frame}" if frame is not None else "current frame"
        super().__init__(f"{where}: more than {cap} joint events (reached {count})")
        self.count = count
        self.cap = cap
        self.frame = frame


class ShapeError(TrackingError, ValueError):
    """Array dimensions do not agree."""


class ParseError(TrackingError, ValueError):
    """Malformed line in an input text file."""

    def __init__(self, path, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = path
        self.line_no = line_no


class FormatError(TrackingError, ValueError):
    """Structurally inconsistent input file (e.g. mixed vector dimensions)."""


class ConfigError(TrackingError, ValueError):
    """Invalid run configuration."""


class EvaluationError(TrackingError, ValueError):
    """Ground truth / hypothesis inputs cannot be scored."""
