"""Errors."""

from pathlib import Path
from typing import Optional, Union


class RadarPerceptError(Exception):
    """Base exception for all radarpercept errors."""

    pass


class DegeneratePoint(RadarPerceptError):  # noqa: N818
    """Exception raised when a point sits at the sensor origin and has no direction."""

    pass


class UnknownProfile(RadarPerceptError):  # noqa: N818
    """Exception raised when a filter profile name is not builtin and not configured."""

    def __init__(self, name: str):
        """Initialize the error."""
        super().__init__(f"Unknown filter profile: {name!r}")
        self.name = name


class PoseGap(RadarPerceptError):  # noqa: N818
    """Exception raised when the pose buffer cannot answer a query at the requested time."""

    def __init__(self, message: str, timestamp: Optional[float] = None):
        """Initialize the error."""
        super().__init__(message)
        self.timestamp = timestamp


class FrameOrder(RadarPerceptError):  # noqa: N818
    """Exception raised when frames or poses arrive out of timestamp order."""

    def __init__(self, message: str, previous: Optional[float] = None, current: Optional[float] = None):
        """Initialize the error."""
        super().__init__(message)
        self.previous = previous
        self.current = current


class EmptyCluster(RadarPerceptError):  # noqa: N818
    """Exception raised when a descriptor is requested for a cluster without usable members."""

    pass


class ConfigError(RadarPerceptError):
    """Exception for invalid pipeline or scene configuration."""

    pass


class ParseError(RadarPerceptError):
    """Exception for malformed stream files."""

    def __init__(self, message: str, line: Optional[int] = None, path: Union[str, Path, None] = None):
        """Initialize the error."""
        location = ""
        if path is not None:
            location = f"{path}"
        if line is not None:
            location = f"{location}:{line}" if location else f"line {line}"
        super().__init__(f"{location}: {message}" if location else message)
        self.line = line
        self.path = path


class AlignmentError(RadarPerceptError):
    """Exception raised when detections and ground truth do not cover the same timestamps."""

    pass


class UndefinedMetric(RadarPerceptError):  # noqa: N818
    """Exception raised when a metric's denominator is zero."""

    pass
