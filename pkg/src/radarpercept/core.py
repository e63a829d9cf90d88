"""Radar point, frame and pose types plus the geometric primitives shared by every stage.

Coordinates are sensor-frame meters with x forward, y left and z up. Azimuth grows toward +y and elevation toward
+z. Doppler is the radial velocity with positive meaning the reflector is closing on the sensor.
"""

import dataclasses
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from functools import cached_property
from typing import Union

import numpy as np
from scipy.spatial.transform import Rotation

from radarpercept._types import DopplerSign, SourceTag
from radarpercept.constants import DEGENERATE_NORM, QUATERNION_TOLERANCE
from radarpercept.errors import DegeneratePoint

SOURCE_CURRENT = 0
SOURCE_PREVIOUS = 1
SOURCE_TAGS: tuple[SourceTag, ...] = ("current", "accumulated_previous")

Quaternion = tuple[float, float, float, float]
Vector3 = tuple[float, float, float]


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def _quaternion_tuple(values: Iterable[float]) -> Quaternion:
    w, x, y, z = (float(v) for v in values)
    return (w, x, y, z)


def _vector_tuple(values: Iterable[float]) -> Vector3:
    x, y, z = (float(v) for v in values)
    return (x, y, z)


def quaternion_to_rotation(q: Sequence[float]) -> Rotation:
    """Convert a scalar-first (w, x, y, z) quaternion to a scipy Rotation."""
    return Rotation.from_quat([q[1], q[2], q[3], q[0]])


def rotation_to_quaternion(rotation: Rotation) -> Quaternion:
    """Convert a scipy Rotation to a unit scalar-first (w, x, y, z) quaternion."""
    x, y, z, w = rotation.as_quat()
    norm = math.sqrt(w * w + x * x + y * y + z * z)
    return (w / norm, x / norm, y / norm, z / norm)


def _check_unit(q: Quaternion) -> None:
    norm = math.sqrt(sum(c * c for c in q))
    if not math.isfinite(norm) or abs(norm - 1.0) > QUATERNION_TOLERANCE:
        raise ValueError(f"Quaternion {q} is not unit norm (|q| = {norm})")


@dataclass(frozen=True)
class RadarPoint:
    """A single radar detection."""

    x: float
    y: float
    z: float
    doppler: float
    rcs: float
    dyn_flag: bool = False

    def __post_init__(self) -> None:
        """Reject non-finite fields."""
        for name in ("x", "y", "z", "doppler", "rcs"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"RadarPoint.{name} must be finite, got {getattr(self, name)}")

    @property
    def position(self) -> np.ndarray:
        """Get the position as a 3-vector."""
        return np.array([self.x, self.y, self.z], dtype=float)


@dataclass(frozen=True, eq=False)
class RadarFrame:
    """A timestamped radar point cloud stored as read-only columns."""

    timestamp: float
    xyz: np.ndarray = field(default_factory=lambda: np.empty((0, 3)))
    doppler: np.ndarray = field(default_factory=lambda: np.empty(0))
    rcs: np.ndarray = field(default_factory=lambda: np.empty(0))
    dyn_flag: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=bool))
    source: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.uint8))

    def __post_init__(self) -> None:
        """Coerce columns to owned read-only arrays and validate them."""
        if not math.isfinite(self.timestamp):
            raise ValueError(f"RadarFrame timestamp must be finite, got {self.timestamp}")
        xyz = np.array(self.xyz, dtype=np.float64).reshape(-1, 3)
        n = xyz.shape[0]
        doppler = np.array(self.doppler, dtype=np.float64).reshape(-1)
        rcs = np.array(self.rcs, dtype=np.float64).reshape(-1)
        dyn_flag = np.array(self.dyn_flag, dtype=bool).reshape(-1)
        source = np.array(self.source, dtype=np.uint8).reshape(-1)
        if source.size == 0 and n:
            source = np.zeros(n, dtype=np.uint8)
        if dyn_flag.size == 0 and n:
            dyn_flag = np.zeros(n, dtype=bool)
        for name, column in (("doppler", doppler), ("rcs", rcs), ("dyn_flag", dyn_flag), ("source", source)):
            if column.shape[0] != n:
                raise ValueError(f"RadarFrame column {name} has {column.shape[0]} entries, expected {n}")
        if not (np.isfinite(xyz).all() and np.isfinite(doppler).all() and np.isfinite(rcs).all()):
            raise ValueError("RadarFrame columns must be finite")
        if n and source.max() > SOURCE_PREVIOUS:
            raise ValueError(f"Invalid source tag value {source.max()}")
        object.__setattr__(self, "timestamp", float(self.timestamp))
        object.__setattr__(self, "xyz", _readonly(xyz))
        object.__setattr__(self, "doppler", _readonly(doppler))
        object.__setattr__(self, "rcs", _readonly(rcs))
        object.__setattr__(self, "dyn_flag", _readonly(dyn_flag))
        object.__setattr__(self, "source", _readonly(source))

    @classmethod
    def empty(cls, timestamp: float) -> "RadarFrame":
        """Create a frame without points."""
        return cls(timestamp)

    @classmethod
    def from_points(
        cls, timestamp: float, points: Sequence[RadarPoint], source: Union[SourceTag, Sequence[SourceTag]] = "current"
    ) -> "RadarFrame":
        """Create a frame from RadarPoint objects.

        Args:
            timestamp: Frame time in seconds.
            points: Points in frame order.
            source: One source tag for every point, or one tag per point.

        Returns:
            RadarFrame: The columnar frame.
        """
        tags = [source] * len(points) if isinstance(source, str) else list(source)
        return cls(
            timestamp,
            xyz=np.array([[p.x, p.y, p.z] for p in points], dtype=np.float64).reshape(-1, 3),
            doppler=np.array([p.doppler for p in points], dtype=np.float64),
            rcs=np.array([p.rcs for p in points], dtype=np.float64),
            dyn_flag=np.array([p.dyn_flag for p in points], dtype=bool),
            source=np.array([SOURCE_TAGS.index(tag) for tag in tags], dtype=np.uint8),
        )

    @property
    def points(self) -> list[RadarPoint]:
        """Get the frame's points as RadarPoint objects, in order."""
        return [
            RadarPoint(float(x), float(y), float(z), float(v), float(r), bool(f))
            for (x, y, z), v, r, f in zip(self.xyz, self.doppler, self.rcs, self.dyn_flag)
        ]

    @property
    def source_tags(self) -> list[SourceTag]:
        """Get the per-point source tags."""
        return [SOURCE_TAGS[int(s)] for s in self.source]

    def subset(self, selector: np.ndarray) -> "RadarFrame":
        """Return a frame holding the points picked by a boolean mask or an index array, in selector order."""
        return RadarFrame(
            self.timestamp,
            xyz=self.xyz[selector],
            doppler=self.doppler[selector],
            rcs=self.rcs[selector],
            dyn_flag=self.dyn_flag[selector],
            source=self.source[selector],
        )

    def with_columns(self, **columns: np.ndarray) -> "RadarFrame":
        """Return a copy with some columns replaced."""
        return dataclasses.replace(self, **columns)

    def same_as(self, other: "RadarFrame") -> bool:
        """Check exact equality of timestamp and every column."""
        return (
            self.timestamp == other.timestamp
            and np.array_equal(self.xyz, other.xyz)
            and np.array_equal(self.doppler, other.doppler)
            and np.array_equal(self.rcs, other.rcs)
            and np.array_equal(self.dyn_flag, other.dyn_flag)
            and np.array_equal(self.source, other.source)
        )

    def __len__(self) -> int:
        """Return the number of points."""
        return int(self.xyz.shape[0])

    def __repr__(self) -> str:
        """Return a short representation."""
        return f"RadarFrame(timestamp={self.timestamp}, points={len(self)})"


@dataclass(frozen=True)
class RigidTransform:
    """A rotation followed by a translation (an element of SE(3))."""

    rotation: Quaternion = (1.0, 0.0, 0.0, 0.0)
    translation: Vector3 = (0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        """Validate the quaternion and translation."""
        rotation = _quaternion_tuple(self.rotation)
        translation = _vector_tuple(self.translation)
        _check_unit(rotation)
        if not all(math.isfinite(c) for c in translation):
            raise ValueError(f"Translation must be finite, got {translation}")
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "translation", translation)

    @classmethod
    def identity(cls) -> "RigidTransform":
        """Create the identity transform."""
        return cls()

    @classmethod
    def from_rotation(cls, rotation: Rotation, translation: Sequence[float] = (0.0, 0.0, 0.0)) -> "RigidTransform":
        """Create a transform from a scipy Rotation, renormalizing its quaternion."""
        return cls(rotation_to_quaternion(rotation), _vector_tuple(translation))

    @cached_property
    def as_rotation(self) -> Rotation:
        """Get the rotation part as a scipy Rotation."""
        return quaternion_to_rotation(self.rotation)

    @cached_property
    def matrix(self) -> np.ndarray:
        """Get the 3x3 rotation matrix."""
        return _readonly(self.as_rotation.as_matrix())

    @property
    def offset(self) -> np.ndarray:
        """Get the translation as a 3-vector."""
        return np.array(self.translation, dtype=float)

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """Return self ∘ other, the transform applying `other` first."""
        return RigidTransform.from_rotation(
            self.as_rotation * other.as_rotation, self.matrix @ other.offset + self.offset
        )

    def inverse(self) -> "RigidTransform":
        """Return the inverse transform."""
        inverse_rotation = self.as_rotation.inv()
        return RigidTransform.from_rotation(inverse_rotation, -(self.matrix.T @ self.offset))

    def apply_points(self, xyz: np.ndarray) -> np.ndarray:
        """Rotate then translate an (N, 3) array of positions."""
        return np.asarray(xyz, dtype=float) @ self.matrix.T + self.offset


@dataclass(frozen=True)
class StampedPose:
    """Odometry pose: the world←sensor transform at a timestamp."""

    timestamp: float
    translation: Vector3 = (0.0, 0.0, 0.0)
    rotation: Quaternion = (1.0, 0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        """Validate the timestamp and quaternion."""
        if not math.isfinite(self.timestamp):
            raise ValueError(f"Pose timestamp must be finite, got {self.timestamp}")
        object.__setattr__(self, "timestamp", float(self.timestamp))
        object.__setattr__(self, "translation", _vector_tuple(self.translation))
        object.__setattr__(self, "rotation", _quaternion_tuple(self.rotation))
        _check_unit(self.rotation)

    @cached_property
    def transform(self) -> RigidTransform:
        """Get the world←sensor transform."""
        return RigidTransform(self.rotation, self.translation)


def angles_deg(xyz: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Compute azimuth and elevation in degrees for an (N, 3) array.

    Returns:
        tuple: (azimuth, elevation, degenerate) where degenerate flags points at the origin; their angles are
        meaningless.
    """
    xyz = np.asarray(xyz, dtype=float).reshape(-1, 3)
    x, y, z = xyz[:, 0], xyz[:, 1], xyz[:, 2]
    degenerate = np.linalg.norm(xyz, axis=1) <= DEGENERATE_NORM
    azimuth = np.degrees(np.arctan2(y, x))
    # atan2 gives -180 for y = -0.0, x < 0; the half-open range is (-180, 180].
    azimuth[azimuth == -180.0] = 180.0
    elevation = np.degrees(np.arctan2(z, np.hypot(x, y)))
    return azimuth, elevation, degenerate


def unit_vectors(xyz: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Compute line-of-sight unit vectors for an (N, 3) array.

    Returns:
        tuple: (unit, valid) where rows flagged invalid sit at the origin and are left as zeros.
    """
    xyz = np.asarray(xyz, dtype=float).reshape(-1, 3)
    norms = np.linalg.norm(xyz, axis=1)
    valid = norms > DEGENERATE_NORM
    unit = np.zeros_like(xyz)
    unit[valid] = xyz[valid] / norms[valid, None]
    return unit, valid


def spherical_angles(p: RadarPoint) -> tuple[float, float]:
    """Get (azimuth, elevation) of a point in degrees.

    Raises:
        DegeneratePoint: If the point is at the sensor origin.
    """
    azimuth, elevation, degenerate = angles_deg(p.position)
    if degenerate[0]:
        raise DegeneratePoint(f"Point {p} has no direction")
    return float(azimuth[0]), float(elevation[0])


def los_unit_vector(p: RadarPoint) -> np.ndarray:
    """Get the unit line-of-sight vector from the sensor to a point.

    Raises:
        DegeneratePoint: If the point is at the sensor origin.
    """
    unit, valid = unit_vectors(p.position)
    if not valid[0]:
        raise DegeneratePoint(f"Point {p} has no direction")
    return unit[0]


def apply_transform(transform: RigidTransform, p: RadarPoint) -> RadarPoint:
    """Move a point through a rigid transform, carrying Doppler, RCS and flag unchanged."""
    x, y, z = transform.apply_points(p.position[None, :])[0]
    return dataclasses.replace(p, x=float(x), y=float(y), z=float(z))


def normalize_doppler_sign(frame: RadarFrame, sign: DopplerSign) -> RadarFrame:
    """Return the frame in the closing-positive Doppler convention."""
    if sign == "closing_positive":
        return frame
    return frame.with_columns(doppler=-frame.doppler)
