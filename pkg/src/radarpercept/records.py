"""JSON Lines stream formats: frames, poses, detection logs and ground truth.

Every stream holds one JSON object per line. Numbers are written with the shortest decimal form that reads back to
the same float, and fields are written in a fixed order, so identical inputs give byte-identical files.
"""

import json
import logging
import math
from collections.abc import Iterable, Iterator
from pathlib import Path
from typing import Optional, TypeVar, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from radarpercept._types import Heading, MotionState, ObjectClass, ObjectType
from radarpercept.classification import DetectedObject
from radarpercept.constants import POSE_QUATERNION_ACCEPT, POSE_QUATERNION_RENORMALIZE, QUATERNION_TOLERANCE
from radarpercept.core import RadarFrame, StampedPose
from radarpercept.errors import ParseError
from radarpercept.pipeline import STAGES, FrameResult

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
Record = TypeVar("Record", bound=BaseModel)

Triple = tuple[float, float, float]
PointRow = tuple[float, float, float, float, float, int]


class _Record(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False, populate_by_name=True)


class FrameRecord(_Record):
    """One radar frame: `{"t": ..., "points": [[x, y, z, doppler, rcs, dyn_flag], ...]}`."""

    t: float
    points: list[PointRow] = Field(default_factory=list)

    @field_validator("points")
    @classmethod
    def _check_flags(cls, points: list[PointRow]) -> list[PointRow]:
        for i, point in enumerate(points):
            if point[5] not in (0, 1):
                raise ValueError(f"point {i}: dyn_flag must be 0 or 1, got {point[5]}")
        return points

    @classmethod
    def from_frame(cls, frame: RadarFrame) -> "FrameRecord":
        """Convert a frame to its record."""
        columns = np.column_stack([frame.xyz, frame.doppler, frame.rcs, frame.dyn_flag.astype(float)])
        points = [(x, y, z, d, r, int(f)) for x, y, z, d, r, f in columns.tolist()]
        return cls(t=frame.timestamp, points=points)

    def to_frame(self) -> RadarFrame:
        """Convert the record to a frame of current-tagged points."""
        columns = np.array(self.points, dtype=np.float64).reshape(-1, 6)
        return RadarFrame(
            self.t, xyz=columns[:, :3], doppler=columns[:, 3], rcs=columns[:, 4], dyn_flag=columns[:, 5] == 1
        )


class PoseRecord(_Record):
    """One odometry pose: `{"t": ..., "p": [x, y, z], "q": [w, x, y, z]}`."""

    t: float
    p: Triple
    q: tuple[float, float, float, float]

    @classmethod
    def from_pose(cls, pose: StampedPose) -> "PoseRecord":
        """Convert a pose to its record."""
        return cls(t=pose.timestamp, p=pose.translation, q=pose.rotation)

    def to_pose(self) -> StampedPose:
        """Convert the record to a pose, fixing a slightly off-unit quaternion.

        Raises:
            ValueError: If the quaternion norm is more than 1e-3 away from one.
        """
        norm = math.sqrt(sum(c * c for c in self.q))
        deviation = abs(norm - 1.0)
        q = self.q
        if deviation > POSE_QUATERNION_RENORMALIZE:
            raise ValueError(f"quaternion norm {norm} is not unit")
        if deviation > POSE_QUATERNION_ACCEPT:
            logger.warning("Renormalizing pose quaternion at t=%s with norm %.9f", self.t, norm)
        if deviation > QUATERNION_TOLERANCE:
            q = (q[0] / norm, q[1] / norm, q[2] / norm, q[3] / norm)
        return StampedPose(self.t, self.p, q)


class DetectionEntry(_Record):
    """One detected object within a DetectionRecord."""

    type: ObjectType
    motion: MotionState
    heading: Heading
    centroid: Triple
    extent: Triple
    mean_doppler: float
    comp_mean_doppler: float
    modal_rcs: float
    points: int = Field(ge=0)

    @classmethod
    def from_object(cls, obj: DetectedObject) -> "DetectionEntry":
        """Convert a detected object; extent is written as [l, w, h]."""
        return cls(
            type=obj.object_type,
            motion=obj.motion,
            heading=obj.heading,
            centroid=obj.descriptors.centroid,
            extent=(obj.box.l, obj.box.w, obj.box.h),
            mean_doppler=obj.descriptors.mean_doppler,
            comp_mean_doppler=obj.descriptors.comp_mean_doppler,
            modal_rcs=obj.descriptors.modal_rcs,
            points=obj.descriptors.point_count,
        )


class DetectionRecord(_Record):
    """Pipeline output for one frame. Latencies sit in their own map so logs can be diffed without them."""

    t: float
    detections: list[DetectionEntry] = Field(default_factory=list)
    degraded: bool = False
    latency_us: Optional[dict[str, float]] = None

    @classmethod
    def from_result(cls, result: FrameResult, include_latency: bool = True) -> "DetectionRecord":
        """Convert a pipeline result to its log record."""
        latency = {stage: result.stage_latencies[stage] for stage in STAGES} if include_latency else None
        return cls(
            t=result.timestamp,
            detections=[DetectionEntry.from_object(d) for d in result.detections],
            degraded=result.degraded,
            latency_us=latency,
        )

    @property
    def pedestrians(self) -> int:
        """Get the number of pedestrian detections."""
        return sum(1 for d in self.detections if d.type == "pedestrian")


class TruthObject(_Record):
    """Ground truth for one simulated object in one frame, in that frame's sensor coordinates."""

    id: str
    class_: ObjectClass = Field(alias="class")
    centroid: Triple
    velocity: Triple
    visible: bool


class TruthRecord(_Record):
    """Ground truth for one frame."""

    t: float
    objects: list[TruthObject] = Field(default_factory=list)

    @property
    def pedestrians(self) -> int:
        """Get the number of visible pedestrians."""
        return sum(1 for o in self.objects if o.class_ == "pedestrian" and o.visible)


GroundTruth = list[TruthRecord]


class ClusterEntry(_Record):
    """Members of one cluster, by index into the accumulated frame and by position."""

    retained: bool
    indices: list[int]
    xyz: list[Triple]


class ClusterDump(_Record):
    """Cluster membership of one frame, for external plotting."""

    t: float
    clusters: list[ClusterEntry]

    @classmethod
    def from_result(cls, result: FrameResult) -> "ClusterDump":
        """Convert the cluster snapshots of a pipeline result."""
        return cls(
            t=result.timestamp,
            clusters=[
                ClusterEntry(retained=c.retained, indices=list(c.indices), xyz=[tuple(p) for p in c.xyz.tolist()])
                for c in result.clusters
            ],
        )


def dump_record(record: BaseModel) -> str:
    """Serialize a record to one compact JSON line, without the trailing newline."""
    return json.dumps(
        record.model_dump(mode="json", by_alias=True, exclude_none=True), separators=(",", ":"), allow_nan=False
    )


def write_records(path: PathLike, records: Iterable[BaseModel]) -> int:
    """Write records as JSON Lines.

    Returns:
        int: Number of records written.
    """
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for record in records:
            f.write(dump_record(record))
            f.write("\n")
            count += 1
    logger.debug("Wrote %d records to %s", count, path)
    return count


def iter_records(path: PathLike, model: type[Record]) -> Iterator[Record]:
    """Read and validate JSON Lines records one at a time.

    Args:
        path: JSON Lines file.
        model: Record type of every line.

    Yields:
        Record: The validated record of each line.

    Raises:
        ParseError: On the first blank, truncated, undecodable or invalid line, with its line number.
    """
    with open(path, "rb") as f:
        for number, raw in enumerate(f, start=1):
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise ParseError(f"invalid UTF-8: {exc}", line=number, path=path) from exc
            if not line.strip():
                raise ParseError("blank line", line=number, path=path)
            try:
                yield model.model_validate_json(line)
            except ValidationError as exc:
                raise ParseError(f"invalid {model.__name__}: {exc}", line=number, path=path) from exc


def read_frames(path: PathLike) -> Iterator[RadarFrame]:
    """Stream radar frames from a frames file.

    Raises:
        ParseError: If a line is malformed.
    """
    for record in iter_records(path, FrameRecord):
        yield record.to_frame()


def write_frames(path: PathLike, frames: Iterable[RadarFrame]) -> int:
    """Write radar frames to a frames file."""
    return write_records(path, (FrameRecord.from_frame(f) for f in frames))


def read_poses(path: PathLike) -> Iterator[StampedPose]:
    """Stream poses from a poses file.

    Raises:
        ParseError: If a line is malformed or its quaternion is far from unit norm.
    """
    for number, record in enumerate(iter_records(path, PoseRecord), start=1):
        try:
            yield record.to_pose()
        except ValueError as exc:
            raise ParseError(str(exc), line=number, path=path) from exc


def write_poses(path: PathLike, poses: Iterable[StampedPose]) -> int:
    """Write poses to a poses file."""
    return write_records(path, (PoseRecord.from_pose(p) for p in poses))


def read_detections(path: PathLike) -> list[DetectionRecord]:
    """Read a detection log."""
    return list(iter_records(path, DetectionRecord))


def read_truth(path: PathLike) -> GroundTruth:
    """Read a ground truth file."""
    return list(iter_records(path, TruthRecord))


def write_truth(path: PathLike, truth: Iterable[TruthRecord]) -> int:
    """Write a ground truth file."""
    return write_records(path, truth)
