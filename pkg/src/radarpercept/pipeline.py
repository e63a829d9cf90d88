"""Four-stage radar pipeline over a frame stream with a two-frame sliding window."""

import logging
import time
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from radarpercept._types import DopplerSign, StageName
from radarpercept.classification import ClassifierRules, DetectedObject, bounding_box, classify
from radarpercept.clustering import (
    ClusteringParams,
    RetentionRules,
    describe_clusters,
    euclidean_cluster,
    retain_clusters,
)
from radarpercept.constants import DEFAULT_PROFILE
from radarpercept.core import RadarFrame, RigidTransform, StampedPose, normalize_doppler_sign
from radarpercept.ego_motion import (
    EgoMotionParams,
    EgoState,
    PoseBuffer,
    accumulate,
    ego_velocity,
    interpolate_pose,
    relative_transform,
)
from radarpercept.errors import FrameOrder, PoseGap
from radarpercept.filtering import FilterProfile, RejectionStats, builtin_profile, filter_frame

logger = logging.getLogger(__name__)

STAGES: tuple[StageName, ...] = ("filter", "accumulate", "cluster", "describe", "retain", "classify", "total")


def _explicit(section: Any, name: str) -> Optional[Any]:
    """Get a field value only if it was given explicitly, from a raw dict or a model."""
    if isinstance(section, dict):
        return section.get(name)
    if isinstance(section, BaseModel) and name in section.model_fields_set:
        return getattr(section, name)
    return None


class PipelineConfig(BaseModel):
    """Complete pipeline configuration.

    Unless `classifier.v_static` is given, it follows `retention.v_min_retain` so that clusters kept for their
    Doppler are always classified dynamic.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    profile: FilterProfile = Field(default_factory=lambda: builtin_profile(DEFAULT_PROFILE))
    clustering: ClusteringParams = Field(default_factory=ClusteringParams)
    retention: RetentionRules = Field(default_factory=RetentionRules)
    classifier: ClassifierRules = Field(default_factory=ClassifierRules)
    ego_motion: EgoMotionParams = Field(default_factory=EgoMotionParams)
    doppler_sign: DopplerSign = "closing_positive"

    @model_validator(mode="before")
    @classmethod
    def _share_static_threshold(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        v_min_retain = _explicit(data.get("retention"), "v_min_retain")
        classifier = data.get("classifier", {})
        if v_min_retain is None or v_min_retain <= 0 or _explicit(classifier, "v_static") is not None:
            return data
        if isinstance(classifier, BaseModel):
            classifier = classifier.model_dump(exclude_unset=True)
        return {**data, "classifier": {**classifier, "v_static": v_min_retain}}

    @classmethod
    def for_profile(cls, name: str) -> "PipelineConfig":
        """Create the default configuration around a builtin profile."""
        return cls(profile=builtin_profile(name))

    @property
    def resolved_retention(self) -> RetentionRules:
        """Get the retention rules with the RCS window filled in from the profile."""
        return self.retention.resolved(self.profile)


@dataclass(frozen=True)
class ClusterSnapshot:
    """Membership of one cluster, kept for debugging dumps."""

    indices: tuple[int, ...]
    xyz: np.ndarray
    retained: bool


@dataclass(frozen=True)
class FrameResult:
    """Output of one pipeline step."""

    timestamp: float
    detections: tuple[DetectedObject, ...]
    stage_latencies: dict[StageName, float]
    point_counts: dict[str, int]
    rejection: RejectionStats
    degraded: bool = False
    clusters: tuple[ClusterSnapshot, ...] = field(default=())

    def __post_init__(self) -> None:
        """Validate latencies and counts."""
        if any(v < 0 for v in self.stage_latencies.values()):
            raise ValueError(f"Negative stage latency in {self.stage_latencies}")
        if self.point_counts["filtered"] > self.point_counts["raw"]:
            raise ValueError(f"Filtered count exceeds raw count: {self.point_counts}")


class Pipeline:
    """Sequential radar perception pipeline for one stream.

    Holds the previous filtered frame (and its pose) between calls; use one instance per stream.
    """

    def __init__(self, config: Optional[PipelineConfig] = None, keep_clusters: bool = False) -> None:
        """Initialize the pipeline.

        Args:
            config: Pipeline configuration; defaults to the default profile's configuration.
            keep_clusters: Whether to attach cluster membership to each FrameResult.
        """
        self.config = config or PipelineConfig()
        self.keep_clusters = keep_clusters
        self._retention = self.config.resolved_retention
        self._previous: Optional[RadarFrame] = None
        self._previous_pose: Optional[StampedPose] = None

    @property
    def previous(self) -> Optional[RadarFrame]:
        """Get the filtered frame held for the next accumulation."""
        return self._previous

    def reset(self) -> None:
        """Forget the held frame, so the next frame starts a new stream."""
        self._previous = None
        self._previous_pose = None

    def _lookup_pose(self, poses: PoseBuffer, t: float) -> Optional[StampedPose]:
        try:
            return interpolate_pose(poses, t, self.config.ego_motion.extrapolation_limit)
        except PoseGap as exc:
            logger.warning("No pose for frame %.6f, accumulating without motion compensation: %s", t, exc)
            return None

    def process_frame(self, raw: RadarFrame, poses: PoseBuffer) -> FrameResult:
        """Run every stage on one raw frame.

        Sign normalization, filtering, accumulation with the previous filtered frame, clustering, descriptors using
        the ego velocity at the frame time, retention and classification. Missing poses do not stop the frame: it is
        processed with an identity alignment and/or zero ego velocity and marked degraded.

        Args:
            raw: Raw frame, newer than the previous one.
            poses: Odometry pose buffer.

        Returns:
            FrameResult: Detections, per-stage latencies in microseconds and point counts.

        Raises:
            FrameOrder: If the frame is not newer than the previous frame.
        """
        if self._previous is not None and raw.timestamp <= self._previous.timestamp:
            raise FrameOrder(
                f"Frame at {raw.timestamp} is not newer than previous frame at {self._previous.timestamp}",
                previous=self._previous.timestamp,
                current=raw.timestamp,
            )
        t = raw.timestamp
        degraded = False
        marks = [time.perf_counter_ns()]

        filtered, rejection = filter_frame(self.config.profile, normalize_doppler_sign(raw, self.config.doppler_sign))
        marks.append(time.perf_counter_ns())

        pose = self._lookup_pose(poses, t)
        if self._previous is None:
            accumulated = filtered
        else:
            if pose is not None and self._previous_pose is not None:
                transform = relative_transform(self._previous_pose, pose)
            else:
                transform = RigidTransform.identity()
                degraded = True
            accumulated = accumulate(self._previous, filtered, transform)
        marks.append(time.perf_counter_ns())

        clusters = euclidean_cluster(accumulated, self.config.clustering)
        marks.append(time.perf_counter_ns())

        try:
            ego = ego_velocity(poses, t, self.config.ego_motion.velocity_window)
        except PoseGap as exc:
            logger.warning("Frame %.6f processed in degraded mode with zero ego velocity: %s", t, exc)
            ego = EgoState.stationary()
            degraded = True
        descriptors = describe_clusters(clusters, ego, self.config.clustering.rcs_bin_width)
        marks.append(time.perf_counter_ns())

        retained = retain_clusters(clusters, descriptors, self._retention)
        marks.append(time.perf_counter_ns())

        detections = tuple(classify(bounding_box(c), d, self.config.classifier, t) for c, d in retained)
        marks.append(time.perf_counter_ns())

        self._previous = filtered
        self._previous_pose = pose

        latencies = {stage: (end - start) / 1000 for stage, start, end in zip(STAGES, marks, marks[1:])}
        latencies["total"] = (marks[-1] - marks[0]) / 1000
        snapshots: tuple[ClusterSnapshot, ...] = ()
        if self.keep_clusters:
            kept = {id(c) for c, _ in retained}
            snapshots = tuple(
                ClusterSnapshot(tuple(int(i) for i in c.indices), c.members.xyz, id(c) in kept) for c in clusters
            )
        logger.debug(
            "Frame %.6f: %d raw, %d filtered, %d accumulated, %d clusters, %d detections%s",
            t,
            len(raw),
            len(filtered),
            len(accumulated),
            len(clusters),
            len(detections),
            " (degraded)" if degraded else "",
        )
        return FrameResult(
            timestamp=t,
            detections=detections,
            stage_latencies=latencies,
            point_counts={"raw": len(raw), "filtered": len(filtered), "accumulated": len(accumulated)},
            rejection=rejection,
            degraded=degraded,
            clusters=snapshots,
        )
