"""Stage 2: pose interpolation, frame alignment, two-frame accumulation and ego velocity."""

import logging
import math
import threading
from bisect import bisect_left
from collections import deque
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.spatial.transform import Rotation, Slerp

from radarpercept.constants import EXTRAPOLATION_LIMIT_S, POSE_CAPACITY, VELOCITY_WINDOW_S
from radarpercept.core import (
    SOURCE_CURRENT,
    SOURCE_PREVIOUS,
    RadarFrame,
    RigidTransform,
    StampedPose,
    Vector3,
    quaternion_to_rotation,
    rotation_to_quaternion,
)
from radarpercept.errors import FrameOrder, PoseGap

logger = logging.getLogger(__name__)


class EgoMotionParams(BaseModel):
    """Pose buffering and ego velocity settings."""

    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    pose_capacity: int = Field(default=POSE_CAPACITY, ge=2)
    extrapolation_limit: float = Field(default=EXTRAPOLATION_LIMIT_S, ge=0.0)
    velocity_window: float = Field(default=VELOCITY_WINDOW_S, gt=0.0)


@dataclass(frozen=True)
class EgoState:
    """Platform velocity in the current sensor frame, in m/s."""

    velocity: Vector3 = (0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        """Validate and normalize the velocity."""
        vx, vy, vz = (float(v) for v in self.velocity)
        if not all(math.isfinite(v) for v in (vx, vy, vz)):
            raise ValueError(f"Ego velocity must be finite, got {self.velocity}")
        object.__setattr__(self, "velocity", (vx, vy, vz))

    @classmethod
    def stationary(cls) -> "EgoState":
        """Create a zero-velocity state."""
        return cls()

    @property
    def vector(self) -> np.ndarray:
        """Get the velocity as a 3-vector."""
        return np.array(self.velocity, dtype=float)


class PoseBuffer:
    """Bounded, time-ordered buffer of odometry poses.

    One writer appends while any number of readers query; readers work on an immutable snapshot.
    """

    def __init__(self, capacity: int = POSE_CAPACITY, poses: Iterable[StampedPose] = ()) -> None:
        """Initialize the buffer.

        Args:
            capacity: Maximum number of poses kept; the oldest pose is dropped when full.
            poses: Initial poses, in increasing timestamp order.
        """
        if capacity < 2:
            raise ValueError(f"Pose buffer capacity must be at least 2, got {capacity}")
        self._poses: deque[StampedPose] = deque(maxlen=capacity)
        self._lock = threading.Lock()
        self._snapshot: Optional[tuple[StampedPose, ...]] = ()
        self.extend(poses)

    @property
    def capacity(self) -> int:
        """Get the buffer capacity."""
        return self._poses.maxlen or 0

    def append(self, pose: StampedPose) -> None:
        """Append a pose.

        Raises:
            FrameOrder: If the pose is not strictly newer than the newest buffered pose.
        """
        with self._lock:
            if self._poses and pose.timestamp <= self._poses[-1].timestamp:
                raise FrameOrder(
                    f"Pose at {pose.timestamp} is not newer than {self._poses[-1].timestamp}",
                    previous=self._poses[-1].timestamp,
                    current=pose.timestamp,
                )
            self._poses.append(pose)
            self._snapshot = None

    def extend(self, poses: Iterable[StampedPose]) -> None:
        """Append several poses in order."""
        for pose in poses:
            self.append(pose)

    def snapshot(self) -> tuple[StampedPose, ...]:
        """Get a consistent, immutable view of the buffered poses."""
        with self._lock:
            if self._snapshot is None:
                self._snapshot = tuple(self._poses)
            return self._snapshot

    @property
    def oldest(self) -> Optional[StampedPose]:
        """Get the oldest buffered pose."""
        poses = self.snapshot()
        return poses[0] if poses else None

    @property
    def newest(self) -> Optional[StampedPose]:
        """Get the newest buffered pose."""
        poses = self.snapshot()
        return poses[-1] if poses else None

    def __len__(self) -> int:
        """Return the number of buffered poses."""
        return len(self.snapshot())

    def __repr__(self) -> str:
        """Return a short representation."""
        poses = self.snapshot()
        span = f"{poses[0].timestamp}..{poses[-1].timestamp}" if poses else "empty"
        return f"PoseBuffer(poses={len(poses)}, capacity={self.capacity}, span={span})"


def _blend(first: StampedPose, second: StampedPose, t: float) -> StampedPose:
    """Interpolate (or, outside the pair, extrapolate) between two poses at time t."""
    s = (t - first.timestamp) / (second.timestamp - first.timestamp)
    a = np.array(first.translation)
    b = np.array(second.translation)
    translation = a + s * (b - a)
    r0 = quaternion_to_rotation(first.rotation)
    r1 = quaternion_to_rotation(second.rotation)
    if 0.0 <= s <= 1.0:
        rotation = Slerp([first.timestamp, second.timestamp], Rotation.concatenate([r0, r1]))([t])[0]
    else:
        # Continue the pair's angular rate past its end.
        rotation = r0 * Rotation.from_rotvec(s * (r0.inv() * r1).as_rotvec())
    return StampedPose(t, tuple(translation), rotation_to_quaternion(rotation))


def interpolate_pose(buffer: PoseBuffer, t: float, extrapolation_limit: float = EXTRAPOLATION_LIMIT_S) -> StampedPose:
    """Get the sensor pose at a radar timestamp.

    Translation is interpolated linearly and rotation along the shortest arc. A query matching a stored timestamp
    returns that pose unchanged. Past the newest pose the last two poses' rates are continued for up to
    `extrapolation_limit` seconds.

    Args:
        buffer: Odometry poses.
        t: Query time in seconds.
        extrapolation_limit: How far past the newest pose a query may reach.

    Returns:
        StampedPose: The pose at time t.

    Raises:
        PoseGap: If t precedes the oldest pose, or lies beyond the extrapolation limit.
    """
    poses = buffer.snapshot()
    if not poses:
        raise PoseGap(f"No poses buffered for t={t}", timestamp=t)
    times = [p.timestamp for p in poses]
    if t < times[0]:
        raise PoseGap(f"t={t} precedes the oldest pose at {times[0]}", timestamp=t)
    i = bisect_left(times, t)
    if i < len(times) and times[i] == t:
        return poses[i]
    if i == len(times):
        if t - times[-1] > extrapolation_limit:
            raise PoseGap(f"t={t} is more than {extrapolation_limit}s past the newest pose at {times[-1]}", timestamp=t)
        if len(poses) == 1:
            return StampedPose(t, poses[-1].translation, poses[-1].rotation)
        return _blend(poses[-2], poses[-1], t)
    return _blend(poses[i - 1], poses[i], t)


def relative_transform(pose_prev: StampedPose, pose_curr: StampedPose) -> RigidTransform:
    """Get the transform taking previous-frame sensor coordinates to current-frame sensor coordinates."""
    return pose_curr.transform.inverse().compose(pose_prev.transform)


def accumulate(prev: RadarFrame, curr: RadarFrame, transform: RigidTransform) -> RadarFrame:
    """Merge the previous frame, moved into the current frame, behind the current frame's points.

    Only points tagged `current` in each input are used, so the result never spans more than two frames. Doppler
    values of moved points are carried unchanged.

    Args:
        prev: Earlier frame.
        curr: Later frame.
        transform: Previous-to-current sensor transform.

    Returns:
        RadarFrame: The accumulated frame, stamped with the current frame's time.

    Raises:
        FrameOrder: If prev is not strictly older than curr.
    """
    if prev.timestamp >= curr.timestamp:
        raise FrameOrder(
            f"Previous frame at {prev.timestamp} is not older than current frame at {curr.timestamp}",
            previous=prev.timestamp,
            current=curr.timestamp,
        )
    prev = prev.subset(prev.source == SOURCE_CURRENT)
    curr = curr.subset(curr.source == SOURCE_CURRENT)
    return RadarFrame(
        curr.timestamp,
        xyz=np.concatenate([curr.xyz, transform.apply_points(prev.xyz)]),
        doppler=np.concatenate([curr.doppler, prev.doppler]),
        rcs=np.concatenate([curr.rcs, prev.rcs]),
        dyn_flag=np.concatenate([curr.dyn_flag, prev.dyn_flag]),
        source=np.concatenate(
            [np.full(len(curr), SOURCE_CURRENT, dtype=np.uint8), np.full(len(prev), SOURCE_PREVIOUS, dtype=np.uint8)]
        ),
    )


def _orientation_at(window: Sequence[StampedPose], t: float) -> Rotation:
    times = [p.timestamp for p in window]
    if t <= times[0]:
        return quaternion_to_rotation(window[0].rotation)
    if t >= times[-1]:
        return quaternion_to_rotation(window[-1].rotation)
    i = bisect_left(times, t)
    if times[i] == t:
        return quaternion_to_rotation(window[i].rotation)
    return quaternion_to_rotation(_blend(window[i - 1], window[i], t).rotation)


def ego_velocity(buffer: PoseBuffer, t: float, velocity_window: float = VELOCITY_WINDOW_S) -> EgoState:
    """Estimate the platform velocity at time t, expressed in the sensor frame at t.

    The world-frame velocity is the finite difference between the first and last poses inside
    [t - window/2, t + window/2]; it is central when poses exist on both sides of t and one-sided otherwise.

    Args:
        buffer: Odometry poses.
        t: Query time in seconds.
        velocity_window: Width of the pose window in seconds.

    Returns:
        EgoState: Sensor-frame velocity.

    Raises:
        PoseGap: If fewer than two poses, or poses spanning no time, fall inside the window.
    """
    half = velocity_window / 2
    window = [p for p in buffer.snapshot() if t - half <= p.timestamp <= t + half]
    if len(window) < 2:
        raise PoseGap(f"{len(window)} pose(s) within {velocity_window}s of t={t}, need 2", timestamp=t)
    first, last = window[0], window[-1]
    span = last.timestamp - first.timestamp
    if span <= 0:
        raise PoseGap(f"Poses around t={t} span no time", timestamp=t)
    world_velocity = (np.array(last.translation) - np.array(first.translation)) / span
    sensor_velocity = _orientation_at(window, t).inv().apply(world_velocity)
    return EgoState(tuple(sensor_velocity))
