"""Replay recorded frame and pose streams through the pipeline, optionally at sensor pace."""

import logging
import time
from collections.abc import Callable, Iterable, Iterator
from dataclasses import dataclass
from typing import Optional

from radarpercept.core import RadarFrame, StampedPose
from radarpercept.ego_motion import PoseBuffer
from radarpercept.pipeline import FrameResult, Pipeline
from radarpercept.units import Duration

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ReplaySummary:
    """Totals of one replay run."""

    frames: int
    degraded: int
    detections: int
    deadline_misses: int
    worst_latency: Duration


class _PoseFeed:
    """Moves poses from a stream into the buffer as replay time advances."""

    def __init__(self, poses: Iterable[StampedPose], buffer: PoseBuffer) -> None:
        self._poses: Iterator[StampedPose] = iter(poses)
        self._pending: Optional[StampedPose] = None
        self.buffer = buffer

    def advance(self, until: float) -> None:
        if self._pending is None:
            self._pending = next(self._poses, None)
        while self._pending is not None and self._pending.timestamp <= until:
            self.buffer.append(self._pending)
            self._pending = next(self._poses, None)


def replay(
    frames: Iterable[RadarFrame],
    poses: Iterable[StampedPose],
    pipeline: Pipeline,
    on_result: Callable[[FrameResult], None],
    realtime: bool = False,
    rate: Optional[float] = None,
) -> ReplaySummary:
    """Run every frame of a stream through a pipeline in order.

    Before each frame, poses up to half a velocity window past the frame time are made available, as if odometry
    ran slightly ahead of the radar. In realtime mode each frame is released at its recorded offset (or every
    1/rate seconds when a rate is given) and a frame still being processed when the next one is due counts as a
    deadline miss.

    Args:
        frames: Raw frames in increasing timestamp order.
        poses: Odometry poses in increasing timestamp order.
        pipeline: Pipeline to run; its state carries across frames.
        on_result: Called with each FrameResult, in frame order.
        realtime: Whether to pace frames in wall-clock time.
        rate: Frame rate in Hz overriding the recorded frame spacing.

    Returns:
        ReplaySummary: Frame, detection and deadline-miss counts.

    Raises:
        FrameOrder: If frames or poses are out of order.
        ParseError: If a lazily read stream turns out malformed.
    """
    if rate is not None and rate <= 0:
        raise ValueError(f"Replay rate must be positive, got {rate}")
    feed = _PoseFeed(poses, PoseBuffer(pipeline.config.ego_motion.pose_capacity))
    lookahead = pipeline.config.ego_motion.velocity_window / 2
    count = degraded = detections = misses = 0
    worst = 0.0
    start: Optional[float] = None
    first_t: Optional[float] = None
    for k, frame in enumerate(frames):
        if first_t is None:
            first_t = frame.timestamp
        if realtime:
            offset = k / rate if rate else frame.timestamp - first_t
            now = time.monotonic()
            if start is None:
                start = now
            delay = start + offset - now
            if delay > 0:
                time.sleep(delay)
            elif k > 0 and delay < 0:
                # The previous frame was still running when this one was due.
                misses += 1
                logger.warning(
                    "Deadline miss: frame %.6f released %s late", frame.timestamp, Duration.from_seconds(-delay)
                )
        feed.advance(frame.timestamp + lookahead)
        result = pipeline.process_frame(frame, feed.buffer)
        on_result(result)
        count += 1
        degraded += int(result.degraded)
        detections += len(result.detections)
        worst = max(worst, result.stage_latencies["total"])
    summary = ReplaySummary(count, degraded, detections, misses, Duration(worst))
    logger.info(
        "Replayed %d frames: %d detections, %d degraded, %d deadline misses, worst latency %s",
        summary.frames,
        summary.detections,
        summary.degraded,
        summary.deadline_misses,
        summary.worst_latency,
    )
    return summary

