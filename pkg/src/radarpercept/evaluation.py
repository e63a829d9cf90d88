"""Count-based detection metrics: frame-wise recall, person-count recall and false-alarm rate."""

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Any, Optional

from radarpercept.constants import ALIGNMENT_TOLERANCE_S, FRAME_RATE_HZ
from radarpercept.errors import AlignmentError, UndefinedMetric
from radarpercept.records import DetectionRecord, TruthRecord
from radarpercept.units import Percentage

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CountSeries:
    """Per-frame detected and ground-truth pedestrian counts."""

    timestamps: tuple[float, ...]
    detected: tuple[int, ...]
    ground_truth: tuple[int, ...]

    def __post_init__(self) -> None:
        """Validate lengths and counts."""
        object.__setattr__(self, "timestamps", tuple(float(t) for t in self.timestamps))
        object.__setattr__(self, "detected", tuple(int(c) for c in self.detected))
        object.__setattr__(self, "ground_truth", tuple(int(c) for c in self.ground_truth))
        if not len(self.timestamps) == len(self.detected) == len(self.ground_truth):
            raise ValueError(
                f"Series lengths differ: {len(self.timestamps)} timestamps, {len(self.detected)} detected, "
                f"{len(self.ground_truth)} ground truth"
            )
        if any(c < 0 for c in self.detected + self.ground_truth):
            raise ValueError("Counts must be non-negative")

    @classmethod
    def from_counts(
        cls, detected: Sequence[int], ground_truth: Sequence[int], timestamps: Optional[Sequence[float]] = None
    ) -> "CountSeries":
        """Create a series, stamping frames at the radar frame rate when no timestamps are given."""
        if timestamps is None:
            timestamps = [k / FRAME_RATE_HZ for k in range(len(detected))]
        return cls(tuple(timestamps), tuple(detected), tuple(ground_truth))

    def __len__(self) -> int:
        """Return the number of frames."""
        return len(self.timestamps)


def frame_recall_ratio(s: CountSeries) -> Percentage:
    """Get frame-wise recall as a Percentage.

    Raises:
        UndefinedMetric: If no frame has a pedestrian in the ground truth.
    """
    positive = [d for d, g in zip(s.detected, s.ground_truth) if g >= 1]
    if not positive:
        raise UndefinedMetric("Frame recall is undefined without frames containing pedestrians")
    return Percentage(sum(1 for d in positive if d >= 1), len(positive))


def person_count_recall_ratio(s: CountSeries) -> Percentage:
    """Get person-count recall as a Percentage; overcounting earns no extra credit.

    Raises:
        UndefinedMetric: If the ground truth holds no pedestrians.
    """
    total = sum(s.ground_truth)
    if total == 0:
        raise UndefinedMetric("Person-count recall is undefined without ground-truth pedestrians")
    return Percentage(sum(min(d, g) for d, g in zip(s.detected, s.ground_truth)), total)


def false_alarm_ratio(s: CountSeries) -> Percentage:
    """Get the share of all frames where detections outnumber the ground truth.

    Raises:
        UndefinedMetric: If the series is empty.
    """
    if not len(s):
        raise UndefinedMetric("False-alarm rate is undefined for an empty series")
    return Percentage(sum(1 for d, g in zip(s.detected, s.ground_truth) if d > g), len(s))


def frame_recall(s: CountSeries) -> float:
    """Get the fraction of frames with ground-truth pedestrians in which at least one pedestrian was detected."""
    return frame_recall_ratio(s).ratio


def person_count_recall(s: CountSeries) -> float:
    """Get sum(min(detected, ground truth)) / sum(ground truth)."""
    return person_count_recall_ratio(s).ratio


def false_alarm_rate(s: CountSeries) -> float:
    """Get the fraction of frames in which the detector overcounts."""
    return false_alarm_ratio(s).ratio


def count_pedestrians(
    detections: Sequence[DetectionRecord],
    truth: Sequence[TruthRecord],
    tolerance: float = ALIGNMENT_TOLERANCE_S,
) -> CountSeries:
    """Join a detection log with ground truth frame by frame and count pedestrians on each side.

    Both streams are merged in timestamp order; a detection frame pairs with the ground-truth frame within tolerance
    of it. Ground-truth frames with no detection frame were dropped by the detector and count as zero detected.
    Only `pedestrian` detections count; the ground-truth count is the number of visible pedestrians.

    Args:
        detections: Detection log records.
        truth: Ground truth records, one per frame.
        tolerance: Largest allowed timestamp difference in seconds.

    Returns:
        CountSeries: Counts stamped with the ground-truth timestamps, in time order.

    Raises:
        AlignmentError: If a detection frame has no ground-truth frame within tolerance.
    """
    ordered = sorted(detections, key=lambda d: d.t)
    timestamps: list[float] = []
    detected: list[int] = []
    ground_truth: list[int] = []
    i = 0
    for g in sorted(truth, key=lambda r: r.t):
        if i < len(ordered) and ordered[i].t < g.t - tolerance:
            break
        timestamps.append(g.t)
        ground_truth.append(g.pedestrians)
        if i < len(ordered) and abs(ordered[i].t - g.t) <= tolerance:
            detected.append(ordered[i].pedestrians)
            i += 1
        else:
            detected.append(0)
    if i < len(ordered):
        raise AlignmentError(f"Detection frame at {ordered[i].t} matches no ground truth frame within {tolerance}s")
    dropped = len(timestamps) - len(ordered)
    if dropped:
        logger.warning("%d ground truth frames have no detection frame and count as missed", dropped)
    return CountSeries(timestamps=tuple(timestamps), detected=tuple(detected), ground_truth=tuple(ground_truth))


def _optional(metric: Any, s: CountSeries) -> Optional[Percentage]:
    try:
        return metric(s)
    except UndefinedMetric as exc:
        logger.warning("%s", exc)
        return None


@dataclass(frozen=True)
class MetricsReport:
    """Metrics with their frame counts; undefined metrics are None."""

    frames: int
    positive_frames: int
    detected_pedestrians: int
    ground_truth_pedestrians: int
    frame_recall: Optional[Percentage]
    person_count_recall: Optional[Percentage]
    false_alarm_rate: Optional[Percentage]

    @classmethod
    def from_series(cls, s: CountSeries) -> "MetricsReport":
        """Compute every metric of a series."""
        return cls(
            frames=len(s),
            positive_frames=sum(1 for g in s.ground_truth if g >= 1),
            detected_pedestrians=sum(s.detected),
            ground_truth_pedestrians=sum(s.ground_truth),
            frame_recall=_optional(frame_recall_ratio, s),
            person_count_recall=_optional(person_count_recall_ratio, s),
            false_alarm_rate=_optional(false_alarm_ratio, s),
        )

    def as_dict(self) -> dict[str, Any]:
        """Get the machine-readable form."""

        def ratio(p: Optional[Percentage]) -> Optional[float]:
            return None if p is None else p.ratio

        return {
            "frames": self.frames,
            "positive_frames": self.positive_frames,
            "detected_pedestrians": self.detected_pedestrians,
            "ground_truth_pedestrians": self.ground_truth_pedestrians,
            "frame_recall": ratio(self.frame_recall),
            "person_count_recall": ratio(self.person_count_recall),
            "false_alarm_rate": ratio(self.false_alarm_rate),
            "false_alarm_denominator": "all_frames",
        }

    def render(self) -> str:
        """Get the human-readable form."""

        def line(label: str, p: Optional[Percentage]) -> str:
            return f"{label:<22}{'undefined' if p is None else f'{p} [{p.fraction}]'}"

        return "\n".join(
            [
                f"{'frames':<22}{self.frames} ({self.positive_frames} with pedestrians)",
                f"{'pedestrians':<22}{self.detected_pedestrians} detected, "
                f"{self.ground_truth_pedestrians} in ground truth",
                line("frame recall", self.frame_recall),
                line("person-count recall", self.person_count_recall),
                line("false-alarm rate", self.false_alarm_rate) + " of all frames",
            ]
        )
