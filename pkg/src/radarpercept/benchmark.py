"""Stage timing on synthetic uniform frames, and clustering scaling checks."""

import logging
import math
import time
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from radarpercept.clustering import euclidean_cluster
from radarpercept.constants import FRAME_PERIOD_US, FRAME_RATE_HZ
from radarpercept.core import RadarFrame, StampedPose
from radarpercept.ego_motion import PoseBuffer
from radarpercept.filtering import FilterProfile
from radarpercept.pipeline import STAGES, Pipeline, PipelineConfig
from radarpercept.units import Duration

logger = logging.getLogger(__name__)

# Synthetic points fill the field-of-view wedge between these ranges, whatever the frame size.
MIN_RANGE = 1.0
MAX_RANGE = 60.0
SCALING_SIZES = (2000, 4000, 8000)


def synthetic_frame(rng: np.random.Generator, n: int, timestamp: float, profile: FilterProfile) -> RadarFrame:
    """Draw n points uniformly over the volume of a profile's field of view out to MAX_RANGE.

    Every point passes the profile. The volume is fixed, so larger frames are denser.
    """
    az_low, az_high = math.radians(profile.az_min), math.radians(profile.az_max)
    sin_low, sin_high = math.sin(math.radians(profile.el_min)), math.sin(math.radians(profile.el_max))
    distance = np.cbrt(rng.uniform(MIN_RANGE**3, MAX_RANGE**3, n))
    azimuth = rng.uniform(az_low, az_high, n)
    elevation = np.arcsin(rng.uniform(sin_low, sin_high, n))
    horizontal = distance * np.cos(elevation)
    xyz = np.column_stack([horizontal * np.cos(azimuth), horizontal * np.sin(azimuth), distance * np.sin(elevation)])
    span = profile.rcs_max - profile.rcs_min
    rcs = rng.uniform(profile.rcs_min + 0.01 * span, profile.rcs_max - 0.01 * span, n)
    doppler = rng.uniform(max(profile.v_min, -3.0), min(profile.v_max, 3.0), n)
    return RadarFrame(timestamp, xyz=xyz, doppler=doppler, rcs=rcs)


@dataclass(frozen=True)
class StageStats:
    """Latency statistics of one stage."""

    stage: str
    mean: Duration
    p50: Duration
    p99: Duration

    @classmethod
    def from_samples(cls, stage: str, samples: Sequence[float]) -> "StageStats":
        """Summarize latency samples given in microseconds."""
        values = np.asarray(samples, dtype=float) if len(samples) else np.zeros(1)
        return cls(
            stage,
            Duration(float(values.mean())),
            Duration(float(np.percentile(values, 50))),
            Duration(float(np.percentile(values, 99))),
        )


@dataclass(frozen=True)
class ScalingRow:
    """Clustering time for one accumulated point count."""

    points: int
    median: Duration
    ratio: Optional[float] = None


@dataclass(frozen=True)
class BenchReport:
    """Benchmark results."""

    points: int
    frames: int
    stages: list[StageStats]
    scaling: list[ScalingRow] = field(default_factory=list)

    @property
    def total(self) -> StageStats:
        """Get the whole-pipeline statistics."""
        return next(s for s in self.stages if s.stage == "total")

    @property
    def meets_frame_budget(self) -> bool:
        """Check whether the p99 total latency fits inside one frame period."""
        return self.total.p99.within_frame_period

    def as_dict(self) -> dict[str, Any]:
        """Get the machine-readable form, latencies in microseconds."""
        return {
            "points": self.points,
            "frames": self.frames,
            "stages": {
                s.stage: {"mean_us": s.mean.microseconds, "p50_us": s.p50.microseconds, "p99_us": s.p99.microseconds}
                for s in self.stages
            },
            "frame_budget_us": FRAME_PERIOD_US,
            "meets_frame_budget": self.meets_frame_budget,
            "scaling": [
                {"points": r.points, "cluster_median_us": r.median.microseconds, "ratio": r.ratio}
                for r in self.scaling
            ],
        }

    def render(self) -> str:
        """Get the human-readable tables."""
        lines = [f"{self.frames} frames of {self.points} points", f"{'stage':<12}{'mean':>14}{'p50':>14}{'p99':>14}"]
        lines += [f"{s.stage:<12}{str(s.mean):>14}{str(s.p50):>14}{str(s.p99):>14}" for s in self.stages]
        verdict = "within" if self.meets_frame_budget else "over"
        lines.append(f"p99 total {self.total.p99} is {verdict} the {Duration(FRAME_PERIOD_US)} frame budget")
        if self.scaling:
            lines.append(f"{'cluster N':<12}{'median':>14}{'ratio':>14}")
            for row in self.scaling:
                ratio = "" if row.ratio is None else f"{row.ratio:.2f}"
                lines.append(f"{row.points:<12}{str(row.median):>14}{ratio:>14}")
        return "\n".join(lines)


def run_benchmark(
    points: int = 6000,
    frames: int = 50,
    seed: int = 0,
    config: Optional[PipelineConfig] = None,
    scaling: bool = True,
) -> BenchReport:
    """Time every pipeline stage over synthetic frames.

    The platform is stationary with poses covering the whole run, so each frame exercises the full accumulation path.

    Args:
        points: Points per frame.
        frames: Number of timed frames.
        seed: Generator seed.
        config: Pipeline configuration; the synthetic points are drawn inside its filter profile.
        scaling: Whether to also time clustering at the scaling sizes.

    Returns:
        BenchReport: Per-stage statistics and the optional scaling table.
    """
    if points < 0 or frames < 1:
        raise ValueError(f"Need points >= 0 and frames >= 1, got points={points}, frames={frames}")
    pipeline = Pipeline(config)
    rng = np.random.Generator(np.random.PCG64(seed))
    duration = (frames + 1) / FRAME_RATE_HZ + 1.0
    poses = PoseBuffer(
        capacity=max(pipeline.config.ego_motion.pose_capacity, int(duration * 100) + 2),
        poses=(StampedPose(j / 100) for j in range(int(duration * 100) + 1)),
    )
    profile = pipeline.config.profile
    samples: dict[str, list[float]] = {stage: [] for stage in STAGES}
    # One untimed frame fills the two-frame window.
    pipeline.process_frame(synthetic_frame(rng, points, 0.0, profile), poses)
    for k in range(1, frames + 1):
        result = pipeline.process_frame(synthetic_frame(rng, points, k / FRAME_RATE_HZ, profile), poses)
        for stage in STAGES:
            samples[stage].append(result.stage_latencies[stage])
    stages = [StageStats.from_samples(stage, samples[stage]) for stage in STAGES]
    rows = clustering_scaling(seed=seed, config=pipeline.config) if scaling else []
    report = BenchReport(points, frames, stages, rows)
    logger.info("Benchmark p99 total %s over %d frames of %d points", report.total.p99, frames, points)
    return report


def clustering_scaling(
    sizes: Sequence[int] = SCALING_SIZES, repeats: int = 7, seed: int = 0, config: Optional[PipelineConfig] = None
) -> list[ScalingRow]:
    """Time clustering of uniform frames over a fixed volume for each size, reporting the ratio to the previous size.

    Args:
        sizes: Point counts, in increasing order.
        repeats: Timed runs per size; the median is kept.
        seed: Generator seed.
        config: Supplies the clustering settings and the profile bounding the synthetic volume.

    Returns:
        list[ScalingRow]: One row per size.
    """
    config = config or PipelineConfig()
    rng = np.random.Generator(np.random.PCG64(seed))
    rows: list[ScalingRow] = []
    for n in sizes:
        frame = synthetic_frame(rng, n, 0.0, config.profile)
        timings = []
        for _ in range(repeats):
            start = time.perf_counter_ns()
            euclidean_cluster(frame, config.clustering)
            timings.append((time.perf_counter_ns() - start) / 1000)
        median = Duration(float(np.median(timings)))
        ratio = median.microseconds / rows[-1].median.microseconds if rows and rows[-1].median.microseconds else None
        rows.append(ScalingRow(n, median, ratio))
        logger.debug("Clustered %d points in %s", n, median)
    return rows
