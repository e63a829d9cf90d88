"""Radar-only perception: point filtering, ego-motion compensated accumulation, clustering and classification."""

import os
from typing import Optional

from dotenv import load_dotenv

from radarpercept.config import load_config
from radarpercept.core import RadarFrame, RadarPoint, RigidTransform, StampedPose
from radarpercept.ego_motion import PoseBuffer
from radarpercept.errors import (
    AlignmentError,
    ConfigError,
    DegeneratePoint,
    EmptyCluster,
    FrameOrder,
    ParseError,
    PoseGap,
    RadarPerceptError,
    UndefinedMetric,
    UnknownProfile,
)
from radarpercept.pipeline import FrameResult, Pipeline, PipelineConfig

load_dotenv()


def pipeline(
    config_path: Optional[str] = os.getenv("RADARPERCEPT_CONFIG"),
    profile: Optional[str] = None,
) -> Pipeline:
    """Create a Pipeline from a config file, or from the defaults when no file is given."""
    return Pipeline(load_config(config_path, profile))


__all__ = [
    "AlignmentError",
    "ConfigError",
    "DegeneratePoint",
    "EmptyCluster",
    "FrameOrder",
    "FrameResult",
    "ParseError",
    "Pipeline",
    "PipelineConfig",
    "PoseBuffer",
    "PoseGap",
    "RadarFrame",
    "RadarPerceptError",
    "RadarPoint",
    "RigidTransform",
    "StampedPose",
    "UndefinedMetric",
    "UnknownProfile",
    "pipeline",
]
