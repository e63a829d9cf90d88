"""Fixtures and factories for testing the radarpercept library."""

import logging
from collections.abc import Sequence
from pathlib import Path
from typing import Union

import numpy as np
import pytest

from radarpercept.core import RadarFrame, RadarPoint, StampedPose
from radarpercept.ego_motion import PoseBuffer
from radarpercept.simulator import SceneConfig, load_scene_config

FIXTURES_DIR = Path(__file__).parent / "fixtures"
STREAMS_DIR = FIXTURES_DIR / "streams"
SCENES_DIR = Path(__file__).parent.parent / "scenes"


def pytest_configure(config):
    """Configure pytest."""
    logging.basicConfig(level=logging.INFO, format="%(asctime)s [%(levelname)8s] %(message)s (%(filename)s:%(lineno)s)")


def fixture_path(name: Union[str, Path]) -> Path:
    """Resolve a fixture file by name, relative to the streams directory.

    Args:
        name: File name or relative path.

    Returns:
        Path to the fixture file.
    """
    path = STREAMS_DIR / name
    if not path.exists():
        raise FileNotFoundError(f"Fixture file not found: {path}")
    return path


def make_frame(
    timestamp: float,
    xyz: Sequence[Sequence[float]],
    doppler: Union[float, Sequence[float]] = 0.0,
    rcs: Union[float, Sequence[float]] = 5.0,
) -> RadarFrame:
    """Build a frame from positions, broadcasting scalar Doppler and RCS values."""
    positions = np.array(xyz, dtype=float).reshape(-1, 3)
    n = len(positions)
    return RadarFrame(
        timestamp,
        xyz=positions,
        doppler=np.broadcast_to(np.asarray(doppler, dtype=float), (n,)),
        rcs=np.broadcast_to(np.asarray(rcs, dtype=float), (n,)),
    )


def blob(center: Sequence[float], n: int = 8, spacing: float = 0.1) -> list[list[float]]:
    """Get n points in a tight line along y around a center, each within `spacing` of the next."""
    cx, cy, cz = center
    offset = (n - 1) * spacing / 2
    return [[cx, cy - offset + i * spacing, cz] for i in range(n)]


def linear_poses(
    velocity: Sequence[float], start: float = 0.0, end: float = 2.0, rate: float = 100.0
) -> list[StampedPose]:
    """Get identity-orientation poses moving at constant world velocity from the origin."""
    v = np.asarray(velocity, dtype=float)
    count = int(round((end - start) * rate)) + 1
    return [StampedPose(start + k / rate, tuple((v * (start + k / rate)).tolist())) for k in range(count)]


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator."""
    return np.random.Generator(np.random.PCG64(20240611))


@pytest.fixture
def point() -> RadarPoint:
    """A point straight ahead, inside both builtin profiles."""
    return RadarPoint(x=10.0, y=0.0, z=0.5, doppler=0.0, rcs=10.0)


@pytest.fixture
def static_poses() -> PoseBuffer:
    """Identity poses at 100 Hz over the first three seconds."""
    return PoseBuffer(capacity=512, poses=linear_poses((0.0, 0.0, 0.0), end=3.0))


@pytest.fixture
def moving_poses() -> PoseBuffer:
    """Poses moving along +x at 2 m/s, 100 Hz over the first three seconds."""
    return PoseBuffer(capacity=512, poses=linear_poses((2.0, 0.0, 0.0), end=3.0))


@pytest.fixture
def two_ped_scene() -> SceneConfig:
    """The shipped two-pedestrian scene."""
    return load_scene_config(SCENES_DIR / "two_ped.example")


@pytest.fixture
def walls_only_scene() -> SceneConfig:
    """The shipped static scene."""
    return load_scene_config(SCENES_DIR / "walls_only.example")
