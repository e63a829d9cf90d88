"""Synthetic radar scenes with pedestrians, walls, clutter and multipath ghosts, plus their ground truth.

Randomness comes from a single `numpy.random.Generator(PCG64(seed))` drawn in a fixed order, so a scene config and
seed always produce the same streams on every platform.
"""

import logging
import math
from pathlib import Path
from typing import Any, NamedTuple, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from scipy.spatial.transform import Rotation

from radarpercept.config import read_json
from radarpercept.constants import DEFAULT_PROFILE
from radarpercept.core import RadarFrame, StampedPose, angles_deg, rotation_to_quaternion, unit_vectors
from radarpercept.errors import ConfigError, UnknownProfile
from radarpercept.filtering import FilterProfile, builtin_profile
from radarpercept.records import (
    GroundTruth,
    TruthObject,
    TruthRecord,
    read_frames,
    read_poses,
    read_truth,
    write_frames,
    write_poses,
    write_truth,
)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
Point2 = tuple[float, float]

# Poses run this long past the last frame, so the last frame has a centred velocity window.
POSE_MARGIN_S = 0.2


class _SceneModel(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)


class PathConfig(_SceneModel):
    """Ground-plane polyline walked at constant speed, reversing at either end."""

    waypoints: list[Point2] = Field(min_length=1)
    speed: float = Field(default=0.0, ge=0.0)


class PedestrianConfig(_SceneModel):
    """A walking person, drawn as a vertical Gaussian blob of points."""

    path: PathConfig
    points_per_frame: tuple[int, int] = (5, 15)
    spread: float = Field(default=0.15, ge=0.0)
    body_height: float = Field(default=1.7, gt=0.0)
    rcs_mean: float = 2.0
    rcs_std: float = Field(default=2.0, ge=0.0)

    @model_validator(mode="after")
    def _check_counts(self) -> "PedestrianConfig":
        low, high = self.points_per_frame
        if low < 0 or low > high:
            raise ValueError(f"points_per_frame must be an ordered non-negative range, got {self.points_per_frame}")
        return self


class WallConfig(_SceneModel):
    """A vertical planar segment between two ground points."""

    start: Point2
    end: Point2
    z_min: float = 0.0
    z_max: float = 2.5
    points_per_frame: int = Field(default=60, ge=0)
    rcs_mean: float = 35.0
    rcs_std: float = Field(default=5.0, ge=0.0)

    @model_validator(mode="after")
    def _check_height(self) -> "WallConfig":
        if self.z_min >= self.z_max:
            raise ValueError(f"z_min ({self.z_min}) must be less than z_max ({self.z_max})")
        return self


class EgoConfig(_SceneModel):
    """Sensor platform path, mount height and heading (yaw about world z)."""

    path: PathConfig = Field(default_factory=lambda: PathConfig(waypoints=[(0.0, 0.0)]))
    mount_height: float = Field(default=0.5, ge=0.0)
    yaw_deg: float = 0.0


class SceneConfig(_SceneModel):
    """Complete scene description.

    `description` is free text for whoever reads the scene file; it does not affect generation.
    """

    description: str = ""
    duration: float = Field(ge=0.0)
    frame_rate: float = Field(default=15.0, gt=0.0)
    pose_rate: float = Field(default=100.0, gt=0.0)
    pedestrians: list[PedestrianConfig] = Field(default_factory=list)
    walls: list[WallConfig] = Field(default_factory=list)
    ego: EgoConfig = Field(default_factory=EgoConfig)
    clutter_rate: float = Field(default=0.0, ge=0.0)
    ghost_rate: float = Field(default=0.0, ge=0.0)
    doppler_noise: float = Field(default=0.05, ge=0.0)
    clutter_rcs: Point2 = (-5.0, 55.0)
    clutter_doppler: float = Field(default=2.0, ge=0.0)
    clutter_range: Point2 = (2.0, 30.0)
    clutter_az_deg: float = Field(default=20.0, gt=0.0, le=90.0)
    clutter_el_deg: float = Field(default=15.0, gt=0.0, le=90.0)
    reference_profile: str = DEFAULT_PROFILE
    max_range: float = Field(default=60.0, gt=0.0)
    seed: int = Field(default=0, ge=0, lt=2**64)

    @model_validator(mode="after")
    def _check_ranges(self) -> "SceneConfig":
        if self.clutter_rcs[0] >= self.clutter_rcs[1]:
            raise ValueError(f"clutter_rcs must be an increasing pair, got {self.clutter_rcs}")
        if not 0 < self.clutter_range[0] < self.clutter_range[1]:
            raise ValueError(f"clutter_range must be an increasing positive pair, got {self.clutter_range}")
        return self

    @property
    def frame_count(self) -> int:
        """Get the number of frames in the scene."""
        return int(round(self.duration * self.frame_rate))


class Scene(NamedTuple):
    """Generated streams."""

    frames: list[RadarFrame]
    poses: list[StampedPose]
    truth: GroundTruth


def parse_scene_config(data: dict[str, Any], seed: Optional[int] = None) -> SceneConfig:
    """Validate raw scene data, optionally replacing its seed.

    Raises:
        ConfigError: If the scene is invalid.
    """
    if seed is not None:
        data = {**data, "seed": seed}
    try:
        return SceneConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"Invalid scene: {exc}") from exc


def load_scene_config(path: PathLike, seed: Optional[int] = None) -> SceneConfig:
    """Load a scene file.

    Raises:
        ConfigError: If the file is missing or the scene is invalid.
    """
    return parse_scene_config(read_json(path), seed)


class _Walker:
    """Position and velocity along a PathConfig."""

    def __init__(self, path: PathConfig) -> None:
        points = np.array(path.waypoints, dtype=float).reshape(-1, 2)
        segments = np.diff(points, axis=0)
        lengths = np.linalg.norm(segments, axis=1)
        keep = lengths > 0
        self._origin = points[0]
        self._starts = points[:-1][keep]
        self._directions = segments[keep] / lengths[keep, None]
        self._offsets = np.concatenate([[0.0], np.cumsum(lengths[keep])])
        self._total = float(self._offsets[-1])
        self._speed = path.speed

    def state(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        if self._total == 0 or self._speed == 0:
            return self._origin.copy(), np.zeros(2)
        travelled = (self._speed * t) % (2 * self._total)
        direction = 1.0
        if travelled > self._total:
            travelled = 2 * self._total - travelled
            direction = -1.0
        i = int(np.clip(np.searchsorted(self._offsets, travelled, side="right") - 1, 0, len(self._starts) - 1))
        position = self._starts[i] + (travelled - self._offsets[i]) * self._directions[i]
        return position, direction * self._speed * self._directions[i]


class _Layer(NamedTuple):
    xyz: np.ndarray
    doppler: np.ndarray
    rcs: np.ndarray
    dyn_flag: np.ndarray


class _Generator:
    """Draws the frames of one scene in a fixed order."""

    def __init__(self, cfg: SceneConfig, reference: FilterProfile) -> None:
        self.cfg = cfg
        self.reference = reference
        self.rng = np.random.Generator(np.random.PCG64(cfg.seed))
        self.ego = _Walker(cfg.ego.path)
        self.walkers = [_Walker(p.path) for p in cfg.pedestrians]
        self.heading = Rotation.from_euler("z", cfg.ego.yaw_deg, degrees=True)
        self.quaternion = rotation_to_quaternion(self.heading)
        self.world_from_sensor = self.heading.as_matrix()

    def sensor_state(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        position, velocity = self.ego.state(t)
        return np.array([position[0], position[1], self.cfg.ego.mount_height]), np.array([velocity[0], velocity[1], 0])

    def pose(self, t: float) -> StampedPose:
        position, _ = self.sensor_state(t)
        return StampedPose(t, tuple(position.tolist()), self.quaternion)

    def to_sensor(self, world: np.ndarray, origin: np.ndarray) -> np.ndarray:
        # Row-wise R^T (p - origin).
        return (np.asarray(world, dtype=float).reshape(-1, 3) - origin) @ self.world_from_sensor

    def rotate_to_sensor(self, vector: np.ndarray) -> np.ndarray:
        return np.asarray(vector, dtype=float) @ self.world_from_sensor

    def noise(self, n: int) -> np.ndarray:
        return self.rng.normal(0.0, self.cfg.doppler_noise, n)

    def visible(self, centroid: np.ndarray) -> bool:
        azimuth, elevation, degenerate = angles_deg(centroid)
        p = self.reference
        return bool(
            not degenerate[0]
            and p.az_min <= azimuth[0] <= p.az_max
            and p.el_min <= elevation[0] <= p.el_max
            and np.linalg.norm(centroid) <= self.cfg.max_range
        )

    def frame(self, t: float) -> tuple[RadarFrame, TruthRecord]:
        origin, ego_world = self.sensor_state(t)
        ego_velocity = self.rotate_to_sensor(ego_world)
        layers: list[_Layer] = []
        objects: list[TruthObject] = []

        for j, (ped, walker) in enumerate(zip(self.cfg.pedestrians, self.walkers)):
            position, velocity = walker.state(t)
            object_velocity = self.rotate_to_sensor([velocity[0], velocity[1], 0.0])
            low, high = ped.points_per_frame
            n = int(self.rng.integers(low, high, endpoint=True))
            lateral = self.rng.normal(0.0, ped.spread, (n, 2))
            height = ped.body_height
            z = np.clip(self.rng.normal(height / 2, height / 4, n), 0.0, height)
            world = np.column_stack([position[0] + lateral[:, 0], position[1] + lateral[:, 1], z])
            xyz = self.to_sensor(world, origin)
            unit, _ = unit_vectors(xyz)
            doppler = unit @ (ego_velocity - object_velocity) + self.noise(n)
            rcs = self.rng.normal(ped.rcs_mean, ped.rcs_std, n)
            moving = bool(np.any(velocity))
            layers.append(_Layer(xyz, doppler, rcs, np.full(n, moving)))
            centroid = self.to_sensor([position[0], position[1], height / 2], origin)[0]
            objects.append(self._truth(f"pedestrian-{j}", "pedestrian", centroid, object_velocity))

        for j, wall in enumerate(self.cfg.walls):
            n = wall.points_per_frame
            start = np.array(wall.start)
            end = np.array(wall.end)
            along = self.rng.uniform(0.0, 1.0, n)
            z = self.rng.uniform(wall.z_min, wall.z_max, n)
            world = np.column_stack([start + along[:, None] * (end - start), z])
            xyz = self.to_sensor(world, origin)
            unit, _ = unit_vectors(xyz)
            doppler = unit @ ego_velocity + self.noise(n)
            rcs = self.rng.normal(wall.rcs_mean, wall.rcs_std, n)
            layers.append(_Layer(xyz, doppler, rcs, np.zeros(n, dtype=bool)))
            middle = (start + end) / 2
            centroid = self.to_sensor([middle[0], middle[1], (wall.z_min + wall.z_max) / 2], origin)[0]
            objects.append(self._truth(f"wall-{j}", "wall", centroid, np.zeros(3)))

        layers.append(self._clutter())
        layers.append(self._ghosts(ego_velocity))

        xyz = np.concatenate([layer.xyz for layer in layers])
        order = self.rng.permutation(len(xyz))
        frame = RadarFrame(
            t,
            xyz=xyz[order],
            doppler=np.concatenate([layer.doppler for layer in layers])[order],
            rcs=np.concatenate([layer.rcs for layer in layers])[order],
            dyn_flag=np.concatenate([layer.dyn_flag for layer in layers])[order],
        )
        return frame, TruthRecord(t=t, objects=objects)

    def _truth(self, name: str, kind: str, centroid: np.ndarray, velocity: np.ndarray) -> TruthObject:
        return TruthObject.model_validate(
            {
                "id": name,
                "class": kind,
                "centroid": tuple(float(c) for c in centroid),
                "velocity": tuple(float(v) for v in velocity),
                "visible": self.visible(centroid),
            }
        )

    def _clutter(self) -> _Layer:
        cfg = self.cfg
        n = int(self.rng.poisson(cfg.clutter_rate))
        distance = self.rng.uniform(cfg.clutter_range[0], cfg.clutter_range[1], n)
        azimuth = np.radians(self.rng.uniform(-cfg.clutter_az_deg, cfg.clutter_az_deg, n))
        elevation = np.radians(self.rng.uniform(-cfg.clutter_el_deg, cfg.clutter_el_deg, n))
        rcs = self.rng.uniform(cfg.clutter_rcs[0], cfg.clutter_rcs[1], n)
        doppler = self.rng.uniform(-cfg.clutter_doppler, cfg.clutter_doppler, n)
        return _Layer(_spherical(distance, azimuth, elevation), doppler, rcs, np.zeros(n, dtype=bool))

    def _ghosts(self, ego_velocity: np.ndarray) -> _Layer:
        """Multipath returns, each outside the reference profile by RCS or by azimuth."""
        p = self.reference
        n = int(self.rng.poisson(self.cfg.ghost_rate))
        by_rcs = self.rng.random(n) < 0.5
        above = self.rng.random(n) < 0.5
        margin = self.rng.uniform(1.0, 30.0, n)
        inside = self.rng.uniform(p.az_min, p.az_max, n)
        outside = np.clip(np.where(above, p.az_max + margin, p.az_min - margin), -179.0, 179.0)
        azimuth = np.radians(np.where(by_rcs, inside, outside))
        elevation = np.radians(self.rng.uniform(p.el_min, p.el_max, n))
        distance = self.rng.uniform(2.0, 40.0, n)
        strong = self.rng.uniform(p.rcs_max + 1.0, p.rcs_max + 20.0, n)
        ordinary = self.rng.uniform(p.rcs_min, p.rcs_max, n)
        xyz = _spherical(distance, azimuth, elevation)
        unit, _ = unit_vectors(xyz)
        doppler = unit @ ego_velocity + self.noise(n)
        return _Layer(xyz, doppler, np.where(by_rcs, strong, ordinary), np.zeros(n, dtype=bool))


def _spherical(distance: np.ndarray, azimuth: np.ndarray, elevation: np.ndarray) -> np.ndarray:
    horizontal = distance * np.cos(elevation)
    return np.column_stack([horizontal * np.cos(azimuth), horizontal * np.sin(azimuth), distance * np.sin(elevation)])


def generate_scene(cfg: SceneConfig) -> Scene:
    """Generate the frames, poses and ground truth of a scene.

    Object points carry Doppler (v_ego - v_object) · r̂ plus Gaussian noise, positive when closing. Poses are sampled
    at `pose_rate` from time 0 until shortly after the last frame.

    Args:
        cfg: Validated scene configuration.

    Returns:
        Scene: Frames, poses and ground truth.

    Raises:
        ConfigError: If the reference profile is unknown.
    """
    try:
        reference = builtin_profile(cfg.reference_profile)
    except UnknownProfile as exc:
        raise ConfigError(f"Invalid scene reference profile: {exc}") from exc
    generator = _Generator(cfg, reference)
    n_frames = cfg.frame_count
    poses: list[StampedPose] = []
    if n_frames:
        n_poses = int(math.floor((cfg.duration + POSE_MARGIN_S) * cfg.pose_rate)) + 1
        poses = [generator.pose(j / cfg.pose_rate) for j in range(n_poses)]
    frames: list[RadarFrame] = []
    truth: GroundTruth = []
    for k in range(n_frames):
        frame, record = generator.frame(k / cfg.frame_rate)
        frames.append(frame)
        truth.append(record)
    logger.info(
        "Generated %d frames (%d points), %d poses, seed %d",
        len(frames),
        sum(len(f) for f in frames),
        len(poses),
        cfg.seed,
    )
    return Scene(frames, poses, truth)


def write_scene(scene: Scene, frames_path: PathLike, poses_path: PathLike, truth_path: PathLike) -> None:
    """Write a scene's three streams."""
    write_frames(frames_path, scene.frames)
    write_poses(poses_path, scene.poses)
    write_truth(truth_path, scene.truth)


def read_scene(frames_path: PathLike, poses_path: PathLike, truth_path: PathLike) -> Scene:
    """Read a scene's three streams.

    Raises:
        ParseError: If any file is malformed.
    """
    return Scene(list(read_frames(frames_path)), list(read_poses(poses_path)), read_truth(truth_path))
