"""Tests the four-stage pipeline over frame streams."""

import math

import numpy as np
import pytest

from radarpercept.clustering import describe_clusters, euclidean_cluster
from radarpercept.config import read_json
from radarpercept.core import RadarFrame
from radarpercept.ego_motion import PoseBuffer, ego_velocity
from radarpercept.errors import FrameOrder
from radarpercept.evaluation import MetricsReport, count_pedestrians
from radarpercept.filtering import RejectionStats, builtin_profile, filter_frame
from radarpercept.pipeline import STAGES, FrameResult, Pipeline, PipelineConfig
from radarpercept.records import DetectionRecord
from radarpercept.replay import replay
from radarpercept.simulator import SceneConfig, generate_scene, parse_scene_config

from .conftest import SCENES_DIR, linear_poses, make_frame


def _scene_frame(t: float, ped_doppler: float = 1.2) -> RadarFrame:
    """A pedestrian-sized blob at 12 m and a wall-sized strong reflector at 20 m."""
    pedestrian = [[12.0, y, z] for y in (-0.35, -0.175, 0.0, 0.175, 0.35) for z in (0.0, 0.35, 0.7, 1.05, 1.4)]
    wall = [[20.0, y, z] for y in (-1.0, -0.6, -0.2, 0.2, 0.6, 1.0) for z in (0.0, 0.5, 1.0)]
    return make_frame(
        t,
        pedestrian + wall,
        doppler=[ped_doppler] * len(pedestrian) + [0.0] * len(wall),
        rcs=[2.0] * len(pedestrian) + [30.0] * len(wall),
    )


def test_first_frame(static_poses: PoseBuffer) -> None:
    """Test the cold start: no accumulation, no degraded flag."""
    pipeline = Pipeline()
    frame = _scene_frame(0.0)
    result = pipeline.process_frame(frame, static_poses)
    assert not result.degraded
    assert result.point_counts == {"raw": 43, "filtered": 43, "accumulated": 43}
    assert pipeline.previous is not None
    assert pipeline.previous.timestamp == 0.0

    kinds = sorted((d.object_type, d.motion, d.heading) for d in result.detections)
    assert kinds == [("large_object", "static", "none"), ("pedestrian", "dynamic", "approaching")]
    pedestrian = next(d for d in result.detections if d.object_type == "pedestrian")
    assert pedestrian.box.w == pytest.approx(0.7)
    assert pedestrian.box.h == pytest.approx(1.4)
    assert pedestrian.descriptors.comp_mean_doppler == pytest.approx(1.2)
    assert pedestrian.frame_timestamp == 0.0


def test_accumulates_second_frame(static_poses: PoseBuffer) -> None:
    """Test that the second frame carries the first frame's points."""
    pipeline = Pipeline()
    for frame in (_scene_frame(0.0), _scene_frame(1 / 15)):
        result = pipeline.process_frame(frame, static_poses)
    assert result.point_counts["accumulated"] == 86
    assert not result.degraded
    pedestrian = next(d for d in result.detections if d.object_type == "pedestrian")
    assert pedestrian.descriptors.point_count == 50


def test_stage_latencies(static_poses: PoseBuffer) -> None:
    """Test that every stage is timed and the total covers them."""
    frame = _scene_frame(0.0)
    result = Pipeline().process_frame(frame, static_poses)
    assert tuple(result.stage_latencies) == STAGES
    assert all(v >= 0 for v in result.stage_latencies.values())
    parts = sum(v for stage, v in result.stage_latencies.items() if stage != "total")
    assert result.stage_latencies["total"] == pytest.approx(parts)


def test_frame_order(static_poses: PoseBuffer) -> None:
    """Test that stale frames are rejected and reset starts a new stream."""
    pipeline = Pipeline()
    frame = _scene_frame(1.0)
    pipeline.process_frame(frame, static_poses)
    with pytest.raises(FrameOrder):
        pipeline.process_frame(frame, static_poses)
    older = _scene_frame(0.5)
    with pytest.raises(FrameOrder):
        pipeline.process_frame(older, static_poses)
    pipeline.reset()
    assert pipeline.previous is None
    assert pipeline.process_frame(older, static_poses).point_counts["accumulated"] == 43


def test_degraded_without_poses() -> None:
    """Test that missing odometry gives zero ego velocity and a degraded flag."""
    pipeline = Pipeline()
    results = [pipeline.process_frame(frame, PoseBuffer()) for frame in (_scene_frame(0.0), _scene_frame(0.1))]
    assert all(r.degraded for r in results)
    assert results[1].point_counts["accumulated"] == 86
    pedestrian = next(d for d in results[1].detections if d.object_type == "pedestrian")
    assert pedestrian.descriptors.comp_mean_doppler == pytest.approx(1.2)


def test_degraded_after_pose_gap() -> None:
    """Test a pose stream that stops before the frame time."""
    poses = PoseBuffer(poses=linear_poses((0.0, 0.0, 0.0), end=0.1))
    pipeline = Pipeline()
    first = _scene_frame(0.0)
    late = _scene_frame(1.0)
    assert not pipeline.process_frame(first, poses).degraded
    assert pipeline.process_frame(late, poses).degraded


def test_receding_positive_sensor(static_poses: PoseBuffer) -> None:
    """Test that Doppler from a receding-positive sensor is flipped before use."""
    pipeline = Pipeline(PipelineConfig(doppler_sign="receding_positive"))
    frame = _scene_frame(0.0, ped_doppler=-1.2)
    pedestrian = next(d for d in pipeline.process_frame(frame, static_poses).detections if d.motion == "dynamic")
    assert pedestrian.heading == "approaching"


def test_moving_ego_nulls_static_wall(moving_poses: PoseBuffer) -> None:
    """Test that a wall seen from a platform moving at 2 m/s reads static."""
    xyz = np.array([[20.0, y, z] for y in (-1.0, -0.6, -0.2, 0.2, 0.6, 1.0) for z in (0.0, 0.5, 1.0)])
    doppler = 2.0 * xyz[:, 0] / np.linalg.norm(xyz, axis=1)
    result = Pipeline().process_frame(make_frame(1.0, xyz, doppler, rcs=30.0), moving_poses)
    [wall] = result.detections
    assert wall.motion == "static"
    assert abs(wall.descriptors.comp_mean_doppler) <= 1e-9
    assert wall.descriptors.mean_doppler == pytest.approx(2.0, abs=0.01)


def test_keep_clusters(static_poses: PoseBuffer) -> None:
    """Test the optional cluster membership snapshots."""
    frame = _scene_frame(0.0)
    result = Pipeline(keep_clusters=True).process_frame(frame, static_poses)
    assert [c.retained for c in result.clusters] == [True, True]
    assert [len(c.indices) for c in result.clusters] == [25, 18]
    assert result.clusters[0].xyz.shape == (25, 3)
    assert Pipeline().process_frame(frame, static_poses).clusters == ()


def test_frame_result_validation() -> None:
    """Test that inconsistent results are rejected."""
    counts = {"raw": 1, "filtered": 1, "accumulated": 1}
    with pytest.raises(ValueError):
        FrameResult(0.0, (), {"total": -1.0}, counts, RejectionStats())
    with pytest.raises(ValueError):
        FrameResult(0.0, (), {"total": 1.0}, {"raw": 1, "filtered": 2, "accumulated": 2}, RejectionStats())


def test_static_threshold_follows_retention() -> None:
    """Test that the static threshold tracks v_min_retain unless set on its own."""
    assert PipelineConfig().classifier.v_static == 0.25
    assert PipelineConfig.model_validate({"retention": {"v_min_retain": 0.5}}).classifier.v_static == 0.5
    explicit = PipelineConfig.model_validate(
        {"retention": {"v_min_retain": 0.5}, "classifier": {"v_static": 0.3, "ped_w_max": 1.2}}
    )
    assert explicit.classifier.v_static == 0.3
    assert explicit.classifier.ped_w_max == 1.2
    assert PipelineConfig.for_profile("outdoor").resolved_retention.rcs_retain_max == 55.0


def _walls_only(noise: float) -> SceneConfig:
    data = read_json(SCENES_DIR / "walls_only.example")
    return parse_scene_config({**data, "doppler_noise": noise})


@pytest.mark.parametrize("noise", [0.0, 0.05])
def test_static_world_nulling(noise: float) -> None:
    """Test that every wall cluster's compensated Doppler vanishes up to noise."""
    cfg = _walls_only(noise)
    scene = generate_scene(cfg)
    config = PipelineConfig()
    poses = PoseBuffer(capacity=len(scene.poses), poses=scene.poses)
    bound = 1e-6 + 3 * noise / math.sqrt(config.clustering.min_points)
    clusters_seen = 0
    for frame in scene.frames:
        filtered, _ = filter_frame(config.profile, frame)
        clusters = euclidean_cluster(filtered, config.clustering)
        ego = ego_velocity(poses, frame.timestamp, config.ego_motion.velocity_window)
        assert ego.velocity == pytest.approx((2.0, 0.0, 0.0), abs=1e-9)
        for d in describe_clusters(clusters, ego):
            assert abs(d.comp_mean_doppler) <= bound
            clusters_seen += 1
    assert clusters_seen >= len(scene.frames)


def test_walls_only_stream_has_no_dynamic_detections(walls_only_scene: SceneConfig) -> None:
    """Test the full pipeline on a static world seen from a moving platform."""
    scene = generate_scene(walls_only_scene)
    results: list[FrameResult] = []
    summary = replay(scene.frames, scene.poses, Pipeline(), results.append)
    assert summary.frames == len(scene.frames) == 30
    assert summary.degraded == 0
    assert summary.detections > 0
    assert all(d.motion == "static" for r in results for d in r.detections)


def test_two_pedestrian_scene(two_ped_scene: SceneConfig) -> None:
    """Test detection quality on the shipped two-pedestrian scene."""
    scene = generate_scene(two_ped_scene)
    assert len(scene.frames) == 160
    records: list[DetectionRecord] = []
    replay(
        scene.frames,
        scene.poses,
        Pipeline(PipelineConfig.for_profile(two_ped_scene.reference_profile)),
        lambda r: records.append(DetectionRecord.from_result(r)),
    )
    report = MetricsReport.from_series(count_pedestrians(records, scene.truth))
    assert report.ground_truth_pedestrians == 320
    assert report.frame_recall.ratio >= 0.90
    assert report.person_count_recall.ratio >= 0.75
    assert report.false_alarm_rate.ratio <= 0.10


def test_indoor_profile_is_default() -> None:
    """Test the default configuration's profile."""
    assert PipelineConfig().profile == builtin_profile("indoor")
