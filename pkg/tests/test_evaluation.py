"""Tests count-based detection metrics."""

import pytest

from radarpercept.errors import AlignmentError, UndefinedMetric
from radarpercept.evaluation import (
    CountSeries,
    MetricsReport,
    count_pedestrians,
    false_alarm_rate,
    frame_recall,
    frame_recall_ratio,
    person_count_recall,
    person_count_recall_ratio,
)
from radarpercept.records import DetectionEntry, DetectionRecord, TruthObject, TruthRecord


def _table_series() -> CountSeries:
    """160 frames with two pedestrians each: 150 frames with a hit, 270 of 320 counted, 8 overcounts."""
    detected = [2] * 110 + [1] * 30 + [3] * 8 + [2] * 2 + [0] * 10
    return CountSeries.from_counts(detected, [2] * 160)


def _entry(kind: str) -> DetectionEntry:
    return DetectionEntry(
        type=kind,
        motion="dynamic",
        heading="approaching",
        centroid=(10.0, 0.0, 0.8),
        extent=(0.4, 0.7, 1.6),
        mean_doppler=1.2,
        comp_mean_doppler=1.2,
        modal_rcs=2.5,
        points=20,
    )


def _truth(t: float, pedestrians: int, hidden: int = 0) -> TruthRecord:
    objects = [
        TruthObject.model_validate(
            {
                "id": f"pedestrian-{j}",
                "class": "pedestrian",
                "centroid": (10.0, 0.0, 0.85),
                "velocity": (-1.4, 0.0, 0.0),
                "visible": j < pedestrians,
            }
        )
        for j in range(pedestrians + hidden)
    ]
    return TruthRecord(t=t, objects=objects)


def test_table_arithmetic() -> None:
    """Test frame recall 150/160 and person-count recall 270/320."""
    series = _table_series()
    recall = frame_recall_ratio(series)
    assert recall.ratio == 0.9375
    assert str(recall) == "93.75% (94%)"
    count_recall = person_count_recall_ratio(series)
    assert count_recall.ratio == 0.84375
    assert str(count_recall) == "84.375% (84%)"
    assert false_alarm_rate(series) == 0.05


def test_frame_recall() -> None:
    """Test the edge values of frame recall."""
    assert frame_recall(CountSeries.from_counts([1, 3, 1], [2, 2, 2])) == 1.0
    assert frame_recall(CountSeries.from_counts([0, 0, 5], [2, 2, 0])) == 0.0
    with pytest.raises(UndefinedMetric):
        frame_recall(CountSeries.from_counts([1, 1], [0, 0]))


def test_frame_recall_is_monotone() -> None:
    """Test that more detections never lower frame recall."""
    truth = [2, 1, 0, 2, 3]
    base = [0, 1, 0, 0, 2]
    for i in range(len(base)):
        more = list(base)
        more[i] += 1
        assert frame_recall(CountSeries.from_counts(more, truth)) >= frame_recall(CountSeries.from_counts(base, truth))


def test_person_count_recall() -> None:
    """Test that overcounting earns no credit."""
    assert person_count_recall(CountSeries.from_counts([2, 1], [2, 1])) == 1.0
    assert person_count_recall(CountSeries.from_counts([4, 2], [2, 1])) == 1.0
    assert person_count_recall(CountSeries.from_counts([1, 0], [2, 2])) == 0.25
    with pytest.raises(UndefinedMetric):
        person_count_recall(CountSeries.from_counts([1], [0]))


def test_false_alarm_rate() -> None:
    """Test the overcount share over all frames."""
    assert false_alarm_rate(CountSeries.from_counts([0, 1, 2], [0, 1, 2])) == 0.0
    assert false_alarm_rate(CountSeries.from_counts([1, 2, 3], [0, 1, 2])) == 1.0
    assert false_alarm_rate(CountSeries.from_counts([1, 0], [0, 0])) == 0.5
    with pytest.raises(UndefinedMetric):
        false_alarm_rate(CountSeries.from_counts([], []))


def test_series_validation() -> None:
    """Test that mismatched or negative counts are rejected."""
    with pytest.raises(ValueError):
        CountSeries.from_counts([1, 2], [1])
    with pytest.raises(ValueError):
        CountSeries.from_counts([-1], [1])
    assert CountSeries.from_counts([0, 0], [1, 1]).timestamps == (0.0, 1 / 15)


def test_count_pedestrians() -> None:
    """Test that only pedestrian detections and visible pedestrians are counted."""
    detections = [
        DetectionRecord(t=0.0, detections=[_entry("pedestrian"), _entry("large_object")]),
        DetectionRecord(t=0.1, detections=[]),
        DetectionRecord(t=0.2, detections=[_entry("pedestrian"), _entry("pedestrian"), _entry("unknown")]),
    ]
    truth = [_truth(0.0, 1), _truth(0.1, 2, hidden=1), _truth(0.2005, 1)]
    series = count_pedestrians(detections, truth)
    assert series.detected == (1, 0, 2)
    assert series.ground_truth == (1, 2, 1)
    assert series.timestamps == (0.0, 0.1, 0.2005)


def test_count_pedestrians_empty_detections() -> None:
    """Test that frames without detections count zero."""
    truth = [_truth(k / 15, 2) for k in range(5)]
    series = count_pedestrians([DetectionRecord(t=k / 15) for k in range(5)], truth)
    assert series.detected == (0, 0, 0, 0, 0)
    assert frame_recall(series) == 0.0


def test_count_pedestrians_alignment() -> None:
    """Test that detection frames without a ground-truth frame within 1 ms are rejected."""
    truth = [_truth(0.0, 1), _truth(0.1, 1)]
    with pytest.raises(AlignmentError):
        count_pedestrians([DetectionRecord(t=0.0), DetectionRecord(t=0.102)], truth)
    with pytest.raises(AlignmentError):
        count_pedestrians([DetectionRecord(t=0.002), DetectionRecord(t=0.102)], truth)
    with pytest.raises(AlignmentError):
        count_pedestrians([DetectionRecord(t=0.0), DetectionRecord(t=0.1), DetectionRecord(t=0.2)], truth)


def test_count_pedestrians_dropped_frame(caplog: pytest.LogCaptureFixture) -> None:
    """Test that a ground-truth frame the detector never produced counts as a miss."""
    hit = [_entry("pedestrian")]
    truth = [_truth(k / 15, 1) for k in range(4)]
    detections = [DetectionRecord(t=k / 15, detections=hit) for k in (0, 1, 3)]
    series = count_pedestrians(detections, truth)
    assert series.timestamps == tuple(k / 15 for k in range(4))
    assert series.detected == (1, 1, 0, 1)
    assert series.ground_truth == (1, 1, 1, 1)
    assert frame_recall(series) == 0.75
    assert "1 ground truth frames have no detection frame" in caplog.text


def test_count_pedestrians_merges_by_time() -> None:
    """Test that records are paired by timestamp rather than by position."""
    hit = [_entry("pedestrian")]
    truth = [_truth(0.1, 2), _truth(0.0, 1)]
    detections = [DetectionRecord(t=0.1, detections=hit * 2), DetectionRecord(t=0.0)]
    series = count_pedestrians(detections, truth)
    assert series.timestamps == (0.0, 0.1)
    assert series.detected == (0, 2)
    assert series.ground_truth == (1, 2)


def test_metrics_report() -> None:
    """Test the human and machine renderings of a report."""
    report = MetricsReport.from_series(_table_series())
    assert report.frames == 160
    assert report.positive_frames == 160
    assert report.ground_truth_pedestrians == 320
    values = report.as_dict()
    assert values["frame_recall"] == 0.9375
    assert values["person_count_recall"] == 0.84375
    assert values["false_alarm_rate"] == 0.05
    assert values["false_alarm_denominator"] == "all_frames"
    text = report.render()
    assert "93.75% (94%) [150/160]" in text
    assert "84.375% (84%) [270/320]" in text
    assert "5% (5%) [8/160] of all frames" in text


def test_metrics_report_undefined() -> None:
    """Test that undefined metrics are reported as such."""
    report = MetricsReport.from_series(CountSeries.from_counts([0, 1], [0, 0]))
    assert report.frame_recall is None
    assert report.person_count_recall is None
    assert report.false_alarm_rate.ratio == 0.5
    assert report.as_dict()["frame_recall"] is None
    assert "undefined" in report.render()


def test_perfect_detections() -> None:
    """Test that matching counts score perfectly."""
    report = MetricsReport.from_series(CountSeries.from_counts([2, 1, 0, 2], [2, 1, 0, 2]))
    assert report.frame_recall.ratio == 1.0
    assert report.person_count_recall.ratio == 1.0
    assert report.false_alarm_rate.ratio == 0.0
