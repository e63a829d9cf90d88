"""Tests the command line."""

import json
from pathlib import Path
from typing import Optional

import pytest

from radarpercept.cli import main
from radarpercept.records import DetectionRecord, TruthObject, TruthRecord, read_detections, read_frames, write_records

from .conftest import SCENES_DIR, fixture_path


def _detect(tmp_path: Path, name: str, *extra: str) -> Path:
    out = tmp_path / name
    argv = ["detect", "--frames", str(fixture_path("frames.jsonl")), "--poses", str(fixture_path("poses.jsonl"))]
    assert main([*argv, "--out", str(out), *extra]) == 0
    return out


def _counts_to_streams(
    tmp_path: Path, detected: list[Optional[int]], truth: list[int], offset: float = 0.0
) -> tuple[Path, Path]:
    pedestrian = {"id": "", "class": "pedestrian", "centroid": (10, 0, 0), "velocity": (0, 0, 0), "visible": True}
    entry = {
        "type": "pedestrian",
        "motion": "dynamic",
        "heading": "approaching",
        "centroid": (10.0, 0.0, 0.8),
        "extent": (0.4, 0.7, 1.6),
        "mean_doppler": 1.2,
        "comp_mean_doppler": 1.2,
        "modal_rcs": 2.0,
        "points": 12,
    }
    detections = [
        DetectionRecord.model_validate({"t": k / 15 + offset, "detections": [entry] * n})
        for k, n in enumerate(detected)
        if n is not None
    ]
    truth_records = [
        TruthRecord(
            t=k / 15,
            objects=[TruthObject.model_validate({**pedestrian, "id": f"pedestrian-{j}"}) for j in range(n)],
        )
        for k, n in enumerate(truth)
    ]
    paths = (tmp_path / "detections.jsonl", tmp_path / "truth.jsonl")
    write_records(paths[0], detections)
    write_records(paths[1], truth_records)
    return paths


def test_simulate_is_reproducible(tmp_path: Path) -> None:
    """Test that simulating a scene twice with the same seed writes identical files."""
    outputs = []
    for run in ("a", "b"):
        paths = [tmp_path / f"{run}-{kind}.jsonl" for kind in ("frames", "poses", "truth")]
        argv = ["simulate", "--scene", str(SCENES_DIR / "walls_only.example"), "--seed", "42"]
        argv += ["--out-frames", str(paths[0]), "--out-poses", str(paths[1]), "--out-truth", str(paths[2])]
        assert main(argv) == 0
        outputs.append([p.read_bytes() for p in paths])
    assert outputs[0] == outputs[1]
    assert outputs[0][0].count(b"\n") == 30


def test_simulate_missing_scene(tmp_path: Path) -> None:
    """Test that a missing scene file fails with exit code 1."""
    out = [str(tmp_path / name) for name in ("f.jsonl", "p.jsonl", "t.jsonl")]
    argv = ["simulate", "--scene", str(tmp_path / "missing.example")]
    assert main([*argv, "--out-frames", out[0], "--out-poses", out[1], "--out-truth", out[2]]) == 1


def test_detect(tmp_path: Path) -> None:
    """Test a detection log with one line per frame."""
    out = _detect(tmp_path, "detections.jsonl")
    records = read_detections(out)
    assert [r.t for r in records] == [0.0, 1 / 15, 2 / 15]
    assert all(r.latency_us is not None for r in records)
    assert records[0].detections[0].type == "unknown"
    assert records[0].detections[0].heading == "approaching"


def test_detect_without_latency_is_reproducible(tmp_path: Path) -> None:
    """Test that logs without latencies are byte-identical across runs."""
    first = _detect(tmp_path, "first.jsonl", "--omit-latency")
    second = _detect(tmp_path, "second.jsonl", "--omit-latency")
    assert first.read_bytes() == second.read_bytes()
    assert b"latency_us" not in first.read_bytes()


def test_detect_options(tmp_path: Path) -> None:
    """Test profile selection, config files and cluster dumps."""
    clusters = tmp_path / "clusters.jsonl"
    _detect(tmp_path, "outdoor.jsonl", "--profile", "outdoor", "--dump-clusters", str(clusters))
    dumps = [json.loads(line) for line in clusters.read_text().splitlines()]
    assert len(dumps) == 3
    # The 50 dBsm reflector passes the outdoor profile but stays outside the pedestrian's cluster.
    assert [len(c["indices"]) for c in dumps[0]["clusters"]] == [3]

    configured = _detect(tmp_path, "configured.jsonl", "--config", str(fixture_path("config.json")))
    assert len(read_detections(configured)) == 3


def test_detect_empty_stream(tmp_path: Path) -> None:
    """Test that an empty frames file gives an empty log."""
    frames = tmp_path / "frames.jsonl"
    frames.write_text("")
    out = tmp_path / "detections.jsonl"
    assert main(["detect", "--frames", str(frames), "--out", str(out)]) == 0
    assert out.read_text() == ""


def test_detect_failures(tmp_path: Path) -> None:
    """Test that bad inputs fail with exit code 1."""
    out = str(tmp_path / "detections.jsonl")
    assert main(["detect", "--frames", str(fixture_path("bad_flag_frames.jsonl")), "--out", out]) == 1
    assert main(["detect", "--frames", str(tmp_path / "missing.jsonl"), "--out", out]) == 1
    frames = str(fixture_path("frames.jsonl"))
    assert main(["detect", "--frames", frames, "--out", out, "--profile", "tunnel"]) == 1
    assert main(["detect", "--frames", frames, "--out", out, "--config", str(fixture_path("typo_config.json"))]) == 1
    with pytest.raises(SystemExit) as excinfo:
        main(["detect", "--out", out])
    assert excinfo.value.code == 2


def test_filter(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    """Test the filter-only command, its per-frame counts on stderr and its totals."""
    out = tmp_path / "filtered.jsonl"
    assert main(["filter", "--frames", str(fixture_path("frames.jsonl")), "--out", str(out)]) == 0
    assert [len(f) for f in read_frames(out)] == [3, 3, 0]
    captured = capsys.readouterr()
    assert "raw=8 kept=6 rcs=2" in captured.out
    frames = [line for line in captured.err.splitlines() if line.startswith("t=")]
    assert len(frames) == 3
    assert frames[0].startswith("t=0.000000 raw=4 kept=3 rcs=1")
    assert frames[2].startswith("t=0.133333 raw=0 kept=0")


def test_evaluate(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    """Test scoring a log against ground truth."""
    detections, truth = _counts_to_streams(tmp_path, [2, 1, 3, 0], [2, 2, 2, 2])
    report = tmp_path / "report.json"
    argv = ["evaluate", "--detections", str(detections), "--truth", str(truth), "--report", str(report)]
    assert main(argv) == 0
    assert "75% (75%) [3/4]" in capsys.readouterr().out
    values = json.loads(report.read_text())
    assert values["frame_recall"] == 0.75
    assert values["person_count_recall"] == 0.625
    assert values["false_alarm_rate"] == 0.25


def test_evaluate_misaligned(tmp_path: Path) -> None:
    """Test that detection frames 2 ms away from every ground-truth frame fail with exit code 1."""
    detections, truth = _counts_to_streams(tmp_path, [2, 1, 3, 0], [2, 2, 2, 2], offset=0.002)
    assert main(["evaluate", "--detections", str(detections), "--truth", str(truth)]) == 1


def test_evaluate_dropped_frame(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    """Test that a frame missing from the detection log is scored as a miss."""
    detections, truth = _counts_to_streams(tmp_path, [2, None, 3, 2], [2, 2, 2, 2])
    report = tmp_path / "report.json"
    argv = ["evaluate", "--detections", str(detections), "--truth", str(truth), "--report", str(report)]
    assert main(argv) == 0
    assert "75% (75%) [3/4]" in capsys.readouterr().out
    values = json.loads(report.read_text())
    assert values["frames"] == 4
    assert values["frame_recall"] == 0.75


def test_bench(capsys: pytest.CaptureFixture[str]) -> None:
    """Test a tiny benchmark run with JSON output."""
    assert main(["bench", "--points", "0", "--frames", "2", "--no-scaling", "--json"]) == 0
    values = json.loads(capsys.readouterr().out)
    assert values["points"] == 0
    assert values["frames"] == 2
    assert values["scaling"] == []
