"""Command-line interface."""

import argparse
import json
import logging
import sys
from collections.abc import Sequence
from contextlib import ExitStack
from typing import Optional

from radarpercept.benchmark import run_benchmark
from radarpercept.config import load_config
from radarpercept.constants import LOG_LEVEL
from radarpercept.errors import RadarPerceptError
from radarpercept.evaluation import MetricsReport, count_pedestrians
from radarpercept.filtering import RejectionStats, filter_frame
from radarpercept.pipeline import FrameResult, Pipeline
from radarpercept.records import (
    ClusterDump,
    DetectionRecord,
    FrameRecord,
    dump_record,
    read_detections,
    read_frames,
    read_poses,
    read_truth,
)
from radarpercept.replay import replay
from radarpercept.simulator import generate_scene, load_scene_config, write_scene

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s [%(levelname)8s] %(message)s (%(filename)s:%(lineno)s)"


def _detect(args: argparse.Namespace) -> int:
    config = load_config(args.config, args.profile)
    pipeline = Pipeline(config, keep_clusters=args.dump_clusters is not None)
    if args.poses is None:
        logger.warning("No pose stream given; every frame is processed in degraded mode")
    poses = read_poses(args.poses) if args.poses is not None else iter(())
    with ExitStack() as stack:
        out = stack.enter_context(open(args.out, "w", encoding="utf-8", newline="\n"))
        dump = None
        if args.dump_clusters is not None:
            dump = stack.enter_context(open(args.dump_clusters, "w", encoding="utf-8", newline="\n"))

        def write(result: FrameResult) -> None:
            out.write(dump_record(DetectionRecord.from_result(result, include_latency=not args.omit_latency)) + "\n")
            if dump is not None:
                dump.write(dump_record(ClusterDump.from_result(result)) + "\n")

        summary = replay(read_frames(args.frames), poses, pipeline, write, realtime=args.realtime, rate=args.rate)
    if args.realtime:
        print(f"{summary.deadline_misses} deadline misses over {summary.frames} frames", file=sys.stderr)
    return 0


def _counts(stats: RejectionStats) -> str:
    return " ".join(f"{name}={count}" for name, count in stats.as_dict().items())


def _filter(args: argparse.Namespace) -> int:
    profile = load_config(args.config, args.profile).profile
    total = RejectionStats()
    with open(args.out, "w", encoding="utf-8", newline="\n") as out:
        for frame in read_frames(args.frames):
            filtered, stats = filter_frame(profile, frame)
            print(f"t={frame.timestamp:.6f} {_counts(stats)}", file=sys.stderr)
            out.write(dump_record(FrameRecord.from_frame(filtered)) + "\n")
            total = total + stats
    print(_counts(total))
    return 0


def _simulate(args: argparse.Namespace) -> int:
    scene = generate_scene(load_scene_config(args.scene, args.seed))
    write_scene(scene, args.out_frames, args.out_poses, args.out_truth)
    return 0


def _evaluate(args: argparse.Namespace) -> int:
    series = count_pedestrians(read_detections(args.detections), read_truth(args.truth))
    report = MetricsReport.from_series(series)
    print(report.render())
    if args.report is not None:
        with open(args.report, "w", encoding="utf-8") as f:
            json.dump(report.as_dict(), f, indent=2)
            f.write("\n")
    return 0


def _bench(args: argparse.Namespace) -> int:
    config = load_config(args.config, args.profile)
    report = run_benchmark(args.points, args.frames, args.seed, config, scaling=not args.no_scaling)
    print(json.dumps(report.as_dict(), indent=2) if args.json else report.render())
    return 0


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser."""
    parser = argparse.ArgumentParser(prog="radarpercept", description="Radar-only perception toolkit")
    parser.add_argument(
        "--log-level", default=LOG_LEVEL, choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"], help="log level"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    detect = commands.add_parser("detect", help="run the pipeline over a frame stream")
    detect.add_argument("--frames", required=True, help="frames file")
    detect.add_argument("--poses", help="poses file; without it frames are processed in degraded mode")
    detect.add_argument("--config", help="config file")
    detect.add_argument("--profile", help="filter profile name, overriding the config's active profile")
    detect.add_argument("--out", required=True, help="detection log to write")
    detect.add_argument("--realtime", action="store_true", help="pace frames in wall-clock time")
    detect.add_argument("--rate", type=float, help="pacing rate in Hz instead of the recorded frame spacing")
    detect.add_argument("--omit-latency", action="store_true", help="leave latencies out of the log")
    detect.add_argument("--dump-clusters", metavar="PATH", help="write cluster membership per frame")
    detect.set_defaults(handler=_detect)

    filter_ = commands.add_parser("filter", help="run only the point filter; per-frame rejection counts go to stderr")
    filter_.add_argument("--frames", required=True, help="frames file")
    filter_.add_argument("--config", help="config file")
    filter_.add_argument("--profile", help="filter profile name")
    filter_.add_argument("--out", required=True, help="filtered frames file to write")
    filter_.set_defaults(handler=_filter)

    simulate = commands.add_parser("simulate", help="generate a synthetic scene")
    simulate.add_argument("--scene", required=True, help="scene file")
    simulate.add_argument("--seed", type=int, help="seed overriding the scene's")
    simulate.add_argument("--out-frames", required=True, help="frames file to write")
    simulate.add_argument("--out-poses", required=True, help="poses file to write")
    simulate.add_argument("--out-truth", required=True, help="ground truth file to write")
    simulate.set_defaults(handler=_simulate)

    evaluate = commands.add_parser("evaluate", help="score a detection log against ground truth")
    evaluate.add_argument("--detections", required=True, help="detection log")
    evaluate.add_argument("--truth", required=True, help="ground truth file")
    evaluate.add_argument("--report", help="JSON report to write")
    evaluate.set_defaults(handler=_evaluate)

    bench = commands.add_parser("bench", help="time the pipeline on synthetic frames")
    bench.add_argument("--points", type=int, default=6000, help="points per frame")
    bench.add_argument("--frames", type=int, default=50, help="timed frames")
    bench.add_argument("--seed", type=int, default=0, help="generator seed")
    bench.add_argument("--config", help="config file")
    bench.add_argument("--profile", help="filter profile name")
    bench.add_argument("--json", action="store_true", help="print JSON instead of tables")
    bench.add_argument("--no-scaling", action="store_true", help="skip the clustering scaling table")
    bench.set_defaults(handler=_bench)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run the command line.

    Returns:
        int: Exit code, 0 on success and 1 on any input, configuration or alignment failure.
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format=LOG_FORMAT, stream=sys.stderr)
    try:
        return int(args.handler(args))
    except (RadarPerceptError, OSError, ValueError) as exc:
        logger.error("%s failed: %s", args.command, exc)
    return 1


if __name__ == "__main__":
    sys.exit(main())
