"""Command-line entry points.

    trackfeed extract --video clip.avi --camera-id BRX-C2 --out tracks.jsonl \
        [--conf 0.4] [--stride 1] [--detector bgdiff|yolo] [--model weights.pt]

    trackfeed calibrate --frame background.png --ref-meters 3.3 \
        --out patch.json [--camera-id BRX-C2] [--manual-gap-px 33]
"""

from __future__ import annotations

import argparse
import json
import sys

import cv2

from trackfeed.calibrate import (
    NoLaneCandidatesError,
    calibrate_camera,
    manual_calibration,
    write_patch,
)
from trackfeed.config import AdapterConfig
from trackfeed.extract import extract_tracks


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trackfeed")
    sub = parser.add_subparsers(dest="command", required=True)

    ext = sub.add_parser("extract", help="video clip -> track JSONL")
    ext.add_argument("--video", required=True, help="path or URL of the clip")
    ext.add_argument("--camera-id", required=True)
    ext.add_argument("--out", required=True)
    ext.add_argument("--conf", type=float, default=0.4)
    ext.add_argument("--stride", type=int, default=1)
    ext.add_argument("--detector", choices=("bgdiff", "yolo"), default="bgdiff")
    ext.add_argument("--model", help="local weights file for the yolo backend")
    ext.add_argument("--classes", default=None,
                     help="comma-separated whitelist (default: all five classes)")

    cal = sub.add_parser("calibrate", help="lane-gap calibration from a background frame")
    cal.add_argument("--frame", required=True, help="vehicle-free background image")
    cal.add_argument("--ref-meters", type=float, required=True,
                     help="real lane width in meters (DMRB bounds 2.5-4.0)")
    cal.add_argument("--out", required=True, help="registry patch JSON path")
    cal.add_argument("--camera-id")
    cal.add_argument("--manual-gap-px", type=float,
                     help="skip detection and use this measured pixel gap")
    return parser


def _cmd_extract(args) -> int:
    whitelist = (frozenset(c.strip().lower() for c in args.classes.split(","))
                 if args.classes else None)
    cfg_kwargs = dict(
        camera_id=args.camera_id, out_path=args.out, detector=args.detector,
        model=args.model, confidence_floor=args.conf, frame_stride=args.stride)
    if whitelist:
        cfg_kwargs["class_whitelist"] = whitelist
    stats = extract_tracks(args.video, AdapterConfig(**cfg_kwargs))
    print(json.dumps({
        "lines_written": stats.lines_written,
        "frames_read": stats.frames_read,
        "fps": stats.fps,
        "duration_s": round(stats.duration_s, 3),
        "tracks_seen": stats.tracks_seen,
        "median_pre_ms": round(stats.median_pre_ms, 3),
        "out": args.out,
    }, indent=2))
    return 0


def _cmd_calibrate(args) -> int:
    if args.manual_gap_px is not None:
        result = manual_calibration(args.manual_gap_px, args.ref_meters)
    else:
        image = cv2.imread(args.frame, cv2.IMREAD_GRAYSCALE)
        if image is None:
            print(f"cannot read image {args.frame!r}", file=sys.stderr)
            return 2
        try:
            result = calibrate_camera(image, args.ref_meters)
        except NoLaneCandidatesError as err:
            print(f"{err}\nrerun with --manual-gap-px <pixels>", file=sys.stderr)
            return 3
    write_patch(result, args.out, args.camera_id)
    print(json.dumps(result.registry_patch(args.camera_id), indent=2))
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "extract":
        return _cmd_extract(args)
    if args.command == "calibrate":
        return _cmd_calibrate(args)
    return 2


if __name__ == "__main__":
    sys.exit(main())
