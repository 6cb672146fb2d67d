"""Command-line entry points.

    roadpulse run --graph fixtures/graph.json --cameras fixtures/cameras.json \
        --query "Select Traffic_Congestion(Object) from Brixton Road ..." \
        --input fixtures/streams [--no-pacing] [--serve 127.0.0.1:8080] \
        [--snapshot-out out/snapshots.jsonl]

    roadpulse export-overlay --snapshot out/snapshots.jsonl --out overlay.geojson

``--input`` accepts a directory of per-camera JSONL files (<camera_id>.jsonl)
or ``simulate:<scenario.json>`` to drive the synthetic generator. With
pacing (the default) frames are replayed on their original timeline through
the threaded runtime; ``--no-pacing`` runs the deterministic batch path.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from roadpulse.engine import Engine, EngineConfig, EngineRuntime, latency_quantiles
from roadpulse.graph import load_graph
from roadpulse.ingest import load_registry, replay
from roadpulse.output import SnapshotHub, serve, to_geojson
from roadpulse.simulate import simulate
from roadpulse.veql import parse_query


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="roadpulse")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a query over camera streams")
    run.add_argument("--graph", required=True)
    run.add_argument("--cameras", required=True)
    query = run.add_mutually_exclusive_group(required=True)
    query.add_argument("--query")
    query.add_argument("--query-file")
    run.add_argument("--input", required=True,
                     help="directory of <camera_id>.jsonl files, or simulate:<scenario.json>")
    run.add_argument("--no-pacing", action="store_true",
                     help="deterministic batch replay instead of timed playback")
    run.add_argument("--serve", metavar="HOST:PORT",
                     help="serve snapshots over HTTP and stay up")
    run.add_argument("--config", help="engine config JSON")
    run.add_argument("--snapshot-out", help="append snapshot+overlay JSONL here")
    run.add_argument("--seed", type=int, default=0, help="simulator seed")

    exp = sub.add_parser("export-overlay", help="extract GeoJSON from a snapshot log")
    exp.add_argument("--snapshot", required=True)
    exp.add_argument("--out", required=True)
    return parser


def _load_sources(args, registry):
    if args.input.startswith("simulate:"):
        frames_by_camera, _ = simulate(args.input.split(":", 1)[1], seed=args.seed)
        return frames_by_camera
    directory = Path(args.input)
    if not directory.is_dir():
        raise SystemExit(f"--input {args.input!r} is not a directory")
    sources = {}
    for cam in registry:
        path = directory / f"{cam.id}.jsonl"
        if path.exists():
            sources[cam.id] = path
    if not sources:
        raise SystemExit(f"no <camera_id>.jsonl files found in {directory}")
    return sources


def _cmd_run(args) -> int:
    graph = load_graph(args.graph)
    registry = load_registry(args.cameras)
    config = EngineConfig.from_file(args.config) if args.config else EngineConfig()
    text = args.query if args.query else Path(args.query_file).read_text().strip()
    ast = parse_query(text)
    engine = Engine(graph, registry, config)
    subscription = engine.register(ast)
    sources = _load_sources(args, registry)
    hub = SnapshotHub(graph)
    server = None
    if args.serve:
        server = serve(hub, args.serve)
        host, port = server.server_address[:2]
        print(f"serving snapshots on http://{host}:{port}", flush=True)

    if args.no_pacing:
        result = engine.run_once(subscription, sources)
    else:
        runtime = EngineRuntime(engine, subscription)
        paced = {}
        for cam in subscription.cameras:
            src = sources.get(cam.id)
            if src is None:
                continue
            frames, _ = _materialize(src, engine)
            paced[cam.id] = replay(frames, pacing=True)
        runtime.start(paced)
        while runtime.alive():
            runtime.join(timeout=0.5)
            if server is not None and runtime.snapshot() is not None:
                hub.publish(runtime.result())
        result = runtime.result()
    hub.publish(result)

    summary = {
        "subscription": subscription.id,
        "cameras": len(subscription.cameras),
        "segments": len(subscription.segments),
        "faulty_cameras": sorted(result.faulty_cameras),
        "dropped_windows": result.dropped_windows,
        "latency": latency_quantiles(result.latencies),
    }
    print(json.dumps(summary, indent=2))

    if args.snapshot_out:
        overlay = to_geojson(sorted(result.segment_estimates.values(),
                                    key=lambda e: e.segment_id), graph)
        with open(args.snapshot_out, "a") as fh:
            fh.write(json.dumps({"snapshot": result.snapshot, "overlay": overlay},
                                sort_keys=True) + "\n")

    if server is not None:
        print("replay finished; still serving (Ctrl-C to stop)", flush=True)
        try:
            while True:
                time.sleep(1)
        except KeyboardInterrupt:
            server.shutdown()
    return 0


def _materialize(source, engine: Engine):
    from roadpulse.engine import _coerce_frames

    return _coerce_frames(source, engine.registry, engine.config.quarantine_threshold)


def _cmd_export_overlay(args) -> int:
    path = Path(args.snapshot)
    last = None
    for line in path.read_text().splitlines():
        line = line.strip()
        if line:
            last = line
    if last is None:
        raise SystemExit(f"{path} holds no snapshots")
    doc = json.loads(last)
    if doc.get("type") == "FeatureCollection":
        overlay = doc
    elif "overlay" in doc:
        overlay = doc["overlay"]
    else:
        raise SystemExit("snapshot document carries no overlay geometry")
    Path(args.out).write_text(json.dumps(overlay, indent=2))
    print(f"wrote {len(overlay.get('features', []))} features to {args.out}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "export-overlay":
        return _cmd_export_overlay(args)
    return 2


if __name__ == "__main__":
    sys.exit(main())
