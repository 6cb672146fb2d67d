"""Regenerate the checked-in fixtures (road graph, camera registry, demo
scenario, sample streams).

The corridors approximate the A23 Brixton Road and A3/Kennington corridor in
Lambeth: hand-traced control polylines resampled to ~130 m graph nodes, with
camera clusters at roughly 350 m spacing (12 on Brixton, 10 on Kennington).
Deterministic; run from the repo root:

    python scripts/build_fixtures.py
"""

from __future__ import annotations

import json
from pathlib import Path

from roadpulse.geo import GeoPoint, haversine_m

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"

NODE_STEP_M = 130.0
DEFAULT_MAX_SPEED_KMH = 77.2  # 48 mph

BRIXTON = [
    (51.4743, -0.11285),
    (51.4700, -0.11370),
    (51.4650, -0.11512),
    (51.4613, -0.11580),
    (51.4575, -0.11590),
    (51.4525, -0.11640),
    (51.4480, -0.11830),
    (51.4455, -0.12100),
    (51.4430, -0.12230),
]

KENNINGTON = [
    (51.4935, -0.10060),
    (51.4898, -0.10350),
    (51.4860, -0.10660),
    (51.4820, -0.11060),
    (51.4780, -0.11500),
    (51.4750, -0.11920),
    (51.4720, -0.12300),
]


def resample(control: list[tuple[float, float]], step_m: float) -> list[tuple[float, float]]:
    """Points every ~step_m along the control polyline (endpoints included)."""
    pts = [control[0]]
    carry = 0.0
    for (lat1, lon1), (lat2, lon2) in zip(control, control[1:]):
        seg = haversine_m(GeoPoint(lat1, lon1), GeoPoint(lat2, lon2))
        pos = carry
        while pos + step_m <= seg:
            pos += step_m
            t = pos / seg
            pts.append((lat1 + (lat2 - lat1) * t, lon1 + (lon2 - lon1) * t))
        carry = pos - seg  # negative remainder carried into the next segment
    if pts[-1] != control[-1]:
        pts.append(control[-1])
    return pts


def build_road(points, base_id: int):
    nodes = [
        {"id": base_id + i, "lat": round(lat, 6), "lon": round(lon, 6)}
        for i, (lat, lon) in enumerate(points)
    ]
    edges = []
    for a, b in zip(nodes, nodes[1:]):
        length = haversine_m(GeoPoint(a["lat"], a["lon"]), GeoPoint(b["lat"], b["lon"]))
        length = round(length, 2)
        edges.append({"from": a["id"], "to": b["id"], "length_m": length})
        edges.append({"from": b["id"], "to": a["id"], "length_m": length})
    return nodes, edges


def place_cameras(nodes, edges, road_name: str, prefix: str, count: int):
    """Evenly spaced (by arc length) cameras anchored to graph nodes, nudged
    ~20 m off the polyline to exercise route projection."""
    forward = edges[::2]
    cum = [0.0]
    for e in forward:
        cum.append(cum[-1] + e["length_m"])
    total = cum[-1]
    cameras = []
    for k in range(count):
        want = total * k / (count - 1)
        idx = min(range(len(cum)), key=lambda i: abs(cum[i] - want))
        node = nodes[idx]
        cameras.append({
            "id": f"{prefix}-C{k + 1}",
            "lat": round(node["lat"] + 0.00015, 6),
            "lon": round(node["lon"] + 0.00012, 6),
            "road_name": road_name,
            "image_width_px": 352,
            "image_height_px": 288,
            "meters_per_pixel": 0.1,
            "refresh_seconds": 10.0,
            "clip_seconds": 9.0,
            "nearest_node": node["id"],
            "route_offset_m": round(cum[idx], 2),  # scenario-builder convenience
        })
    return cameras


def demo_scenario(cameras: list[dict]) -> dict:
    brixton = [c for c in cameras if c["id"].startswith("BRX")][:3]
    vehicles = []
    for i, speed in enumerate((9.0, 11.5, 13.0, 8.0)):
        vehicles.append({
            "entry_ms": 200 + 400 * i,
            "speed_mps": speed,
            "direction": "out" if i % 2 == 0 else "in",
            "class": "car" if i % 3 else "bus",
            "camera_path": [c["id"] for c in (brixton if i % 2 == 0 else brixton[::-1])],
        })
    return {
        "epoch_ms": 1_700_000_000_000,
        "duration_ms": 15_000,
        "jitter_px": 0.0,
        "cameras": [
            {
                "camera_id": c["id"],
                "route_offset_m": c["route_offset_m"],
                "fps": 25,
                "image_width_px": c["image_width_px"],
                "image_height_px": c["image_height_px"],
                "meters_per_pixel": c["meters_per_pixel"],
                "confidence": 0.9,
            }
            for c in brixton
        ],
        "vehicles": vehicles,
    }


def main():
    FIXTURES.mkdir(exist_ok=True)
    b_nodes, b_edges = build_road(resample(BRIXTON, NODE_STEP_M), 1000)
    k_nodes, k_edges = build_road(resample(KENNINGTON, NODE_STEP_M), 2000)
    graph = {
        "default_max_speed_kmh": DEFAULT_MAX_SPEED_KMH,
        "nodes": b_nodes + k_nodes,
        "edges": b_edges + k_edges,
    }
    (FIXTURES / "graph.json").write_text(json.dumps(graph, indent=1))

    cameras = (
        place_cameras(b_nodes, b_edges, "Brixton Road", "BRX", 12)
        + place_cameras(k_nodes, k_edges, "Kennington Road", "KEN", 10)
    )
    (FIXTURES / "cameras.json").write_text(json.dumps(cameras, indent=1))

    scenario = demo_scenario(cameras)
    (FIXTURES / "scenario_demo.json").write_text(json.dumps(scenario, indent=1))

    from roadpulse.ingest import frame_to_json
    from roadpulse.simulate import simulate

    frames_by_camera, _ = simulate(scenario, seed=7)
    stream_dir = FIXTURES / "streams"
    stream_dir.mkdir(exist_ok=True)
    for cam_id, frames in frames_by_camera.items():
        path = stream_dir / f"{cam_id}.jsonl"
        path.write_text("".join(frame_to_json(f) + "\n" for f in frames))

    print(f"graph: {len(graph['nodes'])} nodes, {len(graph['edges'])} edges")
    print(f"cameras: {len(cameras)}")
    total_b = sum(e['length_m'] for e in b_edges[::2])
    total_k = sum(e['length_m'] for e in k_edges[::2])
    print(f"brixton length: {total_b:.1f} m, kennington: {total_k:.1f} m")


if __name__ == "__main__":
    main()
