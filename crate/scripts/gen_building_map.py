#!/usr/bin/env python3
"""Writes data/map/building.json: a synthetic single-floor office map.

43 pose nodes, 18 room nodes, 31 asset nodes. Every room is closed off by
exactly one door edge (two for the split rooms), all doors start closed.
"""
import json
import os
import sys

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "..", "data", "map", "building.json")
CAPTIONS = os.path.join(HERE, "..", "data", "map", "captions.json")

CYCLE = [15, 16, 17, 27, 28, 24, 23, 20, 19, 18, 13, 6, 7, 1, 3, 14]
BRANCHES = [
    (20, 21), (24, 25), (25, 26),
    (1, 2), (2, 4), (4, 5), (5, 8), (8, 9),
    (7, 10), (10, 11), (11, 12), (12, 38),
    (13, 22), (22, 29), (29, 30),
    (27, 31), (31, 32), (32, 33),
    (28, 34), (34, 35), (35, 36),
    (16, 37), (37, 39), (39, 40),
    (19, 41), (41, 42), (42, 43),
]
HALL_ASSETS = {
    "coffee_maker": 3, "fridge": 4, "microwave_table": 2, "drying_rack": 29,
    "kettle_table": 10, "sink_table": 11, "trash_bin": 37, "washing_machine": 22,
    "flower": 43, "meeting_table": 26,
}
DOORS = {
    "office_602": 21, "office_604": 4, "office_605": 5, "office_606": 8,
    "office_607": 9, "kitchen": 38, "office_601": 30, "office_608_left": 31,
    "room_608_right": 32, "office_609": 33, "office_610": 34, "office_611": 35,
    "office_612": 36, "office_613": 37, "office_614": 39, "storage_room_616": 40,
    "classroom_601_left": 24, "classroom_601_right": 26,
}
ROOM_EDGES = [
    ("office_602", "office_602_table", 1), ("office_604", "office_604_table", 1),
    ("office_605", "office_605_table", 1), ("office_606", "office_606_table", 1),
    ("office_607", "office_607_window", 1), ("office_601", "office_601_table", 1),
    ("office_608_left", "office_608_table", 1), ("room_608_right", "office_608_table_2", 1),
    ("office_608_left", "room_608_right", 2), ("office_609", "office_609_table", 1),
    ("office_610", "office_610_table", 1), ("office_611", "office_611_table", 1),
    ("office_612", "office_612_table", 1), ("office_613", "office_613_table", 1),
    ("office_614", "office_614_table", 1), ("storage_room_616", "storage_table", 1),
    ("storage_room_616", "storage_floor", 1), ("kitchen", "kitchen_table_1", 1),
    ("kitchen", "kitchen_table_2", 1), ("kitchen", "kitchen_table_3", 1),
    ("classroom_601_left", "room_601_couch", 2), ("room_601_couch", "classroom_601_right", 2),
    ("classroom_601_right", "room_601_blackboard", 1),
]


def pose(i):
    return f"pose_{i}"


def main():
    captions = json.load(open(CAPTIONS))
    nodes = [{"name": pose(i), "kind": "pose"} for i in range(1, 44)]
    nodes += [{"name": r, "kind": "room"} for r in DOORS]
    for a in sorted(captions):
        nodes.append({"name": a, "kind": "asset", "images": [f"images/{a}_0.jpg"], "caption": captions[a]})

    edges = []
    for a, b in zip(CYCLE, CYCLE[1:] + CYCLE[:1]):
        edges.append({"a": pose(a), "b": pose(b), "cost": 1})
    for a, b in BRANCHES:
        edges.append({"a": pose(a), "b": pose(b), "cost": 1})
    edges.append({"a": "meeting_table", "b": pose(26), "cost": 1})
    for asset, p in HALL_ASSETS.items():
        if asset != "meeting_table":
            edges.append({"a": pose(p), "b": asset, "cost": 1})
    for room, p in DOORS.items():
        edges.append({"a": room, "b": pose(p), "cost": 1, "door": "closed"})
    for a, b, c in ROOM_EDGES:
        edges.append({"a": a, "b": b, "cost": c})

    kinds = {}
    for n in nodes:
        kinds[n["kind"]] = kinds.get(n["kind"], 0) + 1
    assert kinds == {"pose": 43, "room": 18, "asset": 31}, kinds
    names = {n["name"] for n in nodes}
    for e in edges:
        assert e["a"] in names and e["b"] in names, e
    json.dump({"nodes": nodes, "edges": edges}, open(OUT, "w"), indent=1)
    print(f"{len(nodes)} nodes, {len(edges)} edges -> {OUT}", file=sys.stderr)


if __name__ == "__main__":
    main()
