#!/usr/bin/env python3
"""Generates the bundled road maps under maps/."""

import json
import math
import pathlib

HALF = 1.75  # lane centre offset from the road axis
ARM = 150.0  # length of each intersection arm
STOP = 12.0  # distance from the intersection centre where approach lanes end


def straight(x0, y0, x1, y1):
    return [[x0, y0], [x1, y1]]


def bezier(p0, h0, p3, h3, n=16):
    """Cubic Bezier leaving p0 along heading h0 and arriving at p3 along h3."""
    k = 0.55 * math.dist(p0, p3)
    p1 = (p0[0] + k * math.cos(h0), p0[1] + k * math.sin(h0))
    p2 = (p3[0] - k * math.cos(h3), p3[1] - k * math.sin(h3))
    pts = []
    for i in range(n + 1):
        t = i / n
        a, b, c, d = (1 - t) ** 3, 3 * (1 - t) ** 2 * t, 3 * (1 - t) * t**2, t**3
        pts.append([round(a * p0[0] + b * p1[0] + c * p2[0] + d * p3[0], 6),
                    round(a * p0[1] + b * p1[1] + c * p2[1] + d * p3[1], 6)])
    return pts


def lane(lid, centerline, successors=(), left=None, right=None):
    doc = {"id": lid, "centerline": centerline, "width": 3.5, "shoulder": 3.0, "successors": list(successors)}
    if left:
        doc["left"] = left
    if right:
        doc["right"] = right
    return doc


def oneway():
    return {
        "name": "oneway",
        "lanes": [
            lane("L0", straight(0, -HALF, 300, -HALF), left="L1"),
            lane("L1", straight(0, HALF, 300, HALF), right="L0"),
        ],
        "regions": [{"id": "crosswalk", "circle": {"center": [150, 0], "radius": 6}}],
    }


def twoway():
    return {
        "name": "twoway",
        "lanes": [
            lane("L0", straight(0, -HALF, 300, -HALF), left="L1"),
            lane("L1", straight(300, HALF, 0, HALF), left="L0"),
        ],
        "regions": [{"id": "bus_stop", "lane_segment": {"lane": "L0", "from": 140, "to": 170}}],
    }


def fourway():
    # Approach ends and exit starts, with their travel headings.
    north, south, east, west = math.pi / 2, -math.pi / 2, 0.0, math.pi
    approach = {
        "S": ((HALF, -STOP), north),
        "N": ((-HALF, STOP), south),
        "E": ((STOP, HALF), west),
        "W": ((-STOP, -HALF), east),
    }
    exits = {
        "N": ((HALF, STOP), north),
        "S": ((-HALF, -STOP), south),
        "E": ((STOP, -HALF), east),
        "W": ((-STOP, HALF), west),
    }
    far_in = {"S": (HALF, -ARM), "N": (-HALF, ARM), "E": (ARM, HALF), "W": (-ARM, -HALF)}
    far_out = {"N": (HALF, ARM), "S": (-HALF, -ARM), "E": (ARM, -HALF), "W": (-ARM, HALF)}

    lanes = []
    connectors = []
    opposite = {"S": "N", "N": "S", "E": "W", "W": "E"}
    for d in "SNEW":
        # Straight on first so that the default route crosses the junction.
        succ = [f"{d}_{opposite[d]}"] + [f"{d}_{o}" for o in "SNEW" if o not in (d, opposite[d])]
        lanes.append(lane(f"{d}_in", [list(far_in[d]), list(approach[d][0])], succ, left=f"{d}_out"))
        lanes.append(lane(f"{d}_out", [list(exits[d][0]), list(far_out[d])], left=f"{d}_in"))
    for d in "SNEW":
        p0, h0 = approach[d]
        for o in "SNEW":
            if o == d:
                continue
            p3, h3 = exits[o]
            if abs(math.remainder(h0 - h3, 2 * math.pi)) < 1e-9:
                pts = [list(p0), list(p3)]
            else:
                pts = bezier(p0, h0, p3, h3)
            lid = f"{d}_{o}"
            connectors.append(lid)
            lanes.append(lane(lid, pts, [f"{o}_out"]))
    arm_len = ARM - STOP
    return {
        "name": "fourway",
        "lanes": lanes,
        "intersections": [{
            "id": "I0",
            "lanes": connectors,
            "stop_lines": [{"lane": "S_in", "s": arm_len}, {"lane": "N_in", "s": arm_len}],
            "center": [0, 0],
            "radius": 14,
        }],
        "regions": [
            {"id": "crosswalk_E", "circle": {"center": [9, 0], "radius": 4}},
            {"id": "approach_S", "lane_segment": {"lane": "S_in", "from": arm_len - 40, "to": arm_len}},
        ],
    }


def main():
    out = pathlib.Path(__file__).resolve().parent.parent / "maps"
    out.mkdir(exist_ok=True)
    for name, doc in (("oneway", oneway()), ("twoway", twoway()), ("fourway", fourway())):
        (out / f"{name}.map").write_text(json.dumps(doc, indent=1) + "\n")


if __name__ == "__main__":
    main()
