#!/usr/bin/env python3
"""Regenerates the BVH corpus and the demo show bundle.

Every value comes from closed-form curves or a seeded RNG, so running the
script twice produces byte-identical files.

    python3 data/gen_fixtures.py [--out data]
"""

import argparse
import json
import math
import random
from pathlib import Path


def fmt(v):
    s = f"{v:.6f}"
    return "0.000000" if s == "-0.000000" else s


class Node:
    def __init__(self, name, offset, channels, children=(), end=None):
        self.name = name
        self.offset = offset
        self.channels = channels
        self.children = list(children)
        self.end = end

    def walk(self):
        yield self
        for c in self.children:
            yield from c.walk()


def hierarchy_text(root, indent="  "):
    out = ["HIERARCHY"]

    def emit(node, depth, is_root):
        pad = indent * depth
        out.append(f"{pad}{'ROOT' if is_root else 'JOINT'} {node.name}")
        out.append(f"{pad}{{")
        out.append(f"{pad}{indent}OFFSET {' '.join(fmt(v) for v in node.offset)}")
        out.append(f"{pad}{indent}CHANNELS {len(node.channels)} {' '.join(node.channels)}")
        for c in node.children:
            emit(c, depth + 1, False)
        if node.end is not None:
            out.append(f"{pad}{indent}End Site")
            out.append(f"{pad}{indent}{{")
            out.append(f"{pad}{indent}{indent}OFFSET {' '.join(fmt(v) for v in node.end)}")
            out.append(f"{pad}{indent}}}")
        out.append(f"{pad}}}")

    emit(root, 0, True)
    return "\n".join(out) + "\n"


def bvh_text(root, frame_time, rows, indent="  "):
    text = hierarchy_text(root, indent)
    text += f"MOTION\nFrames: {len(rows)}\nFrame Time: {fmt(frame_time)}\n"
    for r in rows:
        text += " ".join(fmt(v) for v in r) + "\n"
    return text


def rot_channels(order):
    return [f"{a}rotation" for a in order]


def pos_channels():
    return ["Xposition", "Yposition", "Zposition"]


# Perception Neuron style: 59 joints, YXZ rotations, centimeters.
def neuron_skeleton():
    R = rot_channels("YXZ")

    def finger(side, name, first_offset, count=3, inner=False):
        s = -1 if side == "Right" else 1
        fx, fy, fz = first_offset
        if inner:
            nodes_in = Node(f"{side}InHand{name}", (s * fx, fy, fz), R)
            chain = finger_chain(side, f"Hand{name}", s, 3)
            nodes_in.children = [chain]
            return nodes_in
        chain = finger_chain(side, f"Hand{name}", s, count, first=(s * fx, fy, fz))
        return chain

    def finger_chain(side, base, s, count, first=None):
        nodes = []
        for i in range(1, count + 1):
            off = first if (i == 1 and first is not None) else (s * 2.6, 0.0, 0.0)
            nodes.append(Node(f"{side}{base}{i}", off, R))
        nodes[-1].end = (s * 2.0, 0.0, 0.0)
        for a, b in zip(nodes, nodes[1:]):
            a.children = [b]
        return nodes[0]

    def arm(side):
        s = -1 if side == "Right" else 1
        hand = Node(f"{side}Hand", (s * 26.0, 0.0, 0.0), R)
        hand.children = [
            finger(side, "Thumb", (2.5, -0.5, 2.0)),
            finger(side, "Index", (3.5, 0.2, 1.2), inner=True),
            finger(side, "Middle", (3.5, 0.3, 0.0), inner=True),
            finger(side, "Ring", (3.3, 0.2, -1.0), inner=True),
            finger(side, "Pinky", (3.0, 0.0, -2.0), inner=True),
        ]
        fore = Node(f"{side}ForeArm", (s * 28.0, 0.0, 0.0), R, [hand])
        upper = Node(f"{side}Arm", (s * 12.0, 0.0, 0.0), R, [fore])
        return Node(f"{side}Shoulder", (s * 4.0, 9.0, 0.0), R, [upper])

    def leg(side):
        s = -1 if side == "Right" else 1
        foot = Node(f"{side}Foot", (0.0, -42.0, 0.0), R, end=(0.0, -4.0, 14.0))
        shin = Node(f"{side}Leg", (0.0, -43.0, 0.0), R, [foot])
        return Node(f"{side}UpLeg", (s * 9.5, 0.0, 0.0), R, [shin])

    head = Node("Head", (0.0, 9.0, 0.0), R, end=(0.0, 18.0, 0.0))
    neck = Node("Neck", (0.0, 12.0, 0.0), R, [head])
    spine3 = Node("Spine3", (0.0, 11.0, 0.0), R, [neck, arm("Right"), arm("Left")])
    spine2 = Node("Spine2", (0.0, 10.0, 0.0), R, [spine3])
    spine1 = Node("Spine1", (0.0, 10.0, 0.0), R, [spine2])
    spine = Node("Spine", (0.0, 8.0, 0.0), R, [spine1])
    return Node("Hips", (0.0, 96.0, 0.0), pos_channels() + R, [leg("Right"), leg("Left"), spine])


# CMU conversion style: 31 joints, ZYX rotations.
def cmu_skeleton():
    R = rot_channels("ZYX")

    def leg(side, s):
        toe = Node(f"{side}ToeBase", (0.0, -1.0, 5.0), R, end=(0.0, 0.0, 2.5))
        foot = Node(f"{side}Foot", (0.0, -16.5, 0.0), R, [toe])
        shin = Node(f"{side}Leg", (0.0, -17.0, 0.0), R, [foot])
        up = Node(f"{side}UpLeg", (s * 1.4, -3.8, 0.0), R, [shin])
        return Node(f"{'L' if s > 0 else 'R'}HipJoint", (0.0, 0.0, 0.0), R, [up])

    def arm(side, s):
        index = Node(f"{side}HandIndex1", (s * 0.7, 0.0, 0.0), R, end=(s * 0.6, 0.0, 0.0))
        finger = Node(f"{side}FingerBase", (s * 1.0, 0.0, 0.0), R, [index])
        thumb = Node(f"{'L' if s > 0 else 'R'}Thumb", (s * 0.5, 0.0, 0.7), R, end=(s * 0.8, 0.0, 0.8))
        hand = Node(f"{side}Hand", (s * 8.5, 0.0, 0.0), R, [finger, thumb])
        fore = Node(f"{side}ForeArm", (s * 10.5, 0.0, 0.0), R, [hand])
        upper = Node(f"{side}Arm", (s * 5.8, 0.0, 0.0), R, [fore])
        return Node(f"{side}Shoulder", (0.0, 0.0, 0.0), R, [upper])

    head = Node("Head", (0.0, 1.5, 0.0), R, end=(0.0, 3.0, 0.0))
    neck1 = Node("Neck1", (0.0, 1.5, 0.0), R, [head])
    neck = Node("Neck", (0.0, 0.0, 0.0), R, [neck1])
    spine1 = Node("Spine1", (0.0, 2.8, 0.0), R, [neck, arm("Left", 1), arm("Right", -1)])
    spine = Node("Spine", (0.0, 2.2, 0.0), R, [spine1])
    lower = Node("LowerBack", (0.0, 0.0, 0.0), R, [spine])
    return Node("Hips", (0.0, 0.0, 0.0), pos_channels() + R, [leg("Left", 1), leg("Right", -1), lower])


def tab_skeleton():
    R = rot_channels("XYZ")
    hand = Node("hand", (0.0, -20.0, 0.0), R, end=(0.0, -8.0, 0.0))
    elbow = Node("elbow", (0.0, -25.0, 0.0), R, [hand])
    shoulder = Node("shoulder", (15.0, 20.0, 0.0), R, [elbow])
    head = Node("head", (0.0, 25.0, 0.0), R, end=(0.0, 12.0, 0.0))
    chest = Node("chest", (0.0, 20.0, 0.0), R, [head, shoulder])
    knee = Node("knee", (0.0, -40.0, 0.0), R, end=(0.0, -40.0, 5.0))
    thigh = Node("thigh", (8.0, -5.0, 0.0), R, [knee])
    return Node("pelvis", (0.0, 90.0, 0.0), pos_channels() + R, [chest, thigh])


def smooth_rows(root, frames, frame_time, rng, amplitude, root_amplitude):
    joints = list(root.walk())
    params = []
    for j in joints:
        for ch in j.channels:
            a = (root_amplitude if ch.endswith("position") else amplitude) * rng.uniform(0.2, 1.0)
            f = rng.uniform(0.2, 1.5)
            ph = rng.uniform(0.0, 2.0 * math.pi)
            base = rng.uniform(-10.0, 10.0) if ch.endswith("rotation") else 0.0
            params.append((a, f, ph, base))
    rows = []
    for i in range(frames):
        t = i * frame_time
        rows.append([base + a * math.sin(2.0 * math.pi * f * t + ph) for a, f, ph, base in params])
    return rows


# Demo rig: 17 joints in meters, arms down, ZXY rotations.
RIG_R = rot_channels("ZXY")


def rig_skeleton():
    R = RIG_R

    def arm(side, s):
        hand = Node(f"{side}Hand", (0.0, -0.25, 0.0), R, end=(0.0, -0.10, 0.0))
        fore = Node(f"{side}ForeArm", (0.0, -0.28, 0.0), R, [hand])
        return Node(f"{side}UpperArm", (s * 0.20, 0.15, 0.0), R, [fore])

    def leg(side, s):
        foot = Node(f"{side}Foot", (0.0, -0.42, 0.0), R, end=(s * 0.02, -0.05, 0.10))
        shin = Node(f"{side}Leg", (0.0, -0.42, 0.0), R, [foot])
        return Node(f"{side}UpLeg", (s * 0.10, -0.05, 0.0), R, [shin])

    head = Node("Head", (0.0, 0.10, 0.0), R, end=(0.0, 0.20, 0.0))
    neck = Node("Neck", (0.0, 0.20, 0.0), R, [head])
    chest = Node("Chest", (0.0, 0.20, 0.0), R, [neck, arm("Left", 1), arm("Right", -1)])
    spine = Node("Spine", (0.0, 0.10, 0.0), R, [chest])
    return Node("Hips", (0.0, 0.95, 0.0), pos_channels() + R, [spine, leg("Left", 1), leg("Right", -1)])


RIG_JOINTS = [n.name for n in rig_skeleton().walk()]


def rig_row(pose):
    """pose: {"root": (x, y, z), joint: (z, x, y) degrees}."""
    row = list(pose.get("root", (0.0, 0.0, 0.0)))
    for name in RIG_JOINTS:
        row.extend(pose.get(name, (0.0, 0.0, 0.0)))
    return row


def add(*poses, weights=None):
    weights = weights or [1.0] * len(poses)
    out = {}
    for p, w in zip(poses, weights):
        for k, v in p.items():
            cur = out.get(k, (0.0, 0.0, 0.0))
            out[k] = tuple(c + w * x for c, x in zip(cur, v))
    return out


STAND = {
    "LeftUpperArm": (8.0, 0.0, 0.0),
    "RightUpperArm": (-8.0, 0.0, 0.0),
    "LeftForeArm": (6.0, 0.0, 0.0),
    "RightForeArm": (-6.0, 0.0, 0.0),
}

KNEEL = {
    "root": (0.0, -0.22, 0.0),
    "Spine": (0.0, 8.0, 0.0),
    "LeftUpperArm": (15.0, -10.0, 0.0),
    "RightUpperArm": (-15.0, -10.0, 0.0),
    "LeftForeArm": (10.0, -20.0, 0.0),
    "RightForeArm": (-10.0, -20.0, 0.0),
    "LeftUpLeg": (0.0, -80.0, 0.0),
    "LeftLeg": (0.0, 85.0, 0.0),
    "RightUpLeg": (0.0, -70.0, 0.0),
    "RightLeg": (0.0, 75.0, 0.0),
}

FRAME_TIME = 1.0 / 60.0


def frames(duration):
    return int(round(duration / FRAME_TIME)) + 1


def idle_clip(rest, duration, sway):
    rows = []
    n = frames(duration)
    for i in range(n):
        p = 2.0 * math.pi * i / (n - 1)
        breath = {
            "root": (0.0, 0.004 * sway * math.sin(p), 0.0),
            "Spine": (1.5 * sway * math.sin(p), 0.0, 0.0),
            "Chest": (-1.0 * sway * math.sin(p), 0.8 * math.sin(p), 0.0),
            "Head": (2.0 * math.sin(2 * p), 0.0, 3.0 * math.sin(p)),
            "LeftUpperArm": (3.0 * math.sin(p), 0.0, 0.0),
            "RightUpperArm": (-3.0 * math.sin(p), 0.0, 0.0),
        }
        rows.append(rig_row(add(rest, breath)))
    return rows


def envelope(u):
    return math.sin(math.pi * u) ** 2


def smoothstep(u):
    return u * u * (3.0 - 2.0 * u)


def action_clip(duration, fn):
    n = frames(duration)
    return [rig_row(fn(i / (n - 1))) for i in range(n)]


def wave(u):
    e = envelope(u)
    return add(STAND, {
        "RightUpperArm": (-150.0 * e, 0.0, 0.0),
        "RightForeArm": (-30.0 * e * math.sin(6 * math.pi * u), 0.0, 0.0),
        "RightHand": (-20.0 * e * math.sin(6 * math.pi * u), 0.0, 0.0),
        "Head": (-8.0 * e, 0.0, 10.0 * e),
    })


def bow(u):
    e = envelope(u)
    return add(STAND, {
        "Spine": (0.0, 25.0 * e, 0.0),
        "Chest": (0.0, 15.0 * e, 0.0),
        "Neck": (0.0, 10.0 * e, 0.0),
        "LeftUpperArm": (0.0, -20.0 * e, 0.0),
        "RightUpperArm": (0.0, -20.0 * e, 0.0),
    })


def kneel_down(u):
    s = smoothstep(u)
    return add(STAND, KNEEL, weights=[1.0 - s, s])


def stand_up(u):
    return kneel_down(1.0 - u)


def reach(u):
    e = envelope(u)
    return add(KNEEL, {
        "LeftUpperArm": (120.0 * e, -10.0 * e, 0.0),
        "LeftForeArm": (20.0 * e, 0.0, 0.0),
        "Chest": (-10.0 * e, 0.0, 0.0),
        "Head": (12.0 * e, 0.0, 0.0),
    })


def leap(u):
    e = envelope(u)
    return add(STAND, {
        "root": (0.6 * smoothstep(u) * (1 - smoothstep(u)) * 4, 0.12 * e, 0.0),
        "LeftUpLeg": (0.0, -30.0 * e, 0.0),
        "RightUpLeg": (0.0, 20.0 * e, 0.0),
        "LeftUpperArm": (60.0 * e, 0.0, 0.0),
        "RightUpperArm": (-60.0 * e, 0.0, 0.0),
    })


def silhouette_mesh():
    """Paper-doll outline in the rig plane (z = 0) with an eye hole."""
    # (x, y, [(joint, weight), ...]) counter-clockwise starting at the crown.
    H = [("Head", 1.0)]
    outline = [
        (0.00, 1.76, H), (-0.08, 1.72, H), (-0.10, 1.62, H), (-0.07, 1.55, H),
        (-0.05, 1.50, [("Neck", 1.0)]),
        (-0.16, 1.45, [("Chest", 0.6), ("RightUpperArm", 0.4)]),
        (-0.26, 1.38, [("RightUpperArm", 1.0)]),
        (-0.27, 1.12, [("RightUpperArm", 0.5), ("RightForeArm", 0.5)]),
        (-0.26, 0.87, [("RightForeArm", 0.5), ("RightHand", 0.5)]),
        (-0.25, 0.74, [("RightHand", 1.0)]),
        (-0.19, 0.76, [("RightHand", 1.0)]),
        (-0.19, 0.88, [("RightForeArm", 0.5), ("RightHand", 0.5)]),
        (-0.17, 1.12, [("RightUpperArm", 0.5), ("RightForeArm", 0.5)]),
        (-0.15, 1.25, [("Chest", 0.5), ("RightUpperArm", 0.5)]),
        (-0.13, 1.05, [("Spine", 1.0)]),
        (-0.16, 0.90, [("Hips", 0.7), ("RightUpLeg", 0.3)]),
        (-0.16, 0.50, [("RightUpLeg", 0.5), ("RightLeg", 0.5)]),
        (-0.14, 0.08, [("RightLeg", 0.3), ("RightFoot", 0.7)]),
        (-0.20, 0.02, [("RightFoot", 1.0)]),
        (-0.04, 0.02, [("RightFoot", 1.0)]),
        (-0.05, 0.50, [("RightUpLeg", 0.5), ("RightLeg", 0.5)]),
        (0.00, 0.82, [("Hips", 1.0)]),
        (0.05, 0.50, [("LeftUpLeg", 0.5), ("LeftLeg", 0.5)]),
        (0.04, 0.02, [("LeftFoot", 1.0)]),
        (0.20, 0.02, [("LeftFoot", 1.0)]),
        (0.14, 0.08, [("LeftLeg", 0.3), ("LeftFoot", 0.7)]),
        (0.16, 0.50, [("LeftUpLeg", 0.5), ("LeftLeg", 0.5)]),
        (0.16, 0.90, [("Hips", 0.7), ("LeftUpLeg", 0.3)]),
        (0.13, 1.05, [("Spine", 1.0)]),
        (0.15, 1.25, [("Chest", 0.5), ("LeftUpperArm", 0.5)]),
        (0.17, 1.12, [("LeftUpperArm", 0.5), ("LeftForeArm", 0.5)]),
        (0.19, 0.88, [("LeftForeArm", 0.5), ("LeftHand", 0.5)]),
        (0.19, 0.76, [("LeftHand", 1.0)]),
        (0.25, 0.74, [("LeftHand", 1.0)]),
        (0.26, 0.87, [("LeftForeArm", 0.5), ("LeftHand", 0.5)]),
        (0.27, 1.12, [("LeftUpperArm", 0.5), ("LeftForeArm", 0.5)]),
        (0.26, 1.38, [("LeftUpperArm", 1.0)]),
        (0.16, 1.45, [("Chest", 0.6), ("LeftUpperArm", 0.4)]),
        (0.05, 1.50, [("Neck", 1.0)]),
        (0.07, 1.55, H), (0.10, 1.62, H), (0.08, 1.72, H),
    ]
    eye = [(0.03, 1.66, H), (0.06, 1.66, H), (0.045, 1.64, H)]
    verts = outline + eye
    n = len(outline)
    return {
        "vertices": [[x, y] for x, y, _ in verts],
        "polygons": [list(range(n)), [n, n + 2, n + 1]],
        "weights": [[[j, w] for j, w in ws] for _, _, ws in verts],
    }


def write(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def write_json(path, obj):
    write(path, json.dumps(obj, indent=2) + "\n")


def rect(a, b, c, d):
    return [a, b, c, d]


def demo_show(out):
    demo = out / "demo"
    rig = rig_skeleton()
    write(demo / "rigs" / "oav.bvh", hierarchy_text(rig, "\t"))
    write_json(demo / "rigs" / "oav.mesh.json", silhouette_mesh())
    write(demo / "rigs" / "neuron_59.bvh", hierarchy_text(neuron_skeleton()))

    clips = {
        "idle_stand": ("idle", idle_clip(STAND, 2.0, 1.0), None, None),
        "idle_kneel": ("idle", idle_clip(KNEEL, 2.5, 0.6), None, None),
        "wave": ("action", action_clip(2.5, wave), "idle_stand", "idle_stand"),
        "bow": ("action", action_clip(2.0, bow), "idle_stand", "idle_stand"),
        "leap": ("action", action_clip(1.5, leap), "idle_stand", "idle_stand"),
        "kneel_down": ("action", action_clip(1.5, kneel_down), "idle_stand", "idle_kneel"),
        "stand_up": ("action", action_clip(1.5, stand_up), "idle_kneel", "idle_stand"),
        "reach": ("action", action_clip(2.0, reach), "idle_kneel", "idle_kneel"),
    }
    for cid, (kind, rows, start, end) in clips.items():
        write(demo / "clips" / f"{cid}.bvh", bvh_text(rig, FRAME_TIME, rows, "\t"))
        side = {"id": cid, "kind": kind, "skeleton": "oav", "bvh": f"{cid}.bvh", "unit_scale": 1.0}
        if kind == "action":
            side["start_idle"] = start
            side["end_idle"] = end
        write_json(demo / "clips" / f"{cid}.clip.json", side)

    live_map = [
        ("Hips", "Hips"), ("Spine", "Spine"), ("Spine2", "Chest"), ("Neck", "Neck"), ("Head", "Head"),
        ("LeftArm", "LeftUpperArm"), ("LeftForeArm", "LeftForeArm"), ("LeftHand", "LeftHand"),
        ("RightArm", "RightUpperArm"), ("RightForeArm", "RightForeArm"), ("RightHand", "RightHand"),
        ("LeftUpLeg", "LeftUpLeg"), ("LeftLeg", "LeftLeg"), ("LeftFoot", "LeftFoot"),
        ("RightUpLeg", "RightUpLeg"), ("RightLeg", "RightLeg"), ("RightFoot", "RightFoot"),
    ]
    entries = []
    for src, dst in live_map:
        e = {"source": src, "target": dst}
        if dst == "LeftUpperArm":
            e["offset_euler_deg"] = [-80.0, 0.0, 0.0]
            e["order"] = "ZXY"
        elif dst == "RightUpperArm":
            e["offset_euler_deg"] = [80.0, 0.0, 0.0]
            e["order"] = "ZXY"
        entries.append(e)

    names = ["scholar", "shadow", "princess", "courtier", "sentry"]
    xs = [-3.0, -1.5, 0.0, 1.5, 3.0]
    tints = [[0.85, 0.80, 0.70, 1.0], [0.20, 0.20, 0.25, 1.0], [0.90, 0.75, 0.80, 1.0],
             [0.70, 0.80, 0.90, 1.0], [0.75, 0.85, 0.70, 1.0]]
    oavs = []
    for n, x, tint in zip(names, xs, tints):
        o = {"id": n, "rig": "oav", "initial_idle": "idle_stand", "position": [x, 0.0, 0.0], "yaw_deg": 0.0,
             "visible": False, "casts_shadow": True, "tint": tint}
        if n == "shadow":
            o["live_retarget"] = "neuron_to_oav"
            o["fade_duration"] = 0.5
        oavs.append(o)

    def trig(o, a):
        return {"type": "trigger", "oav": o, "action": a}

    def eff(kind, **kw):
        return {"type": "effect", "effect": kind, **kw}

    cues = [
        {"label": "traditional shadows", "steps": [trig("scholar", "bow"), trig("princess", "bow")]},
        {"label": "the scholar steps out",
         "steps": [eff("set_visible", oav="scholar", value=True), {"type": "wait", "seconds": 0.5},
                   trig("scholar", "wave")]},
        {"label": "the shadow leaves",
         "steps": [eff("set_visible", oav="shadow", value=True), trig("shadow", "kneel_down"),
                   {"type": "wait", "seconds": 1.0}, eff("move_light", light="lamp", position=[0.8, 3.2, 4.0])]},
        {"label": "the princess",
         "steps": [eff("set_visible", oav="princess", value=True), trig("princess", "wave"),
                   trig("courtier", "bow")]},
        {"label": "the court",
         "steps": [eff("set_visible", oav="courtier", value=True), eff("set_visible", oav="sentry", value=True),
                   trig("shadow", "reach")]},
        {"label": "the shadow rises",
         "steps": [trig("shadow", "stand_up"), eff("set_casts_shadow", oav="sentry", value=False),
                   trig("sentry", "leap")]},
        {"label": "finale",
         "steps": [eff("set_translucency", screen="backdrop", value=0.6), trig("scholar", "bow"),
                   {"type": "suspend", "oav": "sentry"}, trig("shadow", "wave")]},
    ]

    show = {
        "name": "the-shadow",
        "tick_rate": 60,
        "chain_tolerance": 0.05,
        "default_fade_duration": 0.4,
        "spaces": {
            "A": "physical castelet with the backdrop screen",
            "B": "virtual stage rendered from the camera",
            "C": "mocap area of the shadow's performer",
            "E": "audience facing the backdrop",
        },
        "rigs": [{"id": "oav", "skeleton": "rigs/oav.bvh", "mesh": "rigs/oav.mesh.json"}],
        "clips_dir": "clips",
        "retargets": [{"id": "neuron_to_oav", "source_skeleton": "rigs/neuron_59.bvh", "target_rig": "oav",
                       "root_translation_scale": 1.0, "unit_scale": 0.01, "entries": entries}],
        "scene": {
            "stage": {"min": [-6.0, 0.0, -2.5], "max": [6.0, 4.0, 3.0]},
            "screens": [
                {"name": "backdrop", "normal": [0.0, 0.0, 1.0], "offset": -2.5, "translucency": 0.9,
                 "bounds": rect([-6.0, 0.0, -2.5], [6.0, 0.0, -2.5], [6.0, 4.0, -2.5], [-6.0, 4.0, -2.5])},
                {"name": "floor", "normal": [0.0, 1.0, 0.0], "offset": 0.0, "translucency": 0.5,
                 "bounds": rect([-6.0, 0.0, -2.5], [-6.0, 0.0, 3.0], [6.0, 0.0, 3.0], [6.0, 0.0, -2.5])},
            ],
            "lights": [
                {"name": "lamp", "position": [0.0, 3.2, 4.0], "enabled": True},
                {"name": "moon", "position": [-5.0, 2.5, 3.0], "enabled": True},
            ],
            "camera": {"kind": "perspective", "position": [0.0, 1.5, 6.5], "look": [0.0, -0.05, -1.0],
                       "up": [0.0, 1.0, 0.0], "fov_y_deg": 45.0, "viewport": [1280, 720]},
        },
        "oavs": oavs,
        "cues": cues,
    }
    write_json(demo / "show.json", show)

    script = {
        "duration": 14.0,
        "events": [
            {"at": 0.5, "message": {"type": "go"}},
            {"at": 3.0, "message": {"type": "go"}},
            {"at": 5.0, "message": {"type": "go"}},
            {"at": 6.5, "message": {"type": "go"}},
            {"at": 6.7, "message": {"type": "go"}},
            {"at": 9.5, "message": {"type": "go"}},
            {"at": 11.0, "message": {"type": "go"}},
            {"at": 12.0, "message": {"type": "go"}},
        ],
    }
    write_json(demo / "script.json", script)


def corpus(out):
    rng = random.Random(20201012)
    write(out / "corpus" / "neuron_59.bvh",
          bvh_text(neuron_skeleton(), 0.016667, smooth_rows(neuron_skeleton(), 120, 1 / 60, rng, 40.0, 5.0)))
    write(out / "corpus" / "cmu_style.bvh",
          bvh_text(cmu_skeleton(), 0.008333, smooth_rows(cmu_skeleton(), 100, 1 / 120, rng, 60.0, 8.0)))
    write(out / "corpus" / "tab_xyz.bvh",
          bvh_text(tab_skeleton(), 0.033333, smooth_rows(tab_skeleton(), 30, 1 / 30, rng, 90.0, 3.0), "\t"))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parent)
    args = ap.parse_args()
    corpus(args.out)
    demo_show(args.out)


if __name__ == "__main__":
    main()
