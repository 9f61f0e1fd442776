#!/usr/bin/env python3
"""Regenerates the JSON files under fixtures/.

Output is deterministic; rerunning must leave git clean.
"""
import json
import math
import os
import sys

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "..", "fixtures")

SPEED = 13.9
SAT = 0.5

# Offsets 1..5 for the five coordinated intersections, cycle in seconds.
TABLE2 = {
    "AM": [("05:00", "05:45", 110, [75, 66, 14, 19, 48]),
           ("05:45", "06:30", 90, [40, 40, 5, 0, 5]),
           ("06:30", "09:00", 120, [60, 60, 65, 75, 5]),
           ("09:00", "11:00", 90, [40, 40, 5, 0, 5])],
    "NOON": [("10:00", "11:30", 90, [40, 40, 5, 0, 5]),
             ("11:30", "14:00", 105, [0, 0, 55, 55, 55])],
    "PM": [("14:00", "16:00", 105, [0, 0, 55, 55, 55]),
           ("16:00", "19:00", 120, [60, 60, 65, 75, 5]),
           ("19:00", "20:30", 105, [0, 0, 55, 55, 55]),
           ("20:30", "21:00", 90, [40, 40, 5, 0, 5])],
}

SYNCHRO = {
    "AM": [("05:00", "05:45", [75, 66, 14, 19, 48]),
           ("05:45", "06:30", [40, 40, 5, 0, 5]),
           ("06:30", "09:00", [60, 60, 65, 75, 5]),
           ("09:00", "11:00", [40, 40, 5, 0, 5])],
    "NOON": [("10:00", "12:00", [40, 40, 5, 0, 5]),
             ("12:00", "14:00", [0, 0, 55, 55, 55])],
    "PM": [("14:00", "16:00", [0, 0, 55, 55, 55]),
           ("16:00", "19:00", [60, 60, 65, 75, 5]),
           ("19:00", "20:30", [0, 0, 55, 55, 55]),
           ("20:30", "21:00", [40, 40, 5, 0, 5])],
}

DEEPRL = {
    "AM": [("05:00", "06:00", [31, 8, 60, 43, 6]),
           ("06:00", "08:00", [31, 55, 60, 43, 6]),
           ("08:00", "08:15", [70, 86, 82, 43, 107]),
           ("08:15", "08:30", [70, 86, 82, 59, 107]),
           ("08:30", "08:45", [37, 73, 82, 59, 107]),
           ("08:45", "09:15", [37, 86, 82, 59, 107]),
           ("09:15", "10:45", [37, 73, 82, 59, 107]),
           ("10:45", "11:00", [70, 86, 82, 59, 107])],
    "NOON": [("10:00", "11:45", [70, 86, 82, 59, 107]),
             ("11:45", "12:00", [37, 72, 60, 43, 107]),
             ("12:00", "12:45", [31, 55, 60, 43, 6]),
             ("12:45", "13:00", [31, 55, 60, 71, 6]),
             ("13:00", "13:15", [37, 73, 82, 59, 107]),
             ("13:15", "13:30", [71, 72, 60, 97, 48]),
             ("13:30", "13:45", [71, 72, 88, 97, 48]),
             ("13:45", "14:00", [31, 72, 60, 43, 6])],
    "PM": [("14:00", "14:30", [50, 55, 15, 43, 81]),
           ("14:30", "14:45", [71, 72, 60, 43, 48]),
           ("14:45", "15:00", [31, 55, 60, 43, 6]),
           ("15:00", "15:30", [71, 72, 88, 97, 48]),
           ("15:30", "15:45", [31, 55, 60, 43, 6]),
           ("15:45", "16:15", [71, 72, 60, 97, 48]),
           ("16:15", "16:30", [31, 72, 60, 43, 6]),
           ("16:30", "16:45", [31, 55, 60, 97, 6]),
           ("16:45", "17:15", [31, 55, 60, 43, 6]),
           ("17:15", "17:30", [71, 72, 60, 97, 6]),
           ("17:30", "19:45", [31, 55, 60, 43, 6]),
           ("19:45", "20:00", [71, 72, 88, 97, 46]),
           ("20:00", "20:45", [31, 55, 60, 43, 6]),
           ("20:45", "21:00", [19, 104, 60, 72, 107])],
}

PERIODS = {"AM": ("05:00", "10:00"), "NOON": ("10:00", "14:00"), "PM": ("14:00", "21:00")}

# Shape knots (clock, multiplier); linear in between, sampled at bin centres.
SHAPES = {
    "AM": [("05:00", 0.45), ("06:00", 0.75), ("06:45", 1.10), ("07:30", 1.30),
           ("08:15", 1.30), ("09:00", 1.05), ("10:00", 0.90)],
    "NOON": [("10:00", 0.86), ("12:00", 0.88), ("14:00", 0.85)],
    "PM": [("14:00", 0.70), ("16:00", 0.85), ("17:00", 1.05), ("18:00", 1.05),
           ("19:00", 0.80), ("21:00", 0.50)],
}
DIRECTION = {"AM": {"EB": 1.15, "WB": 0.85, "X": 1.0},
             "NOON": {"EB": 1.0, "WB": 1.0, "X": 1.0},
             "PM": {"EB": 0.9, "WB": 1.1, "X": 1.0}}


def clock(s):
    h, m = s.split(":")
    return int(h) * 3600 + int(m) * 60


def fmt(t):
    return "%02d:%02d" % (t // 3600, (t % 3600) // 60)


def schedule_json(rows, with_cycle):
    out = []
    for row in rows:
        if with_cycle:
            start, end, cycle, offsets = row
            out.append({"start": start, "end": end, "cycle": cycle, "offsets": offsets})
        else:
            start, end, offsets = row
            out.append({"start": start, "end": end, "offsets": offsets})
    return out


def shape_at(knots, t):
    pts = [(clock(c), v) for c, v in knots]
    for (t0, v0), (t1, v1) in zip(pts, pts[1:]):
        if t0 <= t <= t1:
            return v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    return pts[-1][1]


class Builder:
    def __init__(self):
        self.nodes = []
        self.pos = {}
        self.links = []
        self.link_by_pair = {}

    def node(self, nid, kind, role, x, y):
        self.nodes.append({"id": nid, "kind": kind, "role": role})
        self.pos[nid] = (x, y)

    def link(self, a, b, lanes, lid=None, length=None):
        ax, ay = self.pos[a]
        bx, by = self.pos[b]
        dx, dy = bx - ax, by - ay
        if length is None:
            length = round(math.hypot(dx, dy))
        if abs(dx) >= abs(dy):
            approach = "W" if dx > 0 else "E"
        else:
            approach = "S" if dy > 0 else "N"
        lid = lid or "%s-%s" % (a, b)
        l = {"id": lid, "from": a, "to": b, "length": length, "lanes": lanes,
             "free_flow_speed": SPEED, "saturation_flow": SAT}
        kind = next(n["kind"] for n in self.nodes if n["id"] == b)
        if kind == "signalized":
            l["approach"] = approach
        self.links.append(l)
        self.link_by_pair[(a, b)] = lid

    def both(self, a, b, lanes, ab=None, ba=None):
        self.link(a, b, lanes, ab)
        self.link(b, a, lanes, ba)

    def path(self, nodes):
        return [self.link_by_pair[(a, b)] for a, b in zip(nodes, nodes[1:])]

    def signals(self, splits, offsets=None):
        offsets = offsets or {}
        out = []
        for n in self.nodes:
            if n["kind"] != "signalized":
                continue
            incoming = [l for l in self.links if l["to"] == n["id"]]
            outgoing = [l for l in self.links if l["from"] == n["id"]]
            phases = []
            for name, group in (("EW", ("E", "W")), ("NS", ("N", "S"))):
                moves = [[i["id"], o["id"]] for i in incoming if i["approach"] in group
                         for o in outgoing if o["to"] != i["from"]]
                phases.append({"name": name, "movements": moves})
            ew = splits.get(n["id"], 0.5)
            phases[0]["split"] = ew
            phases[1]["split"] = round(1.0 - ew, 6)
            out.append({"node": n["id"], "offset": offsets.get(n["id"], 0),
                        "phases": [{"name": p["name"], "split": p["split"], "movements": p["movements"]}
                                   for p in phases]})
        return out

    def detectors(self, nodes, missing=(), per_lane_stopbar=()):
        out = []
        for l in self.links:
            if l["to"] not in nodes:
                continue
            slot = (l["to"], l["approach"])
            if (slot, "advance") not in missing:
                out.append({"link": l["id"], "kind": "advance", "position": 60.0,
                            "lanes": list(range(l["lanes"]))})
            if (slot, "stopbar") not in missing:
                if l["id"] in per_lane_stopbar:
                    for lane in range(l["lanes"]):
                        out.append({"link": l["id"], "kind": "stopbar", "position": 0.0, "lanes": [lane]})
                else:
                    out.append({"link": l["id"], "kind": "stopbar", "position": 0.0,
                                "lanes": list(range(l["lanes"]))})
        return out


def huntington():
    b = Builder()
    targets = [("T1", 0), ("T2", 320), ("T3", 730), ("T4", 1110), ("T5", 1630)]
    for nid, x in targets:
        b.node(nid, "signalized", "target", x, 0)
    observed = [("OW", -450, 0), ("OE", 2110, 0), ("N1", 0, 300), ("S1", 0, -280),
                ("N3", 730, 260), ("S3", 730, -330), ("N5", 1630, 350), ("S5", 1630, -240)]
    for nid, x, y in observed:
        b.node(nid, "signalized", "observed", x, y)
    bounds = {
        "OW": [("W", -800, 0), ("N", -450, 300), ("S", -450, -320)],
        "OE": [("E", 2490, 0), ("N", 2110, 330), ("S", 2110, -290)],
        "N1": [("N", 0, 650), ("E", 300, 300), ("W", -320, 300)],
        "S1": [("S", 0, -610), ("E", 290, -280), ("W", -310, -280)],
        "N3": [("N", 730, 560), ("E", 1010, 260), ("W", 460, 260)],
        "S3": [("S", 730, -640), ("E", 1000, -330), ("W", 450, -330)],
        "N5": [("N", 1630, 700), ("E", 1900, 350), ("W", 1340, 350)],
        "S5": [("S", 1630, -560), ("E", 1930, -240), ("W", 1360, -240)],
        "T2": [("N", 320, 280), ("S", 320, -300)],
        "T4": [("N", 1110, 310), ("S", 1110, -260)],
    }
    for owner, sides in bounds.items():
        for side, x, y in sides:
            b.node("B_%s_%s" % (owner, side), "boundary", "plain", x, y)

    ids = ["T1", "T2", "T3", "T4", "T5"]
    b.both("B_OW_W", "OW", 2, "EB-0", "WB-out")
    b.both("OW", "T1", 2, "EB-1", "WB-0")
    for k in range(4):
        b.both(ids[k], ids[k + 1], 2, "EB-%d" % (k + 2), "WB-%d" % (k + 1))
    b.both("T5", "OE", 2, "EB-6", "WB-5")
    b.both("OE", "B_OE_E", 2, "EB-out", "WB-6")
    for obs, t in (("N1", "T1"), ("S1", "T1"), ("N3", "T3"), ("S3", "T3"), ("N5", "T5"), ("S5", "T5")):
        b.both(obs, t, 1)
    for owner, sides in bounds.items():
        for side, _, _ in sides:
            if (owner, side) in (("OW", "W"), ("OE", "E")):
                continue
            b.both("B_%s_%s" % (owner, side), owner, 1)

    eb = ["B_OW_W", "OW", "T1", "T2", "T3", "T4", "T5", "OE", "B_OE_E"]
    wb = eb[::-1]
    routes = [
        ("EB_FULL", eb, 650, "EB"),
        ("WB_FULL", wb, 550, "WB"),
        ("NB_1", ["B_S1_S", "S1", "T1", "N1", "B_N1_N"], 140, "X"),
        ("SB_1", ["B_N1_N", "N1", "T1", "S1", "B_S1_S"], 140, "X"),
        ("NB_2", ["B_T2_S", "T2", "B_T2_N"], 110, "X"),
        ("SB_2", ["B_T2_N", "T2", "B_T2_S"], 110, "X"),
        ("NB_3", ["B_S3_S", "S3", "T3", "N3", "B_N3_N"], 130, "X"),
        ("SB_3", ["B_N3_N", "N3", "T3", "S3", "B_S3_S"], 130, "X"),
        ("NB_4", ["B_T4_S", "T4", "B_T4_N"], 110, "X"),
        ("SB_4", ["B_T4_N", "T4", "B_T4_S"], 110, "X"),
        ("NB_5", ["B_S5_S", "S5", "T5", "N5", "B_N5_N"], 130, "X"),
        ("SB_5", ["B_N5_N", "N5", "T5", "S5", "B_S5_S"], 130, "X"),
        ("SB_1_E", ["B_N1_N", "N1"] + eb[2:], 120, "EB"),
        ("NB_5_W", ["B_S5_S", "S5"] + wb[2:], 120, "WB"),
        ("SB_2_E", ["B_T2_N", "T2", "T3", "T4", "T5", "OE", "B_OE_E"], 80, "EB"),
        ("NB_4_W", ["B_T4_S", "T4", "T3", "T2", "T1", "OW", "B_OW_W"], 80, "WB"),
        ("EB_3_N", eb[:5] + ["N3", "B_N3_N"], 90, "EB"),
        ("WB_2_S", wb[:6] + ["B_T2_S"], 80, "WB"),
        ("EB_4_S", eb[:6] + ["B_T4_S"], 80, "EB"),
        ("WB_1_N", wb[:7] + ["N1", "B_N1_N"], 80, "WB"),
        ("N1_EW", ["B_N1_W", "N1", "B_N1_E"], 100, "X"),
        ("S1_WE", ["B_S1_E", "S1", "B_S1_W"], 100, "X"),
        ("N3_EW", ["B_N3_W", "N3", "B_N3_E"], 100, "X"),
        ("S3_WE", ["B_S3_E", "S3", "B_S3_W"], 100, "X"),
        ("N5_EW", ["B_N5_W", "N5", "B_N5_E"], 100, "X"),
        ("S5_WE", ["B_S5_E", "S5", "B_S5_W"], 100, "X"),
        ("OW_NS", ["B_OW_N", "OW", "B_OW_S"], 100, "X"),
        ("OE_SN", ["B_OE_S", "OE", "B_OE_N"], 100, "X"),
        ("OW_N_E", ["B_OW_N"] + eb[1:], 150, "EB"),
        ("OE_S_W", ["B_OE_S"] + wb[1:], 120, "WB"),
    ]
    route_json = [{"id": rid, "links": b.path(nodes)} for rid, nodes, _, _ in routes]

    profiles = {}
    for label, (start, end) in PERIODS.items():
        entries = []
        for rid, _, base, direction in routes:
            t = clock(start)
            while t < clock(end):
                mult = shape_at(SHAPES[label], t + 450) * DIRECTION[label][direction]
                entries.append({"route": rid, "start": fmt(t), "end": fmt(t + 900),
                                "rate": round(base * mult, 1)})
                t += 900
        profiles[label] = {"label": label, "start": start, "end": end,
                           "baseline_schedule": "table2_" + label.lower(), "entries": entries}

    splits = {n: 0.6 for n in ("T1", "T2", "T3", "T4", "T5", "OW", "OE")}
    missing = {(("N3", "N"), "stopbar"), (("OE", "E"), "advance"), (("S5", "S"), "advance"),
               (("S5", "S"), "stopbar"), (("N1", "W"), "advance")}
    per_lane = ["EB-2", "EB-3", "EB-4", "EB-5", "WB-1", "WB-2", "WB-3", "WB-4"]
    detector_nodes = set(ids) | {o[0] for o in observed}

    schedules = {}
    for label in PERIODS:
        schedules["table2_" + label.lower()] = schedule_json(TABLE2[label], True)
        schedules["synchro_" + label.lower()] = schedule_json(SYNCHRO[label], False)
        schedules["deeprl_" + label.lower()] = schedule_json(DEEPRL[label], False)

    doc = {
        "schema_version": 1,
        "name": "huntington-synthetic",
        "network": {"n_target": 5, "n_observed": 8, "nodes": b.nodes, "links": b.links, "routes": route_json},
        "demand": {"profiles": [profiles[p] for p in PERIODS]},
        "signals": b.signals(splits),
        "detectors": b.detectors(detector_nodes, missing, per_lane),
        "schedules": schedules,
        "perturbations": perturbations(),
    }
    return doc, profiles


def perturbations():
    return [
        {"name": "noon_surge", "kind": "demand_surge", "start": "12:00", "end": "13:00",
         "magnitude": 1.5, "targets": ["*"]},
        {"name": "lane_disruption", "kind": "lane_disruption", "start": "12:00", "end": "13:00",
         "magnitude": 1, "targets": ["EB-1", "WB-5"]},
    ]


def greenwave_toy():
    b = Builder()
    b.node("B0", "boundary", "plain", -300, 0)
    b.node("T1", "signalized", "target", 0, 0)
    b.node("T2", "signalized", "target", 556, 0)
    b.node("B3", "boundary", "plain", 856, 0)
    for t, x in (("T1", 0), ("T2", 556)):
        b.node("B_%s_N" % t, "boundary", "plain", x, 200)
        b.node("B_%s_S" % t, "boundary", "plain", x, -200)
    b.link("B0", "T1", 2, "EB-1")
    b.link("T1", "T2", 2, "EB-2")
    b.link("T2", "B3", 2, "EB-out")
    for t in ("T1", "T2"):
        b.both("B_%s_N" % t, t, 1)
        b.both("B_%s_S" % t, t, 1)
    routes = [("EB", ["B0", "T1", "T2", "B3"], 900)]
    for t in ("T1", "T2"):
        routes.append(("SB_" + t, ["B_%s_N" % t, t, "B_%s_S" % t], 60))
        routes.append(("NB_" + t, ["B_%s_S" % t, t, "B_%s_N" % t], 60))
    entries = [{"route": rid, "start": "06:00", "end": "10:00", "rate": float(rate)} for rid, _, rate in routes]
    doc = {
        "schema_version": 1,
        "name": "greenwave-toy",
        "network": {"n_target": 2, "n_observed": 0, "nodes": b.nodes, "links": b.links,
                    "routes": [{"id": rid, "links": b.path(nodes)} for rid, nodes, _ in routes]},
        "demand": {"profiles": [{"label": "TOY", "start": "06:00", "end": "10:00",
                                 "baseline_schedule": "fixed", "entries": entries}]},
        "signals": b.signals({"T1": 0.5, "T2": 0.5}),
        "detectors": b.detectors({"T1", "T2"}),
        "schedules": {"fixed": [{"start": "06:00", "end": "10:00", "cycle": 60, "offsets": [0, 0]}]},
    }
    return doc


def single_intersection():
    b = Builder()
    b.node("X", "signalized", "target", 0, 0)
    for side, x, y in (("W", -278, 0), ("E", 278, 0), ("N", 0, 278), ("S", 0, -278)):
        b.node("B" + side, "boundary", "plain", x, y)
        b.both("B" + side, "X", 1)
    routes = [("EB", ["BW", "X", "BE"], 300), ("WB", ["BE", "X", "BW"], 300),
              ("NB", ["BS", "X", "BN"], 150), ("SB", ["BN", "X", "BS"], 150)]
    entries = [{"route": rid, "start": "06:00", "end": "10:00", "rate": float(rate)} for rid, _, rate in routes]
    doc = {
        "schema_version": 1,
        "name": "single-intersection",
        "network": {"n_target": 1, "n_observed": 0, "nodes": b.nodes, "links": b.links,
                    "routes": [{"id": rid, "links": b.path(nodes)} for rid, nodes, _ in routes]},
        "demand": {"profiles": [{"label": "STEADY", "start": "06:00", "end": "10:00",
                                 "baseline_schedule": "fixed", "entries": entries}]},
        "signals": b.signals({"X": 0.5}),
        "detectors": b.detectors({"X"}),
        "schedules": {"fixed": [{"start": "06:00", "end": "10:00", "cycle": 60, "offsets": [0]}]},
    }
    return doc


def write(name, obj):
    path = os.path.join(OUT, name)
    with open(path, "w") as f:
        json.dump(obj, f, indent=1)
        f.write("\n")


def main():
    os.makedirs(OUT, exist_ok=True)
    doc, profiles = huntington()
    write("huntington-synthetic.json", doc)
    for label, prof in profiles.items():
        write("demand_%s.json" % label.lower(), {"schema_version": 1, "profile": prof})
    write("table2_baseline.json", {"schema_version": 1,
                                   "schedules": {k: schedule_json(v, True) for k, v in TABLE2.items()}})
    write("appendix_synchro.json", {"schema_version": 1,
                                    "schedules": {k: schedule_json(v, False) for k, v in SYNCHRO.items()}})
    write("appendix_deeprl.json", {"schema_version": 1,
                                   "schedules": {k: schedule_json(v, False) for k, v in DEEPRL.items()}})
    write("perturbations.json", {"schema_version": 1, "perturbations": perturbations()})
    write("greenwave-toy.json", greenwave_toy())
    write("single-intersection.json", single_intersection())
    return 0


if __name__ == "__main__":
    sys.exit(main())
