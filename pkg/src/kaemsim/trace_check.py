"""Machine check of a device frame trace, independent of the router.

Works from the serialized frames plus the device configuration alone, so it
can validate traces produced by any planner:

  * clearance: Chebyshev distance >= 2 between pads of distinct droplets,
    except the pair named by a ``merge-approach``/``merge`` frame;
  * step validity: droplets move at most one pad between consecutive frames,
    4-neighborhood only;
  * geometry: every footprint inside the grid;
  * zone discipline: hold frames keep the droplet inside the named zone;
    split and merge frames happen in the cold zone.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .config import DeviceConfig


@dataclass
class TraceViolation:
    tick: int
    rule: str
    detail: str

    def __str__(self):
        return f"tick {self.tick}: [{self.rule}] {self.detail}"


@dataclass
class TraceReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, tick, rule, detail):
        self.violations.append(TraceViolation(tick, rule, detail))


def _pads(d) -> list:
    return [(d["col"] + i, d["row"]) for i in range(d["pads"])]


def _chebyshev(a, b) -> int:
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]))


def _min_dist(pads_a, pads_b) -> int:
    return min(_chebyshev(p, q) for p in pads_a for q in pads_b)


def _sanctioned_pair(op: str):
    # "merge-approach:3,4" / "merge:3,4->5"
    if op.startswith("merge-approach:") or op.startswith("merge:"):
        body = op.split(":", 1)[1].split("->")[0]
        a, b = body.split(",")
        return {int(a), int(b)}
    return None


def check_frames(frames: list, config: DeviceConfig) -> TraceReport:
    """frames: list of dicts as emitted by Device.trace_jsonl (parsed)."""
    report = TraceReport()
    cold = config.zone("cold")
    prev = None
    for frame in frames:
        tick = frame["tick"]
        op = frame["op"]
        droplets = frame["droplets"]
        sanction = _sanctioned_pair(op)
        by_id = {d["id"]: d for d in droplets}
        # geometry
        for d in droplets:
            for (c, r) in _pads(d):
                if not (0 <= c < config.width and 0 <= r < config.height):
                    report.add(tick, "grid", f"droplet {d['id']} pad ({c},{r}) "
                               "outside grid")
        # clearance
        ids = sorted(by_id)
        for i, a in enumerate(ids):
            for b in ids[i + 1:]:
                dist = _min_dist(_pads(by_id[a]), _pads(by_id[b]))
                if dist < 2 and not (sanction and {a, b} <= sanction):
                    report.add(tick, "clearance",
                               f"droplets {a} and {b} at distance {dist}")
        # step validity
        if prev is not None:
            prev_by_id = {d["id"]: d for d in prev["droplets"]}
            for did, d in by_id.items():
                if did in prev_by_id:
                    p = prev_by_id[did]
                    dc = abs(d["col"] - p["col"])
                    dr = abs(d["row"] - p["row"])
                    if d["pads"] != p["pads"]:
                        report.add(tick, "step", f"droplet {did} changed size "
                                   "outside a merge/split")
                    elif dc + dr > 1:
                        report.add(tick, "step", f"droplet {did} moved "
                                   f"({dc},{dr}) in one tick")
        # zone discipline
        if op.startswith("hold:"):
            _, did_s, kind = op.split(":")
            d = by_id.get(int(did_s))
            if d is None:
                report.add(tick, "zone", f"hold frame for absent droplet {did_s}")
            else:
                zone = config.zone(kind)
                for (c, r) in _pads(d):
                    if not (zone.col_start <= c < zone.col_end):
                        report.add(tick, "zone", f"droplet {d['id']} held outside "
                                   f"{kind} zone (col {c})")
        if op.startswith(("split:", "merge:", "merge-approach:")):
            involved = set()
            if op.startswith("split:"):
                body = op.split(":", 1)[1]
                involved = {int(x) for x in body.split("->")[1].split(",")}
            else:
                involved = set(_sanctioned_pair(op) or set())
                if op.startswith("merge:") and "->" in op:
                    involved.add(int(op.split("->")[1]))
            for did in involved:
                d = by_id.get(did)
                if d is None:
                    continue
                for (c, r) in _pads(d):
                    if not (cold.col_start <= c < cold.col_end):
                        report.add(tick, "cold-zone",
                                   f"droplet {did} mixing/splitting outside the "
                                   f"cold zone (col {c})")
        prev = frame
    return report


def check_trace_jsonl(text: str, config: DeviceConfig) -> TraceReport:
    frames = [json.loads(line) for line in text.splitlines() if line.strip()]
    return check_frames(frames, config)
