from collections import deque

import pytest

from kaemsim.config import DeviceConfig
from kaemsim.dmf import Device, DeviceError, Droplet, RoutingError
from kaemsim.protocol import new_sample
from kaemsim.trace_check import check_frames, check_trace_jsonl


def frames_of(dev):
    return [f.to_json() for f in dev.frames]


def bfs_swap_feasible(width, height, starts, goals, static_pads=frozenset()):
    """Joint-state BFS oracle for two 1-pad droplets moved simultaneously
    (each at most one 4-neighbor step per tick, Chebyshev clearance >= 2,
    clearance >= 2 from static pads too)."""
    def ok(p):
        (c, r) = p
        if not (0 <= c < width and 0 <= r < height):
            return False
        return all(max(abs(c - sc), abs(r - sr)) >= 2 for (sc, sr) in static_pads)

    def clear(a, b):
        return max(abs(a[0] - b[0]), abs(a[1] - b[1])) >= 2

    moves = [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)]
    start = (tuple(starts[0]), tuple(starts[1]))
    goal = (tuple(goals[0]), tuple(goals[1]))
    if not (ok(start[0]) and ok(start[1]) and clear(*start)):
        return False
    seen = {start}
    q = deque([start])
    while q:
        a, b = q.popleft()
        if (a, b) == goal:
            return True
        for da in moves:
            na = (a[0] + da[0], a[1] + da[1])
            if not ok(na):
                continue
            for db in moves:
                nb = (b[0] + db[0], b[1] + db[1])
                if not ok(nb) or not clear(na, nb):
                    continue
                s = (na, nb)
                if s not in seen:
                    seen.add(s)
                    q.append(s)
    return False


def two_droplet_device(width=8, height=4, b_row=None):
    dev = Device(DeviceConfig(width=width, height=height))
    b_row = height - 1 if b_row is None else b_row
    a = Droplet(1, 101, 0, 0, 1, 1.0)
    b = Droplet(2, 102, width - 1, b_row, 1, 1.0)
    dev.droplets = {1: a, 2: b}
    dev.by_sample = {101: 1, 102: 2}
    dev._next_droplet = 2
    dev._record("init")
    return dev


def test_swap_matches_bfs_oracle_feasible():
    w, h = 8, 4
    assert bfs_swap_feasible(w, h, [(0, 0), (w - 1, h - 1)],
                             [(w - 1, h - 1), (0, 0)])
    dev = two_droplet_device(w, h)
    dev.route_many({1: (w - 1, h - 1), 2: (0, 0)})
    assert dev.droplets[1].pads() == [(w - 1, h - 1)]
    assert dev.droplets[2].pads() == [(0, 0)]
    assert check_frames(frames_of(dev), dev.config).ok


def test_swap_matches_bfs_oracle_infeasible():
    # a full-width static strip cuts the grid; both the oracle and the
    # router must call the swap infeasible
    w, h = 8, 6
    wall = frozenset((c, 2) for c in range(w))
    assert not bfs_swap_feasible(w, h, [(0, 0), (w - 1, 0)],
                                 [(w - 1, 0), (0, 0)], static_pads=wall)
    dev = Device(DeviceConfig(width=w, height=h))
    dev.droplets = {
        1: Droplet(1, 101, 0, 0, 1, 1.0),
        2: Droplet(2, 102, w - 1, 0, 1, 1.0),
        3: Droplet(3, 103, 0, 4, w, 8.0),  # the wall (not asked to move)
    }
    dev.by_sample = {101: 1, 102: 2, 103: 3}
    dev._next_droplet = 3
    dev._record("init")
    dev.droplets[3].row = 2
    with pytest.raises(RoutingError):
        dev.route_many({1: (w - 1, 0), 2: (0, 0)})


def test_full_protocol_cycle_on_device():
    dev = Device(DeviceConfig())
    s = new_sample("stock", 4.0)
    warm = new_sample("w", 2.0)
    cool = new_sample("c", 2.0)
    out = new_sample("out", 4.0)
    dev.inject(s)
    dev.split(s.id, warm, cool, 0.5)
    dev.park(warm.id, 30 + 273.15, 5.0)
    dev.park(cool.id, 4 + 273.15, 5.0)
    dev.merge(warm.id, cool.id, out)
    dev.dispose(out.id)
    frames = frames_of(dev)
    report = check_frames(frames, dev.config)
    assert report.ok, report.violations
    assert not dev.droplets
    assert dev.disposed_volume_ul == 4.0
    ops = [f["op"] for f in frames]
    assert any(o.startswith("merge-approach:") for o in ops)
    assert any(o.startswith("merge:") for o in ops)
    assert any(o.startswith("split:") for o in ops)
    assert any(o.startswith("hold:") for o in ops)


def test_hold_frames_stay_in_zone_and_are_capped():
    dev = Device(DeviceConfig())
    s = new_sample("s", 1.0)
    dev.inject(s)
    dev.park(s.id, 37 + 273.15, 10_000.0)  # long equilibrate: capped holds
    frames = frames_of(dev)
    holds = [f for f in frames if f["op"].startswith("hold:")]
    assert len(holds) == 200
    assert check_frames(frames, dev.config).ok
    hot = dev.config.zone("hot")
    for f in holds:
        for d in f["droplets"]:
            if d["id"] == dev.by_sample[s.id]:
                assert hot.col_start <= d["col"] < hot.col_end


def test_cold_range_park_stays_put():
    dev = Device(DeviceConfig())
    s = new_sample("s", 1.0)
    d = dev.inject(s)
    pos = (d.col, d.row)
    dev.park(s.id, 4 + 273.15, 3.0)
    assert (d.col, d.row) == pos
    assert check_frames(frames_of(dev), dev.config).ok


def test_inject_capacity_error_names_live_droplets():
    dev = Device(DeviceConfig(width=8, height=4))
    injected = 0
    with pytest.raises(DeviceError) as e:
        for i in range(40):
            dev.inject(new_sample(f"s{i}", 4.0))
            injected += 1
    assert injected >= 1
    assert "droplet" in str(e.value)


def test_split_minimum_volume():
    dev = Device(DeviceConfig())
    s = new_sample("s", 1.0)
    dev.inject(s)
    with pytest.raises(DeviceError):
        dev.split(s.id, new_sample("a", 0.5), new_sample("b", 0.5), 0.5)


def test_trace_checker_catches_synthetic_violations():
    cfg = DeviceConfig()
    adjacent = [{"tick": 0, "op": "init", "droplets": [
        {"id": 1, "col": 0, "row": 0, "pads": 1, "sample": 1},
        {"id": 2, "col": 1, "row": 1, "pads": 1, "sample": 2}]}]
    rep = check_frames(adjacent, cfg)
    assert not rep.ok and rep.violations[0].rule == "clearance"

    teleport = [
        {"tick": 0, "op": "a", "droplets": [
            {"id": 1, "col": 0, "row": 0, "pads": 1, "sample": 1}]},
        {"tick": 1, "op": "b", "droplets": [
            {"id": 1, "col": 3, "row": 0, "pads": 1, "sample": 1}]},
    ]
    rep = check_frames(teleport, cfg)
    assert not rep.ok and rep.violations[0].rule == "step"

    hot = cfg.zone("hot")
    bad_hold = [{"tick": 0, "op": "hold:1:cold", "droplets": [
        {"id": 1, "col": hot.col_start, "row": 0, "pads": 1, "sample": 1}]}]
    rep = check_frames(bad_hold, cfg)
    assert not rep.ok and rep.violations[0].rule == "zone"

    bad_merge = [{"tick": 0, "op": "merge:1,2->3", "droplets": [
        {"id": 3, "col": hot.col_start, "row": 0, "pads": 2, "sample": 3}]}]
    rep = check_frames(bad_merge, cfg)
    assert not rep.ok and rep.violations[0].rule == "cold-zone"


def test_trace_jsonl_round_trips_through_checker():
    dev = two_droplet_device()
    dev.route_many({1: (7, 3), 2: (0, 0)})
    assert check_trace_jsonl(dev.trace_jsonl(), dev.config).ok


def test_storyboard_svg_renders():
    dev = two_droplet_device()
    dev.route_many({1: (7, 3), 2: (0, 0)})
    svg = dev.storyboard_svg()
    assert svg.startswith("<svg") and "</svg>" in svg
