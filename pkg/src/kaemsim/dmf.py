"""Virtual digital-microfluidic device.

A rectangular pad grid split into cold/warm/hot column zones. Each live
sample is a droplet occupying a horizontal strip of ceil(volume/unit) pads.
Distinct droplets keep Chebyshev distance >= 2 between their pads except in
the sanctioned final frames of a merge. Routing is time-expanded A* over a
reservation table; blocking droplets are moved aside with bounded,
deterministically seeded retries. All staging, mixing, and splitting happens
in the cold zone; thermal parking moves droplets into the zone matching the
equilibration temperature and back.
"""

from __future__ import annotations

import heapq
import json
import math
import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .config import DeviceConfig, ZoneSpec


class DeviceError(Exception):
    pass


class RoutingError(DeviceError):
    pass


@dataclass
class Droplet:
    id: int
    sample_id: int
    col: int
    row: int
    length: int  # pads
    volume_ul: float

    def pads(self) -> list:
        return [(self.col + i, self.row) for i in range(self.length)]


@dataclass
class Frame:
    tick: int
    op: str
    droplets: list  # (id, col, row, length, sample_id)

    def to_json(self) -> dict:
        return {
            "tick": self.tick,
            "op": self.op,
            "droplets": [
                {"id": d[0], "col": d[1], "row": d[2], "pads": d[3], "sample": d[4]}
                for d in self.droplets
            ],
        }


def _inflate(pads, width, height):
    """Cells within Chebyshev distance 1 of any pad (the keep-out halo)."""
    out = set()
    for (c, r) in pads:
        for dc in (-1, 0, 1):
            for dr in (-1, 0, 1):
                cc, rr = c + dc, r + dr
                if 0 <= cc < width and 0 <= rr < height:
                    out.add((cc, rr))
    return out


class ReservationTable:
    """Space-time occupancy: static droplets plus committed future paths.
    Queries are on the inflated halo, so "free" already implies clearance."""

    def __init__(self, width: int, height: int):
        self.width = width
        self.height = height
        self.static_halo: set = set()
        self.timed_halo: dict[int, set] = {}
        self.parked: list = []  # (t_from, halo) once a committed path ends

    def add_static(self, pads):
        self.static_halo |= _inflate(pads, self.width, self.height)

    def add_path(self, pads_per_tick: Sequence):
        """pads_per_tick[t] = iterable of pads at tick t; the droplet is
        considered parked at its last position afterwards."""
        for t, pads in enumerate(pads_per_tick):
            halo = _inflate(pads, self.width, self.height)
            self.timed_halo.setdefault(t, set()).update(halo)
        if pads_per_tick:
            last = _inflate(pads_per_tick[-1], self.width, self.height)
            self.parked.append((len(pads_per_tick) - 1, last))

    def blocked(self, pads, t: int) -> bool:
        for p in pads:
            if p in self.static_halo:
                return True
        halo = self.timed_halo.get(t)
        if halo and any(p in halo for p in pads):
            return True
        for t_from, phalo in self.parked:
            if t >= t_from and any(p in phalo for p in pads):
                return True
        return False

    def blocked_ever_after(self, pads, t: int) -> bool:
        """True when the pads conflict with anything at any tick >= t
        (a droplet cannot park here)."""
        if self.blocked(pads, t):
            return True
        for tk, halo in self.timed_halo.items():
            if tk >= t and any(p in halo for p in pads):
                return True
        return False


def _astar(width, height, length, start, goal, table: ReservationTable,
           tick_budget: int):
    """Time-expanded A* for one strip droplet; returns list of (col,row)
    positions per tick including start and goal, or None."""

    def fits(c, r):
        return 0 <= r < height and 0 <= c and c + length <= width

    def pads(c, r):
        return [(c + i, r) for i in range(length)]

    def h(c, r):
        return abs(c - goal[0]) + abs(r - goal[1])

    start_key = (start[0], start[1], 0)
    open_heap = [(h(*start), 0, start_key)]
    came: dict = {start_key: None}
    gscore = {start_key: 0}
    max_t = min(tick_budget, 4 * (width + height) + 40)
    expansions = 0
    while open_heap:
        _, g, key = heapq.heappop(open_heap)
        c, r, t = key
        if g > gscore.get(key, 1 << 30):
            continue
        expansions += 1
        if expansions > 200_000:
            return None
        if (c, r) == goal and not table.blocked_ever_after(pads(c, r), t + 1):
            path = []
            k = key
            while k is not None:
                path.append((k[0], k[1]))
                k = came[k]
            return path[::-1]
        if t >= max_t:
            continue
        for dc, dr in ((1, 0), (-1, 0), (0, 1), (0, -1), (0, 0)):
            nc, nr, nt = c + dc, r + dr, t + 1
            if not fits(nc, nr):
                continue
            if table.blocked(pads(nc, nr), nt):
                continue
            nkey = (nc, nr, nt)
            ng = g + 1
            if ng < gscore.get(nkey, 1 << 30):
                gscore[nkey] = ng
                came[nkey] = key
                heapq.heappush(open_heap, (ng + h(nc, nr), ng, nkey))
    return None


class Device:
    def __init__(self, config: Optional[DeviceConfig] = None):
        self.config = config or DeviceConfig()
        self.droplets: dict[int, Droplet] = {}
        self.by_sample: dict[int, int] = {}
        self.frames: list[Frame] = []
        self.tick = 0
        self.disposed_volume_ul = 0.0
        self.rng = random.Random(self.config.seed)
        self._next_droplet = 0
        self._record("init")

    # --- bookkeeping ---

    def _record(self, op: str):
        snap = sorted(
            (d.id, d.col, d.row, d.length, d.sample_id)
            for d in self.droplets.values())
        self.frames.append(Frame(self.tick, op, snap))
        self.tick += 1

    def _strip_len(self, volume_ul: float) -> int:
        return max(1, math.ceil(round(volume_ul / self.config.droplet_unit_ul, 9)))

    def zone_cols(self, kind: str) -> range:
        z = self.config.zone(kind)
        return range(z.col_start, z.col_end)

    def zone_of(self, col: int) -> ZoneSpec:
        for z in self.config.zones:
            if z.col_start <= col < z.col_end:
                return z
        raise DeviceError(f"column {col} outside all zones")

    def live_volume_ul(self) -> float:
        return sum(d.volume_ul for d in self.droplets.values())

    # --- placement helpers ---

    def _free(self, pads, ignore=()) -> bool:
        halo = set()
        for did, d in self.droplets.items():
            if did in ignore:
                continue
            halo |= _inflate(d.pads(), self.config.width, self.config.height)
        return not any(p in halo for p in pads)

    def _staging_ports(self, length: int):
        cold = self.config.zone("cold")
        for row in range(0, self.config.height, 2):
            for col in range(cold.col_start, cold.col_end - length + 1):
                yield (col, row)

    def _find_site(self, length: int, cols: range, ignore=(), margin: int = 0):
        """First grid position (row-major) in the column range where a strip
        of `length` pads plus `margin` extra columns each side is clear."""
        for row in range(self.config.height):
            for col in cols:
                if col - margin < 0 or col + length + margin > self.config.width:
                    continue
                if not (cols.start <= col and col + length <= cols.stop):
                    continue
                pads = [(col - margin + i, row) for i in range(length + 2 * margin)]
                if self._free(pads, ignore=ignore):
                    return (col, row)
        return None

    # --- operations ---

    def inject(self, sample) -> Droplet:
        length = self._strip_len(sample.volume_ul)
        for (col, row) in self._staging_ports(length):
            pads = [(col + i, row) for i in range(length)]
            if self._free(pads):
                self._next_droplet += 1
                d = Droplet(self._next_droplet, sample.id, col, row, length,
                            sample.volume_ul)
                self.droplets[d.id] = d
                self.by_sample[sample.id] = d.id
                self._record(f"inject:{d.id}")
                return d
        live = ", ".join(f"droplet {d.id} (sample {d.sample_id})"
                         for d in self.droplets.values())
        raise DeviceError(f"staging region full; live droplets: {live}")

    def _droplet_for(self, sample_id: int) -> Droplet:
        did = self.by_sample.get(sample_id)
        if did is None or did not in self.droplets:
            raise DeviceError(f"no droplet bound to sample id {sample_id}")
        return self.droplets[did]

    def route(self, droplet_id: int, target, op: str = "route",
              table: Optional[ReservationTable] = None,
              _retries: int = 3) -> list:
        """Move one droplet to the target anchor; other droplets are static
        obstacles unless a reservation table is supplied. Blocking droplets
        are moved aside when planning fails."""
        d = self.droplets[droplet_id]
        if (d.col, d.row) == tuple(target):
            return []
        if table is None:
            table = ReservationTable(self.config.width, self.config.height)
            for did, other in self.droplets.items():
                if did != droplet_id:
                    table.add_static(other.pads())
        goal_pads = [(target[0] + i, target[1]) for i in range(d.length)]
        if target[0] < 0 or target[0] + d.length > self.config.width \
                or not (0 <= target[1] < self.config.height):
            raise RoutingError(f"target {tuple(target)} out of grid for droplet {d.id}")
        path = _astar(self.config.width, self.config.height, d.length,
                      (d.col, d.row), tuple(target), table,
                      self.config.tick_budget)
        if path is None:
            if _retries > 0 and self._move_aside(droplet_id, goal_pads):
                return self.route(droplet_id, target, op=op, _retries=_retries - 1)
            raise RoutingError(
                f"no feasible route for droplet {d.id} to {tuple(target)} "
                f"within budget; device snapshot: {self.snapshot()}")
        for (c, r) in path[1:]:
            d.col, d.row = c, r
            self._record(op)
        return path

    def _move_aside(self, requester_id: int, goal_pads) -> bool:
        """Re-park droplets whose halo intersects the requester's goal."""
        halo_goal = set(goal_pads) | _inflate(goal_pads, self.config.width,
                                              self.config.height)
        blockers = [d for did, d in sorted(self.droplets.items())
                    if did != requester_id and
                    any(p in halo_goal for p in d.pads())]
        if not blockers:
            return False
        self.rng.shuffle(blockers)
        moved = False
        for b in blockers:
            zone = self.zone_of(b.col)
            site = None
            for row in range(self.config.height):
                for col in self.zone_cols(zone.kind):
                    if col + b.length > self.config.width:
                        continue
                    pads = [(col + i, row) for i in range(b.length)]
                    if any(p in halo_goal for p in pads):
                        continue
                    if self._free(pads, ignore=(b.id,)):
                        site = (col, row)
                        break
                if site:
                    break
            if site is None:
                continue
            try:
                self.route(b.id, site, op=f"move-aside:{b.id}", _retries=0)
                moved = True
            except RoutingError:
                continue
        return moved

    def route_many(self, requests, op: str = "route") -> None:
        """Plan several droplets together (prioritized, time-expanded) and
        play the paths back in parallel, one tick per frame."""
        order = list(requests.items()) if isinstance(requests, dict) \
            else list(requests)
        attempts = 5
        for attempt in range(attempts):
            table = ReservationTable(self.config.width, self.config.height)
            moving = {did for did, _ in order}
            for did, d in self.droplets.items():
                if did not in moving:
                    table.add_static(d.pads())
            paths = {}
            ok = True
            for did, target in order:
                d = self.droplets[did]
                path = _astar(self.config.width, self.config.height, d.length,
                              (d.col, d.row), tuple(target), table,
                              self.config.tick_budget)
                if path is None:
                    ok = False
                    break
                paths[did] = path
                table.add_path([[(c + i, r) for i in range(d.length)]
                                for (c, r) in path])
            if ok:
                n_ticks = max(len(p) for p in paths.values())
                for t in range(1, n_ticks):
                    for did, path in paths.items():
                        c, r = path[min(t, len(path) - 1)]
                        self.droplets[did].col = c
                        self.droplets[did].row = r
                    self._record(op)
                return
            self.rng.shuffle(order)
        raise RoutingError(
            f"no feasible joint plan for {[(d, tuple(t)) for d, t in order]}; "
            f"device snapshot: {self.snapshot()}")

    def merge(self, sample_a: int, sample_b: int, out_sample) -> Droplet:
        """Route b next to a inside the cold zone and fuse them."""
        da = self._droplet_for(sample_a)
        db = self._droplet_for(sample_b)
        total_len = self._strip_len(out_sample.volume_ul)
        cold = self.zone_cols("cold")
        # site with room for a, b's approach corridor, and the combined strip
        need = max(total_len, da.length + db.length) + 3
        site = self._find_site(need, cold, ignore=(da.id, db.id))
        if site is None:
            site = self._find_site(need, range(0, self.config.width),
                                   ignore=(da.id, db.id))
        if site is None:
            raise RoutingError("no room to stage a merge; device snapshot: "
                               + self.snapshot())
        self.route(da.id, site, op=f"merge-stage:{da.id}")
        a_end = da.col + da.length - 1
        # normal-clearance waypoint two pads right of a, then a sanctioned
        # single-step approach to adjacency
        waypoint = (a_end + 3, da.row)
        self.route(db.id, waypoint, op=f"merge-stage:{db.id}")
        db.col = a_end + 2
        self._record(f"merge-approach:{da.id},{db.id}")
        db.col = a_end + 1
        self._record(f"merge-approach:{da.id},{db.id}")
        volume = da.volume_ul + db.volume_ul
        del self.droplets[da.id]
        del self.droplets[db.id]
        self._next_droplet += 1
        merged = Droplet(self._next_droplet, out_sample.id, da.col, da.row,
                         total_len, volume)
        self.droplets[merged.id] = merged
        self.by_sample[out_sample.id] = merged.id
        self._record(f"merge:{da.id},{db.id}->{merged.id}")
        return merged

    def split(self, sample_id: int, out_a, out_b, p: float):
        """Pull a droplet apart horizontally over two frames (cold zone)."""
        d = self._droplet_for(sample_id)
        unit = self.config.droplet_unit_ul
        if d.volume_ul + 1e-9 < 2 * unit:
            raise DeviceError(
                f"droplet {d.id} ({d.volume_ul} µL) below minimum splittable "
                f"volume {2 * unit} µL")
        va = round(p * d.volume_ul, 2)
        vb = round(d.volume_ul - va, 2)
        len_a = self._strip_len(va)
        len_b = self._strip_len(vb)
        need = len_a + len_b
        cold = self.zone_cols("cold")
        # the receding children span columns d.col-1 .. d.col+need, all of
        # which must stay inside the cold zone
        site_ok = (all(c in cold for c in range(d.col - 1, d.col + need + 1))
                   and self._free([(d.col - 1, d.row), (d.col + need, d.row)],
                                  ignore=(d.id,)))
        if not site_ok:
            site = self._find_site(need + 2, cold, ignore=(d.id,))
            if site is None:
                raise RoutingError("no room to stage a split; device snapshot: "
                                   + self.snapshot())
            self.route(d.id, (site[0] + 1, site[1]), op=f"split-stage:{d.id}")
        del self.droplets[d.id]
        self._next_droplet += 1
        ca = Droplet(self._next_droplet, out_a.id, d.col, d.row, len_a, va)
        self._next_droplet += 1
        cb = Droplet(self._next_droplet, out_b.id, d.col + len_a, d.row, len_b, vb)
        self.droplets[ca.id] = ca
        self.droplets[cb.id] = cb
        self.by_sample[out_a.id] = ca.id
        self.by_sample[out_b.id] = cb.id
        ca.col -= 1
        self._record(f"split:{d.id}->{ca.id},{cb.id}")
        cb.col += 1
        self._record(f"split:{d.id}->{ca.id},{cb.id}")
        return ca, cb

    def park(self, sample_id: int, temperature_k: float, duration_s: float):
        """Equilibrate itinerary: go to the temperature zone, hold, return."""
        d = self._droplet_for(sample_id)
        zone = self.config.zone_for_temperature(temperature_k)
        cols = self.zone_cols(zone.kind)
        here = all(c in cols for c, _ in d.pads())
        if not here:
            site = self._find_site(d.length, cols, ignore=(d.id,))
            if site is None:
                raise RoutingError(f"no room in {zone.kind} zone; device "
                                   "snapshot: " + self.snapshot())
            self.route(d.id, site, op=f"park-out:{d.id}:{zone.kind}")
        n_hold = max(1, min(200, math.ceil(duration_s / self.config.hold_quantum_s)))
        for _ in range(n_hold):
            self._record(f"hold:{d.id}:{zone.kind}")
        if not here:
            back = self._find_site(d.length, self.zone_cols("cold"), ignore=(d.id,))
            if back is None:
                raise RoutingError("no room back in cold staging; device "
                                   "snapshot: " + self.snapshot())
            self.route(d.id, back, op=f"park-back:{d.id}")

    def dispose(self, sample_id: int):
        d = self._droplet_for(sample_id)
        site = None
        for row in range(self.config.height - 1, -1, -1):
            pads = [(0 + i, row) for i in range(d.length)]
            if self._free(pads, ignore=(d.id,)):
                site = (0, row)
                break
        if site is None:
            raise RoutingError("no route to the extraction port; device "
                               "snapshot: " + self.snapshot())
        self.route(d.id, site, op=f"dispose-route:{d.id}")
        self.disposed_volume_ul += d.volume_ul
        del self.droplets[d.id]
        del self.by_sample[sample_id]
        self._record(f"dispose:{d.id}")

    # --- export ---

    def snapshot(self) -> str:
        return json.dumps(sorted(
            (d.id, d.col, d.row, d.length) for d in self.droplets.values()))

    def trace_jsonl(self) -> str:
        return "".join(json.dumps(f.to_json(), separators=(",", ":")) + "\n"
                       for f in self.frames)

    def storyboard_svg(self, every: int = 10, cell: int = 14) -> str:
        """Grid snapshot of every `every`-th frame with zone shading."""
        frames = self.frames[::every] or self.frames[-1:]
        w, h = self.config.width, self.config.height
        pad = 8
        panel_w = w * cell + pad
        panel_h = h * cell + 24
        per_row = max(1, 960 // panel_w)
        rows = math.ceil(len(frames) / per_row)
        W = per_row * panel_w + pad
        H = rows * panel_h + pad
        zone_fill = {"cold": "#dce9f7", "warm": "#fdf3d8", "hot": "#fadcd8"}
        out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}">']
        for fi, frame in enumerate(frames):
            ox = pad + (fi % per_row) * panel_w
            oy = pad + (fi // per_row) * panel_h
            for z in self.config.zones:
                out.append(
                    f'<rect x="{ox + z.col_start * cell}" y="{oy}" '
                    f'width="{(z.col_end - z.col_start) * cell}" height="{h * cell}" '
                    f'fill="{zone_fill[z.kind]}"/>')
            out.append(f'<rect x="{ox}" y="{oy}" width="{w * cell}" '
                       f'height="{h * cell}" fill="none" stroke="#888"/>')
            for (did, c, r, length, _sid) in frame.droplets:
                out.append(
                    f'<rect x="{ox + c * cell + 1}" y="{oy + r * cell + 1}" '
                    f'width="{length * cell - 2}" height="{cell - 2}" rx="5" '
                    f'fill="#3b6fd4" fill-opacity="0.85"/>')
                out.append(
                    f'<text x="{ox + c * cell + 4}" y="{oy + r * cell + cell - 4}" '
                    f'font-size="9" fill="white">{did}</text>')
            out.append(f'<text x="{ox}" y="{oy + h * cell + 14}" font-size="10">'
                       f'tick {frame.tick}: {frame.op}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"
