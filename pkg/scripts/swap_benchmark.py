"""Time the router on the two-droplet swap instance at several grid sizes."""

import time

from kaemsim.config import DeviceConfig
from kaemsim.dmf import Device, Droplet
from kaemsim.trace_check import check_frames


def main():
    for (w, h) in ((8, 4), (12, 6), (16, 8), (24, 12)):
        dev = Device(DeviceConfig(width=w, height=h))
        a = Droplet(1, 101, 0, 0, 1, 1.0)
        b = Droplet(2, 102, w - 1, h - 1, 1, 1.0)
        dev.droplets = {1: a, 2: b}
        dev.by_sample = {101: 1, 102: 2}
        dev._next_droplet = 2
        dev._record("init")
        t0 = time.perf_counter()
        dev.route_many({1: (w - 1, h - 1), 2: (0, 0)})
        dt = time.perf_counter() - t0
        frames = [f.to_json() for f in dev.frames]
        ok = check_frames(frames, dev.config).ok
        print(f"{w}x{h}: {len(dev.frames)} frames, ok={ok}, {dt * 1000:.1f} ms")


if __name__ == "__main__":
    main()
