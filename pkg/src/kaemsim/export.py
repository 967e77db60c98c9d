"""CSV and SVG plot export for timecourses.

Floats are written with Python's shortest round-trip repr so artifacts are
byte-stable across runs and reload losslessly.
"""

from __future__ import annotations

import numpy as np

from .simulate import Timecourse


def format_float(v: float) -> str:
    v = float(v)
    if v != v:
        return "nan"
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def timecourse_csv(tc: Timecourse) -> str:
    """Columns: t, species means, cov.X.Y upper triangle (LNA only), observers."""
    header = ["t"] + [sp.display_name for sp in tc.species]
    n = len(tc.species)
    pairs = []
    if tc.covs is not None:
        for i in range(n):
            for j in range(i, n):
                pairs.append((i, j))
                header.append(f"cov.{tc.species[i].display_name}.{tc.species[j].display_name}")
    header += tc.observer_order
    lines = [",".join(header)]
    for ti in range(len(tc.times)):
        row = [format_float(tc.times[ti])]
        row += [format_float(tc.means[ti, i]) for i in range(n)]
        for i, j in pairs:
            row.append(format_float(tc.covs[ti, i, j]))
        for label in tc.observer_order:
            row.append(format_float(tc.observers[label][ti]))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
            "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"]


def timecourse_plot_svg(tc: Timecourse, width: int = 640, height: int = 400) -> str:
    """Line plot of the reported series (falls back to species means when no
    reports exist); legend labels are the report labels."""
    series = [(label, tc.observers[label]) for label in tc.observer_order]
    if not series:
        series = [(sp.display_name, tc.means[:, i]) for i, sp in enumerate(tc.species)]
    ml, mr, mt, mb = 50, 150, 20, 40
    pw, ph = width - ml - mr, height - mt - mb
    t = tc.times
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>']
    if len(t) >= 2 and series:
        t0, t1 = float(t[0]), float(t[-1])
        finite = [s[np.isfinite(s)] for _, s in series]
        finite = [s for s in finite if len(s)]
        lo = min((float(s.min()) for s in finite), default=0.0)
        hi = max((float(s.max()) for s in finite), default=1.0)
        if hi == lo:
            hi = lo + 1.0
        def sx(x):
            return ml + (x - t0) / (t1 - t0) * pw
        def sy(y):
            return mt + (hi - y) / (hi - lo) * ph
        out.append(f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" '
                   'fill="none" stroke="#888"/>')
        for tick in np.linspace(lo, hi, 5):
            y = sy(tick)
            out.append(f'<text x="{ml - 6}" y="{y:.2f}" font-size="10" '
                       f'text-anchor="end">{_tick(tick)}</text>')
        for tick in np.linspace(t0, t1, 5):
            x = sx(tick)
            out.append(f'<text x="{x:.2f}" y="{height - mb + 14}" font-size="10" '
                       f'text-anchor="middle">{_tick(tick)}</text>')
        for k, (label, s) in enumerate(series):
            color = _PALETTE[k % len(_PALETTE)]
            pts = []
            for i in range(len(t)):
                if np.isfinite(s[i]):
                    pts.append(f"{sx(float(t[i])):.2f},{sy(float(s[i])):.2f}")
            if pts:
                out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                           f'points="{" ".join(pts)}"/>')
            ly = mt + 14 + 16 * k
            out.append(f'<line x1="{width - mr + 8}" y1="{ly - 4}" x2="{width - mr + 28}" '
                       f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
            out.append(f'<text x="{width - mr + 34}" y="{ly}" font-size="11">'
                       f'{_esc(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _tick(v: float) -> str:
    return f"{v:.4g}"


def _esc(s: str) -> str:
    return (s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;"))
