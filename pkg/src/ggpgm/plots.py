"""Static SVG figures from iteration logs, written without plot libraries.

Figure one pairs two panels: master objective over time and the negated
pricing reduced cost over time, both on a semi-log axis after adding one to
the values (so zeros sit at the origin). Figure two, emitted when comparison
columns are present, scatters per-iteration baseline solve time against the
restricted solver's total, LP and mu-sweep components, with a y=x reference
line on log-log axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .bench import read_log_csv

_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
_TIME_FLOOR = 1e-4


def semilog_plus_one(value: float) -> float:
    return math.log10(max(value, 0.0) + 1.0)


def log_time(value: float) -> float:
    return math.log10(max(value, _TIME_FLOOR))


@dataclass
class Series:
    label: str
    xs: list[float]
    ys: list[float]
    color: str = "#1f77b4"
    draw_line: bool = True


@dataclass
class Panel:
    title: str
    x_label: str
    y_label: str
    series: list[Series] = field(default_factory=list)
    identity_line: bool = False


_W, _H = 480, 420
_ML, _MR, _MT, _MB = 64, 16, 36, 48


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


def _render_panel(panel: Panel, offset_x: int, pidx: int) -> list[str]:
    xs = [x for s in panel.series for x in s.xs]
    ys = [y for s in panel.series for y in s.ys]
    if not xs:
        xs, ys = [0.0], [0.0]
    lo_x, hi_x = min(xs), max(xs)
    lo_y, hi_y = min(ys), max(ys)
    if panel.identity_line:
        lo = min(lo_x, lo_y)
        hi = max(hi_x, hi_y)
        lo_x = lo_y = lo
        hi_x = hi_y = hi
    if hi_x <= lo_x:
        hi_x = lo_x + 1.0
    if hi_y <= lo_y:
        hi_y = lo_y + 1.0
    px0, px1 = offset_x + _ML, offset_x + _W - _MR
    py0, py1 = _H - _MB, _MT

    def sx(v):
        return px0 + (v - lo_x) / (hi_x - lo_x) * (px1 - px0)

    def sy(v):
        return py0 + (v - lo_y) / (hi_y - lo_y) * (py1 - py0)

    out = [
        f'<rect x="{px0}" y="{py1}" width="{px1 - px0}" height="{py0 - py1}" '
        'fill="none" stroke="#444" stroke-width="1"/>',
        f'<text x="{(px0 + px1) / 2:.1f}" y="{_MT - 12}" text-anchor="middle" '
        f'font-size="14">{panel.title}</text>',
        f'<text x="{(px0 + px1) / 2:.1f}" y="{_H - 10}" text-anchor="middle" '
        f'font-size="12">{panel.x_label}</text>',
        f'<text x="{offset_x + 14}" y="{(py0 + py1) / 2:.1f}" text-anchor="middle" '
        f'font-size="12" transform="rotate(-90 {offset_x + 14} {(py0 + py1) / 2:.1f})">'
        f"{panel.y_label}</text>",
    ]
    for t in _ticks(lo_x, hi_x):
        out.append(
            f'<line x1="{sx(t):.1f}" y1="{py0}" x2="{sx(t):.1f}" y2="{py0 + 4}" stroke="#444"/>'
        )
        out.append(
            f'<text x="{sx(t):.1f}" y="{py0 + 16}" text-anchor="middle" font-size="10">'
            f"{t:.3g}</text>"
        )
    for t in _ticks(lo_y, hi_y):
        out.append(
            f'<line x1="{px0 - 4}" y1="{sy(t):.1f}" x2="{px0}" y2="{sy(t):.1f}" stroke="#444"/>'
        )
        out.append(
            f'<text x="{px0 - 6}" y="{sy(t) + 3:.1f}" text-anchor="end" font-size="10">'
            f"{t:.3g}</text>"
        )
    if panel.identity_line:
        out.append(
            f'<line x1="{sx(lo_x):.1f}" y1="{sy(lo_y):.1f}" x2="{sx(hi_x):.1f}" '
            f'y2="{sy(hi_y):.1f}" stroke="#000" stroke-dasharray="4 3"/>'
        )
    for sidx, s in enumerate(panel.series):
        pts = [(sx(x), sy(y)) for x, y in zip(s.xs, s.ys)]
        if s.draw_line and len(pts) > 1:
            path = " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
            out.append(
                f'<polyline points="{path}" fill="none" stroke="{s.color}" stroke-width="1.2"/>'
            )
        for x, y in pts:
            out.append(
                f'<circle class="pt panel{pidx} series{sidx}" cx="{x:.2f}" cy="{y:.2f}" '
                f'r="3" fill="{s.color}"/>'
            )
        out.append(
            f'<circle cx="{px1 - 120}" cy="{_MT + 14 + 14 * sidx}" r="3" fill="{s.color}"/>'
        )
        out.append(
            f'<text x="{px1 - 112}" y="{_MT + 18 + 14 * sidx}" font-size="11">{s.label}</text>'
        )
    return out


def render_figure(panels: list[Panel]) -> str:
    width = _W * len(panels)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{_H}" '
        f'viewBox="0 0 {width} {_H}" font-family="sans-serif">',
        f'<rect width="{width}" height="{_H}" fill="white"/>',
    ]
    for i, panel in enumerate(panels):
        parts.extend(_render_panel(panel, i * _W, i))
    parts.append("</svg>")
    return "\n".join(parts)


def emit_plots(log_paths, out_path) -> list[Path]:
    """Write figure SVGs for a set of iteration logs; returns written paths."""
    out_path = Path(out_path)
    logs = []
    for p in log_paths:
        rows = read_log_csv(p)
        if not rows:
            raise ValueError(f"log {p} has no data rows")
        logs.append((Path(p).stem, rows))
    objective = Panel(
        title="master objective vs time",
        x_label="time (s)",
        y_label="log10(objective + 1)",
    )
    pricing = Panel(
        title="pricing improvement vs time",
        x_label="time (s)",
        y_label="log10(-reduced cost + 1)",
    )
    for i, (label, rows) in enumerate(logs):
        color = _COLORS[i % len(_COLORS)]
        ts = [r["wall_time_s"] for r in rows]
        objective.series.append(
            Series(
                label=label,
                xs=ts,
                ys=[semilog_plus_one(r["rmp_objective"]) for r in rows],
                color=color,
            )
        )
        pricing.series.append(
            Series(
                label=label,
                xs=ts,
                ys=[semilog_plus_one(-r["pricing_reduced_cost"]) for r in rows],
                color=color,
                draw_line=False,
            )
        )
    out_path.write_text(render_figure([objective, pricing]), encoding="utf-8")
    written = [out_path]

    compare_rows = [
        r
        for _, rows in logs
        for r in rows
        if "bl_rmp_time_s" in r and r["bl_rmp_time_s"] == r["bl_rmp_time_s"]
    ]
    if compare_rows:
        scatter = Panel(
            title="per-iteration master solve time",
            x_label="log10 baseline time (s)",
            y_label="log10 restricted-solver time (s)",
            identity_line=True,
        )
        xs = [log_time(r["bl_rmp_time_s"]) for r in compare_rows]
        scatter.series.append(
            Series(
                label="total (lp + mu)",
                xs=xs,
                ys=[log_time(r["lp_time_s"] + r["mu_time_s"]) for r in compare_rows],
                color="#d62728",
                draw_line=False,
            )
        )
        scatter.series.append(
            Series(
                label="mu sweeps",
                xs=xs,
                ys=[log_time(r["mu_time_s"]) for r in compare_rows],
                color="#1f77b4",
                draw_line=False,
            )
        )
        scatter.series.append(
            Series(
                label="lp solves",
                xs=xs,
                ys=[log_time(r["lp_time_s"]) for r in compare_rows],
                color="#2ca02c",
                draw_line=False,
            )
        )
        times_path = out_path.with_name(out_path.stem + "_rmp_times.svg")
        times_path.write_text(render_figure([scatter]), encoding="utf-8")
        written.append(times_path)
    return written
