"""Grouped bar charts of per-window metrics, written as plain SVG.

Charts are views of ``metrics.csv``: every bar carries its source cell in
``data-value`` so the picture can be checked against the table.
"""

from __future__ import annotations

import math
from collections import defaultdict
from pathlib import Path
from typing import Dict, List, Mapping, Sequence, Tuple
from xml.sax.saxutils import escape

from .evaluation import METRICS_HEADER, read_csv, write_csv
from .expansion import METHODS

CHART_METRICS = {
    "volume": "Volume (matched documents)",
    "hashtag_count": "Hashtag count",
    "optimal_k": "Optimal k (conciseness)",
}
COLORS = {
    "static": "#4c72b0",
    "emergent": "#dd8452",
    "proactive_vs": "#55a868",
    "proactive_co": "#c44e52",
}
SUMMARY_HEADER = ["window", "method", "topics", "volume", "hashtag_count", "mean_optimal_k"]

WIDTH, HEIGHT = 720, 400
LEFT, RIGHT, TOP, BOTTOM = 70, 150, 40, 50


class ReportError(ValueError):
    pass


def nice_ceiling(value: float) -> float:
    """Smallest 1/2/5 x 10^n at or above ``value``."""
    if value <= 0:
        return 1.0
    exp = math.floor(math.log10(value))
    for m in (1, 2, 5, 10):
        top = m * 10.0 ** exp
        if top >= value:
            return top
    return 10.0 ** (exp + 1)


def _fmt(x: float) -> str:
    return f"{x:.2f}".rstrip("0").rstrip(".")


def grouped_bar_svg(title: str, ylabel: str, categories: Sequence[int],
                    series: Mapping[str, Sequence[float]],
                    raw: Mapping[str, Sequence[str]] | None = None) -> str:
    """SVG text for bars grouped by ``categories``, one colour per series."""
    names = list(series)
    plot_w, plot_h = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM
    ymax = nice_ceiling(max((v for vals in series.values() for v in vals), default=0.0))
    group_w = plot_w / max(len(categories), 1)
    bar_w = group_w * 0.8 / max(len(names), 1)

    out: List[str] = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.2f}" y="22" text-anchor="middle" font-size="15">'
        f'{escape(title)}</text>',
    ]
    for t in range(6):
        value = ymax * t / 5
        y = TOP + plot_h - plot_h * t / 5
        out.append(f'<line x1="{LEFT}" y1="{y:.2f}" x2="{LEFT + plot_w}" y2="{y:.2f}" '
                   f'stroke="#dddddd"/>')
        out.append(f'<text x="{LEFT - 6}" y="{y + 4:.2f}" text-anchor="end">{_fmt(value)}</text>')
    out.append(f'<text x="16" y="{TOP + plot_h / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {TOP + plot_h / 2:.2f})">{escape(ylabel)}</text>')

    for ci, cat in enumerate(categories):
        gx = LEFT + ci * group_w + group_w * 0.1
        for si, name in enumerate(names):
            v = float(series[name][ci])
            h = plot_h * v / ymax
            x = gx + si * bar_w
            cell = raw[name][ci] if raw else _fmt(v)
            out.append(
                f'<rect x="{x:.2f}" y="{TOP + plot_h - h:.2f}" width="{bar_w:.2f}" '
                f'height="{h:.2f}" fill="{COLORS.get(name, "#888888")}" '
                f'data-topic="{cat}" data-method="{escape(name)}" data-value="{escape(cell)}"/>')
        out.append(f'<text x="{LEFT + (ci + 0.5) * group_w:.2f}" y="{TOP + plot_h + 18}" '
                   f'text-anchor="middle">{cat}</text>')
    out.append(f'<line x1="{LEFT}" y1="{TOP + plot_h}" x2="{LEFT + plot_w}" '
               f'y2="{TOP + plot_h}" stroke="black"/>')
    out.append(f'<text x="{LEFT + plot_w / 2:.2f}" y="{HEIGHT - 10}" '
               f'text-anchor="middle">topic</text>')

    for si, name in enumerate(names):
        y = TOP + 10 + si * 20
        out.append(f'<rect x="{WIDTH - RIGHT + 15}" y="{y}" width="12" height="12" '
                   f'fill="{COLORS.get(name, "#888888")}"/>')
        out.append(f'<text x="{WIDTH - RIGHT + 33}" y="{y + 10}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _group(rows: Sequence[dict]) -> Dict[int, Dict[Tuple[int, str], dict]]:
    by_window: Dict[int, Dict[Tuple[int, str], dict]] = defaultdict(dict)
    for row in rows:
        by_window[int(row["window"])][(int(row["topic"]), row["method"])] = row
    return by_window


def write_report(run_dir, out_dir) -> List[Path]:
    """Three charts per window in ``metrics.csv`` plus ``summary.csv``.

    Raises ``ReportError`` when the metrics table is missing or empty.
    """
    metrics_path = Path(run_dir) / "metrics.csv"
    if not metrics_path.is_file():
        raise ReportError(f"{metrics_path} not found")
    rows = read_csv(metrics_path)
    if not rows:
        raise ReportError(f"{metrics_path} has no rows; nothing to report")
    missing = set(METRICS_HEADER) - set(rows[0])
    if missing:
        raise ReportError(f"{metrics_path} lacks columns {sorted(missing)}")

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: List[Path] = []
    summary = []
    for w, cells in sorted(_group(rows).items()):
        topics = sorted({t for t, _ in cells})
        methods = [m for m in METHODS if any((t, m) in cells for t in topics)]
        for metric, label in CHART_METRICS.items():
            raw = {m: [cells[(t, m)][metric] if (t, m) in cells else "0" for t in topics]
                   for m in methods}
            series = {m: [float(v) for v in raw[m]] for m in methods}
            svg = grouped_bar_svg(f"Window {w}: {label}", label, topics, series, raw)
            path = out / f"window_{w}_{metric}.svg"
            path.write_text(svg, encoding="utf-8")
            written.append(path)
        for m in methods:
            mine = [cells[(t, m)] for t in topics if (t, m) in cells]
            ks = [int(c["optimal_k"]) for c in mine]
            summary.append([w, m, len(mine),
                            sum(int(c["volume"]) for c in mine),
                            sum(int(c["hashtag_count"]) for c in mine),
                            repr(sum(ks) / len(ks))])
    spath = out / "summary.csv"
    write_csv(spath, SUMMARY_HEADER, summary)
    written.append(spath)
    return written
