"""Box-plot summaries and standalone SVG figures."""

from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from .features import FEATURES, GESTURES, column

GESTURE_NAMES = {
    "X": "rest", "E": "extension", "F": "flexion", "U": "ulnar deviation",
    "R": "radial deviation", "G": "grip", "B": "abduction", "D": "adduction",
    "S": "supination", "P": "pronation",
}


@dataclass(frozen=True)
class BoxPlotSummary:
    group: str
    n: int
    min: float
    q1: float
    median: float
    q3: float
    max: float
    whisker_low: float
    whisker_high: float
    outliers: tuple


def five_number_summary(values, group=""):
    """Quartiles by linear interpolation between order statistics; 1.5 IQR outliers."""
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        raise ValueError(f"no values for group {group!r}")
    q1, med, q3 = np.quantile(v, [0.25, 0.5, 0.75], method="linear")
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = v[(v >= lo_fence) & (v <= hi_fence)]
    outliers = tuple(float(x) for x in v[(v < lo_fence) | (v > hi_fence)])
    return BoxPlotSummary(group, int(v.size), float(v[0]), float(q1), float(med), float(q3),
                          float(v[-1]), float(inside[0]), float(inside[-1]), outliers)


def group_summaries(table, feature):
    x = column(table, feature)
    labels = np.array([r.gesture for r in table])
    return [five_number_summary(x[labels == g], g) for g in GESTURES if np.any(labels == g)]


def _fmt(v):
    return repr(float(v))


def _pfmt(p):
    return format(float(p), ".4e")


def boxplot_svg(table, feature, overall_p=None, pairwise=None, width=820, height=480):
    """SVG with one box per gesture in the fixed gesture order.

    ``pairwise`` is ``(gestures, pvalue_matrix)``; the smallest and largest
    off-diagonal p-values are annotated.
    """
    if feature not in FEATURES:
        raise ValueError(f"unknown feature {feature!r}; choose from {', '.join(FEATURES)}")
    boxes = group_summaries(table, feature)
    if not boxes:
        raise ValueError("feature table is empty")
    left, right, top, bottom = 70, 20, 60, 60
    plot_w = width - left - right
    plot_h = height - top - bottom
    lo = min(b.min for b in boxes)
    hi = max(b.max for b in boxes)
    if hi == lo:
        lo, hi = lo - 1.0, hi + 1.0
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad

    def y(v):
        return top + plot_h * (hi - v) / (hi - lo)

    slot = plot_w / len(boxes)
    half = min(18.0, slot * 0.3)
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<title>{escape(feature)} by gesture</title>',
        '<rect x="0" y="0" width="100%" height="100%" fill="white"/>',
        f'<line class="axis" x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" stroke="black"/>',
        f'<line class="axis" x1="{left}" y1="{top + plot_h}" x2="{left + plot_w}" '
        f'y2="{top + plot_h}" stroke="black"/>',
    ]
    for i in range(5):
        v = lo + (hi - lo) * i / 4
        out.append(f'<text class="tick" x="{left - 6}" y="{y(v) + 4:.2f}" text-anchor="end">{v:.3g}</text>')
    for i, b in enumerate(boxes):
        cx = left + slot * (i + 0.5)
        attrs = (f'data-gesture="{b.group}" data-n="{b.n}" data-min="{_fmt(b.min)}" '
                 f'data-q1="{_fmt(b.q1)}" data-median="{_fmt(b.median)}" data-q3="{_fmt(b.q3)}" '
                 f'data-max="{_fmt(b.max)}"')
        out.append(f'<g class="box" {attrs}>')
        out.append(f'<line class="whisker" x1="{cx:.2f}" y1="{y(b.whisker_low):.2f}" '
                   f'x2="{cx:.2f}" y2="{y(b.q1):.2f}" stroke="black" stroke-dasharray="4,2"/>')
        out.append(f'<line class="whisker" x1="{cx:.2f}" y1="{y(b.q3):.2f}" '
                   f'x2="{cx:.2f}" y2="{y(b.whisker_high):.2f}" stroke="black" stroke-dasharray="4,2"/>')
        for w in (b.whisker_low, b.whisker_high):
            out.append(f'<line class="cap" x1="{cx - half / 2:.2f}" y1="{y(w):.2f}" '
                       f'x2="{cx + half / 2:.2f}" y2="{y(w):.2f}" stroke="black"/>')
        if b.q3 > b.q1:
            out.append(f'<rect class="iqr" x="{cx - half:.2f}" y="{y(b.q3):.2f}" width="{2 * half:.2f}" '
                       f'height="{y(b.q1) - y(b.q3):.2f}" fill="none" stroke="#1f4e9c"/>')
        else:
            out.append(f'<line class="iqr degenerate" x1="{cx - half:.2f}" y1="{y(b.q1):.2f}" '
                       f'x2="{cx + half:.2f}" y2="{y(b.q1):.2f}" stroke="#1f4e9c"/>')
        out.append(f'<line class="median" x1="{cx - half:.2f}" y1="{y(b.median):.2f}" '
                   f'x2="{cx + half:.2f}" y2="{y(b.median):.2f}" stroke="#c0392b" stroke-width="2"/>')
        for o in b.outliers:
            out.append(f'<circle class="outlier" cx="{cx:.2f}" cy="{y(o):.2f}" r="2.5" '
                       f'fill="none" stroke="#c0392b"/>')
        out.append(f'<text class="label" x="{cx:.2f}" y="{top + plot_h + 18}" '
                   f'text-anchor="middle">{b.group}</text>')
        out.append('</g>')
    out.append(f'<text class="title" x="{left}" y="22" font-size="15">{escape(feature)}</text>')
    if overall_p is not None:
        out.append(f'<text class="p-overall" x="{left}" y="42">Kruskal-Wallis p = {_pfmt(overall_p)}</text>')
    if pairwise is not None:
        gestures, P = pairwise
        iu = np.triu_indices(len(gestures), 1)
        if iu[0].size:
            vals = np.asarray(P)[iu]
            kmin, kmax = int(np.argmin(vals)), int(np.argmax(vals))
            a, b = gestures[iu[0][kmin]], gestures[iu[1][kmin]]
            out.append(f'<text class="p-min" x="{left + plot_w}" y="22" text-anchor="end">'
                       f'min pairwise p = {_pfmt(vals[kmin])} ({a}-{b})</text>')
            a, b = gestures[iu[0][kmax]], gestures[iu[1][kmax]]
            out.append(f'<text class="p-max" x="{left + plot_w}" y="42" text-anchor="end">'
                       f'max pairwise p = {_pfmt(vals[kmax])} ({a}-{b})</text>')
    out.append('</svg>')
    return "\n".join(out) + "\n"
