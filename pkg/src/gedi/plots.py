"""Minimal SVG line plots of intelligibility curves.

Written by hand so the batch runner needs no plotting library. Each plot
shows percent correct against SNR with one series per algorithm, error
bars of one standard deviation and a dashed 50% reference line.
"""
from __future__ import annotations

import os
from typing import Dict, List, Sequence, Tuple
from xml.sax.saxutils import escape

import numpy as np

# (snr_db, mean, sd) triples per series label
Series = Dict[str, Sequence[Tuple[float, float, float]]]

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
           "#e377c2", "#7f7f7f")
WIDTH, HEIGHT = 560, 400
MARGIN = dict(left=60, right=150, top=40, bottom=50)


def _fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".")


def curve_svg(series: Series, title: str = "") -> str:
    """Render `series` as an SVG document string."""
    if not series or not any(len(pts) for pts in series.values()):
        raise ValueError("nothing to plot: empty summary")
    snrs = np.array([p[0] for pts in series.values() for p in pts], dtype=float)
    x_lo, x_hi = float(snrs.min()), float(snrs.max())
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 1.0, x_hi + 1.0
    pad = 0.05 * (x_hi - x_lo)
    x_lo, x_hi = x_lo - pad, x_hi + pad
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def sx(v):
        return MARGIN["left"] + (v - x_lo) / (x_hi - x_lo) * pw

    def sy(v):
        return MARGIN["top"] + (1.0 - min(max(v, 0.0), 100.0) / 100.0) * ph

    out: List[str] = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2 - MARGIN["right"] / 2:.1f}" y="22" text-anchor="middle" '
        f'font-size="14">{escape(title)}</text>',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
        'fill="none" stroke="black"/>',
    ]
    for pc in range(0, 101, 20):
        y = sy(pc)
        out.append(f'<line x1="{MARGIN["left"] - 4}" y1="{y:.1f}" x2="{MARGIN["left"]}" '
                   f'y2="{y:.1f}" stroke="black"/>')
        out.append(f'<text x="{MARGIN["left"] - 7}" y="{y + 4:.1f}" text-anchor="end">{pc}</text>')
    for snr in sorted(set(snrs.tolist())):
        x = sx(snr)
        base = MARGIN["top"] + ph
        out.append(f'<line x1="{x:.1f}" y1="{base}" x2="{x:.1f}" y2="{base + 4}" stroke="black"/>')
        out.append(f'<text x="{x:.1f}" y="{base + 18}" text-anchor="middle">{_fmt(snr)}</text>')
    out.append(f'<text x="{MARGIN["left"] + pw / 2:.1f}" y="{HEIGHT - 10}" '
               'text-anchor="middle">SNR (dB)</text>')
    out.append(f'<text transform="translate(16 {MARGIN["top"] + ph / 2:.1f}) rotate(-90)" '
               'text-anchor="middle">Percent correct (%)</text>')
    y50 = sy(50.0)
    out.append(f'<line class="srt-line" x1="{MARGIN["left"]}" y1="{y50:.1f}" '
               f'x2="{MARGIN["left"] + pw}" y2="{y50:.1f}" stroke="gray" stroke-dasharray="6 4"/>')

    for idx, (label, pts) in enumerate(series.items()):
        color = PALETTE[idx % len(PALETTE)]
        pts = sorted(pts)
        out.append(f'<g class="series" data-label="{escape(label)}">')
        if len(pts) > 1:
            path = " ".join(f"{sx(s):.1f},{sy(m):.1f}" for s, m, _ in pts)
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.5"/>')
            for s, m, sd in pts:
                if sd > 0:
                    x = sx(s)
                    out.append(f'<line class="errbar" x1="{x:.1f}" y1="{sy(m - sd):.1f}" '
                               f'x2="{x:.1f}" y2="{sy(m + sd):.1f}" stroke="{color}"/>')
        for s, m, _ in pts:
            out.append(f'<circle cx="{sx(s):.1f}" cy="{sy(m):.1f}" r="3" fill="{color}"/>')
        ly = MARGIN["top"] + 10 + 18 * idx
        lx = WIDTH - MARGIN["right"] + 12
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 18}" y2="{ly}" stroke="{color}" '
                   'stroke-width="2"/>')
        out.append(f'<text x="{lx + 24}" y="{ly + 4}">{escape(label)}</text>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_curve_svg(path, series: Series, title: str = "") -> str:
    text = curve_svg(series, title)
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return str(path)
