"""Dependency-free SVG line charts."""

from __future__ import annotations

from html import escape
from typing import Dict

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def accuracy_svg(series: Dict[str, Dict[float, float]], title: str, width: int = 640, height: int = 400) -> str:
    """Accuracy (y, fixed to [0, 1]) against budget (x), one polyline per method."""
    left, right, top, bottom = 60, 150, 40, 50
    pw, ph = width - left - right, height - top - bottom
    xs = sorted({e for per in series.values() for e in per})
    x0, x1 = (xs[0], xs[-1]) if xs else (0.0, 1.0)
    span = (x1 - x0) or 1.0

    def px(e):
        return left + pw * (e - x0) / span

    def py(a):
        return top + ph * (1.0 - a)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{left + pw / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
           f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>']
    for k in range(6):
        a = k / 5
        out.append(f'<line x1="{left}" y1="{py(a):.1f}" x2="{left + pw}" y2="{py(a):.1f}" stroke="#ddd"/>')
        out.append(f'<text x="{left - 6}" y="{py(a) + 4:.1f}" text-anchor="end">{a:.1f}</text>')
    for e in xs:
        out.append(f'<text x="{px(e):.1f}" y="{top + ph + 18}" text-anchor="middle">{e:g}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 10}" text-anchor="middle">budget e</text>')
    out.append(f'<text x="16" y="{top + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {top + ph / 2:.1f})">accuracy</text>')
    for k, (name, per) in enumerate(series.items()):
        color = PALETTE[k % len(PALETTE)]
        pts = " ".join(f"{px(e):.1f},{py(a):.1f}" for e, a in sorted(per.items()))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>')
        for e, a in sorted(per.items()):
            out.append(f'<circle cx="{px(e):.1f}" cy="{py(a):.1f}" r="3" fill="{color}"/>')
        ly = top + 16 * k + 8
        out.append(f'<line x1="{left + pw + 12}" y1="{ly}" x2="{left + pw + 32}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 38}" y="{ly + 4}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
