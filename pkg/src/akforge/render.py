"""Deterministic SVG rendering of a stage-pair slice decomposition.

The figure shows the unit torus square: vertical gridlines at the
width-1/q_{n+1} slices, horizontal gridlines at the 1/q_n cells, the
oblique graph of x -> a_{n+1} x mod 1, and the b_{n+1} stacked components
shaded with their (l, k, r, f) labels.

Coordinates are exact rationals scaled to a 1000-unit viewBox and rounded
half-even to 3 decimals through integer arithmetic only, so the output is
byte-identical across platforms.
"""

from __future__ import annotations

from fractions import Fraction
from typing import List

from .partitions import RnDecomposition

_PALETTE = ["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3",
            "#937860", "#da8bc3", "#8c8c8c", "#ccb974", "#64b5cd"]

VIEW = 1000


def svg_coord(f: Fraction) -> str:
    """1000 * f rounded half-even to 3 decimals, integer arithmetic only."""
    milli = round(Fraction(f) * VIEW * 1000)    # Fraction.__round__ is half-even
    sign = "-" if milli < 0 else ""
    milli = abs(milli)
    whole, frac = divmod(milli, 1000)
    if frac == 0:
        return f"{sign}{whole}"
    return f"{sign}{whole}.{frac:03d}".rstrip("0").rstrip(".")


def _y(f: Fraction) -> str:
    return svg_coord(1 - Fraction(f))        # SVG y axis points down


def render_decomposition(dec: RnDecomposition, max_gridlines: int = 256) -> str:
    """SVG text for the decomposition of R = K([0, 1/q_n)); deterministic."""
    q, q_next = dec.q, dec.q_next
    a_next = dec.a_next
    lines: List[str] = []
    lines.append('<?xml version="1.0" encoding="UTF-8"?>')
    lines.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="-80 -40 {VIEW + 160} '
        f'{VIEW + 120}" font-family="monospace" font-size="22">')
    lines.append(f'<rect x="0" y="0" width="{VIEW}" height="{VIEW}" '
                 'fill="#ffffff" stroke="#000000" stroke-width="2"/>')

    # shaded components (vertical factor bands)
    for idx, c in enumerate(dec.components):
        lo = c.lo(q, q_next) % 1
        hi = lo + Fraction(c.f, q_next)
        color = _PALETTE[idx % len(_PALETTE)]
        y_top = _y(hi)
        h = svg_coord(hi - lo)
        lines.append(
            f'<rect x="0" y="{y_top}" width="{VIEW}" height="{h}" '
            f'fill="{color}" fill-opacity="0.35" stroke="none"/>')
        label = f'l={c.l} k={c.k} r={c.r} f={c.f}'
        lines.append(
            f'<text x="{VIEW + 8}" y="{_y((lo + hi) / 2)}" '
            f'fill="{color}" dominant-baseline="middle">{label}</text>')

    # slice gridlines
    if q_next <= max_gridlines:
        for i in range(1, q_next):
            x = svg_coord(Fraction(i, q_next))
            lines.append(f'<line x1="{x}" y1="0" x2="{x}" y2="{VIEW}" '
                         'stroke="#bbbbbb" stroke-width="0.5"/>')
    # cell gridlines
    if q <= max_gridlines:
        for j in range(1, q):
            y = svg_coord(Fraction(j, q))
            lines.append(f'<line x1="0" y1="{y}" x2="{VIEW}" y2="{y}" '
                         'stroke="#666666" stroke-width="1"/>')

    # graph of x -> a_{n+1} x mod 1 (a_next oblique segments)
    a_mod = a_next % q_next if a_next % q_next else q_next
    for j in range(a_mod):
        x0 = Fraction(j, a_mod)
        x1 = Fraction(j + 1, a_mod)
        lines.append(
            f'<line x1="{svg_coord(x0)}" y1="{_y(0)}" '
            f'x2="{svg_coord(x1)}" y2="{_y(1)}" '
            'stroke="#222222" stroke-width="1.5"/>')

    # source arc [0, 1/q_n) marker under the x axis
    w = svg_coord(Fraction(1, q))
    lines.append(f'<rect x="0" y="{VIEW + 18}" width="{w}" height="14" '
                 'fill="#222222"/>')
    lines.append(f'<text x="0" y="{VIEW + 62}" fill="#222222">'
                 f'source arc width 1/{q}; slices 1/{q_next}; '
                 f'multiplier {a_mod}</text>')
    lines.append('</svg>')
    return "\n".join(lines) + "\n"
