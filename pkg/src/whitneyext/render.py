"""Deterministic SVG rendering of coverings, chains and shadows."""

from __future__ import annotations

import io

from .chains import Chain
from .covering import CoveringFamily, computation_box

_SCALE = 600.0


def _fmt(x: float) -> str:
    return f"{x:.6f}"


class _Canvas:
    def __init__(self, lo, hi):
        self.lo = lo
        self.span = float(max(hi[0] - lo[0], hi[1] - lo[1]))
        self.buf = io.StringIO()

    def map(self, x, y):
        # flip the vertical axis into SVG screen coordinates
        return (
            (x - self.lo[0]) / self.span * _SCALE,
            _SCALE - (y - self.lo[1]) / self.span * _SCALE,
        )

    def rect(self, lo, hi, fill, stroke, width=0.5, opacity=None):
        x0, y1 = self.map(lo[0], lo[1])
        x1, y0 = self.map(hi[0], hi[1])
        extra = f' fill-opacity="{opacity}"' if opacity is not None else ""
        self.buf.write(
            f'<rect x="{_fmt(x0)}" y="{_fmt(y0)}" width="{_fmt(x1 - x0)}" '
            f'height="{_fmt(y1 - y0)}" fill="{fill}" stroke="{stroke}" '
            f'stroke-width="{width}"{extra}/>\n'
        )

    def line(self, a, b, stroke, width=0.6):
        x0, y0 = self.map(*a)
        x1, y1 = self.map(*b)
        self.buf.write(
            f'<line x1="{_fmt(x0)}" y1="{_fmt(y0)}" x2="{_fmt(x1)}" y2="{_fmt(y1)}" '
            f'stroke="{stroke}" stroke-width="{width}"/>\n'
        )

    def circle(self, c, r, stroke):
        x, y = self.map(*c)
        self.buf.write(
            f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(r / self.span * _SCALE)}" '
            f'fill="none" stroke="{stroke}" stroke-width="1.0" stroke-dasharray="4 3"/>\n'
        )


def render_svg(
    fam: CoveringFamily,
    path: str,
    chain: Chain | None = None,
    shadow: tuple | None = None,
    sym_links: bool = True,
) -> None:
    """Write the covering figure: interior cubes outlined, exterior gray,
    symmetrized cubes colored and linked, optional chain and shadow."""
    lo, hi, _ = computation_box(fam.oracle, fam.box_factor)
    cv = _Canvas(lo, hi)

    for c in sorted(fam.w2, key=lambda c: c.key()):
        if c in fam.w4:
            fill = "#b9c6d6"
        elif c in fam.w3:
            fill = "#a8cdee"
        elif c in fam.w3p:
            fill = "#cfe2f3"
        else:
            fill = "#e0e0e0"
        cv.rect(*c.box(), fill=fill, stroke="#9a9a9a", width=0.3)
    for c in fam.w1:
        cv.rect(*c.box(), fill="#ffffff", stroke="#444444", width=0.5)

    if sym_links:
        for q in sorted(fam.w3, key=lambda c: c.key()):
            cv.line(q.center, fam.sym[q].center, stroke="#7aa4c8", width=0.35)

    if shadow is not None:
        cubes, ball = shadow
        for c in sorted(cubes, key=lambda c: c.key()):
            cv.rect(*c.box(), fill="#f4c97b", stroke="#b07f28", width=0.5, opacity="0.8")
        cv.circle(ball[0], ball[1], stroke="#b07f28")

    if chain is not None:
        for c in chain.cubes:
            cv.rect(*c.box(), fill="none", stroke="#c0392b", width=1.4)
        for a, b in zip(chain.cubes, chain.cubes[1:]):
            cv.line(a.center, b.center, stroke="#c0392b", width=1.0)
        cv.rect(*chain.central.box(), fill="#e74c3c", stroke="#922b21", width=1.4, opacity="0.45")

    body = cv.buf.getvalue()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {_SCALE:g} {_SCALE:g}" '
            f'width="{_SCALE:g}" height="{_SCALE:g}">\n'
        )
        fh.write(f'<rect x="0" y="0" width="{_SCALE:g}" height="{_SCALE:g}" fill="#fbfbfb"/>\n')
        fh.write(body)
        fh.write("</svg>\n")
