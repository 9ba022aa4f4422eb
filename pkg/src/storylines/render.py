"""Deterministic SVG rendering of storyline drawings.

Layers become equally spaced columns; a character's row at a column is its
position in that layer's permutation.  Character curves are x-monotone:
straight polylines in the ``orthogonal`` style (whose pairwise segment
intersections equal the combinatorial crossing count) or cubic S-curves in
the ``smooth`` style.  Interactions appear as vertical gray bars spanning
their members.  Output bytes depend only on the inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import Drawing, DrawingError, StorylineInstance, validate

_PALETTE = (
    "#4269d0", "#efb118", "#ff725c", "#6cc5b0", "#3ca951",
    "#ff8ab7", "#a463f2", "#97bbf5", "#9c6b4e", "#9498a0",
)


@dataclass(frozen=True)
class RenderSpec:
    """Geometry and styling of the rendered drawing."""

    column_width: float = 70.0
    row_gap: float = 24.0
    curve: str = "orthogonal"  # or "smooth"
    bar_width: float = 8.0
    labels: bool = True
    margin: float = 40.0
    stroke_width: float = 2.4

    def __post_init__(self):
        if min(self.column_width, self.row_gap, self.bar_width, self.margin, self.stroke_width) <= 0:
            raise ValueError("geometry values must be positive")
        if self.curve not in ("orthogonal", "smooth"):
            raise ValueError(f"unknown curve style {self.curve!r}")


def _fmt(value: float) -> str:
    return f"{value:.2f}"


def render_svg(inst: StorylineInstance, d: Drawing, spec: RenderSpec | None = None) -> str:
    """SVG document text for a feasible drawing; deterministic per input."""
    spec = spec or RenderSpec()
    bad = validate(inst, d)
    if bad:
        raise DrawingError(bad)

    def x(i: int) -> float:
        return spec.margin + i * spec.column_width

    def y(i: int, c: int) -> float:
        return spec.margin + d.perms[i].index(c) * spec.row_gap

    label_pad = 110.0 if spec.labels else 0.0
    width = 2 * spec.margin + (inst.n_layers - 1) * spec.column_width + label_pad
    height = 2 * spec.margin + (max(len(p) for p in d.perms) - 1) * spec.row_gap
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(width)}" height="{_fmt(height)}" '
        f'viewBox="0 0 {_fmt(width)} {_fmt(height)}">',
        f'<rect width="{_fmt(width)}" height="{_fmt(height)}" fill="white"/>',
    ]

    out.append('<g fill="#c4c4c4">')
    for idx, inter in enumerate(inst.interactions):
        ys = sorted(y(inter.time, c) for c in inter.chars)
        pad = spec.row_gap * 0.35
        out.append(
            f'<rect x="{_fmt(x(inter.time) - spec.bar_width / 2)}" y="{_fmt(ys[0] - pad)}" '
            f'width="{_fmt(spec.bar_width)}" height="{_fmt(ys[-1] - ys[0] + 2 * pad)}" '
            f'data-interaction="{idx}"/>'
        )
    out.append("</g>")

    for c in range(inst.n_chars):
        s, e = inst.activity[c]
        color = _PALETTE[c % len(_PALETTE)]
        pts = [(x(i), y(i, c)) for i in range(s, e + 1)]
        if spec.curve == "orthogonal" or len(pts) == 1:
            body = " ".join(f"{_fmt(px)},{_fmt(py)}" for px, py in pts)
            out.append(
                f'<polyline points="{body}" fill="none" stroke="{color}" '
                f'stroke-width="{_fmt(spec.stroke_width)}" data-char="{c}"/>'
            )
        else:
            parts = [f"M {_fmt(pts[0][0])} {_fmt(pts[0][1])}"]
            for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
                mid = (x0 + x1) / 2
                parts.append(f"C {_fmt(mid)} {_fmt(y0)} {_fmt(mid)} {_fmt(y1)} {_fmt(x1)} {_fmt(y1)}")
            out.append(
                f'<path d="{" ".join(parts)}" fill="none" stroke="{color}" '
                f'stroke-width="{_fmt(spec.stroke_width)}" data-char="{c}"/>'
            )
        if spec.labels:
            lx, ly = pts[-1]
            out.append(
                f'<text x="{_fmt(lx + 6)}" y="{_fmt(ly + 4)}" font-family="sans-serif" '
                f'font-size="12" fill="{color}">{_escape(inst.name_of(c))}</text>'
            )

    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
