import re

import pytest

from storylines.core import Drawing, StorylineInstance, total_crossings
from storylines.generate import random_corpus, random_drawing
from storylines.render import RenderSpec, render_svg

_POLYLINE = re.compile(r'<polyline points="([^"]+)"[^>]*data-char="(\d+)"')


def _curves(svg: str) -> dict[int, list[tuple[float, float]]]:
    out = {}
    for match in _POLYLINE.finditer(svg):
        pts = [tuple(map(float, p.split(","))) for p in match.group(1).split()]
        out[int(match.group(2))] = pts
    return out


def _segments_cross(a0, a1, b0, b1) -> bool:
    """Proper intersection of two segments by orientation tests."""

    def orient(p, q, r):
        val = (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
        return (val > 1e-9) - (val < -1e-9)

    return (
        orient(a0, a1, b0) * orient(a0, a1, b1) < 0
        and orient(b0, b1, a0) * orient(b0, b1, a1) < 0
    )


class TestRenderSvg:
    def test_single_character_is_one_curve_without_bars(self):
        inst = StorylineInstance(3, ((0, 2),), ())
        svg = render_svg(inst, Drawing(((0,), (0,), (0,))))
        assert svg.count("<polyline") == 1
        assert "data-interaction" not in svg

    def test_byte_identical_across_runs(self):
        inst = random_corpus(1, seed=263)[0]
        d = random_drawing(inst, seed=3)
        for spec in (RenderSpec(), RenderSpec(curve="smooth", labels=False)):
            assert render_svg(inst, d, spec) == render_svg(inst, d, spec)

    def test_invalid_geometry_rejected(self):
        with pytest.raises(ValueError):
            RenderSpec(column_width=0)
        with pytest.raises(ValueError):
            RenderSpec(curve="spline")

    def test_bar_count_matches_interactions(self):
        inst = random_corpus(1, seed=269)[0]
        svg = render_svg(inst, random_drawing(inst, seed=4))
        assert svg.count("data-interaction") == inst.n_interactions

    def test_smooth_style_uses_paths(self):
        inst = StorylineInstance(3, ((0, 2), (0, 2)), ())
        svg = render_svg(inst, Drawing(((0, 1), (1, 0), (0, 1))), RenderSpec(curve="smooth"))
        assert "<path" in svg

    def test_geometric_intersections_equal_crossing_count(self):
        # straight-segment curves: count pairwise segment crossings per gap
        for k, inst in enumerate(random_corpus(10, seed=271)):
            d = random_drawing(inst, seed=k)
            svg = render_svg(inst, d, RenderSpec(curve="orthogonal", labels=False))
            curves = _curves(svg)
            spec = RenderSpec()
            count = 0
            for g in range(inst.n_layers - 1):
                x0 = spec.margin + g * spec.column_width
                for c1 in sorted(curves):
                    for c2 in sorted(curves):
                        if c1 >= c2:
                            continue
                        seg1 = [p for p in curves[c1] if x0 <= p[0] <= x0 + spec.column_width]
                        seg2 = [p for p in curves[c2] if x0 <= p[0] <= x0 + spec.column_width]
                        if len(seg1) == 2 and len(seg2) == 2:
                            if _segments_cross(seg1[0], seg1[1], seg2[0], seg2[1]):
                                count += 1
            assert count == total_crossings(inst, d).total
