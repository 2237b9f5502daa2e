"""
SVG figures: ratio curves over the swept dimension and labelled scatter plots

Pixel mapping (both figure kinds): the plot area spans
x in [MARGIN_LEFT, WIDTH - MARGIN_RIGHT] and y in [MARGIN_TOP, HEIGHT - MARGIN_BOTTOM];
a data point (u, v) with axis ranges [u0, u1] x [v0, v1] lands at

    px = MARGIN_LEFT + (u - u0) / (u1 - u0) * PLOT_WIDTH
    py = HEIGHT - MARGIN_BOTTOM - (v - v0) / (v1 - v0) * PLOT_HEIGHT

Ratio curves use u = log_base(d'), u-range [min u, max u] (padded by 0.5 on
each side when all points share one d'), and v-range [0, max(1.2, 1.05 * max ratio)].
Scatter plots use the data bounding box widened by 5% per side, falling back
to a unit box around the centre when an axis has zero extent.
"""
import logging
import math
import xml.etree.ElementTree as ET
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from src.errors import AlignmentError, ParameterError
from src.models.records import FigureSeries, FigureSpec, RatioRow

logger = logging.getLogger(__name__)

SVG_NS = "http://www.w3.org/2000/svg"

WIDTH = 640
HEIGHT = 420
MARGIN_LEFT = 60
MARGIN_RIGHT = 150
MARGIN_TOP = 40
MARGIN_BOTTOM = 50
PLOT_WIDTH = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
PLOT_HEIGHT = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

TIME_COLOR = "#2ca02c"
ACCURACY_COLOR = "#d62728"
PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)
REDUCER_NAMES = {"random_projection": "random projection", "pca": "PCA", "none": "baseline"}
SCATTER_MARGIN = 0.05
POINT_RADIUS = 2.5


def _fmt(value: float) -> str:
    return f"{value:.2f}"


def _pixel(u: float, v: float, u_range: tuple[float, float], v_range: tuple[float, float]) -> tuple[float, float]:
    px = MARGIN_LEFT + (u - u_range[0]) / (u_range[1] - u_range[0]) * PLOT_WIDTH
    py = HEIGHT - MARGIN_BOTTOM - (v - v_range[0]) / (v_range[1] - v_range[0]) * PLOT_HEIGHT
    return px, py


def _root(width: int, height: int) -> ET.Element:
    return ET.Element(
        "svg",
        xmlns=SVG_NS,
        version="1.1",
        width=str(width),
        height=str(height),
        viewBox=f"0 0 {width} {height}",
    )


def _text(parent: ET.Element, x: float, y: float, content: str, anchor: str = "middle", size: int = 11, **attrs):
    node = ET.SubElement(parent, "text", x=_fmt(x), y=_fmt(y), attrib={
        "text-anchor": anchor, "font-size": str(size), "font-family": "sans-serif", **attrs,
    })
    node.text = content
    return node


def _frame(parent: ET.Element, spec: FigureSpec):
    ET.SubElement(
        parent, "rect",
        x=str(MARGIN_LEFT), y=str(MARGIN_TOP), width=str(PLOT_WIDTH), height=str(PLOT_HEIGHT),
        fill="none", stroke="#444444",
    )
    if spec.title:
        _text(parent, MARGIN_LEFT + PLOT_WIDTH / 2, MARGIN_TOP / 2 + 4, spec.title, size=14)
    if spec.x_label:
        _text(parent, MARGIN_LEFT + PLOT_WIDTH / 2, HEIGHT - 10, spec.x_label)
    if spec.y_label:
        label_y = MARGIN_TOP + PLOT_HEIGHT / 2
        _text(parent, 16, label_y, spec.y_label, transform=f"rotate(-90 16 {_fmt(label_y)})")


def ratio_axes(spec: FigureSpec) -> tuple[tuple[float, float], tuple[float, float]]:
    """(u-range, v-range) of a ratio_curves figure"""
    us = [spec.x_transform(x) for s in spec.series for x, _ in s.points]
    vs = [v for s in spec.series for _, v in s.points]
    u0, u1 = min(us), max(us)
    if u1 == u0:
        u0, u1 = u0 - 0.5, u1 + 0.5
    return (u0, u1), (0.0, max(1.2, 1.05 * max(vs)))


def scatter_axes(points: np.ndarray) -> tuple[tuple[float, float], tuple[float, float]]:
    """(x-range, y-range) of a scatter figure"""
    ranges = []
    for axis in range(2):
        lo, hi = float(points[:, axis].min()), float(points[:, axis].max())
        if hi == lo:
            lo, hi = lo - 0.5, hi + 0.5
        pad = SCATTER_MARGIN * (hi - lo)
        ranges.append((lo - pad, hi + pad))
    return ranges[0], ranges[1]


def ratio_figure_spec(table: Sequence[RatioRow], log_base: float = 1.5, title: str = "") -> FigureSpec:
    """
    Describe time and accuracy ratio curves, one pair per reducer

    PCA curves are dashed so they can share a figure with random projection.
    """
    if not table:
        raise ParameterError("Cannot plot an empty ratio table")
    series = []
    for reducer in sorted({row.reducer for row in table}, key=lambda r: (r != "random_projection", r)):
        rows = sorted((r for r in table if r.reducer == reducer), key=lambda r: r.d_prime)
        name = REDUCER_NAMES.get(reducer, reducer)
        dashed = reducer == "pca"
        series.append(FigureSeries(
            name=f"time ratio ({name})",
            points=[(r.d_prime, r.time_ratio) for r in rows],
            color=TIME_COLOR,
            dashed=dashed,
        ))
        series.append(FigureSeries(
            name=f"accuracy ratio ({name})",
            points=[(r.d_prime, r.accuracy_ratio) for r in rows],
            color=ACCURACY_COLOR,
            dashed=dashed,
        ))
    return FigureSpec(
        kind="ratio_curves",
        title=title,
        x_label="dimension after reduction",
        y_label="ratio to unreduced",
        log_base=log_base,
        series=series,
    )


def _render_ratio(spec: FigureSpec) -> ET.Element:
    root = _root(WIDTH, HEIGHT)
    _frame(root, spec)
    u_range, v_range = ratio_axes(spec)

    for d_prime in sorted({x for s in spec.series for x, _ in s.points}):
        px, _ = _pixel(spec.x_transform(d_prime), 0.0, u_range, v_range)
        ET.SubElement(root, "line", x1=_fmt(px), y1=str(HEIGHT - MARGIN_BOTTOM),
                      x2=_fmt(px), y2=str(HEIGHT - MARGIN_BOTTOM + 5), stroke="#444444")
        _text(root, px, HEIGHT - MARGIN_BOTTOM + 18, f"{d_prime:g}", size=9)

    step = 0.2 if v_range[1] <= 2.0 else 0.5 * math.ceil(v_range[1] / 5.0)
    tick = 0.0
    while tick <= v_range[1] + 1e-9:
        _, py = _pixel(u_range[0], tick, u_range, v_range)
        ET.SubElement(root, "line", x1=str(MARGIN_LEFT - 5), y1=_fmt(py),
                      x2=str(MARGIN_LEFT), y2=_fmt(py), stroke="#444444")
        _text(root, MARGIN_LEFT - 8, py + 3, f"{tick:.1f}", anchor="end", size=9)
        tick += step

    _, ref_y = _pixel(u_range[0], 1.0, u_range, v_range)
    ET.SubElement(root, "line", x1=str(MARGIN_LEFT), y1=_fmt(ref_y), x2=str(MARGIN_LEFT + PLOT_WIDTH),
                  y2=_fmt(ref_y), stroke="#999999", attrib={"stroke-dasharray": "2,3"})

    legend_x = MARGIN_LEFT + PLOT_WIDTH + 10
    for index, s in enumerate(spec.series):
        coords = [_pixel(spec.x_transform(x), v, u_range, v_range) for x, v in s.points]
        attrs = {"fill": "none", "stroke": s.color, "stroke-width": "2"}
        if s.dashed:
            attrs["stroke-dasharray"] = "6,4"
        ET.SubElement(root, "polyline", points=" ".join(f"{_fmt(px)},{_fmt(py)}" for px, py in coords),
                      attrib=attrs)
        legend_y = MARGIN_TOP + 12 + 16 * index
        legend_attrs = {"stroke": s.color, "stroke-width": "2"}
        if s.dashed:
            legend_attrs["stroke-dasharray"] = "6,4"
        ET.SubElement(root, "line", x1=_fmt(legend_x), y1=_fmt(legend_y), x2=_fmt(legend_x + 18),
                      y2=_fmt(legend_y), attrib=legend_attrs)
        _text(root, legend_x + 22, legend_y + 3, s.name, anchor="start", size=9)
    return root


def scatter_figure_spec(Y: np.ndarray, labels: Sequence[int], title: str = "") -> FigureSpec:
    """Describe a scatter plot of a 2-D embedding coloured by label"""
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2 or Y.shape[1] != 2:
        raise ParameterError(f"Scatter plots need N x 2 coordinates, got shape {Y.shape}")
    labels = [int(label) for label in np.asarray(labels).reshape(-1)]
    if len(labels) != Y.shape[0]:
        raise AlignmentError(f"{len(labels)} labels for {Y.shape[0]} points")
    return FigureSpec(
        kind="scatter",
        title=title,
        series=[FigureSeries(name="points", points=[(float(x), float(y)) for x, y in Y])],
        labels=labels,
    )


def _render_scatter(spec: FigureSpec, parent: Optional[ET.Element] = None) -> ET.Element:
    root = parent if parent is not None else _root(WIDTH - MARGIN_RIGHT + MARGIN_LEFT, HEIGHT)
    _frame(root, spec)
    points = np.array(spec.series[0].points, dtype=np.float64).reshape(-1, 2)
    if points.shape[0] == 0:
        return root
    x_range, y_range = scatter_axes(points)
    for (x, y), label in zip(points, spec.labels):
        px, py = _pixel(x, y, x_range, y_range)
        ET.SubElement(root, "circle", cx=_fmt(px), cy=_fmt(py), r=str(POINT_RADIUS),
                      fill=PALETTE[label % len(PALETTE)])
    return root


def render_figure(spec: FigureSpec) -> ET.Element:
    """Build the SVG element tree for a FigureSpec"""
    if spec.kind == "ratio_curves":
        return _render_ratio(spec)
    return _render_scatter(spec)


def to_svg_text(root: ET.Element) -> str:
    """Serialize with an XML declaration"""
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding="unicode") + "\n"


def emit_ratio_figure(table: Sequence[RatioRow], log_base: float = 1.5, title: str = "") -> str:
    """
    Ratio curves as a self-contained SVG document

    Green polylines show time ratios and red polylines accuracy ratios, one
    polyline per series; a dotted line marks ratio 1.

    Args:
        table: RatioRows (one or more reducers)
        log_base: Base of the logarithmic x axis
        title: Figure title

    Returns:
        SVG document text
    """
    return to_svg_text(render_figure(ratio_figure_spec(table, log_base, title)))


def emit_scatter_figure(Y, labels: Sequence[int], title: str = "") -> str:
    """
    Scatter plot of an embedding, one circle per point coloured by label

    Args:
        Y: N x 2 coordinates (or an object with a ``coords`` attribute)
        labels: Label per point
        title: Figure title

    Returns:
        SVG document text
    """
    coords = getattr(Y, "coords", Y)
    return to_svg_text(render_figure(scatter_figure_spec(coords, labels, title)))


def emit_scatter_panels(panels: Sequence[tuple[str, np.ndarray, Sequence[int]]]) -> str:
    """
    Several scatter plots side by side in one SVG

    Args:
        panels: (title, N x 2 coordinates, labels) per panel, left to right

    Returns:
        SVG document text
    """
    if not panels:
        raise ParameterError("Need at least one panel")
    panel_width = WIDTH - MARGIN_RIGHT + MARGIN_LEFT
    root = _root(panel_width * len(panels), HEIGHT)
    for index, (title, coords, labels) in enumerate(panels):
        group = ET.SubElement(root, "g", transform=f"translate({index * panel_width} 0)")
        _render_scatter(scatter_figure_spec(getattr(coords, "coords", coords), labels, title), group)
    return to_svg_text(root)


def write_svg(document: Union[str, ET.Element], path: str) -> str:
    """Write an SVG document to ``path``"""
    text = document if isinstance(document, str) else to_svg_text(document)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)
    logger.info(f"Wrote figure {path}")
    return path
