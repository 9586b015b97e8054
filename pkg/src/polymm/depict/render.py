"""SVG drawing and PNG rasterization of a laid-out molecule."""

from __future__ import annotations

import hashlib
import io
import os
import tempfile
import xml.etree.ElementTree as ET
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Mapping

import numpy as np

from polymm.chem import MolecularGraph, parse
from polymm.depict.layout import Layout, layout_2d

DEFAULT_SIZE = 1120
_SVG_NS = "http://www.w3.org/2000/svg"


class RasterBackendUnavailable(RuntimeError):
    """Pillow is not importable; SVG output still works."""


class MalformedSvg(ValueError):
    """The SVG document cannot be parsed or uses unsupported elements."""


@dataclass(frozen=True)
class DepictionStyle:
    """Drawing parameters; lengths are fractions of the bond length unless noted."""

    line_width: float = 0.06
    font_family: str = "sans-serif"
    font_size: float = 0.5
    # fraction of the canvas kept blank on every side
    margin: float = 0.08
    # upper bound on the bond length in pixels, as a fraction of the canvas
    max_bond: float = 0.25
    double_offset: float = 0.18
    triple_offset: float = 0.15


def _style(style: DepictionStyle | Mapping | None) -> DepictionStyle:
    if style is None:
        return DepictionStyle()
    if isinstance(style, DepictionStyle):
        return style
    known = {f.name for f in fields(DepictionStyle)}
    unknown = set(style) - known
    if unknown:
        raise ValueError(f"unknown style keys: {sorted(unknown)}")
    return replace(DepictionStyle(), **dict(style))


def image_stem(canonical: str) -> str:
    """File stem for a molecule's images: SHA-1 of its canonical P-SMILES."""
    return hashlib.sha1(canonical.encode("utf-8")).hexdigest()


def atom_label(graph: MolecularGraph, i: int) -> str | None:
    """Text drawn at an atom, or ``None`` for a plain carbon."""
    a = graph.atoms[i]
    if a.is_wildcard:
        return "*"
    plain_carbon = a.number == 6 and a.charge == 0 and not a.isotope and graph.degree(i) > 0
    if plain_carbon:
        return None
    text = (str(a.isotope) if a.isotope else "") + a.symbol
    if a.total_h:
        text += "H" + (str(a.total_h) if a.total_h > 1 else "")
    if a.charge:
        mag = abs(a.charge)
        text += (str(mag) if mag > 1 else "") + ("+" if a.charge > 0 else "-")
    return text


def _fmt(x: float) -> str:
    s = f"{x:.2f}"
    return "0.00" if s == "-0.00" else s


def _ring_centre(graph: MolecularGraph, pts: np.ndarray, u: int, v: int) -> np.ndarray | None:
    best = None
    for ring in graph.rings:
        if u in ring and v in ring and (best is None or len(ring) < len(best)):
            best = ring
    if best is None:
        return None
    return pts[list(best)].mean(axis=0)


def render_svg(
    graph: MolecularGraph,
    layout: Layout | np.ndarray | None = None,
    size: int = DEFAULT_SIZE,
    style: DepictionStyle | Mapping | None = None,
) -> str:
    """Square SVG document of ``size`` x ``size`` pixels.

    Carbons are drawn as bare vertices; heteroatoms, charged atoms and
    wildcards get text labels.  Aromatic bonds are drawn in their Kekule
    form with the second line inside the ring.
    """
    st = _style(style)
    if layout is None:
        layout = layout_2d(graph)
    coords = layout.coords if isinstance(layout, Layout) else np.asarray(layout, dtype=float)
    n = len(graph.atoms)
    labels = [atom_label(graph, i) for i in range(n)]

    # y axis points down on the canvas
    xy = coords * np.array([1.0, -1.0]) if n else np.zeros((0, 2))
    lo = xy.min(axis=0) - 0.5 if n else np.zeros(2)
    hi = xy.max(axis=0) + 0.5 if n else np.ones(2)
    usable = size * (1 - 2 * st.margin)
    scale = min(usable / max(hi[0] - lo[0], 1e-9), usable / max(hi[1] - lo[1], 1e-9), st.max_bond * size)
    centre = (lo + hi) / 2
    pts = (xy - centre) * scale + size / 2

    stroke = _fmt(st.line_width * scale)
    parts = [
        f'<svg xmlns="{_SVG_NS}" version="1.1" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="#FFFFFF"/>',
    ]
    gap = st.font_size * scale * 0.6

    def line(p: np.ndarray, q: np.ndarray) -> None:
        parts.append(
            f'<line x1="{_fmt(p[0])}" y1="{_fmt(p[1])}" x2="{_fmt(q[0])}" y2="{_fmt(q[1])}" '
            f'stroke="#000000" stroke-width="{stroke}" stroke-linecap="round"/>'
        )

    for b in graph.bonds:
        p, q = pts[b.begin].copy(), pts[b.end].copy()
        d = q - p
        length = float(np.linalg.norm(d))
        if length < 1e-9:
            continue
        u = d / length
        # leave room for labels
        if labels[b.begin] is not None:
            p = p + u * min(gap, 0.4 * length)
        if labels[b.end] is not None:
            q = q - u * min(gap, 0.4 * length)
        normal = np.array([-u[1], u[0]])
        order = b.kekule_order
        if order == 2:
            centre_pt = _ring_centre(graph, pts, b.begin, b.end)
            off = st.double_offset * scale
            if centre_pt is not None:
                side = 1.0 if np.dot(centre_pt - pts[b.begin], normal) > 0 else -1.0
                trim = 0.15 * length
                line(p, q)
                line(p + side * off * normal + u * trim, q + side * off * normal - u * trim)
            else:
                line(p + normal * off / 2, q + normal * off / 2)
                line(p - normal * off / 2, q - normal * off / 2)
        elif order == 3:
            off = st.triple_offset * scale
            line(p, q)
            line(p + normal * off, q + normal * off)
            line(p - normal * off, q - normal * off)
        else:
            line(p, q)

    font_px = _fmt(st.font_size * scale)
    for i, text in enumerate(labels):
        if text is None:
            continue
        parts.append(
            f'<text x="{_fmt(pts[i][0])}" y="{_fmt(pts[i][1])}" font-family="{st.font_family}" '
            f'font-size="{font_px}" fill="#000000" text-anchor="middle" dominant-baseline="central">{text}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _number(el: ET.Element, name: str) -> float:
    try:
        return float(el.attrib[name])
    except (KeyError, ValueError) as exc:
        raise MalformedSvg(f"<{el.tag}> lacks a numeric '{name}'") from exc


def rasterize(svg: str | bytes, size: int = DEFAULT_SIZE, supersample: int = 2) -> bytes:
    """PNG bytes of exactly ``size`` x ``size`` pixels.

    Only the element subset emitted by :func:`render_svg` is supported.

    Raises:
        MalformedSvg: unparsable document or unsupported content.
        RasterBackendUnavailable: Pillow is not installed.
    """
    try:
        from PIL import Image, ImageDraw, ImageFont
    except ImportError as exc:  # pragma: no cover
        raise RasterBackendUnavailable("Pillow is required for PNG output") from exc
    if size < 1:
        raise ValueError("size must be positive")
    try:
        root = ET.fromstring(svg)
    except ET.ParseError as exc:
        raise MalformedSvg(str(exc)) from exc
    if root.tag != f"{{{_SVG_NS}}}svg":
        raise MalformedSvg(f"root element is {root.tag!r}, expected svg")
    view = root.attrib.get("viewBox", "").split()
    if len(view) != 4:
        raise MalformedSvg("missing or invalid viewBox")
    try:
        vx, vy, vw, vh = (float(v) for v in view)
    except ValueError as exc:
        raise MalformedSvg("invalid viewBox") from exc
    if vw <= 0 or vh <= 0:
        raise MalformedSvg("empty viewBox")

    ss = max(1, supersample)
    canvas = size * ss
    fx, fy = canvas / vw, canvas / vh
    image = Image.new("RGB", (canvas, canvas), "white")
    draw = ImageDraw.Draw(image)
    for el in root:
        tag = el.tag.removeprefix(f"{{{_SVG_NS}}}")
        if tag == "rect":
            x, y = _number(el, "x"), _number(el, "y")
            w, h = _number(el, "width"), _number(el, "height")
            box = [(x - vx) * fx, (y - vy) * fy, (x - vx + w) * fx - 1, (y - vy + h) * fy - 1]
            draw.rectangle(box, fill=el.attrib.get("fill", "#FFFFFF"))
        elif tag == "line":
            x1, y1 = (_number(el, "x1") - vx) * fx, (_number(el, "y1") - vy) * fy
            x2, y2 = (_number(el, "x2") - vx) * fx, (_number(el, "y2") - vy) * fy
            width = max(1, round(float(el.attrib.get("stroke-width", "1")) * fx))
            draw.line([(x1, y1), (x2, y2)], fill="black", width=width)
            r = width / 2
            for cx, cy in ((x1, y1), (x2, y2)):
                draw.ellipse([cx - r, cy - r, cx + r, cy + r], fill="black")
        elif tag == "text":
            x, y = (_number(el, "x") - vx) * fx, (_number(el, "y") - vy) * fy
            px = max(1, round(_number(el, "font-size") * fy))
            font = ImageFont.load_default(size=px)
            draw.text((x, y), el.text or "", fill="black", font=font, anchor="mm")
        else:
            raise MalformedSvg(f"unsupported element <{tag}>")
    if ss > 1:
        image = image.resize((size, size), Image.Resampling.LANCZOS)
    buf = io.BytesIO()
    image.save(buf, format="PNG", optimize=False)
    return buf.getvalue()


def write_atomic(path: str | os.PathLike, data: bytes) -> None:
    """Write ``data`` to ``path`` through a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=path.suffix)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def depict(
    canonical: str,
    out_dir: str | os.PathLike,
    size: int = DEFAULT_SIZE,
    png: bool = True,
    style: DepictionStyle | Mapping | None = None,
) -> dict[str, object]:
    """Render one canonical P-SMILES to ``<sha1>.svg`` (and ``.png``).

    Returns a small report with the written paths and the overflow flag.
    """
    graph = parse(canonical)
    layout = layout_2d(graph)
    svg = render_svg(graph, layout, size=size, style=style)
    stem = image_stem(canonical)
    out = Path(out_dir)
    data = rasterize(svg, size) if png else None
    write_atomic(out / f"{stem}.svg", svg.encode("utf-8"))
    report: dict[str, object] = {"svg": f"{stem}.svg", "overflow": layout.overflow}
    if data is not None:
        write_atomic(out / f"{stem}.png", data)
        report["png"] = f"{stem}.png"
    return report
