"""2D layout, SVG rendering and PNG rasterization."""

from polymm.depict.layout import MIN_DISTANCE, Layout, LayoutOverflow, layout_2d
from polymm.depict.render import (
    DEFAULT_SIZE,
    DepictionStyle,
    MalformedSvg,
    RasterBackendUnavailable,
    atom_label,
    depict,
    image_stem,
    rasterize,
    render_svg,
    write_atomic,
)

__all__ = [
    "DEFAULT_SIZE",
    "MIN_DISTANCE",
    "DepictionStyle",
    "Layout",
    "LayoutOverflow",
    "MalformedSvg",
    "RasterBackendUnavailable",
    "atom_label",
    "depict",
    "image_stem",
    "layout_2d",
    "rasterize",
    "render_svg",
    "write_atomic",
]
