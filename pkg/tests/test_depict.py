from __future__ import annotations

import hashlib
import io
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from PIL import Image

import polymm.depict.render as render_mod
from helpers import corpus
from polymm.canon import canonicalize
from polymm.chem import parse
from polymm.depict import (
    MIN_DISTANCE,
    DepictionStyle,
    LayoutOverflow,
    MalformedSvg,
    depict,
    image_stem,
    layout_2d,
    rasterize,
    render_svg,
)

NS = "{http://www.w3.org/2000/svg}"


def bond_lengths(smiles: str) -> np.ndarray:
    g = parse(smiles)
    xy = layout_2d(g).coords
    return np.array([np.linalg.norm(xy[b.begin] - xy[b.end]) for b in g.bonds])


def test_ethane_unit_bond():
    assert bond_lengths("CC") == pytest.approx([1.0], abs=1e-12)


def test_benzene_regular_hexagon():
    g = parse("c1ccccc1")
    xy = layout_2d(g).coords
    lengths = bond_lengths("c1ccccc1")
    assert lengths.max() - lengths.min() < 1e-9
    assert lengths.mean() == pytest.approx(1.0, abs=1e-12)
    centre = xy.mean(axis=0)
    radii = np.linalg.norm(xy - centre, axis=1)
    assert radii.max() - radii.min() < 1e-9


def test_chain_zigzag_alternates():
    g = parse("*CCCCCC*")
    xy = layout_2d(g).coords
    turns = []
    for i in range(1, len(xy) - 1):
        u, v = xy[i] - xy[i - 1], xy[i + 1] - xy[i]
        cross = u[0] * v[1] - u[1] * v[0]
        turns.append(math.degrees(math.atan2(cross, u @ v)))
    assert all(abs(abs(t) - 60.0) < 1e-9 for t in turns)  # 120 degree bond angles
    assert all(a * b < 0 for a, b in zip(turns, turns[1:]))


def test_triple_bond_is_linear():
    xy = layout_2d(parse("CC#CC")).coords
    u, v = xy[2] - xy[1], xy[3] - xy[2]
    assert abs(u[0] * v[1] - u[1] * v[0]) < 1e-9


def test_fused_rings_share_an_edge():
    g = parse("c1ccc2ccccc2c1")
    lengths = bond_lengths("c1ccc2ccccc2c1")
    assert lengths.max() - lengths.min() < 1e-9
    assert not layout_2d(g).overflow


@pytest.mark.parametrize("smiles", corpus())
def test_no_clashes_on_corpus(smiles):
    layout = layout_2d(parse(smiles))
    xy = layout.coords
    d = np.linalg.norm(xy[:, None, :] - xy[None, :, :], axis=-1)
    np.fill_diagonal(d, np.inf)
    assert d.min() >= MIN_DISTANCE
    assert not layout.overflow


def test_strict_mode_raises_on_overflow(monkeypatch):
    import polymm.depict.layout as layout_mod

    monkeypatch.setattr(layout_mod, "_clashes", lambda graph, xy: ((0, 1),))
    assert layout_2d(parse("CC")).overflow
    with pytest.raises(LayoutOverflow):
        layout_2d(parse("CC"), strict=True)


def test_layout_follows_canonical_order():
    a = layout_2d(parse(canonicalize("OCC(=O)c1ccccc1"))).coords
    b = layout_2d(parse(canonicalize("c1ccc(cc1)C(=O)CO"))).coords
    assert np.array_equal(a, b)


def _svg_points(svg: str) -> list[tuple[float, float]]:
    root = ET.fromstring(svg)
    pts = []
    for el in root.iter():
        if el.tag == NS + "line":
            pts += [(float(el.get("x1")), float(el.get("y1"))), (float(el.get("x2")), float(el.get("y2")))]
        elif el.tag == NS + "text":
            pts.append((float(el.get("x")), float(el.get("y"))))
    return pts


def test_svg_document():
    svg = render_svg(parse("c1ccccc1"), size=1120)
    root = ET.fromstring(svg)
    assert root.get("width") == "1120" and root.get("height") == "1120"
    assert root.get("viewBox") == "0 0 1120 1120"
    assert not [el for el in root.iter() if el.tag == NS + "text"]  # carbons unlabeled


def test_heteroatoms_and_wildcards_labeled():
    texts = [el.text for el in ET.fromstring(render_svg(parse("*CC(*)C(=O)N"))).iter() if el.tag == NS + "text"]
    assert texts.count("*") == 2 and "O" in texts and "NH2" in texts


def test_multiple_bonds_drawn_parallel():
    lines = [el for el in ET.fromstring(render_svg(parse("CC#N"))).iter() if el.tag == NS + "line"]
    assert len(lines) == 4


def test_empty_style_override():
    base = render_svg(parse("CCO"))
    assert render_svg(parse("CCO"), style={}) == base
    assert render_svg(parse("CCO"), style=DepictionStyle()) == base
    with pytest.raises(ValueError):
        render_svg(parse("CCO"), style={"colour": "red"})


@pytest.mark.parametrize("smiles", corpus()[::5])
def test_margin(smiles):
    size = 1120
    for x, y in _svg_points(render_svg(parse(smiles), size=size)):
        assert 0.02 * size <= x <= 0.98 * size and 0.02 * size <= y <= 0.98 * size


def test_svg_deterministic():
    g = parse("*CC(*)c1ccccc1")
    assert render_svg(g) == render_svg(g)


def test_png_dimensions():
    img = Image.open(io.BytesIO(rasterize(render_svg(parse("c1ccccc1")), 1120)))
    assert img.size == (1120, 1120)
    img = Image.open(io.BytesIO(rasterize(render_svg(parse("c1ccccc1"), size=64), 64)))
    assert img.size == (64, 64)


def test_png_white_background_black_strokes():
    img = Image.open(io.BytesIO(rasterize(render_svg(parse("*CC*"), size=256), 256))).convert("L")
    px = np.asarray(img)
    assert px[0, 0] == 255 and px.min() < 64


def test_malformed_svg_writes_nothing(tmp_path, monkeypatch):
    with pytest.raises(MalformedSvg):
        rasterize(b"<svg", 64)
    monkeypatch.setattr(render_mod, "render_svg", lambda *a, **k: "<svg><circle/></svg>")
    with pytest.raises(MalformedSvg):
        depict("*CC*", tmp_path, size=64)
    assert list(tmp_path.iterdir()) == []


def test_depict_files(tmp_path):
    c = canonicalize("*CC(*)c1ccccc1")
    report = depict(c, tmp_path, size=128)
    stem = hashlib.sha1(c.encode()).hexdigest()
    assert image_stem(c) == stem
    assert report == {"svg": f"{stem}.svg", "png": f"{stem}.png", "overflow": False}
    first = (tmp_path / f"{stem}.png").read_bytes()
    depict(c, tmp_path, size=128)
    assert (tmp_path / f"{stem}.png").read_bytes() == first
