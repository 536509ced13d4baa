"""Draw one frame of boxes as SVG (vector) or PPM (raster)."""
from __future__ import annotations

import hashlib
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

# fixed 12-colour palette; identities pick a slot by hash
PALETTE = (
    (230, 25, 75), (60, 180, 75), (255, 225, 25), (0, 130, 200), (245, 130, 48), (145, 30, 180),
    (70, 240, 240), (240, 50, 230), (210, 245, 60), (250, 190, 212), (0, 128, 128), (170, 110, 40),
)


def id_color(identity: int) -> tuple[int, int, int]:
    digest = hashlib.sha256(str(int(identity)).encode()).digest()
    return PALETTE[int.from_bytes(digest[:4], "big") % len(PALETTE)]


def frame_boxes(table: Sequence[Sequence[tuple]], frame: int) -> list[tuple]:
    if not 0 <= frame < len(table):
        raise IndexError(f"frame {frame} outside [0, {len(table) - 1}]")
    return list(table[frame])


def svg_document(boxes, resolution: tuple[int, int]) -> str:
    w, h = resolution
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
             f'<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>']
    for ident, (left, top, bw, bh) in boxes:
        r, g, b = id_color(ident)
        parts.append(f'<rect class="box" data-id="{int(ident)}" x="{left:.2f}" y="{top:.2f}" '
                     f'width="{bw:.2f}" height="{bh:.2f}" fill="none" stroke="rgb({r},{g},{b})" stroke-width="2"/>')
        parts.append(f'<text x="{left:.2f}" y="{max(top - 3, 10):.2f}" font-size="12" '
                     f'fill="rgb({r},{g},{b})">{escape(str(int(ident)))}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def raster_image(boxes, resolution: tuple[int, int]):
    from PIL import Image, ImageDraw

    img = Image.new("RGB", tuple(resolution), (255, 255, 255))
    draw = ImageDraw.Draw(img)
    for ident, (left, top, bw, bh) in boxes:
        color = id_color(ident)
        x0, y0 = round(left), round(top)
        x1, y1 = max(x0, round(left + bw) - 1), max(y0, round(top + bh) - 1)
        draw.rectangle([x0, y0, x1, y1], outline=color, width=1)
        draw.text((x0 + 2, max(y0 - 12, 0)), str(int(ident)), fill=color)
    return img


def render_frame(table: Sequence[Sequence[tuple]], frame: int, path, resolution=(1024, 768)) -> Path:
    """Write frame ``frame`` (0-based) of a frame table; format from the suffix (.svg or .ppm)."""
    boxes = frame_boxes(table, frame)
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".svg":
        path.write_text(svg_document(boxes, resolution), encoding="utf-8")
    elif suffix in (".ppm", ".pnm"):
        raster_image(boxes, resolution).save(path, format="PPM")
    else:
        raise ValueError(f"unsupported image type {suffix!r}; use .svg or .ppm")
    return path
