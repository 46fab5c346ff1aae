"""Figure-style rendering of height grids to PPM pixmaps and SVG.

Legend: height 3 is background, 2 a dark square, 1 a circle, 0 a cross,
4 and above a filled disc. An optional curve overlay draws fitted edges with
per-edge weight labels.
"""

from __future__ import annotations

import numpy as np

CELL = 5  # pixels per lattice site in the pixmap
MARGIN = 2  # sites of margin around the bounding box

PALETTES = {
    "mono": {
        "bg": (255, 255, 255),
        "square": (40, 40, 40),
        "circle": (110, 110, 110),
        "cross": (0, 0, 0),
        "disc": (0, 0, 0),
        "outside": (235, 235, 235),
    },
    "deficit": {
        "bg": (255, 255, 255),
        "square": (214, 39, 40),
        "circle": (31, 119, 180),
        "cross": (44, 160, 44),
        "disc": (0, 0, 0),
        "outside": (245, 245, 245),
    },
}


def _mark_class(h):
    if h >= 4:
        return "disc"
    return {3: None, 2: "square", 1: "circle", 0: "cross"}[int(h)]


def render_ppm(path, domain, values, palette="mono"):
    """Rasterize the grid; one CELL x CELL block per site."""
    colors = PALETTES[palette]
    mask = domain.mask()
    rows, cols = mask.shape
    H = (rows + 2 * MARGIN) * CELL
    W = (cols + 2 * MARGIN) * CELL
    img = np.empty((H, W, 3), dtype=np.uint8)
    img[:] = colors["outside"]
    vals = np.asarray(values)
    for r in range(rows):
        for c in range(cols):
            if not mask[r, c]:
                continue
            # flip vertically so +y points up in the image
            top = (rows - 1 - r + MARGIN) * CELL
            left = (c + MARGIN) * CELL
            block = img[top : top + CELL, left : left + CELL]
            block[:] = colors["bg"]
            cls = _mark_class(vals[r, c])
            if cls == "square":
                block[1:-1, 1:-1] = colors["square"]
            elif cls == "circle":
                block[1:-1, 1:-1] = colors["circle"]
                block[2:-2, 2:-2] = colors["bg"]
            elif cls == "cross":
                for i in range(CELL):
                    block[i, i] = colors["cross"]
                    block[i, CELL - 1 - i] = colors["cross"]
            elif cls == "disc":
                block[1:-1, 1:-1] = colors["disc"]
                block[1, 1] = block[1, -2] = block[-2, 1] = block[-2, -2] = colors["bg"]
    with open(path, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (W, H))
        fh.write(img.tobytes())
    return img.shape


def _svg_color(rgb):
    return "#%02x%02x%02x" % rgb


def render_svg(path, domain, values, palette="mono", curve=None, weight_labels=False):
    """Vector rendering; one mark element per non-background site.

    With a curve, edges are drawn in scaled coordinates multiplied by the
    domain scale; weight labels annotate each bounded edge midpoint.
    """
    colors = PALETTES[palette]
    mask = domain.mask()
    rows, cols = mask.shape
    x0, y0 = domain.grid_origin()
    vals = np.asarray(values)
    unit = 4
    W = (cols + 2 * MARGIN) * unit
    H = (rows + 2 * MARGIN) * unit
    parts = []
    parts.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}">'
    )
    parts.append(f'<rect width="{W}" height="{H}" fill="{_svg_color(colors["outside"])}"/>')

    def sx(x):
        return (x - x0 + MARGIN) * unit + unit / 2

    def sy(y):
        return (rows - 1 - (y - y0) + MARGIN) * unit + unit / 2

    counts = {"square": 0, "circle": 0, "cross": 0, "disc": 0}
    # domain background
    for r in range(len(domain.x_lo)):
        y = domain.y_min + r
        lo, hi = int(domain.x_lo[r]), int(domain.x_hi[r])
        parts.append(
            f'<rect x="{sx(lo) - unit / 2}" y="{sy(y) - unit / 2}" '
            f'width="{(hi - lo + 1) * unit}" height="{unit}" fill="{_svg_color(colors["bg"])}"/>'
        )
    for x, y in domain.sites():
        h = vals[y - y0, x - x0]
        cls = _mark_class(h)
        if cls is None:
            continue
        counts[cls] += 1
        cx, cy = sx(x), sy(y)
        r = unit * 0.38
        if cls == "square":
            parts.append(
                f'<rect class="m-square" x="{cx - r}" y="{cy - r}" width="{2 * r}" '
                f'height="{2 * r}" fill="{_svg_color(colors["square"])}"/>'
            )
        elif cls == "circle":
            parts.append(
                f'<circle class="m-circle" cx="{cx}" cy="{cy}" r="{r}" fill="none" '
                f'stroke="{_svg_color(colors["circle"])}" stroke-width="0.6"/>'
            )
        elif cls == "cross":
            parts.append(
                f'<path class="m-cross" d="M {cx - r} {cy - r} L {cx + r} {cy + r} '
                f'M {cx - r} {cy + r} L {cx + r} {cy - r}" '
                f'stroke="{_svg_color(colors["cross"])}" stroke-width="0.6" fill="none"/>'
            )
        else:
            parts.append(
                f'<circle class="m-disc" cx="{cx}" cy="{cy}" r="{r}" '
                f'fill="{_svg_color(colors["disc"])}"/>'
            )
    if curve is not None:
        N = domain.scale
        for e in curve.edges:
            a = curve.vertices[e.tail]
            if e.is_ray:
                continue
            b = curve.vertices[e.head]
            ax, ay = sx(float(a[0]) * N), sy(float(a[1]) * N)
            bx, by = sx(float(b[0]) * N), sy(float(b[1]) * N)
            parts.append(
                f'<line class="curve" x1="{ax}" y1="{ay}" x2="{bx}" y2="{by}" '
                f'stroke="#c02020" stroke-width="1.2" stroke-opacity="0.75"/>'
            )
            if weight_labels:
                mx, my = (ax + bx) / 2, (ay + by) / 2
                parts.append(
                    f'<text class="weight" x="{mx + 2}" y="{my - 2}" '
                    f'font-size="{3 * unit}" fill="#c02020">{e.weight}</text>'
                )
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts))
    return counts
