"""SVG scatter plots of embeddings, colored by optional class labels."""

from __future__ import annotations

import numpy as np

# 10-color categorical palette; label color is palette[label % 10]
PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")
DEFAULT_COLOR = PALETTE[0]
VIEW_SIDE = 800.0
POINT_RADIUS = 2.5
MARGIN_FRACTION = 0.05  # of the viewport, each side


def render_svg_scatter(y, labels=None) -> str:
    """Render one circle per point into a square, axis-free SVG viewport.

    The data extent is fitted so all points sit inside the viewport with a
    5% margin on every side. Points are colored by ``labels[i] % 10`` from
    a fixed palette, or a single default color without labels.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 2 or y.shape[1] != 2:
        raise ValueError(f"expected (N, 2) points, got shape {y.shape}")
    n = y.shape[0]
    if labels is not None:
        labels = np.asarray(labels)
        if labels.shape[0] != n:
            raise ValueError(
                f"label count {labels.shape[0]} does not match point count {n}")

    c0 = 0.5 * (y[:, 0].min() + y[:, 0].max())
    c1 = 0.5 * (y[:, 1].min() + y[:, 1].max())
    half = max(y[:, 0].max() - c0, y[:, 1].max() - c1)
    if half <= 0:
        half = 1.0
    usable = 1.0 - 2.0 * MARGIN_FRACTION
    scale = usable * VIEW_SIDE / (2.0 * half)

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{VIEW_SIDE:g}" height="{VIEW_SIDE:g}" '
        f'viewBox="0 0 {VIEW_SIDE:g} {VIEW_SIDE:g}">',
        f'<rect width="{VIEW_SIDE:g}" height="{VIEW_SIDE:g}" fill="white"/>',
    ]
    for i in range(n):
        cx = VIEW_SIDE / 2.0 + (y[i, 0] - c0) * scale
        # SVG y grows downward; flip so larger coordinates plot higher
        cy = VIEW_SIDE / 2.0 - (y[i, 1] - c1) * scale
        color = DEFAULT_COLOR if labels is None \
            else PALETTE[int(labels[i]) % len(PALETTE)]
        lines.append(f'<circle cx="{cx:.3f}" cy="{cy:.3f}" '
                     f'r="{POINT_RADIUS:g}" fill="{color}"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
