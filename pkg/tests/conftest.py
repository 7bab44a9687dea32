"""Shared oracles and fixture builders.

The oracles here stay deliberately independent of the library code paths
they check: point-in-polygon walks edges per pixel, mask IoU counts pixels,
and the loss references below live in test_losses as literal double loops.
"""

import math

import numpy as np
import pytest

from textmaps.geometry import Polygon, rasterize


def point_in_polygon_oracle(vertices, x, y):
    """Scalar even-odd crossing test for a single point."""
    inside = False
    n = len(vertices)
    for k in range(n):
        x0, y0 = vertices[k]
        x1, y1 = vertices[(k + 1) % n]
        if (y0 > y) != (y1 > y):
            x_cross = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
            if x < x_cross:
                inside = not inside
    return inside


def rasterize_oracle(polygon, width, height):
    """Brute-force mask: even-odd test at every pixel centre."""
    mask = np.zeros((height, width), dtype=bool)
    verts = polygon.vertices
    for i in range(height):
        for j in range(width):
            mask[i, j] = point_in_polygon_oracle(verts, j + 0.5, i + 0.5)
    return mask


def mask_iou(a, b):
    union = np.logical_or(a, b).sum()
    if union == 0:
        return 0.0
    return np.logical_and(a, b).sum() / union


def mask_iou_of_polygons(pa, pb, scale=8):
    """High-resolution rasterized IoU used to cross-check exact clipping."""
    verts = np.concatenate([pa.vertices, pb.vertices])
    shift = verts.min(axis=0) - 2.0
    span = verts.max(axis=0) - shift + 2.0
    a = Polygon((pa.vertices - shift) * scale)
    b = Polygon((pb.vertices - shift) * scale)
    width = int(math.ceil(span[0] * scale))
    height = int(math.ceil(span[1] * scale))
    return mask_iou(rasterize(a, width, height), rasterize(b, width, height))


def rect_polygon(x0, y0, x1, y1):
    return Polygon([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])


def random_convex_polygon(rng, n_min=4, n_max=10, radius=30.0):
    """Random convex polygon: points on an ellipse at sorted random angles."""
    n = int(rng.integers(n_min, n_max + 1))
    angles = np.sort(rng.uniform(0.0, 2.0 * math.pi, size=n))
    # Reject angle sets with near-duplicate directions (degenerate edges).
    while np.min(np.diff(np.concatenate([angles, [angles[0] + 2 * math.pi]]))) < 0.15:
        angles = np.sort(rng.uniform(0.0, 2.0 * math.pi, size=n))
    rx = radius * rng.uniform(0.5, 1.0)
    ry = radius * rng.uniform(0.5, 1.0)
    cx, cy = rng.uniform(40.0, 90.0, size=2)
    pts = np.stack([cx + rx * np.cos(angles), cy + ry * np.sin(angles)], axis=1)
    return Polygon(pts)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
