"""Deterministic synthetic annotation fixtures for desk-scale verification.

Families:

* ``rect`` — axis-aligned rectangles.
* ``rotrect`` — rectangles rotated in 15 degree steps.
* ``banana`` — 14-vertex curved ribbons (text-line style annotations).
* ``adjacent-pair`` — two rectangles separated by a 4-8 px gap.
* ``nested`` — a small rectangle strictly inside a larger one.

Everything is a pure function of the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .encoder import TextAnnotation
from .errors import ParameterError
from .geometry import Polygon

FAMILIES = ("rect", "rotrect", "banana", "adjacent-pair", "nested")


@dataclass(frozen=True)
class SynthImage:
    name: str
    width: int
    height: int
    annotations: tuple = field(default_factory=tuple)


def _rect_vertices(cx, cy, w, h, angle_deg=0.0):
    half = np.array([[-w / 2, -h / 2], [w / 2, -h / 2], [w / 2, h / 2], [-w / 2, h / 2]])
    if angle_deg:
        a = math.radians(angle_deg)
        rot = np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])
        half = half @ rot.T
    return half + np.array([cx, cy])


def _fit_center(rng, verts_at_origin, width, height, margin=4.0):
    ext = verts_at_origin - verts_at_origin.mean(axis=0)
    rx = float(np.abs(ext[:, 0]).max()) + margin
    ry = float(np.abs(ext[:, 1]).max()) + margin
    cx = rng.uniform(rx, width - rx)
    cy = rng.uniform(ry, height - ry)
    return ext + np.array([cx, cy])


def _rect(rng, width, height, angle_deg=0.0):
    w = rng.uniform(30.0, 80.0)
    h = rng.uniform(14.0, 34.0)
    verts = _rect_vertices(0.0, 0.0, w, h, angle_deg)
    return Polygon(_fit_center(rng, verts, width, height))


def _banana(rng, width, height):
    """Curved ribbon: 7 samples along the outer arc, 7 back along the inner."""
    radius = rng.uniform(26.0, 42.0)
    thickness = rng.uniform(14.0, 24.0)
    span = math.radians(rng.uniform(70.0, 140.0))
    start = rng.uniform(0.0, 2.0 * math.pi)
    angles = start + np.linspace(0.0, span, 7)
    outer = radius + thickness / 2.0
    inner = radius - thickness / 2.0
    top = np.stack([outer * np.cos(angles), outer * np.sin(angles)], axis=1)
    bottom = np.stack([inner * np.cos(angles[::-1]), inner * np.sin(angles[::-1])], axis=1)
    verts = np.concatenate([top, bottom])
    return Polygon(_fit_center(rng, verts, width, height))


def _single(family, rng, width, height, index):
    if family == "rect":
        return (TextAnnotation(_rect(rng, width, height), instance_id=0),)
    if family == "rotrect":
        angle = 15.0 * float(rng.integers(0, 12))
        return (TextAnnotation(_rect(rng, width, height, angle), instance_id=0),)
    if family == "banana":
        return (TextAnnotation(_banana(rng, width, height), instance_id=0),)
    raise ParameterError(f"unknown family {family!r}")


def _adjacent_pair(rng, width, height):
    gap = rng.uniform(4.0, 8.0)
    w = rng.uniform(34.0, 52.0)
    h = rng.uniform(16.0, 30.0)
    total_w = 2.0 * w + gap
    cx = rng.uniform(total_w / 2.0 + 4.0, width - total_w / 2.0 - 4.0)
    cy = rng.uniform(h / 2.0 + 8.0, height - h / 2.0 - 8.0)
    left = _rect_vertices(cx - (w + gap) / 2.0, cy, w, h)
    right = _rect_vertices(cx + (w + gap) / 2.0, cy, w, h)
    return (
        TextAnnotation(Polygon(left), instance_id=0),
        TextAnnotation(Polygon(right), instance_id=1),
    )


def _nested(rng, width, height):
    outer_w = rng.uniform(60.0, 90.0)
    outer_h = rng.uniform(40.0, 60.0)
    cx = rng.uniform(outer_w / 2.0 + 4.0, width - outer_w / 2.0 - 4.0)
    cy = rng.uniform(outer_h / 2.0 + 4.0, height - outer_h / 2.0 - 4.0)
    inner_w = outer_w * rng.uniform(0.3, 0.45)
    inner_h = outer_h * rng.uniform(0.3, 0.45)
    outer = _rect_vertices(cx, cy, outer_w, outer_h)
    inner = _rect_vertices(cx, cy, inner_w, inner_h)
    return (
        TextAnnotation(Polygon(outer), instance_id=0),
        TextAnnotation(Polygon(inner), instance_id=1),
    )


def synth_images(family: str, count: int, seed: int, width: int = 128, height: int = 128):
    """Generate ``count`` single-family images, deterministic in ``seed``."""
    if family not in FAMILIES:
        raise ParameterError(f"family must be one of {FAMILIES}, got {family!r}")
    if count < 0:
        raise ParameterError(f"count must be >= 0, got {count}")
    rng = np.random.default_rng(seed)
    images = []
    for index in range(count):
        if family == "adjacent-pair":
            annotations = _adjacent_pair(rng, width, height)
        elif family == "nested":
            annotations = _nested(rng, width, height)
        else:
            annotations = _single(family, rng, width, height, index)
        images.append(
            SynthImage(
                name=f"{family.replace('-', '_')}_{index:03d}",
                width=width,
                height=height,
                annotations=annotations,
            )
        )
    return images
