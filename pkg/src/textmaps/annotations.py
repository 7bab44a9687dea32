"""Annotation, size and detection file parsing and writing.

Annotation files hold one instance per line as flat comma-separated
coordinates ``x1,y1,...,xn,yn`` with an optional trailing transcription
field; the transcription ``###`` marks the instance as ignore ("do not
care").  Detection files are the same shape with the score prefixed:
``score,x1,y1,...``.  A sizes file lists ``<name> <width> <height>`` per
image.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .encoder import TextAnnotation
from .errors import AnnotationFormatError, DegenerateGeometryError
from .geometry import Polygon

IGNORE_TOKEN = "###"


def _parse_floats(tokens, path, lineno):
    values = []
    for tok in tokens:
        try:
            values.append(float(tok))
        except ValueError:
            raise AnnotationFormatError(
                f"expected a number, got {tok!r}", path=path, line=lineno
            ) from None
    return values


def parse_annotation_line(line: str, path=None, lineno=None):
    """One annotation line -> (coords array (n, 2), ignore flag)."""
    tokens = [t.strip() for t in line.strip().split(",")]
    ignore = False
    transcription = None
    # A non-numeric trailing field is the transcription.
    try:
        float(tokens[-1])
    except ValueError:
        transcription = tokens[-1]
        tokens = tokens[:-1]
    if transcription is not None:
        ignore = transcription == IGNORE_TOKEN
    values = _parse_floats(tokens, path, lineno)
    if len(values) % 2 != 0:
        raise AnnotationFormatError(
            f"odd coordinate count {len(values)}", path=path, line=lineno
        )
    if len(values) < 6:
        raise AnnotationFormatError(
            f"need at least 3 vertices (6 numbers), got {len(values)}", path=path, line=lineno
        )
    return np.array(values, dtype=np.float64).reshape(-1, 2), ignore


def parse_annotation_file(path) -> list:
    """Parse one per-image annotation file into TextAnnotation objects.

    Instance ids follow line order.  Lines that fail polygon normalization
    (collinear or zero-area contours) are reported with their line number.
    """
    path = Path(path)
    annotations = []
    with path.open("r", encoding="utf-8-sig") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            coords, ignore = parse_annotation_line(line, path=path, lineno=lineno)
            try:
                polygon = Polygon(coords)
            except DegenerateGeometryError as exc:
                raise AnnotationFormatError(str(exc), path=path, line=lineno) from exc
            annotations.append(
                TextAnnotation(polygon=polygon, ignore=ignore, instance_id=len(annotations))
            )
    return annotations


def write_annotation_file(path, annotations) -> None:
    lines = []
    for ann in annotations:
        coords = ",".join(repr(float(v)) for v in ann.polygon.vertices.ravel())
        lines.append(f"{coords},{IGNORE_TOKEN}" if ann.ignore else coords)
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def read_sizes(path) -> dict:
    """Sizes file -> {image name: (width, height)}."""
    path = Path(path)
    sizes = {}
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 3:
                raise AnnotationFormatError(
                    f"expected '<name> <width> <height>', got {line.strip()!r}",
                    path=path,
                    line=lineno,
                )
            name, w, h = parts
            try:
                sizes[name] = (int(w), int(h))
            except ValueError:
                raise AnnotationFormatError(
                    f"bad dimensions {w!r} {h!r}", path=path, line=lineno
                ) from None
    return sizes


def write_sizes(path, sizes: dict) -> None:
    lines = [f"{name} {w} {h}" for name, (w, h) in sizes.items()]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def write_detections(path, instances) -> None:
    """One detection per line: score first, then flat polygon coordinates."""
    lines = []
    for inst in instances:
        coords = ",".join(repr(float(v)) for v in inst.polygon.vertices.ravel())
        lines.append(f"{inst.score!r},{coords}")
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def parse_detections(path):
    """Detections file -> list of (score, coords array (n, 2))."""
    path = Path(path)
    out = []
    with path.open("r", encoding="utf-8-sig") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            values = _parse_floats([t.strip() for t in line.strip().split(",")], path, lineno)
            if len(values) < 7 or (len(values) - 1) % 2 != 0:
                raise AnnotationFormatError(
                    f"expected 'score,x1,y1,...' with >= 3 vertices, got {len(values)} numbers",
                    path=path,
                    line=lineno,
                )
            out.append((values[0], np.array(values[1:], dtype=np.float64).reshape(-1, 2)))
    return out
