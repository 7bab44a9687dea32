"""Binary container for per-image map bundles.

One file holds all planes of either a label bundle (encoder output) or a
score bundle (network-style predictions).  The layout is little-endian and
every plane starts on a 4-byte boundary so foreign hosts can map the float
and int planes without copying; see ``docs/bundle_format.md`` for the byte
layout.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .decoder import ScoreMaps
from .encoder import LabelMaps
from .errors import AnnotationFormatError

MAGIC = b"TXMBNDL\x00"
VERSION = 1

KIND_LABELS = 0
KIND_SCORES = 1

_MODE_CODE = {"bidir": 0, "msr": 1}
_CODE_MODE = {code: mode for mode, code in _MODE_CODE.items()}

# (name, dtype, channel index or None) per kind, in file order.
_LABEL_PLANES = (
    ("text_region", np.uint8, None),
    ("text_kernel", np.uint8, None),
    ("train_mask", np.uint8, None),
    ("instance_id", np.int32, None),
    ("offset", np.float32, 0),
    ("offset", np.float32, 1),
    ("orientation", np.float32, 0),
    ("orientation", np.float32, 1),
)
_SCORE_PLANES = (
    ("text_region", np.float32, None),
    ("text_kernel", np.float32, None),
    ("offset", np.float32, 0),
    ("offset", np.float32, 1),
    ("orientation", np.float32, 0),
    ("orientation", np.float32, 1),
)

_HEADER = struct.Struct("<8sHxxxxxx")   # magic, version, reserved -> 16 bytes
_DIMS = struct.Struct("<IIII")          # height, width, kind, mode/flags


def _pad(n: int) -> int:
    return (-n) % 4


def _plane_bytes(maps, name, dtype, channel) -> bytes:
    arr = getattr(maps, name)
    if channel is not None:
        arr = arr[..., channel]
    data = np.ascontiguousarray(arr, dtype=dtype)
    if data.dtype.itemsize > 1:
        data = data.astype(data.dtype.newbyteorder("<"), copy=False)
    raw = data.tobytes()
    return raw + b"\x00" * _pad(len(raw))


def write_bundle(path, maps) -> None:
    """Serialize LabelMaps or ScoreMaps to ``path``."""
    if isinstance(maps, LabelMaps):
        kind, planes, flags = KIND_LABELS, _LABEL_PLANES, _MODE_CODE[maps.mode]
    elif isinstance(maps, ScoreMaps):
        kind, planes, flags = KIND_SCORES, _SCORE_PLANES, 0
    else:
        raise TypeError(f"cannot serialize {type(maps).__name__}")
    chunks = [_HEADER.pack(MAGIC, VERSION), _DIMS.pack(maps.height, maps.width, kind, flags)]
    chunks.extend(_plane_bytes(maps, name, dtype, ch) for name, dtype, ch in planes)
    Path(path).write_bytes(b"".join(chunks))


def _read_plane(buf, pos, shape, dtype):
    count = shape[0] * shape[1]
    nbytes = count * np.dtype(dtype).itemsize
    arr = np.frombuffer(buf, dtype=np.dtype(dtype).newbyteorder("<"), count=count, offset=pos)
    return arr.astype(dtype).reshape(shape), pos + nbytes + _pad(nbytes)


def read_bundle(path):
    """Deserialize a bundle; returns LabelMaps or ScoreMaps by stored kind."""
    path = Path(path)
    buf = path.read_bytes()
    if len(buf) < _HEADER.size + _DIMS.size:
        raise AnnotationFormatError("file too short for a map bundle", path=path)
    magic, version = _HEADER.unpack_from(buf, 0)
    if magic != MAGIC:
        raise AnnotationFormatError(f"bad magic {magic!r}", path=path)
    if version != VERSION:
        raise AnnotationFormatError(f"unsupported bundle version {version}", path=path)
    height, width, kind, flags = _DIMS.unpack_from(buf, _HEADER.size)
    if height == 0 or width == 0:
        raise AnnotationFormatError(f"bad dimensions {width}x{height}", path=path)
    planes = {KIND_LABELS: _LABEL_PLANES, KIND_SCORES: _SCORE_PLANES}.get(kind)
    if planes is None:
        raise AnnotationFormatError(f"unknown bundle kind {kind}", path=path)
    expected = _HEADER.size + _DIMS.size
    for _, dtype, _ in planes:
        nbytes = height * width * np.dtype(dtype).itemsize
        expected += nbytes + _pad(nbytes)
    if len(buf) != expected:
        raise AnnotationFormatError(
            f"bundle length {len(buf)} != expected {expected}", path=path
        )

    pos = _HEADER.size + _DIMS.size
    fields = {}
    for name, dtype, channel in planes:
        plane, pos = _read_plane(buf, pos, (height, width), dtype)
        if channel is None:
            fields[name] = plane
        else:
            fields.setdefault(name, [None, None])[channel] = plane
    for name in ("offset", "orientation"):
        fields[name] = np.stack(fields[name], axis=-1)
    if kind == KIND_LABELS:
        mode = _CODE_MODE.get(flags)
        if mode is None:
            raise AnnotationFormatError(f"unknown label mode flag {flags}", path=path)
        return LabelMaps(
            text_region=fields["text_region"].astype(bool),
            text_kernel=fields["text_kernel"].astype(bool),
            offset=fields["offset"],
            orientation=fields["orientation"],
            instance_id=fields["instance_id"],
            train_mask=fields["train_mask"].astype(bool),
            mode=mode,
        )
    return ScoreMaps(
        text_region=fields["text_region"],
        text_kernel=fields["text_kernel"],
        offset=fields["offset"],
        orientation=fields["orientation"],
    )


def as_score_maps(maps) -> ScoreMaps:
    """View any bundle payload as decoder input."""
    if isinstance(maps, ScoreMaps):
        return maps
    return ScoreMaps.from_labels(maps)
