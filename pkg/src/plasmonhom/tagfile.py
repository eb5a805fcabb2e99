"""``HTAG`` binary time-tag files and their JSON sidecars.

Layout (little endian)::

    b"HTAG"            magic
    u16                format version (1)
    u64                record count
    count x 10 bytes   u8 channel (0 = B1, 1 = B2), u8 reserved = 0, u64 timestamp [ps]
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .events import TagStream

MAGIC = b"HTAG"
VERSION = 1
_HEADER = struct.Struct("<4sHQ")
RECORD_DTYPE = np.dtype([("channel", "u1"), ("reserved", "u1"), ("timestamp", "<u8")])
assert RECORD_DTYPE.itemsize == 10


class TagFileError(ValueError):
    pass


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def write_htag(path, stream: TagStream, metadata: dict | None = None) -> Path:
    """Write ``stream`` to ``path``; ``metadata`` goes to the ``.json`` sidecar."""
    path = Path(path)
    rec = np.empty(len(stream), dtype=RECORD_DTYPE)
    rec["channel"] = stream.channel
    rec["reserved"] = 0
    rec["timestamp"] = stream.timestamp.astype(np.uint64)
    with path.open("wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, len(stream)))
        rec.tofile(fh)
    if metadata is not None:
        meta = dict(metadata)
        meta.setdefault("duration_s", stream.duration)
        meta["record_count"] = len(stream)
        sidecar_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path


def read_metadata(path) -> dict:
    side = sidecar_path(path)
    if not side.exists():
        raise TagFileError(f"{path}: missing sidecar {side.name}")
    try:
        return json.loads(side.read_text())
    except json.JSONDecodeError as exc:
        raise TagFileError(f"{side}: invalid JSON ({exc})") from None


def read_htag(path, duration: float | None = None) -> TagStream:
    """Read and validate an ``HTAG`` file.

    The stream duration comes from ``duration`` or else the sidecar.
    """
    path = Path(path)
    with path.open("rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) < _HEADER.size:
            raise TagFileError(f"{path}: truncated header")
        magic, version, count = _HEADER.unpack(head)
        if magic != MAGIC:
            raise TagFileError(f"{path}: bad magic {magic!r}")
        if version != VERSION:
            raise TagFileError(f"{path}: unsupported format version {version}")
        rec = np.fromfile(fh, dtype=RECORD_DTYPE)
    if rec.size != count:
        raise TagFileError(f"{path}: header says {count} records, found {rec.size}")
    if np.any(rec["reserved"] != 0):
        raise TagFileError(f"{path}: non-zero reserved byte")
    if np.any(rec["channel"] > 1):
        raise TagFileError(f"{path}: unknown channel id")
    if np.any(rec["timestamp"] >= np.uint64(2 ** 63)):
        raise TagFileError(f"{path}: timestamp out of range")
    ts = rec["timestamp"].astype(np.int64)
    if ts.size > 1 and np.any(ts[1:] < ts[:-1]):
        raise TagFileError(f"{path}: records are not sorted by timestamp")
    if duration is None:
        duration = float(read_metadata(path)["duration_s"])
    return TagStream(ts, rec["channel"].copy(), duration)
