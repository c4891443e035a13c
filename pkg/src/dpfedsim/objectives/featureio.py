"""Feature-file readers and writers.

Two layouts are supported.

CSV (inspectable)::

    dims,<rows>,<cols>
    num_classes,<k>
    <label>,<x_1>,...,<x_cols>      # one line per sample

Packed binary (little-endian)::

    b"DPFS1" | uint64 rows | uint64 cols | uint32 num_classes
    | int32 labels[rows] | float64 features[rows * cols] (row-major)

Every parse failure raises FeatureFileError carrying the byte offset of the
offending token.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import NamedTuple

import numpy as np

MAGIC = b"DPFS1"
_HEADER = struct.Struct("<QQI")


class FeatureFileError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class FeatureSet(NamedTuple):
    features: np.ndarray
    labels: np.ndarray
    num_classes: int


def _parse_int(token: bytes, offset: int, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise FeatureFileError(f"expected integer {what}, got {token!r}", offset) from None


def _read_csv(data: bytes) -> FeatureSet:
    if not data.strip():
        raise FeatureFileError("empty feature file", 0)
    lines = data.split(b"\n")
    offsets = []
    pos = 0
    for line in lines:
        offsets.append(pos)
        pos += len(line) + 1

    def header(idx: int, name: bytes, width: int) -> list[int]:
        if idx >= len(lines):
            raise FeatureFileError(f"missing header line {name.decode()}", len(data))
        fields = lines[idx].rstrip(b"\r").split(b",")
        if fields[0].strip() != name or len(fields) != width + 1:
            raise FeatureFileError(
                f"malformed header: expected '{name.decode()}' with {width} value(s)", offsets[idx])
        return [_parse_int(f.strip(), offsets[idx], name.decode()) for f in fields[1:]]

    rows, cols = header(0, b"dims", 2)
    (num_classes,) = header(1, b"num_classes", 1)
    if rows < 0 or cols < 1 or num_classes < 1:
        raise FeatureFileError("header dimensions must be positive", offsets[0])
    body = [(i, ln.rstrip(b"\r")) for i, ln in enumerate(lines[2:], start=2) if ln.strip()]
    if len(body) != rows:
        raise FeatureFileError(f"header declares {rows} rows, found {len(body)}",
                               offsets[body[-1][0]] if body else len(data))
    features = np.empty((rows, cols))
    labels = np.empty(rows, dtype=np.int64)
    for r, (i, line) in enumerate(body):
        fields = line.split(b",")
        if len(fields) != cols + 1:
            raise FeatureFileError(f"row {r} has {len(fields) - 1} features, expected {cols}",
                                   offsets[i])
        label = _parse_int(fields[0].strip(), offsets[i], "label")
        if not 0 <= label < num_classes:
            raise FeatureFileError(f"label {label} out of range [0, {num_classes})", offsets[i])
        labels[r] = label
        col_off = offsets[i] + len(fields[0]) + 1
        for c, tok in enumerate(fields[1:]):
            try:
                val = float(tok)
            except ValueError:
                raise FeatureFileError(f"expected number, got {tok!r}", col_off) from None
            if not np.isfinite(val):
                raise FeatureFileError(f"non-finite value {tok!r}", col_off)
            features[r, c] = val
            col_off += len(tok) + 1
    return FeatureSet(features, labels, num_classes)


def _read_binary(data: bytes) -> FeatureSet:
    start = len(MAGIC)
    if len(data) < start + _HEADER.size:
        raise FeatureFileError("truncated binary header", len(data))
    rows, cols, num_classes = _HEADER.unpack_from(data, start)
    if cols < 1 or num_classes < 1:
        raise FeatureFileError("header dimensions must be positive", start)
    lab_off = start + _HEADER.size
    feat_off = lab_off + 4 * rows
    expected = feat_off + 8 * rows * cols
    if len(data) != expected:
        raise FeatureFileError(f"binary payload is {len(data)} bytes, header implies {expected}",
                               min(len(data), expected))
    labels = np.frombuffer(data, dtype="<i4", count=rows, offset=lab_off).astype(np.int64)
    features = np.frombuffer(data, dtype="<f8", count=rows * cols, offset=feat_off)
    features = features.reshape(rows, cols).astype(float)
    bad = np.flatnonzero((labels < 0) | (labels >= num_classes))
    if bad.size:
        raise FeatureFileError(f"label {labels[bad[0]]} out of range [0, {num_classes})",
                               lab_off + 4 * int(bad[0]))
    nonfinite = np.flatnonzero(~np.isfinite(features.ravel()))
    if nonfinite.size:
        raise FeatureFileError("non-finite feature value", feat_off + 8 * int(nonfinite[0]))
    return FeatureSet(features, labels, int(num_classes))


def load_feature_matrix(path: str | Path, format: str | None = None) -> FeatureSet:
    """Read a feature file; ``format`` is "csv", "binary", or None to sniff the magic."""
    data = Path(path).read_bytes()
    if format is None:
        format = "binary" if data.startswith(MAGIC) else "csv"
    if format == "binary":
        if not data.startswith(MAGIC):
            raise FeatureFileError("missing DPFS1 magic", 0)
        return _read_binary(data)
    if format == "csv":
        return _read_csv(data)
    raise ValueError(f"unknown feature format {format!r}")


def write_feature_matrix(path: str | Path, features, labels, num_classes: int,
                         format: str = "csv") -> None:
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels, dtype=np.int64)
    rows, cols = features.shape
    if format == "binary":
        blob = (MAGIC + _HEADER.pack(rows, cols, num_classes)
                + labels.astype("<i4").tobytes() + features.astype("<f8").tobytes())
        Path(path).write_bytes(blob)
        return
    if format != "csv":
        raise ValueError(f"unknown feature format {format!r}")
    out = [f"dims,{rows},{cols}", f"num_classes,{num_classes}"]
    # repr round-trips float64 exactly.
    out += [",".join([str(int(lab))] + [repr(float(x)) for x in row])
            for lab, row in zip(labels, features)]
    Path(path).write_text("\n".join(out) + "\n")
