"""Dense matrix ingestion and emission (CSV and raw binary).

The raw binary layout is the canonical lossless format: magic ``BHTM``,
one u8 dtype tag (0 = f64, 1 = f32), u64 point count, u64 dimension
count, then the values row-major, all little-endian. CSV is provided for
interop with common dataset dumps; values are printed with enough digits
to round-trip f64.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"BHTM"
_DTYPE_TAGS = {0: np.float64, 1: np.float32}
_TAG_FOR_DTYPE = {np.dtype(np.float64): 0, np.dtype(np.float32): 1}

PRECISIONS = {"f32": np.float32, "f64": np.float64}


def precision_dtype(precision: str) -> np.dtype:
    """Map a precision name (``f32``/``f64``) to its numpy dtype."""
    try:
        return np.dtype(PRECISIONS[precision])
    except KeyError:
        raise ValueError(f"unknown precision {precision!r}; expected one of "
                         f"{sorted(PRECISIONS)}") from None


@dataclass(frozen=True)
class InputMatrix:
    """A validated dense N x D dataset held in the run precision."""

    data: np.ndarray

    def __post_init__(self):
        data = self.data
        if data.ndim != 2:
            raise ValueError(f"expected a 2-D matrix, got {data.ndim}-D")
        n, d = data.shape
        if n < 2:
            raise ValueError(f"matrix must have at least 2 rows, got {n}")
        if d < 1:
            raise ValueError("matrix must have at least 1 column")
        if data.dtype not in (np.float32, np.float64):
            raise ValueError(f"unsupported dtype {data.dtype}")
        bad = np.argwhere(~np.isfinite(data))
        if bad.size:
            r, c = bad[0]
            raise ValueError(f"non-finite value at row {r}, column {c}")

    @property
    def n_points(self) -> int:
        return self.data.shape[0]

    @property
    def n_dims(self) -> int:
        return self.data.shape[1]

    @property
    def precision(self) -> str:
        return "f32" if self.data.dtype == np.float32 else "f64"


def _as_2d(values) -> np.ndarray:
    arr = np.ascontiguousarray(values)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D array, got {arr.ndim}-D")
    return arr


def sniff_format(path) -> str:
    """Return ``"bin"`` when the file starts with the BHTM magic, else ``"csv"``."""
    with open(path, "rb") as fh:
        return "bin" if fh.read(4) == MAGIC else "csv"


def load_matrix(path, format: str | None = None, precision: str = "f64",
                has_header: bool = False) -> InputMatrix:
    """Load a dense matrix from ``path`` and convert it to the run precision.

    ``format`` is ``"csv"`` or ``"bin"``; when omitted the file is sniffed
    by its magic bytes. Malformed CSV rows raise with the 1-based row
    number; non-finite values raise with their coordinates.
    """
    fmt = format or sniff_format(path)
    dtype = precision_dtype(precision)
    if fmt == "bin":
        raw = _read_binary(path)
    elif fmt == "csv":
        raw = _read_csv(path, has_header=has_header)
    else:
        raise ValueError(f"unknown format {fmt!r}; expected 'csv' or 'bin'")
    return InputMatrix(np.ascontiguousarray(raw, dtype=dtype))


def save_matrix(m, path, format: str | None = None) -> None:
    """Write a matrix (``InputMatrix`` or 2-D array) as CSV or raw binary.

    Raw binary round-trips bitwise through :func:`load_matrix`.
    """
    arr = m.data if isinstance(m, InputMatrix) else _as_2d(m)
    if arr.dtype not in (np.float32, np.float64):
        arr = arr.astype(np.float64)
    InputMatrix(arr)  # validates shape and finiteness
    fmt = format
    if fmt is None:
        fmt = "csv" if str(path).endswith(".csv") else "bin"
    if fmt == "bin":
        _write_binary(arr, path)
    elif fmt == "csv":
        _write_csv(arr, path)
    else:
        raise ValueError(f"unknown format {fmt!r}; expected 'csv' or 'bin'")


def load_labels(path) -> np.ndarray:
    """Read one integer class id per line (plotting only)."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    try:
        return np.array([int(float(ln.split(",")[0])) for ln in lines],
                        dtype=np.int64)
    except ValueError as exc:
        raise ValueError(f"labels file {path}: {exc}") from None


def _read_csv(path, has_header: bool) -> np.ndarray:
    rows = []
    width = -1
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if has_header and lineno == 1:
                continue
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if width < 0:
                width = len(fields)
            elif len(fields) != width:
                raise ValueError(
                    f"{path}: row {lineno} has {len(fields)} columns, "
                    f"expected {width}")
            try:
                rows.append([float(f) for f in fields])
            except ValueError:
                raise ValueError(
                    f"{path}: row {lineno} contains a non-numeric field") from None
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return np.array(rows, dtype=np.float64)


def _write_csv(arr, path) -> None:
    with open(path, "w") as fh:
        for row in arr:
            fh.write(",".join(repr(float(v)) for v in row))
            fh.write("\n")


def _read_binary(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.read(21)
        if len(header) < 21 or header[:4] != MAGIC:
            raise ValueError(f"{path}: not a BHTM binary matrix file")
        tag, n, d = struct.unpack("<BQQ", header[4:])
        if tag not in _DTYPE_TAGS:
            raise ValueError(f"{path}: unknown dtype tag {tag}")
        dtype = np.dtype(_DTYPE_TAGS[tag]).newbyteorder("<")
        data = np.fromfile(fh, dtype=dtype, count=n * d)
    if data.size != n * d:
        raise ValueError(f"{path}: truncated payload, expected {n * d} values, "
                         f"got {data.size}")
    return data.astype(data.dtype.newbyteorder("="), copy=False).reshape(n, d)


def _write_binary(arr, path) -> None:
    arr = np.ascontiguousarray(arr)
    tag = _TAG_FOR_DTYPE[arr.dtype]
    try:
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<BQQ", tag, arr.shape[0], arr.shape[1]))
            arr.astype(arr.dtype.newbyteorder("<"), copy=False).tofile(fh)
    except OSError as exc:
        raise OSError(f"failed writing {path}: {exc}") from exc
