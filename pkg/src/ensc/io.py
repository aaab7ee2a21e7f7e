"""Matrix, label and report files.

Two matrix formats are supported: CSV (one line per row, optional header)
and a flat little-endian binary file made of the 8-byte magic ``ENSCMAT1``,
``u32`` rows, ``u32`` cols and then the float64 entries in column-major
order.  All writes go to a temporary file in the target directory followed
by a rename.
"""
import csv
import hashlib
import io
import json
import os
import struct
import tempfile

import numpy as np

from . import __version__
from .errors import FormatError

MAGIC = b"ENSCMAT1"
_HEADER = struct.Struct("<8sII")


def atomic_write(path, data):
    """Write ``data`` (str or bytes) to ``path`` via temp file + rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    mode = "wb" if isinstance(data, (bytes, bytearray)) else "w"
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        kw = {} if mode == "wb" else {"newline": "", "encoding": "utf-8"}
        with os.fdopen(fd, mode, **kw) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def matrix_to_bytes(m):
    m = np.asarray(m, dtype="<f8")
    if m.ndim != 2:
        raise FormatError("expected a 2-D matrix")
    return _HEADER.pack(MAGIC, m.shape[0], m.shape[1]) + m.tobytes(order="F")


def matrix_from_bytes(raw):
    if len(raw) < _HEADER.size:
        raise FormatError("file too short for the binary matrix header")
    magic, rows, cols = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError("bad magic; not a binary matrix file")
    expected = _HEADER.size + 8 * rows * cols
    if len(raw) != expected:
        raise FormatError(f"expected {expected} bytes, found {len(raw)}")
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    return np.asfortranarray(data.reshape((rows, cols), order="F"), dtype=np.float64)


def write_matrix_binary(path, m):
    atomic_write(path, matrix_to_bytes(m))


def read_matrix_binary(path):
    with open(path, "rb") as fh:
        return matrix_from_bytes(fh.read())


def _is_number(s):
    try:
        float(s)
    except ValueError:
        return False
    return True


def read_matrix_csv(path):
    """Read a CSV matrix; a first line that is not all numbers is a header."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if rows and not all(_is_number(s) for s in rows[0]):
        rows = rows[1:]
    if not rows:
        raise FormatError("empty matrix file")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise FormatError("ragged rows in matrix CSV")
    try:
        m = np.array([[float(s) for s in r] for r in rows])
    except ValueError as exc:
        raise FormatError(str(exc)) from exc
    return np.asfortranarray(m)


def matrix_to_csv(m, header=None):
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    if header is not None:
        w.writerow(header)
    for row in np.atleast_2d(m):
        w.writerow([repr(float(v)) for v in row])
    return out.getvalue()


def write_matrix_csv(path, m, header=None):
    atomic_write(path, matrix_to_csv(m, header))


def read_matrix(path):
    """Read either format, sniffing the binary magic."""
    with open(path, "rb") as fh:
        head = fh.read(len(MAGIC))
    if head == MAGIC:
        return read_matrix_binary(path)
    return read_matrix_csv(path)


def read_vector(path):
    """A vector stored as a one-column or one-row matrix."""
    m = read_matrix(path)
    if 1 not in m.shape:
        raise FormatError(f"expected a vector, got shape {m.shape}")
    return m.ravel(order="F").copy()


def labels_to_csv(labels):
    return "".join(f"{int(v)}\n" for v in np.asarray(labels).ravel())


def write_labels(path, labels):
    atomic_write(path, labels_to_csv(labels))


def read_labels(path):
    """Single-column integer labels; a non-numeric first line is a header."""
    with open(path, encoding="utf-8") as fh:
        lines = [s.strip() for s in fh if s.strip()]
    if lines and not _is_number(lines[0].split(",")[0]):
        lines = lines[1:]
    try:
        return np.array([int(float(s.split(",")[0])) for s in lines], dtype=np.int64)
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def affinity_to_csv(aff):
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["i", "j", "w"])
    for i, j, v in zip(aff.rows, aff.cols, aff.values):
        w.writerow([int(i), int(j), repr(float(v))])
    return out.getvalue()


def write_json(path, obj):
    atomic_write(path, json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def config_hash(config):
    blob = json.dumps(config, sort_keys=True, default=_jsonable).encode()
    return hashlib.sha256(blob).hexdigest()


def write_manifest(directory, config, seed, command):
    """``manifest.json``: config hash, library version, seed and command."""
    write_json(os.path.join(directory, "manifest.json"),
               {"command": command, "config": config,
                "config_sha256": config_hash(config), "version": __version__,
                "seed": seed})
