"""On-disk interchange formats for matrices, masks, and observations.

Dense matrices are CSV grids of full-precision floats. Partially observed
matrices travel as UTF-8 CSV triplet files with a `row,col,value` header and
0-based indices, one line per observed entry in row-major order. Because a
triplet file does not reveal the matrix shape, every written file gets a
sidecar `<path>.meta` document declaring n1, n2, and the format version;
triplet readers require it. Floats use 17 significant digits, so a write/read
round trip is bit-exact.
"""

import os

import numpy as np

from .core import ObservedData, as_matrix
from .reportfmt import Document, fmt

TRIPLET_HEADER = "row,col,value"


def meta_path(path):
    return str(path) + ".meta"


def _write_meta(path, n1, n2, kind):
    doc = Document("meta")
    doc.set("shape", "n1", int(n1))
    doc.set("shape", "n2", int(n2))
    doc.set("shape", "format", kind)
    doc.write(meta_path(path))


def _read_meta(path):
    doc = Document.read(meta_path(path))
    shape = doc.section("shape")
    return int(shape["n1"]), int(shape["n2"]), shape.get("format")


def write_dense(path, M):
    """Dense CSV grid plus sidecar metadata."""
    M = as_matrix(M)
    with open(path, "w", encoding="utf-8") as f:
        for row in M:
            f.write(",".join(fmt(float(v)) for v in row) + "\n")
    _write_meta(path, M.shape[0], M.shape[1], "dense")


def read_dense(path):
    M = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
    if os.path.exists(meta_path(path)):
        n1, n2, _ = _read_meta(path)
        if (n1, n2) != M.shape:
            raise ValueError(f"{path}: sidecar declares shape {(n1, n2)} but grid is {M.shape}")
    return as_matrix(M, str(path))


def write_triplets(path, data: ObservedData):
    """Observed entries of an ObservedData as a triplet file plus sidecar."""
    rows, cols = data.observed_positions()
    with open(path, "w", encoding="utf-8") as f:
        f.write(TRIPLET_HEADER + "\n")
        for i, j in zip(rows, cols):
            f.write(f"{i},{j},{fmt(float(data.values[i, j]))}\n")
    _write_meta(path, data.n1, data.n2, "triplets")


def read_triplet_arrays(path):
    """(rows, cols, values, n1, n2) from a triplet file and its sidecar."""
    if not os.path.exists(meta_path(path)):
        raise ValueError(f"{path}: missing sidecar {meta_path(path)} declaring the matrix shape")
    n1, n2, _ = _read_meta(path)
    rows, cols, values = [], [], []
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().strip()
        if header != TRIPLET_HEADER:
            raise ValueError(f"{path}: expected header {TRIPLET_HEADER!r}, got {header!r}")
        for lineno, line in enumerate(f, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: malformed triplet line {line!r}")
            i, j = int(parts[0]), int(parts[1])
            if not (0 <= i < n1 and 0 <= j < n2):
                raise ValueError(f"{path}:{lineno}: index ({i},{j}) outside declared shape ({n1},{n2})")
            rows.append(i)
            cols.append(j)
            values.append(float(parts[2]))
    return (
        np.array(rows, dtype=np.int64),
        np.array(cols, dtype=np.int64),
        np.array(values, dtype=np.float64),
        n1,
        n2,
    )


def read_observed(path):
    """ObservedData reconstructed from a triplet file."""
    rows, cols, values, n1, n2 = read_triplet_arrays(path)
    X = np.zeros((n1, n2))
    W = np.zeros((n1, n2), dtype=bool)
    X[rows, cols] = values
    W[rows, cols] = True
    return ObservedData(X, W)


def write_mask(path, data: ObservedData):
    """The 0/1 observation mask as a dense CSV grid."""
    write_dense(path, data.mask)
