"""Matrix Market coordinate-format reader and writer."""

from __future__ import annotations

import os

import numpy as np

from .errors import ParseError, UnsupportedFormat
from .sparse import CsrMatrix

_FIELDS = {"real", "double", "integer", "pattern"}
_SYMMETRIES = {"general", "symmetric"}


def read_matrix_market(path: str | os.PathLike) -> CsrMatrix:
    """Read a coordinate Matrix Market file into canonical CSR.

    Symmetric files are expanded to both triangles, duplicates are summed
    and pattern entries get the value 1.0.
    """
    with open(path, encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError("empty file", 1)

    header = lines[0].split()
    if len(header) != 5 or header[0].lower() != "%%matrixmarket" or header[1].lower() != "matrix":
        raise ParseError(f"bad header {lines[0]!r}", 1)
    fmt, field, symmetry = (h.lower() for h in header[2:])
    if fmt == "array":
        raise UnsupportedFormat("dense array format is not supported")
    if fmt != "coordinate":
        raise ParseError(f"unknown format {fmt!r}", 1)
    if field not in _FIELDS:
        raise UnsupportedFormat(f"unsupported field {field!r}")
    if symmetry not in _SYMMETRIES:
        raise UnsupportedFormat(f"unsupported symmetry {symmetry!r}")
    pattern = field == "pattern"

    lineno = 1
    size = None
    for lineno in range(2, len(lines) + 1):
        text = lines[lineno - 1].strip()
        if text and not text.startswith("%"):
            size = text.split()
            break
    if size is None:
        raise ParseError("missing size line", lineno)
    try:
        nrows, ncols, nnz = (int(tok) for tok in size)
    except ValueError:
        raise ParseError(f"bad size line {' '.join(size)!r}", lineno) from None
    if min(nrows, ncols, nnz) < 0:
        raise ParseError("negative size", lineno)

    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.ones(nnz, dtype=np.float64)
    want = 2 if pattern else 3
    count = 0
    for lineno in range(lineno + 1, len(lines) + 1):
        text = lines[lineno - 1].strip()
        if not text or text.startswith("%"):
            continue
        if count == nnz:
            raise ParseError("more entries than declared", lineno)
        toks = text.split()
        if len(toks) != want:
            raise ParseError(f"expected {want} fields, got {len(toks)}", lineno)
        try:
            i, j = int(toks[0]), int(toks[1])
            if not pattern:
                vals[count] = float(toks[2])
        except ValueError:
            raise ParseError(f"malformed entry {text!r}", lineno) from None
        if not (1 <= i <= nrows and 1 <= j <= ncols):
            raise ParseError(f"index ({i}, {j}) out of range", lineno)
        rows[count], cols[count] = i - 1, j - 1
        count += 1
    if count != nnz:
        raise ParseError(f"expected {nnz} entries, found {count}", len(lines))

    if symmetry == "symmetric":
        off = rows != cols
        rows, cols = np.concatenate((rows, cols[off])), np.concatenate((cols, rows[off]))
        vals = np.concatenate((vals, vals[off]))
    return CsrMatrix.from_coo(nrows, ncols, rows, cols, vals)


def write_matrix_market(m: CsrMatrix, path: str | os.PathLike, comment: str | None = None) -> None:
    """Write ``m`` as ``coordinate real general``.

    Values use the shortest round-tripping repr, so reading the file back
    reproduces a canonical matrix bit for bit.
    """
    rows, cols, vals = m.to_coo()
    out = ["%%MatrixMarket matrix coordinate real general"]
    if comment:
        out.extend(f"% {line}" for line in comment.splitlines())
    out.append(f"{m.nrows} {m.ncols} {m.nnz}")
    out.extend(f"{i + 1} {j + 1} {float(v)!r}" for i, j, v in zip(rows.tolist(), cols.tolist(), vals.tolist()))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(out) + "\n")
