"""Field output: CSV matrix, long-form plot data and the FHIG binary grid.

FHIG layout (little-endian): ``b"FHIG"``, one version byte (1), ``u32 rows``,
``u32 cols``, then ``rows*cols`` float64 values in row-major order.
"""

from __future__ import annotations

import enum
import io
import struct
from pathlib import Path

import numpy as np

from fhi.errors import ContractError

__all__ = [
    "FHIG_MAGIC",
    "FHIG_VERSION",
    "Transform",
    "export_figure_data",
    "read_fhig",
    "write_fhig",
    "write_field_csv",
]

FHIG_MAGIC = b"FHIG"
FHIG_VERSION = 1
_HEADER = struct.Struct("<4sBII")


def write_fhig(path, array) -> None:
    a = np.asarray(array, dtype="<f8")
    if a.ndim != 2:
        raise ContractError("FHIG stores 2-D arrays only")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(FHIG_MAGIC, FHIG_VERSION, a.shape[0], a.shape[1]))
        fh.write(np.ascontiguousarray(a).tobytes())


def read_fhig(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ContractError("file too short for an FHIG header")
    magic, version, rows, cols = _HEADER.unpack_from(data)
    if magic != FHIG_MAGIC:
        raise ContractError(f"bad magic {magic!r}")
    if version != FHIG_VERSION:
        raise ContractError(f"unsupported FHIG version {version}")
    body = data[_HEADER.size:]
    if len(body) != 8 * rows * cols:
        raise ContractError("FHIG payload size does not match its header")
    return np.frombuffer(body, dtype="<f8").reshape(rows, cols).astype(float)


def write_field_csv(path, field) -> None:
    """Header ``t,x_0,...,x_N``; one row per time level ``t_n, Y[n, :]``."""
    g = field.grid
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t," + ",".join(repr(float(x)) for x in g.x) + "\n")
        block = np.column_stack([g.t, field.Y])
        np.savetxt(fh, block, delimiter=",", fmt="%.17g")


class Transform(str, enum.Enum):
    identity = "identity"
    exceedance_mask = "exceedance_mask"


def export_figure_data(field, out=None, transform=Transform.identity, threshold: float = 0.0):
    """Long-form ``t,x,value`` rows for every level ``n = 1..N_t`` and node.

    With ``exceedance_mask`` a fourth column ``mask`` is 1 where
    ``value > threshold``. ``out`` is a path or text stream; when ``None`` the
    CSV text is returned. Returns the row count otherwise.
    """
    transform = Transform(transform)
    Y = np.asarray(field.Y)
    if not np.all(np.isfinite(Y)):
        raise ContractError("field contains non-finite values")
    g = field.grid
    tt, xx = np.meshgrid(g.t[1:], g.x, indexing="ij")
    vals = Y[1:]
    cols = [tt.ravel(), xx.ravel(), vals.ravel()]
    header = "t,x,value"
    fmt = ["%.17g", "%.17g", "%.17g"]
    if transform is Transform.exceedance_mask:
        cols.append((vals > threshold).astype(int).ravel())
        header += ",mask"
        fmt.append("%d")
    block = np.column_stack(cols)

    def dump(fh):
        fh.write(header + "\n")
        np.savetxt(fh, block, delimiter=",", fmt=fmt)

    if out is None:
        buf = io.StringIO()
        dump(buf)
        return buf.getvalue()
    if isinstance(out, (str, Path)):
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            dump(fh)
    else:
        dump(out)
    return block.shape[0]
