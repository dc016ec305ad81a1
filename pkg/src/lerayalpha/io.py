"""On-disk formats: binary field snapshots and trace CSV files.

Snapshot layout (little-endian)::

    u32 N, u32 mode_count, f64 alpha, f64 theta
    mode_count records of: i32 k1, i32 k2, i32 k3,
                           f64 Re u1, Im u1, Re u2, Im u2, Re u3, Im u3

Only modes with a nonzero coefficient are written; the k = 0 mode never is.
Wavenumbers are in ``[-N/2, N/2)``.
"""
import struct

import numpy as np

from .solver import NormTrace
from .spectral import SpectralField, make_lattice

_HEADER = struct.Struct("<IIdd")
_RECORD = np.dtype([("k", "<i4", (3,)), ("c", "<f8", (6,))])


def write_snapshot(path, u, alpha, theta):
    lat = u.lattice
    flat = u.coeffs.reshape(3, -1)
    nz = np.any(flat != 0, axis=0)
    nz[0] = False  # flat index 0 is k = 0
    idx = np.nonzero(nz)[0]
    rec = np.zeros(len(idx), dtype=_RECORD)
    rec["k"] = lat.k.reshape(3, -1)[:, idx].T.astype(np.int32)
    c = flat[:, idx].T
    rec["c"][:, 0::2] = c.real
    rec["c"][:, 1::2] = c.imag
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(lat.N, len(idx), float(alpha), float(theta)))
        fh.write(rec.tobytes())


def read_snapshot(path):
    """Return ``(field, alpha, theta)``."""
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise ValueError(f"{path}: truncated snapshot header")
        N, count, alpha, theta = _HEADER.unpack(head)
        body = fh.read()
    if len(body) != count * _RECORD.itemsize:
        raise ValueError(f"{path}: expected {count} mode records, got {len(body) / _RECORD.itemsize:g}")
    lat = make_lattice(N)
    rec = np.frombuffer(body, dtype=_RECORD)
    k = rec["k"].astype(np.int64)
    if np.any(k < -N // 2) or np.any(k >= N // 2):
        raise ValueError(f"{path}: wavenumber out of range for N={N}")
    coeffs = np.zeros((3,) + lat.shape, dtype=np.complex128)
    i, j, l = (k % N).T
    coeffs[:, i, j, l] = (rec["c"][:, 0::2] + 1j * rec["c"][:, 1::2]).T
    return SpectralField(coeffs, lat), alpha, theta


def header_lines(meta):
    """``# key = value`` comment lines for artifact headers."""
    return [f"# {k} = {v}" for k, v in meta.items()]


def write_trace(path, trace, meta=None):
    with open(path, "w") as fh:
        for line in header_lines(meta or {}):
            fh.write(line + "\n")
        if trace.status != "ok":
            fh.write(f"# status = {trace.status}\n# message = {trace.message}\n")
        fh.write(",".join(NormTrace.COLUMNS) + "\n")
        for row in zip(*trace.columns()):
            fh.write(",".join(f"{x:.17g}" for x in row) + "\n")


def read_trace(path):
    meta = {}
    rows = []
    header = None
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, sep, val = line[1:].partition("=")
                if sep:
                    meta[key.strip()] = val.strip()
                continue
            if header is None:
                header = line.split(",")
                if tuple(header) != NormTrace.COLUMNS:
                    raise ValueError(f"{path}: unexpected trace header {line!r}")
                continue
            rows.append([float(x) for x in line.split(",")])
    if header is None:
        raise ValueError(f"{path}: no trace header")
    cols = list(zip(*rows)) if rows else [()] * len(NormTrace.COLUMNS)
    status = meta.get("status", "ok")
    return NormTrace.from_columns(cols, status=status, message=meta.get("message", "")), meta
