import struct

import numpy as np
import pytest

from lerayalpha.fields import random_band, taylor_green
from lerayalpha.io import read_snapshot, read_trace, write_snapshot, write_trace
from lerayalpha.solver import FluidParams, NormTrace, SolverConfig, simulate
from lerayalpha.spectral import FilterSpec, SpectralField, make_lattice


def test_snapshot_round_trip_is_exact(tmp_path):
    u = random_band(12, 4, energy=1.3)
    path = tmp_path / "u.bin"
    write_snapshot(path, u, 0.75, 0.2)
    back, alpha, theta = read_snapshot(path)
    assert (alpha, theta) == (0.75, 0.2)
    assert np.array_equal(back.coeffs, u.coeffs)


def test_snapshot_layout(tmp_path):
    u = taylor_green(8)
    path = tmp_path / "tg.bin"
    write_snapshot(path, u, 1.0, 0.1)
    raw = path.read_bytes()
    N, count, alpha, theta = struct.unpack("<IIdd", raw[:24])
    assert (N, alpha, theta) == (8, 1.0, 0.1)
    # Taylor-Green has the eight (+-1, +-1, +-1) modes
    assert count == 8
    assert len(raw) == 24 + count * (12 + 48)
    k = np.frombuffer(raw[24:], dtype=[("k", "<i4", (3,)), ("c", "<f8", (6,))])["k"]
    assert np.all(np.abs(k) == 1)


def test_zero_field_writes_no_modes(tmp_path):
    path = tmp_path / "z.bin"
    write_snapshot(path, SpectralField.zeros(make_lattice(8)), 1.0, 0.0)
    assert path.stat().st_size == 24
    back, _, _ = read_snapshot(path)
    assert np.all(back.coeffs == 0)


def test_corrupt_snapshots_rejected(tmp_path):
    u = taylor_green(8)
    path = tmp_path / "tg.bin"
    write_snapshot(path, u, 1.0, 0.1)
    raw = path.read_bytes()
    (tmp_path / "short.bin").write_bytes(raw[:-5])
    with pytest.raises(ValueError):
        read_snapshot(tmp_path / "short.bin")
    (tmp_path / "head.bin").write_bytes(raw[:10])
    with pytest.raises(ValueError):
        read_snapshot(tmp_path / "head.bin")
    bad = bytearray(raw)
    bad[24:28] = struct.pack("<i", 9)  # k1 = 9 is outside [-4, 4)
    (tmp_path / "k.bin").write_bytes(bytes(bad))
    with pytest.raises(ValueError):
        read_snapshot(tmp_path / "k.bin")


def test_trace_round_trip_bit_exact(tmp_path):
    p = FluidParams(0.05, FilterSpec(1.0, 0.2))
    tr = simulate(random_band(8, 1), p, SolverConfig(8, 0.05, 0.5))
    path = tmp_path / "trace.csv"
    write_trace(path, tr, {"seed": 7, "N": 8})
    back, meta = read_trace(path)
    assert meta == {"seed": "7", "N": "8"}
    for a, b in zip(tr.columns(), back.columns()):
        assert np.array_equal(a, b)
    lines = path.read_text().splitlines()
    assert lines[2] == "t,norm_H,norm_V,norm_Lap,dissip_cum,work_cum"


def test_trace_keeps_abort_status(tmp_path):
    tr = NormTrace.from_columns([[0.0, 0.1]] + [[1.0, 2.0]] * 5, status="cfl", message="too fast")
    path = tmp_path / "t.csv"
    write_trace(path, tr)
    back, meta = read_trace(path)
    assert back.status == "cfl" and back.message == "too fast"


def test_trace_header_checked(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_trace(path)
