"""Numbered acceptance criteria, one PASS/FAIL line each.

Criteria 1-10 call the same checks that ``lerayalpha verify`` runs, so the
tolerances live in one place.  Criterion 11 runs ``verify`` end to end in a
fresh interpreter.
"""
import subprocess
import sys
import time

import pytest

from lerayalpha import verify

# wall-clock limits for the criteria that state one, in seconds
RUNTIME_LIMITS = {"1": 10.0, "6": 30.0, "8": 5.0}
VERIFY_LIMIT = 300.0


@pytest.mark.parametrize("key,name,fn", verify.ACCEPTANCE, ids=[k for k, _, _ in verify.ACCEPTANCE])
def test_criterion(key, name, fn, record_criterion):
    res = verify.run_check(key, name, fn)
    limit = RUNTIME_LIMITS.get(key)
    in_time = limit is None or res.seconds <= limit
    detail = f"{res.detail} [{res.seconds:.2f}s"
    detail += f" / limit {limit:.0f}s]" if limit else "]"
    record_criterion(key, name, res.passed and in_time, detail)
    assert res.passed, res.detail
    assert in_time, f"took {res.seconds:.2f}s, limit {limit}s"


def test_criterion_11_verify_end_to_end(tmp_path, record_criterion):
    t0 = time.perf_counter()
    proc = subprocess.run(
        [sys.executable, "-m", "lerayalpha", "verify", "--out", str(tmp_path)],
        capture_output=True, text=True, timeout=2 * VERIFY_LIMIT,
    )
    dt = time.perf_counter() - t0
    lines = [s for s in proc.stdout.splitlines()
             if s.startswith(("PASS", "FAIL")) and not s.split()[1] == "all:"]
    n_fail = sum(s.startswith("FAIL") for s in lines)
    ok = proc.returncode == 0 and dt <= VERIFY_LIMIT and n_fail == 0
    detail = f"exit {proc.returncode}, {len(lines)} checks, {n_fail} failed, {dt:.1f}s / limit {VERIFY_LIMIT:.0f}s"
    record_criterion("11", "verify-end-to-end", ok, detail)
    assert proc.returncode == 0, proc.stderr
    assert n_fail == 0
    assert len(lines) == len(verify.ACCEPTANCE) + len(verify.PROPERTIES)
    assert dt <= VERIFY_LIMIT
    assert "PASS all:" in proc.stdout
    assert (tmp_path / "verify.txt").exists()
