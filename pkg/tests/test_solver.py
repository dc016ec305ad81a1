import math

import numpy as np
import pytest

from lerayalpha import solver
from lerayalpha.fields import random_band, single_mode, taylor_green
from lerayalpha.solver import (
    CFLViolation,
    FluidParams,
    IFIntegrator,
    NumericalAbort,
    SolverConfig,
    energy_budget,
    l2_time_integral,
    simulate,
    step,
)
from lerayalpha.spectral import FilterSpec, SpectralField, make_lattice, sobolev_norm


def params(nu=0.05, alpha=1.0, theta=0.1, forcing=None):
    return FluidParams(nu, FilterSpec(alpha, theta), forcing)


# --- configuration -----------------------------------------------------------


@pytest.mark.parametrize(
    "kw",
    [dict(N=7, dt=0.1, T=1.0), dict(N=8, dt=0.0, T=1.0), dict(N=8, dt=0.1, T=0.05),
     dict(N=8, dt=0.1, T=1.0, integrator="Euler"), dict(N=8, dt=0.1, T=1.0, stride=0)],
)
def test_solver_config_validation(kw):
    with pytest.raises(ValueError):
        SolverConfig(**kw)


def test_step_count_lands_on_T():
    assert SolverConfig(8, 0.1, 1.0).n_steps == 10
    assert SolverConfig(8, 0.3, 1.0).n_steps == 4


def test_params_reject_compressible_forcing():
    lat = make_lattice(8)
    c = np.zeros((3,) + lat.shape, complex)
    c[0, 1, 0, 0] = c[0, -1, 0, 0] = 1.0  # u1 = 2 cos x, divergent
    with pytest.raises(ValueError):
        params(forcing=SpectralField(c, lat))
    with pytest.raises(ValueError):
        FluidParams(0.0, FilterSpec(1.0, 0.1))


def test_forcing_schedule_validation():
    f = taylor_green(8)
    with pytest.raises(ValueError):
        params(forcing=[(0.5, f)])
    with pytest.raises(ValueError):
        params(forcing=[(0.0, f), (0.0, f)])


def test_forcing_is_piecewise_constant():
    f1, f2 = taylor_green(8, 1.0), taylor_green(8, 2.0)
    integ = IFIntegrator(params(forcing=[(0.0, f1), (0.5, f2)]), 8, 0.1)
    mask = integ.lattice.dealias_mask
    assert np.array_equal(integ.forcing_at(0.3), f1.coeffs * mask)
    assert np.array_equal(integ.forcing_at(0.5), f2.coeffs * mask)
    assert np.array_equal(integ.forcing_at(0.5, left=True), f1.coeffs * mask)


def test_forcing_norms():
    f = taylor_green(8, 2.0)
    p = params(forcing=[(0.0, f), (1.0, f * 0.0)])
    h = sobolev_norm(f, 0.0)
    assert p.forcing_sup_norm(2.0) == pytest.approx(h)
    assert p.forcing_l2_norm(2.0, s=0.0) == pytest.approx(h)  # on for one unit of time
    assert p.forcing_l2_norm(0.25, s=-1.0) == pytest.approx(math.sqrt(0.25 / 3) * h)


# --- exact solutions ---------------------------------------------------------


@pytest.mark.parametrize("integrator", ["IF-RK2", "IF-RK4"])
def test_single_mode_decays_exactly(integrator):
    # a . k = 0 kills the nonlinear term, so u(t) = exp(-nu |k|^2 t) u0
    u0 = single_mode(8, (1, 1, 0), (1.0, -1.0, 0.5))
    nu = 0.07
    tr = simulate(u0, params(nu), SolverConfig(8, 0.1, 1.0, integrator))
    expected = sobolev_norm(u0, 0.0) * np.exp(-nu * 2 * tr.t)
    assert np.allclose(tr.norm_H, expected, rtol=1e-13)
    assert np.allclose(tr.final.coeffs, u0.coeffs * math.exp(-nu * 2), atol=1e-15)


def test_zero_field_stays_zero():
    u0 = SpectralField.zeros(make_lattice(8))
    tr = simulate(u0, params(), SolverConfig(8, 0.1, 0.5))
    for col in tr.columns()[1:]:
        assert np.all(col == 0)


def test_steady_forcing_relaxes_to_stokes_solution():
    # with a single-mode forcing and no advection the state tends to f / (nu |k|^2)
    f = single_mode(8, (0, 0, 1), (1.0, 0.0, 0.0))
    nu = 0.5
    tr = simulate(f * 0.0, params(nu, forcing=f), SolverConfig(8, 0.1, 40.0))
    assert np.allclose(tr.final.coeffs, f.coeffs / nu, atol=1e-9)


# --- temporal order ----------------------------------------------------------


@pytest.mark.parametrize("integrator,order", [("IF-RK2", 2), ("IF-RK4", 4)])
def test_convergence_order(integrator, order):
    u0 = random_band(8, 3, energy=2.0)
    p = params(0.05)

    def final(integ, dt):
        return simulate(u0, p, SolverConfig(8, dt, 0.5, integ)).final.coeffs

    ref = final("IF-RK4", 0.5 / 1000)
    e1 = np.abs(final(integrator, 0.05) - ref).max()
    e2 = np.abs(final(integrator, 0.025) - ref).max()
    assert math.log2(e1 / e2) == pytest.approx(order, abs=0.3)


def test_step_matches_simulate():
    u0 = random_band(8, 9, energy=1.0)
    p = params()
    cfg = SolverConfig(8, 0.05, 0.1)
    one = step(step(u0, p, cfg), p, cfg, t=0.05)
    assert np.allclose(one.coeffs, simulate(u0, p, cfg).final.coeffs, atol=1e-15)


# --- traces and the energy budget ---------------------------------------------


def test_stride_sampling_includes_final_time():
    u0 = taylor_green(8)
    tr = simulate(u0, params(), SolverConfig(8, 0.1, 1.0, stride=3))
    assert np.allclose(tr.t, [0.0, 0.3, 0.6, 0.9, 1.0])
    assert tr.T == 1.0


def forced_budget(dt, forcing_of):
    u0 = random_band(16, 1, energy=0.5)
    f = random_band(16, 2, kmax=3.0, energy=0.2)
    tr = simulate(u0, params(0.05, forcing=forcing_of(f)), SolverConfig(16, dt, 0.5))
    return tr, energy_budget(tr)


@pytest.mark.parametrize(
    "forcing_of",
    [lambda f: f, lambda f: [(0.0, f), (0.25, f * -1.0)], lambda f: [(0.0, f), (0.2345, f * 0.5)]],
    ids=["steady", "switch-on-grid", "switch-off-grid"],
)
def test_energy_budget_with_forcing(forcing_of):
    # the work integral is trapezoidal, so the residual is second order in dt
    tr, (series, r1) = forced_budget(0.01, forcing_of)
    _, (_, r2) = forced_budget(0.005, forcing_of)
    assert series[0] == 0.0
    assert tr.work_cum[-1] != 0
    assert r1 <= 1e-5 * tr.norm_H[0] ** 2
    assert r1 / r2 >= 3.0


def test_switch_inside_step_is_resolved():
    # splitting at the switch time makes the result independent of the step grid
    f = single_mode(8, (0, 0, 1), (1.0, 0.0, 0.0))
    sched = [(0.0, f), (0.33, f * 0.0)]
    a = simulate(f * 0.0, params(0.5, forcing=sched), SolverConfig(8, 0.1, 1.0)).final
    # no advection here, so the exact answer is a relaxation then a free decay
    lam = 0.5
    amp = (1 - math.exp(-lam * 0.33)) / lam * math.exp(-lam * (1.0 - 0.33))
    assert np.allclose(a.coeffs, f.coeffs * amp, atol=1e-14)


def test_unforced_energy_decreases_and_dissipation_matches():
    tr = simulate(taylor_green(16), params(0.05, theta=0.2), SolverConfig(16, 0.01, 0.5))
    assert np.all(np.diff(tr.norm_H) < 0)
    # the budget is written for |u|_H^2, hence the factor 2
    d = 2 * 0.05 * l2_time_integral(tr, "norm_V")
    assert tr.dissip_cum[-1] == pytest.approx(d, rel=1e-12)


def test_snapshots_and_monitor():
    seen = []
    tr = simulate(taylor_green(8), params(), SolverConfig(8, 0.1, 0.5), snapshot_every=2,
                  monitor=lambda t, u: seen.append(t))
    assert [t for t, _ in tr.snapshots] == pytest.approx([0.0, 0.2, 0.4])
    assert seen == pytest.approx(list(tr.t))


# --- aborts ------------------------------------------------------------------


def test_cfl_violation_aborts_with_partial_trace():
    u0 = taylor_green(16, 10.0)
    with pytest.raises(CFLViolation) as info:
        simulate(u0, params(0.01), SolverConfig(16, 0.5, 2.0))
    tr = info.value.trace
    assert tr.status == "cfl"
    assert len(tr) == 1 and tr.t[0] == 0.0
    assert "CFL" in str(info.value)


def test_nan_aborts_at_last_valid_time(monkeypatch):
    real = IFIntegrator.step
    calls = {"n": 0}

    def bad(self, u, t, h=None):
        calls["n"] += 1
        out = real(self, u, t, h)
        if calls["n"] == 4:
            out[0, 1] = np.nan
        return out

    monkeypatch.setattr(IFIntegrator, "step", bad)
    with pytest.raises(NumericalAbort) as info:
        simulate(taylor_green(8), params(), SolverConfig(8, 0.1, 1.0, stride=2))
    exc = info.value
    assert not isinstance(exc, CFLViolation)
    assert exc.time == pytest.approx(0.3)
    assert exc.trace.status == "nan"
    assert exc.trace.t[-1] == pytest.approx(0.3)
    assert np.all(np.isfinite(exc.trace.norm_H))


def test_mismatched_lattice_rejected():
    with pytest.raises(ValueError):
        simulate(taylor_green(8), params(), SolverConfig(16, 0.1, 1.0))


# --- spatial resolution ------------------------------------------------------


@pytest.mark.slow
def test_resolution_convergence_32_vs_48():
    # Taylor-Green stays inside both two-thirds sets, so the norms must agree
    p = params(0.05, theta=0.2)
    a = simulate(taylor_green(32), p, SolverConfig(32, 0.01, 0.5))
    b = simulate(taylor_green(48), p, SolverConfig(48, 0.01, 0.5))
    for col in ("norm_H", "norm_V", "norm_Lap"):
        assert np.allclose(getattr(a, col), getattr(b, col), rtol=1e-4)


def test_backend_name_is_known():
    assert solver.kernels.BACKEND in ("python", "cython")
