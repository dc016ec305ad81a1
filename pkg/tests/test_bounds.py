import math
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from lerayalpha import bounds
from lerayalpha.fields import taylor_green
from lerayalpha.solver import FluidParams
from lerayalpha.spectral import FilterSpec


# --- gamma -------------------------------------------------------------------


def test_gamma_quarter_is_exactly_two():
    assert bounds.gamma(Fraction(1, 4)) == 2
    assert isinstance(bounds.gamma(Fraction(1, 4)), Fraction)
    assert bounds.gamma(0.25) == 2.0


def test_gamma_endpoints_and_rationals():
    assert bounds.gamma(0) == 3
    assert bounds.gamma(Fraction(1, 8)) == Fraction(7, 3)
    assert bounds.gamma(0.125) == pytest.approx(7 / 3, rel=1e-15)


@pytest.mark.parametrize("theta", [-0.01, 0.26, 1.0])
def test_gamma_rejects_out_of_range(theta):
    with pytest.raises(ValueError):
        bounds.gamma(theta)


# --- nonlinear constant against a symbolic Young's inequality -----------------


def sharp_young(theta, nu, kappa, alpha):
    """max over Z of 2 c X^a Z^b - (nu/2) Z^2, divided by X^(2 gamma), with X = 1."""
    th, n, c = sp.Rational(theta), sp.nsimplify(nu), sp.nsimplify(kappa * alpha ** (-2 * theta))
    Z = sp.symbols("Z", positive=True)
    b = sp.Rational(3, 2) - 2 * th
    g = 2 * c * Z**b - n / 2 * Z**2
    zs = sp.solve(sp.diff(g, Z), Z)
    return float(max(g.subs(Z, z) for z in zs))


@pytest.mark.parametrize("theta", ["1/20", "1/8", "1/5", "1/4"])
@pytest.mark.parametrize("nu,alpha", [(1.0, 1.0), (0.05, 1.0), (0.3, 2.0)])
def test_nonlinear_part_is_sharp_young_constant(theta, nu, alpha):
    th = float(Fraction(theta))
    got = bounds.nonlinear_part(alpha, th, nu)
    assert got == pytest.approx(sharp_young(Fraction(theta), nu, 1.0, alpha), rel=1e-12)


def test_young_exponents_are_conjugate_and_homogeneous():
    for th in (0.01, 0.1, 0.25):
        p, q = bounds.young_exponents(th)
        assert 1 / p + 1 / q == pytest.approx(1.0)
        # (3/2 - 2 th) p = 2 and (3/2 + 2 th) q = 2 gamma
        assert (1.5 - 2 * th) * p == pytest.approx(2.0)
        assert (1.5 + 2 * th) * q == pytest.approx(2 * bounds.gamma(th))


def test_nonlinear_constant_adds_forcing_and_scales_with_kappa():
    base = bounds.nonlinear_part(1.0, 0.2, 0.1)
    assert bounds.nonlinear_constant(1.0, 0.2, 0.1, 0.3) == pytest.approx(base + 2 * 0.09 / 0.1)
    pc = bounds.young_exponents(0.2)[1]
    assert bounds.nonlinear_part(1.0, 0.2, 0.1, 2.0) == pytest.approx(base * 2**pc)
    with pytest.raises(ValueError):
        bounds.nonlinear_constant(1.0, 0.0, 0.1, 0.0)


@settings(max_examples=60, deadline=None)
@given(
    theta=st.floats(0.01, 0.25),
    nu=st.floats(0.01, 10.0),
    X=st.floats(0.01, 100.0),
    Z=st.floats(0.01, 100.0),
)
def test_young_split_holds(theta, nu, X, Z):
    # 2 X^(3/2 + 2th) Z^(3/2 - 2th) <= (nu/2) Z^2 + C_nl X^(2 gamma), alpha = kappa = 1
    lhs = 2 * X ** (1.5 + 2 * theta) * Z ** (1.5 - 2 * theta)
    rhs = nu / 2 * Z**2 + bounds.nonlinear_part(1.0, theta, nu) * X ** (2 * bounds.gamma(theta))
    assert lhs <= rhs * (1 + 1e-12)


# --- existence and blow-up times -----------------------------------------------


def test_t_star_formula():
    g = bounds.gamma(0.1)
    assert bounds.t_star(2.0, 4.0, g) == pytest.approx(3 / 32 * 5 ** (1 - g), rel=1e-15)
    with pytest.raises(ValueError):
        bounds.t_star(1.0, 0.0, g)


@settings(max_examples=100, deadline=None)
@given(theta=st.floats(0.0, 0.25), C=st.floats(1e-3, 1e3), uv=st.floats(0.0, 100.0))
def test_t_star_precedes_blowup(theta, C, uv):
    g = bounds.gamma(theta)
    ts = bounds.t_star(uv, C, g)
    tb = bounds.blowup_time(1 + uv**2, C, g)
    # ratio is 3 (gamma - 1) / 8 <= 3/4
    assert ts / tb == pytest.approx(3 * (g - 1) / 8, rel=1e-12)
    assert bounds.closed_form_expiry(1 + uv**2, C, g) <= tb


def test_sharp_solution_solves_the_ode():
    Y0, C, g = 1.5, 0.7, bounds.gamma(0.15)
    t = np.linspace(0, 0.9 * bounds.blowup_time(Y0, C, g), 50)
    y = bounds.sharp_solution(Y0, C, g, t)
    h = 1e-6
    dy = (bounds.sharp_solution(Y0, C, g, t + h) - bounds.sharp_solution(Y0, C, g, t - h)) / (2 * h)
    assert np.allclose(dy[1:], C * y[1:] ** g, rtol=1e-6)
    assert bounds.sharp_solution(Y0, C, g, 2 * bounds.blowup_time(Y0, C, g)) == math.inf


def test_closed_form_dominates_and_expires():
    Y0, C = 1.2, 0.5
    for th in (0.0, 0.1, 0.25):
        g = bounds.gamma(th)
        te = bounds.closed_form_expiry(Y0, C, g)
        for t in np.linspace(0, te * 0.999, 40):
            # at theta = 0 (gamma = 3) the two forms coincide
            sharp = bounds.sharp_solution(Y0, C, g, t)
            assert bounds.closed_form_bound(Y0, C, g, t) >= sharp * (1 - 1e-13)
        assert bounds.closed_form_bound(Y0, C, g, te * 1.001) == math.inf
    with pytest.raises(ValueError):
        bounds.closed_form_bound(0.5, C, 2.0, 0.1)


def test_ode_oracle_matches_exact_solution():
    o = bounds.ode_oracle(2.0, 3.0, bounds.gamma(0.05), t_end=10.0)
    assert o.max_rel_error < 1e-8
    assert o.t[-1] == pytest.approx(0.99 * o.blowup_time)


# --- energy-level constants ---------------------------------------------------


def test_k1_k2_values():
    k1, k2 = bounds.k1_k2(0.5, 0.2, 0.1)
    assert k1 == pytest.approx((0.25 + 0.04 / 0.1) / 0.1)
    assert k2 == pytest.approx(0.1 * k1)
    with pytest.raises(ValueError):
        bounds.k1_k2(1.0, 0.0, 0.0)


def test_m_star_transcription():
    g = 7 / 3
    got = bounds.m_star(0.5, 0.3, 0.2, 1.7, g)
    assert got == pytest.approx((0.25 + 2 / 0.2 * 0.09 + 1.7 * (2 * 1.25) ** g) / 0.2)


def test_quarter_case_gronwall():
    C = 1.3
    t = np.linspace(0, 0.3, 301)
    Y = bounds.sharp_solution(1.2, C, 2.0, t)
    qc = bounds.quarter_case(0.25, 1.2, C, t, Y)
    assert qc.holds and qc.global_regime
    assert qc.worst_ratio <= 1.0
    # a trajectory growing faster than the ceiling is flagged
    bad = bounds.quarter_case(0.25, 1.2, C, t, Y * np.exp(5 * t))
    assert not bad.holds
    with pytest.raises(ValueError):
        bounds.quarter_case(0.2, 1.2, C, t, Y)


# --- reports -----------------------------------------------------------------


def test_report_for_run_and_text_round_trip():
    u0 = taylor_green(8)
    f = taylor_green(8, 0.2)
    p = FluidParams(0.1, FilterSpec(1.0, 0.25), f)
    rep = bounds.report_for_run(u0, p, 2.0)
    assert rep.gamma == 2.0 and rep.global_regime
    assert rep.Y0 == pytest.approx(1 + 3 * 0.25)  # |u0|_H^2 = 1/4, all |k|^2 = 3
    assert rep.t_star <= rep.blowup_time
    parsed = dict(line.split(" = ") for line in rep.to_text().splitlines())
    assert float(parsed["C"]) == rep.C
    assert parsed["global_regime"] == "true"
    assert len(rep.csv_header().split(",")) == len(rep.csv_row().split(","))


def test_report_override():
    u0 = taylor_green(8)
    p = FluidParams(0.1, FilterSpec(1.0, 0.1))
    rep = bounds.report_for_run(u0, p, 1.0, C_override=2.5)
    assert rep.C == 2.5 and rep.C_overridden
    assert not rep.global_regime
