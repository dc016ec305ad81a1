"""Self-checks run by ``lerayalpha verify``.

Each check returns a :class:`CheckResult`; :func:`run_checks` prints one
``PASS``/``FAIL`` line per check.  The numbered acceptance checks use pinned
parameters so that their outcome is reproducible; the property checks cover
module invariants not already exercised by the numbered ones.
"""
import math
import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import bounds, singular
from .fields import random_band, random_coefficients, taylor_green
from .solver import FluidParams, SolverConfig, energy_budget, l2_time_integral, simulate
from .spectral import (
    FilterSpec,
    advect,
    apply_filter,
    leray_project,
    make_lattice,
    pressure_gradient,
    recover_pressure,
    sobolev_norm,
    truncate,
)

# pinned desk-run parameters (N = 32 Taylor-Green, unit amplitude)
DESK = dict(N=32, nu=0.05, alpha=1.0, dt=0.01, T=1.0)
SWEEP_THETAS = (0.05, 0.15, 0.25)
LN2_LN3 = math.log(2.0) / math.log(3.0)


@dataclass
class CheckResult:
    key: str
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.key} {self.name}: {self.detail} [{self.seconds:.2f}s]"


def desk_run(theta, forcing=None, dt=None, monitor=None, N=None):
    N = N or DESK["N"]
    params = FluidParams(DESK["nu"], FilterSpec(DESK["alpha"], theta), forcing)
    cfg = SolverConfig(N, dt or DESK["dt"], DESK["T"], "IF-RK4")
    u0 = taylor_green(N)
    return u0, params, simulate(u0, params, cfg, monitor=monitor)


def check_filter_bound():
    """1: |M_theta u|_{V^(s+2theta)} <= alpha^(-2theta) |u|_{V^s}."""
    worst = -math.inf
    count = 0
    for seed in range(100):
        u = leray_project(random_coefficients(16, seed))
        for s in (-1.0, 0.0, 1.0):
            base = sobolev_norm(u, s)
            for theta in (0.05, 0.125, 0.2, 0.25):
                for alpha in (0.5, 1.0, 2.0):
                    lhs = sobolev_norm(apply_filter(u, FilterSpec(alpha, theta)), s + 2 * theta)
                    rhs = alpha ** (-2 * theta) * base
                    worst = max(worst, lhs / rhs - 1.0)
                    count += 1
    return worst <= 1e-12, f"{count} cases, max(lhs/rhs - 1) = {worst:.3e} (allowed 1e-12)"


def check_structural():
    """2: divergence, mean and reality defects along the theta = 0.2 desk run."""
    worst = [0.0, 0.0, 0.0]

    def monitor(t, u):
        scale = u.max_abs() or 1.0
        for i, d in enumerate((u.divergence_defect(), u.mean_defect(), u.reality_defect())):
            worst[i] = max(worst[i], d / scale)

    _, _, tr = desk_run(0.2, monitor=monitor)
    ok = max(worst) <= 1e-12
    return ok, (
        f"{len(tr)} samples, max relative |k.u|={worst[0]:.2e}, |u(0)|={worst[1]:.2e}, "
        f"reality={worst[2]:.2e} (allowed 1e-12)"
    )


def check_energy_budget():
    """3: energy residual and its reduction under dt halving."""
    _, _, tr = desk_run(0.2)
    _, r1 = energy_budget(tr)
    _, _, tr2 = desk_run(0.2, dt=DESK["dt"] / 2)
    _, r2 = energy_budget(tr2)
    e0 = tr.norm_H[0] ** 2
    ratio = r1 / r2 if r2 > 0 else math.inf
    ok = r1 <= 1e-6 * e0 and ratio >= 3.0
    return ok, f"residual {r1 / e0:.3e}*E0 (allowed 1e-6), dt/2 residual {r2 / e0:.3e}*E0, ratio {ratio:.2f} (need >= 3)"


def sweep_forcing(N=None):
    return random_band(N or DESK["N"], 7, kmin=1.0, kmax=3.0, energy=0.1)


def check_apriori():
    """4: int |u|_V^2 <= K1 and sup |u|_H^2 <= K2 over the theta sweep with forcing."""
    parts = []
    ok = True
    f = sweep_forcing()
    for theta in SWEEP_THETAS:
        u0, params, tr = desk_run(theta, forcing=f)
        rep = bounds.report_for_run(u0, params, DESK["T"])
        iv = l2_time_integral(tr, "norm_V")
        sh = float(np.max(tr.norm_H**2))
        good = iv <= 1.01 * rep.K1 and sh <= 1.01 * rep.K2
        ok &= good
        parts.append(f"theta={theta}: intV2/K1={iv / rep.K1:.4f} supH2/K2={sh / rep.K2:.4f}")
    return ok, "; ".join(parts)


def _t_star_reference(u0_V, C, gam):
    import mpmath

    with mpmath.workdps(40):
        u, c, g = mpmath.mpf(u0_V), mpmath.mpf(C), mpmath.mpf(gam)
        return mpmath.mpf(3) / (8 * c) * mpmath.power(1 + u * u, 1 - g)


def check_gamma_tstar():
    """5: exact gamma(1/4) = 2 and T* against a high-precision evaluator."""
    exact = bounds.gamma(Fraction(1, 4)) == 2 and bounds.gamma(0.25) == 2.0
    worst = 0.0
    n = 0
    for th in np.linspace(0.0, 0.25, 10):
        g = bounds.gamma(float(th))
        for C in np.logspace(-3, 3, 10):
            for uv in np.logspace(-2, 2, 10):
                ref = _t_star_reference(float(uv), float(C), g)
                got = bounds.t_star(float(uv), float(C), g)
                worst = max(worst, float(abs(got - ref) / ref))
                n += 1
    ok = exact and worst <= 1e-15
    return ok, f"gamma(1/4) exact: {exact}; T* on {n} points, max rel err {worst:.2e} (allowed 1e-15)"


def check_ode():
    """6: numeric vs exact solution, majorant dominance and T* <= T_b."""
    worst = 0.0
    dominated = True
    n = 0
    for th in (0.01, 0.05, 0.1, 0.15, 0.2, 0.25):
        g = bounds.gamma(th)
        for C in (0.1, 1.0, 10.0):
            for Y0 in (1.0, 2.0, 10.0):
                tb = bounds.blowup_time(Y0, C, g)
                o = bounds.ode_oracle(Y0, C, g, tb, n_out=200, max_fraction=0.99)
                worst = max(worst, o.max_rel_error)
                maj = np.array([bounds.closed_form_bound(Y0, C, g, t) for t in o.t])
                dominated &= bool(np.all(maj >= o.numeric * (1 - 1e-12)))
                n += 1
    order_ok = True
    m = 0
    for th in np.linspace(0.0, 0.25, 26):
        g = bounds.gamma(float(th))
        for C in np.logspace(-3, 3, 13):
            for uv in np.logspace(-2, 2, 13):
                Y0 = 1.0 + uv**2
                order_ok &= bounds.t_star(uv, C, g) <= bounds.blowup_time(Y0, C, g)
                m += 1
    ok = worst <= 1e-8 and dominated and order_ok
    return ok, (
        f"{n} ODE runs to 0.99*T_b, max rel err {worst:.2e} (allowed 1e-8); "
        f"majorant dominates: {dominated}; T* <= T_b on {m} points: {order_ok}"
    )


def check_blowup_lb():
    """7: remaining-time bound and its integrated form on exact blow-up traces."""
    u0 = taylor_green(DESK["N"])
    Y0 = 1.0 + sobolev_norm(u0, 1.0) ** 2
    parts = []
    ok = True
    for th in (0.05, 0.125, 0.2):
        g = bounds.gamma(th)
        C = bounds.nonlinear_constant(DESK["alpha"], th, DESK["nu"], 0.0)
        t, v = singular.ode_blowup_trace(Y0, C, g)
        fam = singular.good_components(t, 1e4, values=v)
        rep = singular.blowup_lb_check(t, fam, C, g, values=v, tol=1e-6)
        ok &= rep.all_passed and rep.n_components > 0
        parts.append(
            f"theta={th}: worst margin {rep.worst_margin:.2e}, "
            f"integrated {rep.integrated_lhs:.4g} <= {rep.integrated_rhs:.4g}"
        )
    return ok, "; ".join(parts)


def check_cantor():
    """8: Cantor pre-measure, dimension estimate and trends."""
    fam = singular.cantor_family(10)
    pm = singular.premeasure(fam, LN2_LN3, 3.0**-5).value
    est = singular.hausdorff_dimension_estimate(fam)
    sched = singular.eps_schedule()
    hi = np.array([singular.premeasure(fam, 0.8, e).value for e in sched])
    lo = np.array([singular.premeasure(fam, 0.5, e).value for e in sched])
    shrink = bool(np.all(np.diff(hi) <= 1e-12) and hi[-1] < 0.5 * hi[0])
    grow = bool(np.all(np.diff(lo) >= -1e-12) and lo[-1] > 2.0 * lo[0])
    ok = 0.9 <= pm <= 1.1 and abs(est.dimension - LN2_LN3) <= 0.05 and shrink and grow
    return ok, (
        f"pre-measure {pm:.4f} at a=ln2/ln3; dimension {est.dimension:.5f} "
        f"(target {LN2_LN3:.5f}); a=0.8: {hi[0]:.3g}->{hi[-1]:.3g}; a=0.5: {lo[0]:.3g}->{lo[-1]:.3g}"
    )


def check_subadditive():
    """9: (sum x)^delta <= sum x^delta on random lists."""
    rng = np.random.default_rng(20240917)
    fails = 0
    for _ in range(10000):
        n = int(rng.integers(1, 60))
        kind = rng.integers(3)
        if kind == 0:
            x = rng.random(n)
        elif kind == 1:
            x = rng.exponential(size=n) * 10.0 ** rng.uniform(-6, 6)
        else:
            x = np.where(rng.random(n) < 0.5, 0.0, rng.random(n) ** 8)
        delta = rng.uniform(0.0, 1.0)
        lhs, rhs = singular.delta_subadditive(x, delta)
        if lhs > rhs * (1 + 1e-14):
            fails += 1
    return fails == 0, f"10000 lists, {fails} failures (float tolerance 1e-14 relative)"


def synthetic_families():
    """Partitions of [0, 1] into open intervals, so the left-over set is finite.

    Lengths shrink geometrically toward an accumulation point (at 0, or at
    1/2 from both sides), or come from a random heavy-tailed partition.
    """
    fams = {}
    edges = np.concatenate([2.0 ** -np.arange(400), [0.0]])
    fams["geometric"] = singular.IntervalFamily(1.0, np.column_stack([edges[1:], edges[:-1]])[::-1])
    half = np.concatenate([0.5 * 2.0 ** -np.arange(50), [0.0]])
    left = np.column_stack([0.5 - half[:-1], 0.5 - half[1:]])
    right = np.column_stack([0.5 + half[1:], 0.5 + half[:-1]])[::-1]
    fams["two-sided"] = singular.IntervalFamily(1.0, np.vstack([left, right]))
    rng = np.random.default_rng(5)
    cuts = np.unique(rng.random(3000) ** 3)
    pts = np.concatenate([[0.0], cuts[cuts > 0], [1.0]])
    fams["random-partition"] = singular.IntervalFamily(1.0, np.column_stack([pts[:-1], pts[1:]]))
    return fams


def check_covering_chain():
    """10: covering power sum <= residual power sum <= eps."""
    fails = []
    n = 0
    for name, fam in synthetic_families().items():
        for th in (0.05, 0.125, 0.2):
            for eps in singular.eps_schedule(1.0, 0.5, 20):
                c = singular.covering_chain(fam, th, eps)
                n += 1
                if not c.passed:
                    fails.append(f"{name}/theta={th}/eps={eps:.3g}")
    detail = f"{n} (family, theta, eps) cases, {len(fails)} failures"
    if fails:
        detail += ": " + ", ".join(fails[:5])
    return not fails, detail


# --- module properties beyond the numbered criteria ---------------------------


def check_spectral_properties():
    """Projection idempotence, advection orthogonality, pressure identity."""
    lat = make_lattice(16)
    worst = {}
    for seed in range(5):
        u = truncate(leray_project(random_coefficients(16, seed)))
        fs = FilterSpec(1.0, 0.1 + 0.03 * seed)
        pu = leray_project(u)
        worst["idempotent"] = max(worst.get("idempotent", 0), float(np.max(np.abs(leray_project(pu).coeffs - pu.coeffs))))
        b = advect(apply_filter(u, fs), u)
        scale = b.max_abs() or 1.0
        worst["div(B)"] = max(worst.get("div(B)", 0), b.divergence_defect() / scale)
        orth = abs(np.vdot(b.coeffs, u.coeffs).real) / (np.vdot(u.coeffs, u.coeffs).real * scale)
        worst["<B,u>"] = max(worst.get("<B,u>", 0), float(orth))
        from .spectral import advective_term

        full = advective_term(apply_filter(u, fs).coeffs, u.coeffs, lat, project=False)
        p = recover_pressure(u, fs)
        resid = full - b.coeffs + pressure_gradient(p, lat)
        worst["pressure"] = max(worst.get("pressure", 0), float(np.max(np.abs(resid))) / scale)
    ok = all(v <= 1e-12 for v in worst.values())
    return ok, ", ".join(f"{k} {v:.1e}" for k, v in worst.items())


def check_singular_properties():
    """Pre-measure scaling, monotonicity of the admissible bound, empty set."""
    fam = singular.cantor_family(8)
    parts = []
    ok = True
    a = 0.7
    for eps in (0.1, 0.01):
        p1 = singular.premeasure(fam, a, eps).value
        p2 = singular.premeasure(fam.dilate(2.0), a, 2.0 * eps).value
        rel = abs(p2 - 2.0**a * p1) / max(p1, 1e-300)
        ok &= rel <= 1e-12
    parts.append("scaling ok" if ok else "scaling broken")
    sched = singular.eps_schedule(1.0, 0.5, 16)
    bnd = np.array([singular.premeasure(fam, a, e).bound for e in sched])
    mono = bool(np.all(np.diff(bnd[np.isfinite(bnd)]) >= -1e-12))
    parts.append(f"bound monotone: {mono}")
    whole = singular.IntervalFamily.from_pairs([(0.0, 0.5), (0.5, 1.0)], 1.0)
    est = singular.hausdorff_dimension_estimate(whole)
    empty = est.status == "empty" and est.dimension == 0.0
    parts.append(f"single point -> dimension 0: {empty}")
    return ok and mono and empty, "; ".join(parts)


def check_bounds_properties():
    """gamma range and monotonicity, zero forcing case, Gronwall ceiling."""
    ths = np.linspace(0.0, 0.25, 51)
    gs = np.array([bounds.gamma(float(t)) for t in ths])
    mono = bool(np.all(np.diff(gs) < 0)) and gs[0] == 3.0 and gs[-1] == 2.0
    exact = all(bounds.gamma(Fraction(k, 100)) == Fraction(300 + 4 * k, 100 + 4 * k) for k in range(26))
    C = 2.0
    t = np.linspace(0.0, 0.2, 401)
    Y = bounds.sharp_solution(1.5, C, 2.0, t)
    qc = bounds.quarter_case(0.25, 1.5, C, t, Y)
    ok = mono and exact and qc.holds
    return ok, f"gamma decreasing in [2,3]: {mono}; exact rationals: {exact}; Gronwall ceiling holds: {qc.holds}"


ACCEPTANCE = (
    ("1", "filter-bound", check_filter_bound),
    ("2", "structural-invariants", check_structural),
    ("3", "energy-budget", check_energy_budget),
    ("4", "a-priori-bounds", check_apriori),
    ("5", "gamma-tstar", check_gamma_tstar),
    ("6", "ode-comparison", check_ode),
    ("7", "blowup-lower-bound", check_blowup_lb),
    ("8", "hausdorff-premeasure", check_cantor),
    ("9", "delta-subadditivity", check_subadditive),
    ("10", "covering-chain", check_covering_chain),
)

PROPERTIES = (
    ("P1", "spectral-properties", check_spectral_properties),
    ("P2", "singular-properties", check_singular_properties),
    ("P3", "bounds-properties", check_bounds_properties),
)


def run_check(key, name, fn):
    t0 = time.perf_counter()
    try:
        ok, detail = fn()
    except Exception as exc:  # a crashing check is a failing check
        ok, detail = False, f"raised {type(exc).__name__}: {exc}"
    return CheckResult(key, name, bool(ok), detail, time.perf_counter() - t0)


def run_checks(checks=ACCEPTANCE + PROPERTIES, out=print):
    results = []
    for key, name, fn in checks:
        r = run_check(key, name, fn)
        if out is not None:
            out(r.line())
        results.append(r)
    return results
