"""A priori constants and comparison bounds for the Leray-alpha system.

Conventions: ``Y(t) = 1 + |u(t)|_V^2``.  The nonlinear constant is derived in
``docs/nonlinear_constant.md``; in short, with ``X = |u|_V`` and
``Z = |Lap u|_H``,

    d/dt X^2 + 2 nu Z^2 <= 2 kappa alpha^(-2 theta) X^(3/2 + 2 theta) Z^(3/2 - 2 theta) + 2 |f|_H Z

and Young's inequality, spending ``nu/2 Z^2`` on each right-hand term, gives

    d/dt X^2 + nu Z^2 <= (2/nu) |f|_H^2 + C_nl X^(2 gamma),
    C_nl = (1 + 4 theta)/2 * ((3 - 4 theta)/nu)^((3 - 4 theta)/(1 + 4 theta))
           * (kappa alpha^(-2 theta))^(4/(1 + 4 theta)),

hence ``Y' <= C Y^gamma`` with ``C = C_nl + 2 |f|_H^2 / nu``.  ``kappa`` is the
Sobolev product constant of the torus, left as a parameter (default 1).
"""
import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np
from scipy.integrate import solve_ivp

QUARTER = 0.25


def _check_theta(theta, allow_zero=True):
    lo_ok = theta >= 0 if allow_zero else theta > 0
    if not (lo_ok and theta <= QUARTER):
        rng = "0 <= theta <= 1/4" if allow_zero else "0 < theta <= 1/4"
        raise ValueError(f"theta must satisfy {rng}, got {theta}")


def gamma(theta):
    """Blow-up exponent ``(3 + 4 theta)/(1 + 4 theta)``.

    Rational ``theta`` (int or Fraction) gives an exact Fraction.
    """
    _check_theta(theta)
    if isinstance(theta, (int, Fraction)):
        th = Fraction(theta)
        return (3 + 4 * th) / (1 + 4 * th)
    return (3.0 + 4.0 * theta) / (1.0 + 4.0 * theta)


def k1_k2(u0_H, f_norm, nu, T=None):
    """Energy-level constants ``(K1, K2)``.

    ``f_norm`` is ``|f|_{L^2(0,T; V^-1)}``, so ``T`` enters only through it.

        K1 = (|u0|_H^2 + |f|^2 / nu) / nu,    K2 = nu K1.
    """
    if not nu > 0:
        raise ValueError(f"nu must be > 0, got {nu}")
    k1 = (u0_H**2 + f_norm**2 / nu) / nu
    return k1, nu * k1


def young_exponents(theta):
    """Exponent pair ``(p, p')`` used on ``Z^(3/2-2theta) * X^(3/2+2theta)``."""
    return 4.0 / (3.0 - 4.0 * theta), 4.0 / (1.0 + 4.0 * theta)


def nonlinear_part(alpha, theta, nu, sobolev_constant=1.0):
    """``C_nl``: the coefficient of ``|u|_V^(2 gamma)`` after Young's inequality."""
    _check_theta(theta, allow_zero=False)
    if not (alpha > 0 and nu > 0):
        raise ValueError("alpha and nu must be positive")
    _, pc = young_exponents(theta)
    r = (3.0 - 4.0 * theta) / (1.0 + 4.0 * theta)
    return (
        0.5 * (1.0 + 4.0 * theta)
        * ((3.0 - 4.0 * theta) / nu) ** r
        * (sobolev_constant * alpha ** (-2.0 * theta)) ** pc
    )


def nonlinear_constant(alpha, theta, nu, f_norm, sobolev_constant=1.0):
    """Constant ``C`` of the comparison inequality ``Y' <= C Y^gamma``.

    ``f_norm`` is ``sup_t |f(t)|_H``.  theta = 0 is rejected: the
    interpolation step behind the estimate needs theta > 0.
    """
    if f_norm < 0:
        raise ValueError("f_norm must be nonnegative")
    return nonlinear_part(alpha, theta, nu, sobolev_constant) + 2.0 * f_norm**2 / nu


def t_star(u0_V, C, gam):
    """Guaranteed existence time ``3 / (8 C) * (1 + |u0|_V^2)^(1 - gamma)``."""
    if not (C > 0 and gam > 1):
        raise ValueError("need C > 0 and gamma > 1")
    return 3.0 / (8.0 * C) / (1.0 + u0_V**2) ** (gam - 1.0)


def blowup_time(Y0, C, gam):
    """Blow-up time ``1 / ((gamma - 1) C Y0^(gamma - 1))`` of ``Y' = C Y^gamma``."""
    return 1.0 / ((gam - 1.0) * C * Y0 ** (gam - 1.0))


def closed_form_expiry(Y0, C, gam):
    """Time at which the denominator of :func:`closed_form_bound` vanishes."""
    return 1.0 / (2.0 * Y0 ** (gam - 1.0) * C)


def closed_form_bound(Y0, C, gam, t):
    """Majorant ``Y0 / (1 - 2 Y0^(gamma-1) C t)^(1/(gamma-1))`` (the "closed" form).

    Returns ``math.inf`` once the denominator has vanished: the bound has
    expired and certifies nothing.
    """
    if Y0 < 1 or t < 0:
        raise ValueError("need Y0 >= 1 and t >= 0")
    d = 1.0 - 2.0 * Y0 ** (gam - 1.0) * C * t
    if d <= 0:
        return math.inf
    return Y0 / d ** (1.0 / (gam - 1.0))


def sharp_solution(Y0, C, gam, t):
    """Exact solution of ``Y' = C Y^gamma`` (the "sharp" form); inf past blow-up."""
    t = np.asarray(t, dtype=float)
    d = 1.0 - (gam - 1.0) * C * Y0 ** (gam - 1.0) * t
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(d > 0, Y0 * np.abs(d) ** (-1.0 / (gam - 1.0)), np.inf)
    return out if out.ndim else float(out)


@dataclass
class OdeOracle:
    t: np.ndarray
    numeric: np.ndarray
    exact: np.ndarray
    blowup_time: float
    max_rel_error: float


def ode_oracle(Y0, C, gam, t_end, n_out=200, max_fraction=0.99, rtol=1e-13):
    """Integrate ``Y' = C Y^gamma`` numerically and compare with the exact solution.

    The integration stops at ``min(t_end, max_fraction * T_b)``.
    """
    if not (Y0 >= 1 and C > 0 and gam > 1):
        raise ValueError("need Y0 >= 1, C > 0, gamma > 1")
    tb = blowup_time(Y0, C, gam)
    stop = min(t_end, max_fraction * tb)
    ts = np.linspace(0.0, stop, n_out)
    sol = solve_ivp(
        lambda t, y: C * y**gam, (0.0, stop), [Y0],
        method="DOP853", t_eval=ts, rtol=rtol, atol=1e-300,
    )
    if not sol.success:
        raise RuntimeError(f"ODE integration failed: {sol.message}")
    num = sol.y[0]
    ex = sharp_solution(Y0, C, gam, ts)
    err = float(np.max(np.abs(num - ex) / ex))
    return OdeOracle(ts, num, ex, tb, err)


def m_star(u0_H, f_L2H, nu, C_nl, gam, t_s=None):
    """Ceiling for ``int_0^{T*} |Lap u|_H^2`` over the existence interval.

    ``f_L2H`` is ``|f|_{L^2(0, T*; H)}``; ``C_nl`` is the forcing-free constant.

        M = (|u0|_H^2 + (2/nu) |f|^2 + C_nl [2 (1 + |u0|_H^2)]^gamma) / nu
    """
    if not nu > 0:
        raise ValueError(f"nu must be > 0, got {nu}")
    if t_s is not None and not t_s > 0:
        raise ValueError("T* must be positive")
    return (u0_H**2 + 2.0 / nu * f_L2H**2 + C_nl * (2.0 * (1.0 + u0_H**2)) ** gam) / nu


@dataclass
class QuarterCase:
    ceiling: float
    running_ceiling: np.ndarray
    holds: bool
    worst_ratio: float
    global_regime: bool = True


def quarter_case(theta, Y0, C, t, Y):
    """Gronwall ceiling for the theta = 1/4 regime where ``Y' <= C Y^2``.

    Writing ``Y' <= (C Y) Y`` with ``Y`` integrable gives
    ``Y(t) <= Y0 exp(C int_0^t Y)``.  ``t`` and ``Y`` are a sampled
    trajectory; the running ceiling is built with the trapezoidal rule.
    """
    if theta != QUARTER:
        raise ValueError(f"the Gronwall route needs theta = 1/4, got {theta}")
    t = np.asarray(t, dtype=float)
    Y = np.asarray(Y, dtype=float)
    seg = 0.5 * (Y[1:] + Y[:-1]) * np.diff(t)
    integral = np.concatenate([[0.0], np.cumsum(seg)])
    running = Y0 * np.exp(C * integral)
    ratio = Y / running
    return QuarterCase(float(running[-1]), running, bool(np.all(ratio <= 1.0 + 1e-12)), float(ratio.max()))


@dataclass
class BoundReport:
    theta: float
    alpha: float
    nu: float
    T: float
    gamma: float
    C_nl: float
    C: float
    K1: float
    K2: float
    Y0: float
    t_star: float
    blowup_time: float
    m_star: float
    y_ceiling_t_star: float
    closed_form_ceiling: float
    global_regime: bool
    sobolev_constant: float = 1.0
    C_overridden: bool = False

    def as_dict(self):
        return asdict(self)

    def to_text(self):
        return "\n".join(f"{k} = {_fmt(v)}" for k, v in self.as_dict().items())

    def csv_header(self):
        return ",".join(self.as_dict())

    def csv_row(self):
        return ",".join(_fmt(v) for v in self.as_dict().values())


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def bound_report(u0_H, u0_V, f_V_minus1_L2, f_sup_H, f_L2H_tstar, alpha, theta, nu, T,
                 sobolev_constant=1.0, C_override=None):
    """Evaluate every closed-form constant for one configuration.

    ``f_L2H_tstar`` may be a callable of ``T*`` returning the forcing norm
    over ``[0, T*]`` (it is only known after ``T*`` is).
    """
    gam = gamma(theta)
    K1, K2 = k1_k2(u0_H, f_V_minus1_L2, nu, T)
    c_nl = nonlinear_part(alpha, theta, nu, sobolev_constant)
    C = nonlinear_constant(alpha, theta, nu, f_sup_H, sobolev_constant)
    if C_override is not None:
        if not C_override > 0:
            raise ValueError("C override must be positive")
        C = float(C_override)
    Y0 = 1.0 + u0_V**2
    ts = t_star(u0_V, C, gam)
    fl2 = f_L2H_tstar(ts) if callable(f_L2H_tstar) else f_L2H_tstar
    return BoundReport(
        theta=float(theta), alpha=float(alpha), nu=float(nu), T=float(T), gamma=float(gam),
        C_nl=c_nl, C=C, K1=K1, K2=K2, Y0=Y0, t_star=ts, blowup_time=blowup_time(Y0, C, gam),
        m_star=m_star(u0_H, fl2, nu, c_nl, gam, ts),
        y_ceiling_t_star=2.0 * Y0,
        closed_form_ceiling=4.0 ** (1.0 / (gam - 1.0)) * Y0,
        global_regime=theta == QUARTER,
        sobolev_constant=float(sobolev_constant),
        C_overridden=C_override is not None,
    )


def report_for_run(u0, params, T, sobolev_constant=1.0, C_override=None):
    """:func:`bound_report` with norms taken from a field and :class:`FluidParams`."""
    from .spectral import sobolev_norm

    return bound_report(
        u0_H=sobolev_norm(u0, 0.0),
        u0_V=sobolev_norm(u0, 1.0),
        f_V_minus1_L2=params.forcing_l2_norm(T, s=-1.0),
        f_sup_H=params.forcing_sup_norm(T, s=0.0),
        f_L2H_tstar=lambda ts: params.forcing_l2_norm(ts, s=0.0),
        alpha=params.filter.alpha, theta=params.filter.theta, nu=params.nu, T=T,
        sobolev_constant=sobolev_constant, C_override=C_override,
    )
