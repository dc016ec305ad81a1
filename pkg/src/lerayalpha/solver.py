"""Integrating-factor Runge-Kutta integration of the truncated Leray-alpha system.

The evolution is written in projection form,

    du/dt = -nu |k|^2 u - P (ubar . grad) u + P f,    ubar = M_theta u,

so the pressure never appears.  The viscous term is integrated exactly with
the factor ``exp(-nu |k|^2 dt)``; the quadratic term and the forcing are
advanced explicitly.
"""
import bisect
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from . import kernels
from .spectral import (
    FilterSpec,
    SpectralField,
    advective_term,
    make_lattice,
    to_physical,
)

log = logging.getLogger(__name__)

INTEGRATORS = ("IF-RK2", "IF-RK4")
CFL_LIMIT = 0.8


class NumericalAbort(RuntimeError):
    """Raised when a run produces non-finite values or violates the CFL bound.

    ``trace`` holds the samples recorded up to the last valid state.
    """

    def __init__(self, message, trace=None, time=None):
        super().__init__(message)
        self.trace = trace
        self.time = time


class CFLViolation(NumericalAbort):
    pass


@dataclass(frozen=True)
class FluidParams:
    """Viscosity, filter and forcing.

    ``forcing`` is ``None``, a single :class:`SpectralField` (steady), or a
    sequence of ``(t_start, field)`` pairs held constant until the next start
    time.  The first start time must be 0.
    """

    nu: float
    filter: FilterSpec
    forcing: object = None

    def __post_init__(self):
        if not (self.nu > 0):
            raise ValueError(f"viscosity must be > 0, got {self.nu}")
        for _, f in self.forcing_schedule():
            defect = max(f.divergence_defect(), f.mean_defect())
            if defect > 1e-10 * max(1.0, f.max_abs() * f.N):
                raise ValueError("forcing must be divergence-free and mean-zero")

    def forcing_schedule(self) -> Sequence[Tuple[float, SpectralField]]:
        if self.forcing is None:
            return ()
        if isinstance(self.forcing, SpectralField):
            return ((0.0, self.forcing),)
        sched = tuple((float(t), f) for t, f in self.forcing)
        starts = [t for t, _ in sched]
        if not sched or starts[0] != 0.0 or any(b <= a for a, b in zip(starts, starts[1:])):
            raise ValueError("forcing snapshots need strictly increasing start times beginning at 0")
        return sched

    def forcing_l2_norm(self, T, s=-1.0):
        """``(int_0^T ||f(t)||_{V^s}^2 dt)^(1/2)`` for the hold schedule."""
        from .spectral import sobolev_norm

        sched = self.forcing_schedule()
        total = 0.0
        for i, (t0, f) in enumerate(sched):
            t1 = sched[i + 1][0] if i + 1 < len(sched) else T
            t1 = min(t1, T)
            if t1 > t0:
                total += (t1 - t0) * sobolev_norm(f, s) ** 2
        return math.sqrt(total)

    def forcing_sup_norm(self, T=math.inf, s=0.0):
        from .spectral import sobolev_norm

        return max((sobolev_norm(f, s) for t0, f in self.forcing_schedule() if t0 < T), default=0.0)


@dataclass(frozen=True)
class SolverConfig:
    N: int
    dt: float
    T: float
    integrator: str = "IF-RK4"
    stride: int = 1

    def __post_init__(self):
        make_lattice(self.N)
        if not (self.dt > 0):
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not (self.T > self.dt):
            raise ValueError(f"T must exceed dt, got T={self.T}, dt={self.dt}")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}, got {self.integrator!r}")
        if int(self.stride) != self.stride or self.stride < 1:
            raise ValueError(f"stride must be a positive integer, got {self.stride}")

    @property
    def n_steps(self):
        return max(1, math.ceil(self.T / self.dt - 1e-9))


@dataclass
class NormTrace:
    """Sampled norms and cumulative energy-budget terms of one run."""

    t: np.ndarray
    norm_H: np.ndarray
    norm_V: np.ndarray
    norm_Lap: np.ndarray
    dissip_cum: np.ndarray
    work_cum: np.ndarray
    status: str = "ok"
    message: str = ""
    final: Optional[SpectralField] = None
    snapshots: list = field(default_factory=list)

    COLUMNS = ("t", "norm_H", "norm_V", "norm_Lap", "dissip_cum", "work_cum")

    def __len__(self):
        return len(self.t)

    @property
    def T(self):
        return float(self.t[-1])

    def columns(self):
        return [getattr(self, c) for c in self.COLUMNS]

    @classmethod
    def from_columns(cls, cols, **kw):
        return cls(*(np.asarray(c, dtype=float) for c in cols), **kw)


class _TraceBuilder:
    def __init__(self):
        self.rows = []

    def add(self, *row):
        self.rows.append(row)

    def build(self, **kw):
        cols = list(zip(*self.rows)) if self.rows else [()] * 6
        return NormTrace.from_columns(cols, **kw)


class IFIntegrator:
    """Cached integrating factors and work arrays for fixed (params, N, dt)."""

    def __init__(self, params, N, dt, integrator="IF-RK4"):
        self.params = params
        self.lattice = lat = make_lattice(N)
        self.integrator = integrator
        self.dt = dt
        self.M = lat.size
        self.filter_mult = params.filter.multiplier(lat)
        self._k2 = lat.k2.ravel()
        self._factors = {}
        self._schedule = [(t0, f.coeffs * lat.dealias_mask) for t0, f in params.forcing_schedule()]
        self._starts = [t0 for t0, _ in self._schedule]
        for _, f in params.forcing_schedule():
            if f.N != N:
                raise ValueError(f"forcing lattice N={f.N} does not match solver N={N}")

    def factors(self, h):
        if h not in self._factors:
            self._factors[h] = (
                np.exp(-self.params.nu * self._k2 * h),
                np.exp(-self.params.nu * self._k2 * h / 2),
            )
        return self._factors[h]

    def forcing_at(self, t, left=False):
        """Truncated forcing coefficients active at ``t`` (left limit if asked)."""
        if not self._schedule:
            return None
        pick = bisect.bisect_left if left else bisect.bisect_right
        i = max(0, pick(self._starts, t) - 1)
        return self._schedule[i][1]

    def rhs(self, u, f=None, with_speed=False):
        """Flat ``(3, M)`` explicit tendency with forcing ``f`` and optionally max |ubar|."""
        lat = self.lattice
        ubar = u.reshape((3,) + lat.shape) * self.filter_mult
        out = -advective_term(ubar, u.reshape((3,) + lat.shape), lat)
        if f is not None:
            out += f
        speed = None
        if with_speed:
            phys = to_physical(ubar * lat.dealias_mask, lat)
            speed = float(np.sqrt(np.max(np.sum(phys**2, axis=0))))
        return out.reshape(3, self.M), speed

    def switch_times(self, t0, t1):
        """Forcing start times strictly inside ``(t0, t1)``."""
        return [s for s in self._starts if t0 < s < t1]

    def check_cfl(self, speed, h, t):
        number = speed * h * self.lattice.N / 2
        if number > CFL_LIMIT:
            raise CFLViolation(
                f"CFL violation at t={t:.6g}: max|ubar|*dt*N/2 = {number:.4g} > {CFL_LIMIT}", time=t
            )

    def step(self, u, t, h=None):
        """Advance flat coefficients ``u`` (shape ``(3, M)``) by ``h``.

        The forcing active at ``t`` is held over the whole step; callers
        split steps at forcing switch times.
        """
        h = self.dt if h is None else h
        e_full, e_half = self.factors(h)
        f = self.forcing_at(t)
        k1, speed = self.rhs(u, f, with_speed=True)
        self.check_cfl(speed, h, t)
        if self.integrator == "IF-RK2":
            ustar = e_full * (u + h * k1)
            k2, _ = self.rhs(ustar, f)
            return e_full * (u + 0.5 * h * k1) + 0.5 * h * k2
        k2, _ = self.rhs(e_half * (u + 0.5 * h * k1), f)
        k3, _ = self.rhs(e_half * u + 0.5 * h * k2, f)
        k4, _ = self.rhs(e_full * u + h * (e_half * k3), f)
        out = np.empty_like(u)
        kernels.rk4_combine(u, k1, k2, k3, k4, e_full, e_half, h, out)
        return out


def step(u, params, cfg, t=0.0):
    """One integrating-factor RK step of size ``cfg.dt`` starting at time ``t``.

    The forcing active at ``t`` is held over the step.
    """
    integ = IFIntegrator(params, u.N, cfg.dt, cfg.integrator)
    out = integ.step(np.ascontiguousarray(u.coeffs.reshape(3, -1)), t)
    return SpectralField(out.reshape(u.coeffs.shape), u.lattice)


def _inner(f, u):
    return float(np.sum(f.real * u.real + f.imag * u.imag))


def simulate(u0, params, cfg, snapshot_every=0, monitor=None):
    """Integrate from ``u0`` over ``[0, cfg.T]`` and return the sampled trace.

    Samples are taken every ``cfg.stride`` steps plus the final time.  The
    cumulative dissipation and forcing work are accumulated with the
    trapezoidal rule on every step, not only on samples.  ``snapshot_every``
    > 0 stores the field every that many samples in ``trace.snapshots``;
    ``monitor(t, field)``, if given, is called at every sample.

    Raises :class:`NumericalAbort` (or :class:`CFLViolation`) with the
    partial trace attached if the run breaks down.
    """
    if u0.N != cfg.N:
        raise ValueError(f"initial field N={u0.N} does not match config N={cfg.N}")
    integ = IFIntegrator(params, cfg.N, cfg.dt, cfg.integrator)
    lat = integ.lattice
    wH, wV, wL = (lat.sobolev_weights(s) for s in (0.0, 1.0, 2.0))
    nu = params.nu

    u = np.array(u0.coeffs.reshape(3, -1))
    trace = _TraceBuilder()
    snaps = []

    def norms(v):
        return (
            kernels.weighted_square_sum(v, wH),
            kernels.weighted_square_sum(v, wV),
            kernels.weighted_square_sum(v, wL),
        )

    h2, v2, l2 = norms(u)
    t = 0.0
    dissip = work = 0.0
    f0 = integ.forcing_at(0.0)
    fu = _inner(f0.reshape(3, -1), u) if f0 is not None else 0.0
    n_samples = 0

    def record(t, h2, v2, l2, v):
        nonlocal n_samples
        trace.add(t, math.sqrt(h2), math.sqrt(v2), math.sqrt(l2), dissip, work)
        keep = snapshot_every and n_samples % snapshot_every == 0
        if keep or monitor is not None:
            fld = SpectralField(v.reshape(u0.coeffs.shape), lat)
            if keep:
                snaps.append((t, fld))
            if monitor is not None:
                monitor(t, fld)
        n_samples += 1

    record(t, h2, v2, l2, u)
    n = cfg.n_steps
    sampled_last = True
    for i in range(1, n + 1):
        t_end = i * cfg.dt if i < n else cfg.T
        # nominal step, split where the forcing switches
        for sub_end in integ.switch_times(t, t_end) + [t_end]:
            h = sub_end - t
            try:
                unew = integ.step(u, t, h)
            except CFLViolation as exc:
                if not sampled_last:
                    record(t, h2, v2, l2, u)
                raise CFLViolation(str(exc), trace=trace.build(status="cfl", message=str(exc)), time=t)
            if not np.all(np.isfinite(unew)):
                msg = f"non-finite field after step to t={sub_end:.6g}; last valid time {t:.6g}"
                if not sampled_last:
                    record(t, h2, v2, l2, u)
                raise NumericalAbort(msg, trace=trace.build(status="nan", message=msg), time=t)
            nh2, nv2, nl2 = norms(unew)
            f_left = integ.forcing_at(sub_end, left=True)
            fu_left = _inner(f_left.reshape(3, -1), unew) if f_left is not None else 0.0
            dissip += nu * (v2 + nv2) * h
            work += (fu + fu_left) * h
            u, t = unew, sub_end
            h2, v2, l2 = nh2, nv2, nl2
            f_now = integ.forcing_at(t)
            fu = _inner(f_now.reshape(3, -1), u) if f_now is not None else 0.0
            sampled_last = False
        if i % cfg.stride == 0 or i == n:
            record(t, h2, v2, l2, u)
            sampled_last = True
    final = SpectralField(u.reshape(u0.coeffs.shape), lat)
    return trace.build(final=final, snapshots=snaps)


def energy_budget(trace):
    """Residual of the energy identity along a trace.

    ``r(t_i) = |u(t_i)|_H^2 + dissipation(t_i) - work(t_i) - |u_0|_H^2``;
    returns ``(series, max |r|)``.  Zero up to time-integration and
    quadrature error for the truncated system.
    """
    if len(trace) == 0:
        raise ValueError("empty trace")
    res = trace.norm_H**2 + trace.dissip_cum - trace.work_cum - trace.norm_H[0] ** 2
    return res, float(np.max(np.abs(res)))


def l2_time_integral(trace, column="norm_V"):
    """Trapezoidal ``int ||u||^2 dt`` of a trace column over finite samples."""
    vals = getattr(trace, column) ** 2
    ok = np.isfinite(vals)
    return float(np.trapezoid(vals[ok], trace.t[ok])) if ok.sum() > 1 else 0.0
