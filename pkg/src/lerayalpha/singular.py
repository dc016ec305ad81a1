"""Time singular sets: good-interval decomposition, coverings, pre-measures.

A trace is split into the maximal open intervals where the (linearly
interpolated) V-norm stays below a threshold.  The complement ``S`` of
their union in ``[start, T]`` stands in for the singular set; it is covered
by the closed gaps left after keeping the longest intervals, and
``sum (diam B_j)^a`` over that covering bounds the ``a``-dimensional
Hausdorff pre-measure of ``S`` from above.
"""
import bisect
import heapq
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Optional

import numpy as np

from .bounds import blowup_time, sharp_solution
from .solver import NormTrace


@dataclass(frozen=True, eq=False)
class IntervalFamily:
    """Sorted, pairwise disjoint open intervals inside ``(start, T)``."""

    T: float
    intervals: np.ndarray
    start: float = 0.0

    def __post_init__(self):
        iv = np.asarray(self.intervals, dtype=float).reshape(-1, 2)
        object.__setattr__(self, "intervals", iv)
        iv.flags.writeable = False
        if not self.T > self.start:
            raise ValueError("need T > start")
        if len(iv):
            if np.any(iv[:, 1] <= iv[:, 0]):
                raise ValueError("every interval needs alpha < beta")
            if iv[0, 0] < self.start or iv[-1, 1] > self.T:
                raise ValueError("intervals must lie inside [start, T]")
            if np.any(iv[1:, 0] < iv[:-1, 1]):
                raise ValueError("intervals must be sorted and pairwise disjoint")

    @classmethod
    def from_pairs(cls, pairs, T, start=0.0):
        pairs = sorted((float(a), float(b)) for a, b in pairs)
        return cls(T, np.array(pairs, dtype=float).reshape(-1, 2), start)

    def __len__(self):
        return len(self.intervals)

    @property
    def lengths(self):
        return self.intervals[:, 1] - self.intervals[:, 0]

    @property
    def measure(self):
        return float(self.lengths.sum())

    def complement(self):
        """Closed components of ``[start, T]`` minus the union, shape ``(m, 2)``.

        Zero-length components are points of ``S`` and are kept.
        """
        iv = self.intervals
        lo = np.concatenate([[self.start], iv[:, 1]])
        hi = np.concatenate([iv[:, 0], [self.T]])
        return np.stack([lo, hi], axis=1)

    def dilate(self, lam):
        """Image of the family under ``t -> start + lam (t - start)``."""
        s = self.start
        return IntervalFamily(s + lam * (self.T - s), s + lam * (self.intervals - s), s)

    @cached_property
    def _sequence(self):
        return _CoveringSequence(self)


class _CoveringSequence:
    """Nested coverings obtained by keeping the ``j`` longest intervals, j = 0..n.

    Keeping one more interval ``(a, b)`` splits the gap ``[g0, g1]`` that
    contains it into ``[g0, a]`` and ``[b, g1]``.  Diameters of every level
    are therefore encoded by the per-step (removed, left, right) triples.
    """

    def __init__(self, fam):
        iv = fam.intervals
        L = fam.lengths
        n = len(L)
        # longest first; ties broken by position for determinism
        self.order = np.lexsort((iv[:, 0], -L)) if n else np.zeros(0, dtype=int)
        self.total_length = float(L.sum())
        self.sorted_lengths = L[self.order]
        self.T, self.start = fam.T, fam.start
        full = fam.T - fam.start
        kept_a = []  # sorted left ends of kept intervals
        kept_b = []
        removed = np.empty(n)
        left = np.empty(n)
        right = np.empty(n)
        maxdiam = np.empty(n + 1)
        maxdiam[0] = full
        heap = [-full]
        live = {full: 1}
        for step, idx in enumerate(self.order):
            a, b = iv[idx]
            pos = bisect.bisect_left(kept_a, a)
            g0 = kept_b[pos - 1] if pos > 0 else fam.start
            g1 = kept_a[pos] if pos < len(kept_a) else fam.T
            kept_a.insert(pos, a)
            kept_b.insert(pos, b)
            d0, d1, d2 = g1 - g0, a - g0, g1 - b
            removed[step], left[step], right[step] = d0, d1, d2
            live[d0] -= 1
            for d in (d1, d2):
                live[d] = live.get(d, 0) + 1
                heapq.heappush(heap, -d)
            while live.get(-heap[0], 0) == 0:
                heapq.heappop(heap)
            maxdiam[step + 1] = -heap[0]
        self.removed, self.left, self.right = removed, left, right
        self.max_diam = maxdiam

    def residual_lengths(self):
        """Residual length sum after keeping j = 0..n intervals."""
        c = np.concatenate([[0.0], np.cumsum(self.sorted_lengths)])
        return np.maximum(self.total_length - c, 0.0)

    def residual_powers(self, a):
        p = self.sorted_lengths**a
        c = np.concatenate([[0.0], np.cumsum(p)])
        return np.maximum(p.sum() - c, 0.0)

    def values(self, a):
        """``sum_j diam(B_j)^a`` for every retention level."""
        full = self.T - self.start
        delta = _pow(self.left, a) + _pow(self.right, a) - _pow(self.removed, a)
        out = np.concatenate([[_pow(np.array([full]), a)[0]], _pow(np.array([full]), a)[0] + np.cumsum(delta)])
        return np.maximum(out, 0.0)

    def level(self, eps, power=None):
        """Smallest retention level whose residual sums are <= eps."""
        ok = self.residual_lengths() <= eps
        if power is not None:
            ok &= self.residual_powers(power) <= eps
        return int(np.argmax(ok))  # level n always qualifies


def _pow(x, a):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] ** a
    return out


@dataclass
class CoverEstimate:
    """Covering of ``S`` built by keeping the longest good intervals.

    ``value`` is the power sum of the constructed covering at mesh ``eps``;
    ``bound`` is the smallest power sum over all nested coverings from the
    same construction whose diameters are all ``<= eps`` (``nan`` if none).
    """

    a: float
    eps: float
    covers: np.ndarray
    value: float
    bound: float
    n_kept: int
    residual_length: float
    residual_power: float
    max_diam: float
    n_exceeding: int
    zero_measure: bool
    nested_defect: float


def premeasure(fam, a, eps, power_residual=False):
    """Estimate ``mu_{a, eps}(S)`` for ``S = [start, T]`` minus the union of ``fam``.

    Intervals are kept longest-first until the residual length sum is
    ``<= eps`` (and, with ``power_residual``, also the residual sum of
    ``length^a``).  The covering is formed by the closed gaps between kept
    intervals.  When ``S`` has zero Lebesgue measure every gap diameter
    equals the summed length of the excluded intervals inside it; the
    largest deviation from that identity is reported as ``nested_defect``.
    """
    if not eps > 0:
        raise ValueError(f"mesh eps must be positive, got {eps}")
    if not 0 < a <= 1:
        raise ValueError(f"exponent a must lie in (0, 1], got {a}")
    seq = fam._sequence
    j = seq.level(eps, a if power_residual else None)
    kept = np.sort(seq.order[:j])
    sub = IntervalFamily(fam.T, fam.intervals[kept], fam.start)
    covers = sub.complement()
    diam = covers[:, 1] - covers[:, 0]
    value = float(_pow(diam, a).sum())

    vals = seq.values(a)
    admissible = seq.max_diam <= eps
    bound = float(vals[admissible].min()) if admissible.any() else math.nan

    # excluded intervals inside each cover and the nested-length identity
    excluded = np.setdiff1d(np.arange(len(fam)), kept)
    inside = np.zeros(len(covers))
    if len(excluded):
        mids = fam.intervals[excluded].mean(axis=1)
        which = np.searchsorted(covers[:, 0], mids, side="right") - 1
        np.add.at(inside, which, fam.lengths[excluded])
    defect = float(np.max(np.abs(diam - inside))) if len(diam) else 0.0
    scale = fam.T - fam.start
    return CoverEstimate(
        a=float(a), eps=float(eps), covers=covers, value=value, bound=bound, n_kept=j,
        residual_length=float(seq.residual_lengths()[j]),
        residual_power=float(seq.residual_powers(a)[j]),
        max_diam=float(diam.max()) if len(diam) else 0.0,
        n_exceeding=int(np.sum(diam > eps)),
        zero_measure=defect <= 1e-12 * scale,
        nested_defect=defect,
    )


def power_sum(fam, delta):
    """``sum_i (beta_i - alpha_i)^delta``."""
    if not 0 < delta <= 1:
        raise ValueError(f"delta must lie in (0, 1], got {delta}")
    return float(np.sum(fam.lengths**delta))


def eps_schedule(eps0=1.0, factor=0.5, levels=20):
    return eps0 * factor ** np.arange(levels)


def default_a_grid(n=64):
    return np.arange(1, n + 1) / n


@dataclass
class DimensionEstimate:
    dimension: float
    status: str
    a_grid: np.ndarray
    slopes: np.ndarray
    eps_used: np.ndarray = field(default_factory=lambda: np.zeros(0))


def hausdorff_dimension_estimate(fam, a_grid=None, eps_levels=None):
    """Locate the exponent where the pre-measure trend flips.

    For each ``a`` the constructed-covering values over the mesh schedule
    are fitted as ``log value ~ slope * log eps``.  A positive slope means
    the values shrink as ``eps`` decreases.  The estimate is the zero
    crossing of ``slope(a)``, interpolated linearly between grid points
    (extrapolated to the left of the first point and clamped at 0).
    """
    a_grid = default_a_grid() if a_grid is None else np.asarray(a_grid, dtype=float)
    if eps_levels is None:
        eps_levels = eps_schedule(fam.T - fam.start)
    eps_levels = np.asarray(eps_levels, dtype=float)
    seq = fam._sequence
    levels = np.array([seq.level(e) for e in eps_levels])
    # first mesh at which each distinct covering appears
    first = np.concatenate([[True], levels[1:] != levels[:-1]])
    lev, eps_used = levels[first], eps_levels[first]
    slopes = np.full(len(a_grid), np.nan)
    # coverings are nested, so a zero value at the finest level means S is
    # a finite set of points at every level that matters
    if seq.values(a_grid[0])[lev[-1]] == 0:
        return DimensionEstimate(0.0, "empty", a_grid, slopes, eps_used)
    if len(lev) < 2:
        return DimensionEstimate(math.nan, "indeterminate", a_grid, slopes, eps_used)
    x = np.log(eps_used)
    for i, a in enumerate(a_grid):
        v = seq.values(a)[lev]
        if np.any(v <= 0):
            slopes[i] = np.inf
            continue
        slopes[i] = np.polyfit(x, np.log(v), 1)[0]
    pos = np.nonzero(slopes > 0)[0]
    if len(pos) == 0:
        return DimensionEstimate(math.nan, "indeterminate", a_grid, slopes, eps_used)
    i = pos[0]
    if i == 0:
        if len(a_grid) < 2 or not np.isfinite(slopes[1]):
            return DimensionEstimate(0.0, "ok", a_grid, slopes, eps_used)
        a0, a1, s0, s1 = a_grid[0], a_grid[1], slopes[0], slopes[1]
    else:
        a0, a1, s0, s1 = a_grid[i - 1], a_grid[i], slopes[i - 1], slopes[i]
    if not np.isfinite(s1) or s1 == s0:
        dim = a0 if i else 0.0
    else:
        dim = a0 - s0 * (a1 - a0) / (s1 - s0)
    return DimensionEstimate(float(max(dim, 0.0)), "ok", a_grid, slopes, eps_used)


def cantor_family(n, T=1.0):
    """The ``2^n - 1`` open middle thirds removed from ``[0, T]`` up to generation n."""
    if n < 1:
        raise ValueError("generation must be >= 1")
    segs = [(Fraction(0), Fraction(1))]
    removed = []
    for _ in range(n):
        nxt = []
        for lo, hi in segs:
            third = (hi - lo) / 3
            removed.append((lo + third, hi - third))
            nxt.append((lo, lo + third))
            nxt.append((hi - third, hi))
        segs = nxt
    removed.sort()
    T = float(T)
    return IntervalFamily(T, np.array([(float(a) * T, float(b) * T) for a, b in removed]))


def _values_of(trace_or_t, values=None):
    if isinstance(trace_or_t, NormTrace):
        return np.asarray(trace_or_t.t, float), np.asarray(trace_or_t.norm_V, float)
    if values is None:
        raise TypeError("pass a NormTrace, or sample times together with values=")
    return np.asarray(trace_or_t, float), np.asarray(values, float)


def good_components(trace, threshold, values=None):
    """Maximal open intervals where the interpolated V-norm is ``< threshold``.

    ``trace`` is a :class:`NormTrace` or a time array (with ``values``).
    Non-finite samples count as above threshold.  Crossing times are found
    by linear interpolation between neighbouring samples.
    """
    t, v = _values_of(trace, values)
    if len(t) == 0:
        raise ValueError("empty trace")
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    if len(t) == 1:
        raise ValueError("need at least two samples")
    below = np.isfinite(v) & (v < threshold)

    def cross(i):
        a, b = v[i], v[i + 1]
        if not (np.isfinite(a) and np.isfinite(b)):
            return t[i] if below[i] else t[i + 1]
        return t[i] + (threshold - a) / (b - a) * (t[i + 1] - t[i])

    comps = []
    cur = t[0] if below[0] else None
    for i in range(len(t) - 1):
        if below[i] and not below[i + 1]:
            tc = cross(i)
            if tc > cur:
                comps.append((cur, tc))
            cur = None
        elif not below[i] and below[i + 1]:
            cur = cross(i)
    if cur is not None and t[-1] > cur:
        comps.append((cur, t[-1]))
    return IntervalFamily(float(t[-1]), np.array(comps, dtype=float).reshape(-1, 2), float(t[0]))


def _finite_runs_integral(t, y):
    """Trapezoid over maximal runs of finite samples (no bridging across inf)."""
    ok = np.isfinite(y)
    total = 0.0
    i, n = 0, len(t)
    while i < n:
        if not ok[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and ok[j + 1]:
            j += 1
        if j > i:
            total += float(np.trapezoid(y[i : j + 1], t[i : j + 1]))
        i = j + 1
    return total


@dataclass
class BlowupReport:
    """Outcome of the remaining-time lower bound on a trace."""

    n_components: int
    n_samples: int
    worst_margin: float
    component_margins: list
    passed: bool
    integrated_lhs: float
    integrated_rhs: float
    integrated_margin: float
    integrated_passed: Optional[bool]
    tol: float

    @property
    def all_passed(self):
        return self.passed and self.integrated_passed is not False


def blowup_lb_check(trace, fam, C, gam, values=None, tol=1e-6):
    """Check ``beta_i - t >= 3/(8C) (1 + |u(t)|_V^2)^(1 - gamma)`` on every sample.

    Only components whose right end lies strictly before the end of the
    trace are checked: those are the ones that end by leaving the
    sublevel set.  Also checks the summed consequence

        c^(1/(gamma-1)) / delta * sum (beta_i - alpha_i)^delta
            <= T + int_0^T |u|_V^2,    c = 3/(8C), delta = 1 - 1/(gamma-1),

    obtained by integrating the pointwise bound over each component (only
    meaningful for gamma > 2).  Failures are reported, not raised.
    """
    t, v = _values_of(trace, values)
    c = 3.0 / (8.0 * C)
    margins = []
    n_samples = 0
    checked = []
    end = fam.T
    for a, b in fam.intervals:
        if b >= end - 1e-15 * max(1.0, abs(end)):
            continue
        inside = (t > a) & (t < b) & np.isfinite(v)
        if not inside.any():
            continue
        m = (b - t[inside]) - c * (1.0 + v[inside] ** 2) ** (1.0 - gam)
        margins.append(float(m.min()))
        n_samples += int(inside.sum())
        checked.append(b - a)
    worst = min(margins) if margins else math.inf
    span = float(t[-1] - t[0])
    rhs = span + _finite_runs_integral(t, v**2)
    if gam > 2 and checked:
        delta = 1.0 - 1.0 / (gam - 1.0)
        lhs = c ** (1.0 / (gam - 1.0)) / delta * float(np.sum(np.asarray(checked) ** delta))
        ipass = lhs <= rhs * (1 + tol)
    else:
        lhs, ipass = 0.0, (True if not checked else None)
    return BlowupReport(
        n_components=len(checked), n_samples=n_samples, worst_margin=worst,
        component_margins=margins, passed=worst >= -tol,
        integrated_lhs=lhs, integrated_rhs=rhs, integrated_margin=rhs - lhs,
        integrated_passed=ipass, tol=tol,
    )


def ode_blowup_trace(Y0, C, gam, n=4000, decades=12, mirror=True):
    """Synthetic V-norm trace from the exact solution of ``Y' = C Y^gamma``.

    Samples cluster geometrically toward the blow-up time ``T_b`` (down to
    ``10^-decades * T_b`` away), where a sample with value ``inf`` is
    placed.  With ``mirror`` the trace continues on ``(T_b, 2 T_b]`` with the
    time-reversed solution, giving a single interior singular time.
    Returns ``(t, V)`` with ``V = sqrt(Y - 1)``.
    """
    tb = blowup_time(Y0, C, gam)
    uniform = np.linspace(0.0, 0.9 * tb, n // 2, endpoint=False)
    close = tb * (1.0 - np.logspace(np.log10(0.1), -decades, n - n // 2))
    left = np.concatenate([uniform, close])
    y = sharp_solution(Y0, C, gam, left)
    v = np.sqrt(np.maximum(y - 1.0, 0.0))
    t = np.concatenate([left, [tb]])
    v = np.concatenate([v, [np.inf]])
    if mirror:
        t = np.concatenate([t, 2 * tb - left[::-1]])
        v = np.concatenate([v, v[:-1][::-1]])
    return t, v


@dataclass
class ChainCheck:
    theta: float
    delta: float
    eps: float
    value: float
    residual_power: float
    passed: bool
    zero_measure: bool


def covering_chain(fam, theta, eps):
    """Check ``sum_j diam(B_j)^delta <= sum_excluded len^delta <= eps``, delta = (1 - 4 theta)/2."""
    delta = (1.0 - 4.0 * theta) / 2.0
    est = premeasure(fam, delta, eps, power_residual=True)
    tol = 1e-12 * max(1.0, est.residual_power)
    ok = est.zero_measure and est.value <= est.residual_power + tol and est.residual_power <= eps
    return ChainCheck(theta, delta, eps, est.value, est.residual_power, bool(ok), est.zero_measure)


def delta_subadditive(x, delta):
    """Return ``((sum x)^delta, sum x^delta)`` for a nonnegative list."""
    x = np.asarray(x, dtype=float)
    return float(np.sum(x) ** delta), float(np.sum(_pow(x, delta)))
