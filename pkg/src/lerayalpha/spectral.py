"""Truncated Fourier-lattice algebra on the 2*pi-periodic torus.

Fields are stored as normalized Fourier coefficients in the full ``fftn``
layout: ``coeffs[c, i, j, l]`` is the coefficient of component ``c`` at the
wavevector ``(kx[i], ky[j], kz[l])`` with ``k = fftfreq(N) * N``, so that

    u(x) = sum_k coeffs(k) exp(i k.x)

and ``sum_k |coeffs(k)|**2`` is the spatial mean of ``|u|**2``.  All Sobolev
norms below use this normalization.
"""
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
import scipy.fft

from . import kernels

_AXES = (-3, -2, -1)


@dataclass(frozen=True)
class WavenumberLattice:
    """Integer wavevectors of an ``N**3`` grid and the two-thirds cutoff."""

    N: int
    dealias_cutoff: int

    @property
    def shape(self):
        return (self.N, self.N, self.N)

    @property
    def size(self):
        return self.N**3

    @cached_property
    def k1d(self):
        return np.fft.fftfreq(self.N, 1.0 / self.N)

    @cached_property
    def k(self):
        """Wavevector components, shape ``(3, N, N, N)``, float64."""
        return np.stack(np.meshgrid(self.k1d, self.k1d, self.k1d, indexing="ij"))

    @cached_property
    def k2(self):
        return np.sum(self.k**2, axis=0)

    @cached_property
    def inv_k2(self):
        """``1/|k|**2`` with the k = 0 entry set to zero."""
        with np.errstate(divide="ignore"):
            out = np.where(self.k2 > 0, 1.0 / self.k2, 0.0)
        return out

    @cached_property
    def dealias_mask(self):
        """1.0 on modes with every ``|k_j| <= dealias_cutoff`` and k != 0."""
        kk = np.abs(self.k)
        keep = np.all(kk <= self.dealias_cutoff, axis=0) & (self.k2 > 0)
        return keep.astype(float)

    @cached_property
    def negation_index(self):
        """Flat index of -k for every flat index of k."""
        idx = (-np.arange(self.N)) % self.N
        ii, jj, ll = np.meshgrid(idx, idx, idx, indexing="ij")
        return np.ravel_multi_index((ii, jj, ll), self.shape).ravel()

    # flattened views fed to the kernels
    @cached_property
    def k_flat(self):
        return np.ascontiguousarray(self.k.reshape(3, -1))

    @cached_property
    def inv_k2_flat(self):
        return np.ascontiguousarray(self.inv_k2.ravel())

    @cached_property
    def mask_flat(self):
        return np.ascontiguousarray(self.dealias_mask.ravel())

    def sobolev_weights(self, s):
        """Flat array of ``|k|**(2s)`` with the k = 0 weight set to zero."""
        k2 = self.k2.ravel()
        w = np.zeros_like(k2)
        nz = k2 > 0
        w[nz] = k2[nz] ** s
        return w


@lru_cache(maxsize=None)
def make_lattice(N):
    """Build the lattice for an ``N**3`` grid.

    The dealias cutoff is the largest integer ``K`` with ``3K < N``; for N not
    divisible by 3 this is ``floor(N/3)``.
    """
    if isinstance(N, bool) or int(N) != N:
        raise ValueError(f"N must be an integer, got {N!r}")
    N = int(N)
    if N < 4 or N % 2:
        raise ValueError(f"N must be an even integer >= 4, got {N}")
    return WavenumberLattice(N=N, dealias_cutoff=(N - 1) // 3)


@dataclass(frozen=True)
class FilterSpec:
    """Parameters of the multiplier ``(1 + alpha**2 |k|**2)**(-theta)``."""

    alpha: float
    theta: float

    def __post_init__(self):
        if not (self.alpha > 0 and np.isfinite(self.alpha)):
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if not (0.0 <= self.theta <= 0.25):
            raise ValueError(f"theta must satisfy 0 <= theta <= 1/4, got {self.theta}")

    def multiplier(self, lattice):
        return (1.0 + self.alpha**2 * lattice.k2) ** (-self.theta)


class SpectralField:
    """Velocity field given by its Fourier coefficients on a lattice.

    Instances are treated as values: operations return new fields and the
    coefficient array is marked read-only.
    """

    __slots__ = ("coeffs", "lattice")

    def __init__(self, coeffs, lattice=None):
        coeffs = np.array(coeffs, dtype=np.complex128, order="C")
        if coeffs.ndim != 4 or coeffs.shape[0] != 3:
            raise ValueError(f"expected coefficients of shape (3, N, N, N), got {coeffs.shape}")
        if lattice is None:
            lattice = make_lattice(coeffs.shape[1])
        if coeffs.shape[1:] != lattice.shape:
            raise ValueError(f"coefficients {coeffs.shape[1:]} do not match lattice N={lattice.N}")
        coeffs.flags.writeable = False
        self.coeffs = coeffs
        self.lattice = lattice

    @classmethod
    def zeros(cls, lattice):
        return cls(np.zeros((3,) + lattice.shape, dtype=np.complex128), lattice)

    @classmethod
    def from_physical(cls, u, lattice=None):
        """Transform a real ``(3, N, N, N)`` grid field to coefficients."""
        u = np.asarray(u, dtype=float)
        if lattice is None:
            lattice = make_lattice(u.shape[-1])
        return cls(to_spectral(u, lattice), lattice)

    @property
    def N(self):
        return self.lattice.N

    def to_physical(self):
        return to_physical(self.coeffs, self.lattice)

    def copy_coeffs(self):
        return np.array(self.coeffs)

    def _check_same(self, other):
        if other.lattice.N != self.lattice.N:
            raise ValueError(f"lattice mismatch: N={self.lattice.N} vs N={other.lattice.N}")

    def __add__(self, other):
        self._check_same(other)
        return SpectralField(self.coeffs + other.coeffs, self.lattice)

    def __sub__(self, other):
        self._check_same(other)
        return SpectralField(self.coeffs - other.coeffs, self.lattice)

    def __mul__(self, scalar):
        return SpectralField(self.coeffs * scalar, self.lattice)

    __rmul__ = __mul__

    def __repr__(self):
        return f"SpectralField(N={self.N}, |u|_H={sobolev_norm(self, 0.0):.6g})"

    # invariant defects, all absolute
    def divergence_defect(self):
        """max_k |k . u(k)|."""
        div = np.sum(self.lattice.k * self.coeffs, axis=0)
        return float(np.max(np.abs(div)))

    def mean_defect(self):
        return float(np.max(np.abs(self.coeffs[:, 0, 0, 0])))

    def reality_defect(self):
        """max_k |u(-k) - conj(u(k))|."""
        flat = self.coeffs.reshape(3, -1)
        neg = flat[:, self.lattice.negation_index]
        return float(np.max(np.abs(neg - np.conj(flat))))

    def max_abs(self):
        return float(np.max(np.abs(self.coeffs)))


def to_physical(coeffs, lattice):
    """Real grid values of coefficient array(s) over the last three axes."""
    return np.ascontiguousarray(scipy.fft.ifftn(coeffs, axes=_AXES, norm="forward").real)


def to_spectral(values, lattice):
    return scipy.fft.fftn(values, axes=_AXES, norm="forward")


def apply_filter(u, fs):
    """Return ``M_theta u``: every mode scaled by ``(1 + alpha^2 |k|^2)^(-theta)``."""
    if fs.theta == 0:
        return SpectralField(u.coeffs, u.lattice)
    return SpectralField(u.coeffs * fs.multiplier(u.lattice), u.lattice)


def sobolev_norm(u, s):
    """``(sum_{k != 0} |k|^(2s) |u(k)|^2)^(1/2)``; s = 0 is the H norm, s = 1 the V norm."""
    if not (-1.0 <= s <= 2.0):
        raise ValueError(f"Sobolev index must lie in [-1, 2], got {s}")
    lat = u.lattice
    total = kernels.weighted_square_sum(u.coeffs.reshape(3, -1), lat.sobolev_weights(s))
    return float(np.sqrt(total))


def leray_project(u):
    """Modewise projection ``(I - k k^T/|k|^2)``; the k = 0 mode is zeroed."""
    lat = u.lattice
    out = u.copy_coeffs()
    k = lat.k
    div = np.sum(k * out, axis=0) * lat.inv_k2
    out -= k * div
    out[:, 0, 0, 0] = 0.0
    return SpectralField(out, lat)


def gradient_physical(coeffs, lattice):
    """Physical-space gradient ``g[j, i] = d_j u_i`` of a vector field."""
    k = lattice.k
    dk = 1j * k[:, None] * coeffs[None, :]
    return to_physical(dk, lattice)


def advective_term(ubar_coeffs, u_coeffs, lattice, project=True):
    """Dealiased pseudo-spectral ``(ubar . grad) u`` as a coefficient array.

    Both inputs are truncated to the two-thirds set first, so the result is
    the exact Galerkin projection of the quadratic term onto that set.  With
    ``project=False`` the gradient part is kept (used for pressure recovery).
    """
    M = lattice.size
    mask = lattice.dealias_mask
    ubar_phys = to_physical(ubar_coeffs * mask, lattice)
    grad = gradient_physical(u_coeffs * mask, lattice)
    prod = np.empty((3,) + lattice.shape)
    kernels.advective_product(
        ubar_phys.reshape(3, M), grad.reshape(3, 3, M), prod.reshape(3, M)
    )
    out = np.ascontiguousarray(to_spectral(prod, lattice))
    flat = out.reshape(3, M)
    if project:
        kernels.project_truncate(flat, lattice.k_flat, lattice.inv_k2_flat, lattice.mask_flat)
    else:
        flat *= lattice.mask_flat
    return out


def advect(ubar, u):
    """Dealiased, Leray-projected ``(ubar . grad) u``."""
    if ubar.lattice.N != u.lattice.N:
        raise ValueError(f"lattice mismatch: N={ubar.lattice.N} vs N={u.lattice.N}")
    return SpectralField(advective_term(ubar.coeffs, u.coeffs, u.lattice), u.lattice)


def recover_pressure(u, fs, f=None):
    """Pressure coefficients eliminated by the projection formulation.

    With ``B`` the unprojected dealiased advection of ``u`` by ``M_theta u``,
    the momentum balance ``du/dt + B + grad p = nu Lap u + f`` forces
    ``p(k) = i k . (B(k) - f(k)) / |k|^2`` for k != 0, and ``p(0) = 0``.
    Returns a complex array of shape ``(N, N, N)``.
    """
    lat = u.lattice
    if f is not None and f.lattice.N != lat.N:
        raise ValueError(f"lattice mismatch: N={lat.N} vs N={f.lattice.N}")
    ubar = apply_filter(u, fs)
    b = advective_term(ubar.coeffs, u.coeffs, lat, project=False)
    if f is not None:
        b = b - f.coeffs * lat.dealias_mask
    return 1j * np.sum(lat.k * b, axis=0) * lat.inv_k2


def pressure_gradient(p, lattice):
    """Coefficients of ``grad p`` for a scalar coefficient array."""
    return 1j * lattice.k * p[None]


def truncate(u):
    """Zero every mode outside the two-thirds set (and the mean)."""
    return SpectralField(u.coeffs * u.lattice.dealias_mask, u.lattice)
