"""Analytic and random divergence-free fields used as initial data and forcing."""
import numpy as np

from .spectral import SpectralField, leray_project, make_lattice, sobolev_norm, truncate


def grid(N):
    x = 2 * np.pi * np.arange(N) / N
    return np.meshgrid(x, x, x, indexing="ij")


def _mode_index(lat, k):
    return tuple(int(c) % lat.N for c in k)


def taylor_green(N, amplitude=1.0):
    """``A (sin x cos y cos z, -cos x sin y cos z, 0)``; all modes have |k|^2 = 3.

    Coefficients are set exactly on the eight ``(+-1, +-1, +-1)`` modes.
    """
    lat = make_lattice(N)
    c = np.zeros((3,) + lat.shape, dtype=np.complex128)
    for s in np.ndindex(2, 2, 2):
        k = [1 - 2 * v for v in s]
        i = _mode_index(lat, k)
        c[(0,) + i] = -0.125j * amplitude * k[0]
        c[(1,) + i] = 0.125j * amplitude * k[1]
    return SpectralField(c, lat)


def single_mode(N, k, amplitude):
    """Real field ``a cos(k.x)`` with ``a`` orthogonalized against ``k``.

    Its self-advection vanishes identically because ``a . k = 0``.
    """
    lat = make_lattice(N)
    k = np.asarray(k, dtype=float)
    a = np.asarray(amplitude, dtype=float)
    a = a - k * (a @ k) / (k @ k)
    c = np.zeros((3,) + lat.shape, dtype=np.complex128)
    c[(slice(None),) + _mode_index(lat, k)] += a / 2
    c[(slice(None),) + _mode_index(lat, -k)] += a / 2
    return SpectralField(c, lat)


def random_band(N, rng, kmin=1.0, kmax=None, slope=-5.0 / 3.0, energy=0.5):
    """Random solenoidal field with shell spectrum ``E(k) ~ k**slope`` on a band.

    The field is synthesized from physical-space white noise, so it is real
    to round-off.  ``energy`` is the target value of ``|u|_H^2``; modes
    outside ``[kmin, kmax]`` and the two-thirds set are removed.
    """
    lat = make_lattice(N)
    if kmax is None:
        kmax = lat.dealias_cutoff
    rng = np.random.default_rng(rng)
    noise = SpectralField.from_physical(rng.standard_normal((3,) + lat.shape), lat)
    kmag = np.sqrt(lat.k2)
    band = (kmag >= kmin) & (kmag <= kmax)
    shape = np.zeros_like(kmag)
    # per-mode amplitude so that the shell sum scales like k**slope
    shape[band] = kmag[band] ** ((slope - 2.0) / 2.0)
    u = truncate(leray_project(SpectralField(noise.coeffs * shape, lat)))
    e = sobolev_norm(u, 0.0) ** 2
    if e == 0:
        return u
    return u * np.sqrt(energy / e)


def random_coefficients(N, rng, scale=1.0):
    """Random real field (arbitrary coefficients, no projection) for algebra tests."""
    lat = make_lattice(N)
    rng = np.random.default_rng(rng)
    u = SpectralField.from_physical(scale * rng.standard_normal((3,) + lat.shape), lat)
    c = u.copy_coeffs()
    c[:, 0, 0, 0] = 0.0
    return SpectralField(c, lat)
