# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the per-step kernels in ``_pykernels``."""

cimport cython


def advective_product(const double[:, ::1] ubar, const double[:, :, ::1] grad,
                      double[:, ::1] out):
    cdef Py_ssize_t m, i, M = ubar.shape[1]
    cdef double a0, a1, a2
    with nogil:
        for m in range(M):
            a0 = ubar[0, m]
            a1 = ubar[1, m]
            a2 = ubar[2, m]
            for i in range(3):
                out[i, m] = a0 * grad[0, i, m] + a1 * grad[1, i, m] + a2 * grad[2, i, m]
    return out.base if out.base is not None else out


def weighted_square_sum(const double complex[:, ::1] coeffs, const double[::1] weights):
    cdef Py_ssize_t m, c, M = coeffs.shape[1]
    cdef double acc = 0.0, s
    cdef double complex z
    with nogil:
        for m in range(M):
            s = 0.0
            for c in range(3):
                z = coeffs[c, m]
                s = s + z.real * z.real + z.imag * z.imag
            acc = acc + weights[m] * s
    return acc


def project_truncate(double complex[:, ::1] coeffs, const double[:, ::1] k,
                     const double[::1] inv_k2, const double[::1] mask):
    cdef Py_ssize_t m, M = coeffs.shape[1]
    cdef double complex div
    cdef double kx, ky, kz, w
    with nogil:
        for m in range(M):
            kx = k[0, m]
            ky = k[1, m]
            kz = k[2, m]
            div = (kx * coeffs[0, m] + ky * coeffs[1, m] + kz * coeffs[2, m]) * inv_k2[m]
            w = mask[m]
            coeffs[0, m] = (coeffs[0, m] - kx * div) * w
            coeffs[1, m] = (coeffs[1, m] - ky * div) * w
            coeffs[2, m] = (coeffs[2, m] - kz * div) * w
    return coeffs.base if coeffs.base is not None else coeffs


def rk4_combine(const double complex[:, ::1] u, const double complex[:, ::1] k1,
                const double complex[:, ::1] k2, const double complex[:, ::1] k3,
                const double complex[:, ::1] k4, const double[::1] e_full,
                const double[::1] e_half, double dt, double complex[:, ::1] out):
    cdef Py_ssize_t m, c, M = u.shape[1]
    cdef double h6 = dt / 6.0, h3 = dt / 3.0
    with nogil:
        for c in range(3):
            for m in range(M):
                out[c, m] = (e_full[m] * (u[c, m] + h6 * k1[c, m])
                             + h3 * e_half[m] * (k2[c, m] + k3[c, m])
                             + h6 * k4[c, m])
    return out.base if out.base is not None else out
