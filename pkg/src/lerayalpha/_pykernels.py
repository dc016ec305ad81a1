"""Pure-numpy implementations of the per-step kernels.

Every function here has a twin in ``_ckernels.pyx`` with the same signature
and semantics.  Arrays are flattened over the mode / grid index: vector
quantities have shape ``(3, M)``, gradients ``(3, 3, M)``.
"""
import numpy as np


def advective_product(ubar, grad, out):
    """out[i] = sum_j ubar[j] * grad[j, i], with grad[j, i] = d_j u_i."""
    np.einsum("jm,jim->im", ubar, grad, out=out)
    return out


def weighted_square_sum(coeffs, weights):
    """Return sum_m weights[m] * sum_c |coeffs[c, m]|**2."""
    sq = coeffs.real**2 + coeffs.imag**2
    return float(np.dot(sq.sum(axis=0), weights))


def project_truncate(coeffs, k, inv_k2, mask):
    """Leray-project and dealias ``coeffs`` in place.

    ``inv_k2`` is zero at k = 0, which also removes the mean there since
    ``mask`` is zero at the origin.
    """
    div = (k[0] * coeffs[0] + k[1] * coeffs[1] + k[2] * coeffs[2]) * inv_k2
    coeffs -= k * div
    coeffs *= mask
    return coeffs


def rk4_combine(u, k1, k2, k3, k4, e_full, e_half, dt, out):
    """Integrating-factor RK4 update.

    out = E u + dt/6 (E k1 + 2 E_half (k2 + k3) + k4)
    """
    np.multiply(e_full, u + (dt / 6.0) * k1, out=out)
    out += (dt / 3.0) * e_half * (k2 + k3)
    out += (dt / 6.0) * k4
    return out
