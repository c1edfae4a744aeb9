"""Reference (numpy) implementations of the hot kernels.

The compiled module ``cvqbm._kernels`` exposes the same three functions with
identical signatures; ``cvqbm.kernels`` picks one at import time.
"""
import math

import numpy as np

_BETACF_MAX_ITER = 300
_BETACF_EPS = 1e-16
_TINY = 1e-300


def hermite_table(nmax, q):
    """Normalized oscillator wavefunctions Psi_0..Psi_{nmax-1} on ``q``.

    Returns an array of shape ``(nmax, len(q))``.
    """
    q = np.ascontiguousarray(q, dtype=np.float64)
    out = np.empty((nmax, q.size))
    out[0] = math.pi ** -0.25 * np.exp(-0.5 * q * q)
    if nmax > 1:
        out[1] = math.sqrt(2.0) * q * out[0]
    for n in range(2, nmax):
        out[n] = math.sqrt(2.0 / n) * q * out[n - 1] - math.sqrt((n - 1) / n) * out[n - 2]
    return out


def _betacf(x, a, b):
    # modified Lentz evaluation of the incomplete-beta continued fraction
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _BETACF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETACF_EPS:
            break
    return h


def betainc(z, a, b):
    """Regularized incomplete beta I_z(a, b) elementwise over ``z`` in [0, 1]."""
    z = np.ascontiguousarray(z, dtype=np.float64)
    flat = z.ravel()
    out = np.empty_like(flat)
    lbeta = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
    for i, x in enumerate(flat):
        if x <= 0.0:
            out[i] = 0.0
            continue
        if x >= 1.0:
            out[i] = 1.0
            continue
        front = math.exp(a * math.log(x) + b * math.log1p(-x) - lbeta)
        if x < (a + 1.0) / (a + b + 2.0):
            out[i] = front * _betacf(x, a, b) / a
        else:
            out[i] = 1.0 - front * _betacf(1.0 - x, b, a) / b
    return out.reshape(z.shape)


def loss_tensor(rho, coeffs):
    """Apply a photon-loss channel to the first bra/ket pair of a density tensor.

    ``rho`` has shape ``(d, h, d, h)`` (row mode, spectator, column mode,
    spectator) and ``coeffs[k, m]`` is the amplitude of ``K_k|m+k> = c|m>``.
    """
    rho = np.ascontiguousarray(rho, dtype=np.complex128)
    d = rho.shape[0]
    out = np.zeros_like(rho)
    for k in range(d):
        c = coeffs[k, : d - k]
        w = c[:, None, None, None] * c[None, None, :, None]
        out[: d - k, :, : d - k, :] += w * rho[k:, :, k:, :]
    return out
