"""First-order Bessel function J1.

Three regimes: power series for small arguments, the integral
representation J1(x) = (1/pi) int_0^pi cos(theta - x sin theta) dtheta
evaluated by fixed Gauss-Legendre quadrature in the middle band (the
series cancels catastrophically there), and the Hankel asymptotic
expansion beyond.  Relative error stays below 1e-11 everywhere (checked
against an independent implementation in the test suite), inside the
1e-10 requirement of the energy-shell density.
"""

import numpy as np

_SERIES_MAX = 2.0
_ASYMPTOTIC_MIN = 14.0
_MU = 4.0  # 4 nu^2 for nu = 1

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(48)
_GL_THETA = 0.5 * np.pi * (_GL_NODES + 1.0)
_GL_W = 0.5 * _GL_WEIGHTS  # includes the 1/pi of the representation


def _j1_series(x):
    # J1(x) = (x/2) sum_k (-1)^k (x^2/4)^k / (k! (k+1)!)
    q = 0.25 * x * x
    term = np.ones_like(x)
    acc = np.ones_like(x)
    for k in range(1, 30):
        term = term * (-q) / (k * (k + 1))
        acc = acc + term
        if np.all(np.abs(term) <= 1e-18 * np.abs(acc) + 1e-300):
            break
    return 0.5 * x * acc


def _j1_integral(x):
    phase = _GL_THETA[:, None] - x[None, :] * np.sin(_GL_THETA)[:, None]
    return _GL_W @ np.cos(phase)


def _j1_asymptotic(x):
    # J1(x) ~ sqrt(2/pi x) [P cos w - Q sin w], w = x - 3 pi/4, with
    # P = sum_k (-1)^k A_{2k} x^{-2k}, Q = sum_k (-1)^k A_{2k+1} x^{-2k-1},
    # A_j = prod_{i<=j} (mu - (2i-1)^2) / (j! 8^j).  Terms shrink until
    # j ~ 2x, far beyond the truncation point for x >= 14.
    p = np.ones_like(x)
    q = np.zeros_like(x)
    t = np.ones_like(x)
    last = np.inf
    for k in range(1, 22):
        t = t * (_MU - (2 * k - 1) ** 2) / (k * 8.0 * x)
        size = float(np.max(np.abs(t)))
        if size > last:
            break
        last = size
        sign = -1.0 if (k // 2) % 2 else 1.0
        if k % 2 == 1:
            q = q + sign * t
        else:
            p = p + sign * t
    omega = x - 0.75 * np.pi
    return np.sqrt(2.0 / (np.pi * x)) * (np.cos(omega) * p - np.sin(omega) * q)


def j1(x):
    """Bessel function of the first kind, order one, for real argument."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.empty_like(x)
    ax = np.abs(x)
    small = ax <= _SERIES_MAX
    large = ax >= _ASYMPTOTIC_MIN
    mid = ~small & ~large
    if np.any(small):
        out[small] = _j1_series(x[small])
    if np.any(mid):
        out[mid] = np.sign(x[mid]) * _j1_integral(ax[mid])
    if np.any(large):
        out[large] = np.sign(x[large]) * _j1_asymptotic(ax[large])
    return out[0] if scalar else out
