"""Closed-form wavefunction families.

Each family is registered under a name and provides exact evaluation and
spatial gradients at any time, so `analytic` propagation is just a change
of the time argument.  Families compute unnormalized or conventionally
normalized values; sampling and norms only ever use |psi|^2 ratios.

Registered families:

* ``plane_wave``          exp(i(k.x - w t)), w = hbar k^2 / 2m
* ``gaussian_packet``     drifting, spreading Gaussian (product over axes)
* ``decaying_pair``       two-particle wave of a decaying system at rest,
                          depends only on x1 - x2 (total momentum zero)
* ``post_collapse_pair``  the effective one-particle wave after the
                          partner has been detected at a point
* ``correlated_pair``     decaying pair with a finite-width center-of-mass
                          factor (normalizable in all coordinates)
* ``superposition``       complex-coefficient sum of same-shape families
* ``spinor_product``      scalar family times a constant spinor
"""

import numpy as np

from .errors import ConfigurationError, UnsupportedFamilyError

_REGISTRY = {}


def register(name):
    def deco(cls):
        cls.name = name
        _REGISTRY[name] = cls
        return cls
    return deco


def get_family(name):
    try:
        return _REGISTRY[name]
    except KeyError:
        raise ConfigurationError(f"unknown parametric family {name!r}") from None


def family_names():
    return sorted(_REGISTRY)


def _as_points(x, dim):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[-1] != dim:
        raise ConfigurationError(
            f"configuration has dimension {x.shape[-1]}, family expects {dim}")
    return x


@register("plane_wave")
class PlaneWave:
    """exp(i (k.x - omega t)) with the free dispersion omega = hbar k^2/2m."""

    @staticmethod
    def config_dim(params):
        return len(np.atleast_1d(params["k"]))

    @staticmethod
    def spin_dim(params):
        return 1

    @staticmethod
    def value(params, x, t, hbar=1.0):
        k = np.atleast_1d(np.asarray(params["k"], dtype=float))
        m = params["m"]
        x = _as_points(x, len(k))
        omega = hbar * (k @ k) / (2.0 * m)
        return np.exp(1j * (x @ k - omega * t))[None, :]

    @classmethod
    def gradient(cls, params, x, t, hbar=1.0):
        k = np.atleast_1d(np.asarray(params["k"], dtype=float))
        val = cls.value(params, x, t, hbar)
        return 1j * k[None, :, None] * val[:, None, :]


def _gauss_1d(x, t, x0, sigma, k0, m, hbar):
    """1-D free Gaussian packet and its log-derivative factor.

    psi = (2 pi s^2)^(-1/4) * s/sqrt(B) * exp(-(x-xc)^2/(4B) + i k0 (x-x0)
          - i hbar k0^2 t / 2m),  B = s^2 + i hbar t / 2m.
    Returns (psi, dlog) with dpsi/dx = dlog * psi.
    """
    B = sigma**2 + 0.5j * hbar * t / m
    xc = x0 + hbar * k0 * t / m
    xi = x - xc
    amp = (2.0 * np.pi * sigma**2) ** -0.25 * sigma / np.sqrt(B)
    psi = amp * np.exp(-xi**2 / (4.0 * B)
                       + 1j * k0 * (x - x0) - 0.5j * hbar * k0**2 * t / m)
    dlog = -xi / (2.0 * B) + 1j * k0
    return psi, dlog


@register("gaussian_packet")
class GaussianPacket:
    """Free Gaussian packet, product over axes; exact drift and spreading.

    params: center (d,), sigma (scalar or (d,)), k0 (d,), m.
    """

    @staticmethod
    def config_dim(params):
        return len(np.atleast_1d(params["center"]))

    @staticmethod
    def spin_dim(params):
        return 1

    @staticmethod
    def _axis_params(params):
        c = np.atleast_1d(np.asarray(params["center"], dtype=float))
        d = len(c)
        s = np.broadcast_to(np.asarray(params["sigma"], dtype=float), (d,))
        k = np.broadcast_to(np.asarray(params.get("k0", 0.0), dtype=float), (d,))
        return c, s, k, params["m"]

    @classmethod
    def value(cls, params, x, t, hbar=1.0):
        c, s, k, m = cls._axis_params(params)
        x = _as_points(x, len(c))
        out = np.ones(x.shape[0], dtype=complex)
        for a in range(len(c)):
            psi, _ = _gauss_1d(x[:, a], t, c[a], s[a], k[a], m, hbar)
            out = out * psi
        return out[None, :]

    @classmethod
    def gradient(cls, params, x, t, hbar=1.0):
        c, s, k, m = cls._axis_params(params)
        x = _as_points(x, len(c))
        val = cls.value(params, x, t, hbar)[0]
        g = np.empty((1, len(c), x.shape[0]), dtype=complex)
        for a in range(len(c)):
            _, dlog = _gauss_1d(x[:, a], t, c[a], s[a], k[a], m, hbar)
            g[0, a] = dlog * val
        return g


def _pair_beta(alpha, t, mu):
    return alpha + 0.5j * t / mu


@register("decaying_pair")
class DecayingPair:
    """Two-particle wave of a decaying system, total momentum zero.

    psi = N (pi hbar / beta)^(d/2) exp(-(x1-x2)^2 / (4 hbar beta)),
    beta = alpha + i t / 2 mu.  Configuration is (x1, x2) concatenated,
    d spatial dimensions per particle.
    """

    @staticmethod
    def _geom(params):
        d = int(params.get("d", 3))
        m1, m2 = params["m1"], params["m2"]
        mu = m1 * m2 / (m1 + m2)
        return d, mu

    @classmethod
    def config_dim(cls, params):
        return 2 * cls._geom(params)[0]

    @staticmethod
    def spin_dim(params):
        return 1

    @classmethod
    def value(cls, params, x, t, hbar=1.0):
        d, mu = cls._geom(params)
        x = _as_points(x, 2 * d)
        beta = _pair_beta(params["alpha"], t, mu)
        r = x[:, :d] - x[:, d:]
        pref = params.get("N", 1.0) * (np.pi * hbar / beta) ** (d / 2.0)
        val = pref * np.exp(-np.sum(r * r, axis=1) / (4.0 * hbar * beta))
        return val[None, :]

    @classmethod
    def gradient(cls, params, x, t, hbar=1.0):
        d, mu = cls._geom(params)
        x = _as_points(x, 2 * d)
        beta = _pair_beta(params["alpha"], t, mu)
        val = cls.value(params, x, t, hbar)[0]
        r = (x[:, :d] - x[:, d:]).T   # (d, n)
        g = np.empty((1, 2 * d, x.shape[0]), dtype=complex)
        g[0, :d] = -r / (2.0 * hbar * beta) * val
        g[0, d:] = +r / (2.0 * hbar * beta) * val
        return g


@register("post_collapse_pair")
class PostCollapsePair:
    """Effective wave of particle 2 after its partner is detected at `a`.

    psi = N (pi hbar / beta)^(d/2) exp(-(a - x)^2 / (4 hbar beta)) with
    beta = alpha0 + i (t - t0) / 2m.  alpha0 may be complex: it is the
    width parameter inherited from the pair wave at the collapse instant.
    """

    @staticmethod
    def config_dim(params):
        return len(np.atleast_1d(params["a"]))

    @staticmethod
    def spin_dim(params):
        return 1

    @classmethod
    def value(cls, params, x, t, hbar=1.0):
        a = np.atleast_1d(np.asarray(params["a"], dtype=float))
        x = _as_points(x, len(a))
        beta = complex(params["alpha0"]) + 0.5j * (t - params.get("t0", 0.0)) / params["m"]
        u = a[None, :] - x
        pref = params.get("N", 1.0) * (np.pi * hbar / beta) ** (len(a) / 2.0)
        val = pref * np.exp(-np.sum(u * u, axis=1) / (4.0 * hbar * beta))
        return val[None, :]

    @classmethod
    def gradient(cls, params, x, t, hbar=1.0):
        a = np.atleast_1d(np.asarray(params["a"], dtype=float))
        x = _as_points(x, len(a))
        beta = complex(params["alpha0"]) + 0.5j * (t - params.get("t0", 0.0)) / params["m"]
        val = cls.value(params, x, t, hbar)[0]
        u = (a[None, :] - x).T
        g = np.empty((1, len(a), x.shape[0]), dtype=complex)
        g[0] = u / (2.0 * hbar * beta) * val   # d/dx of -(a-x)^2 term
        return g


@register("correlated_pair")
class CorrelatedPair:
    """Decaying pair with a finite center-of-mass width.

    Relative factor equals the decaying_pair wave; the weighted
    center-of-mass X = (m1 x1 + m2 x2)/M carries a zero-drift Gaussian of
    initial width sigma_x, so the state is normalizable along every axis.
    The momentum-space density of the total momentum P is Gaussian with
    Var(P_j) = hbar^2 / (4 sigma_x^2) per component.
    """

    @staticmethod
    def _geom(params):
        d = int(params.get("d", 3))
        m1, m2 = params["m1"], params["m2"]
        return d, m1, m2, m1 + m2, m1 * m2 / (m1 + m2)

    @classmethod
    def config_dim(cls, params):
        return 2 * cls._geom(params)[0]

    @staticmethod
    def spin_dim(params):
        return 1

    @classmethod
    def _factors(cls, params, x, t, hbar):
        d, m1, m2, M, mu = cls._geom(params)
        x = _as_points(x, 2 * d)
        x1, x2 = x[:, :d], x[:, d:]
        X = (m1 * x1 + m2 * x2) / M
        r = x1 - x2
        X0 = np.broadcast_to(np.asarray(params.get("center", 0.0), dtype=float), (d,))
        sx = params["sigma_x"]
        com = np.ones(x.shape[0], dtype=complex)
        dlog_com = np.empty((d, x.shape[0]), dtype=complex)
        for a in range(d):
            f, dl = _gauss_1d(X[:, a], t, X0[a], sx, 0.0, M, hbar)
            com = com * f
            dlog_com[a] = dl
        beta = _pair_beta(params["alpha"], t, mu)
        rel = (np.pi * hbar / beta) ** (d / 2.0) * np.exp(
            -np.sum(r * r, axis=1) / (4.0 * hbar * beta))
        dlog_rel = -r.T / (2.0 * hbar * beta)   # d/dr
        return com, dlog_com, rel, dlog_rel, (d, m1, m2, M)

    @classmethod
    def value(cls, params, x, t, hbar=1.0):
        com, _, rel, _, _ = cls._factors(params, x, t, hbar)
        return (params.get("N", 1.0) * com * rel)[None, :]

    @classmethod
    def gradient(cls, params, x, t, hbar=1.0):
        com, dlc, rel, dlr, (d, m1, m2, M) = cls._factors(params, x, t, hbar)
        val = params.get("N", 1.0) * com * rel
        n = val.shape[0]
        g = np.empty((1, 2 * d, n), dtype=complex)
        # chain rule: d/dx1 = (m1/M) d/dX + d/dr, d/dx2 = (m2/M) d/dX - d/dr
        g[0, :d] = ((m1 / M) * dlc + dlr) * val
        g[0, d:] = ((m2 / M) * dlc - dlr) * val
        return g


@register("superposition")
class Superposition:
    """Complex-coefficient sum of registered family states.

    params: components = [(coef, family_name, family_params), ...]
    All components must share configuration and spin dimensions.
    """

    @staticmethod
    def _parts(params):
        comps = params["components"]
        if not comps:
            raise ConfigurationError("superposition needs at least one component")
        return [(complex(c), get_family(fname), fparams)
                for (c, fname, fparams) in comps]

    @classmethod
    def config_dim(cls, params):
        parts = cls._parts(params)
        dims = {fam.config_dim(p) for _, fam, p in parts}
        if len(dims) != 1:
            raise ConfigurationError("superposition components disagree on dimension")
        return dims.pop()

    @classmethod
    def spin_dim(cls, params):
        dims = {fam.spin_dim(p) for _, fam, p in cls._parts(params)}
        if len(dims) != 1:
            raise ConfigurationError("superposition components disagree on spin")
        return dims.pop()

    @classmethod
    def value(cls, params, x, t, hbar=1.0):
        parts = cls._parts(params)
        out = None
        for c, fam, p in parts:
            v = c * fam.value(p, x, t, hbar)
            out = v if out is None else out + v
        return out

    @classmethod
    def gradient(cls, params, x, t, hbar=1.0):
        parts = cls._parts(params)
        out = None
        for c, fam, p in parts:
            v = c * fam.gradient(p, x, t, hbar)
            out = v if out is None else out + v
        return out


@register("spinor_product")
class SpinorProduct:
    """Scalar family times a constant spinor (a spin eigenstate)."""

    @staticmethod
    def _parts(params):
        chi = np.asarray(params["chi"], dtype=complex)
        return get_family(params["scalar"]), params["scalar_params"], chi

    @classmethod
    def config_dim(cls, params):
        fam, p, _ = cls._parts(params)
        return fam.config_dim(p)

    @classmethod
    def spin_dim(cls, params):
        return len(cls._parts(params)[2])

    @classmethod
    def value(cls, params, x, t, hbar=1.0):
        fam, p, chi = cls._parts(params)
        scalar = fam.value(p, x, t, hbar)
        if scalar.shape[0] != 1:
            raise UnsupportedFamilyError("spinor_product wraps scalar families only")
        return chi[:, None] * scalar[0][None, :]

    @classmethod
    def gradient(cls, params, x, t, hbar=1.0):
        fam, p, chi = cls._parts(params)
        gs = fam.gradient(p, x, t, hbar)
        return chi[:, None, None] * gs[0][None, :, :]
