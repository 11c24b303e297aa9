"""Duffin-Kemmer-Petiau and Harish-Chandra energy-flow trajectory model.

Massive spin-0 (5 components) and spin-1 (10 components) states, plus the
massless analogues with the idempotent projector.  States are finite
plane-wave superpositions, so the first-class constraint is enforced
structurally per term and all claims are checked in exact arithmetic up
to roundoff.  Natural units hbar = c = 1.

The current is built from the symmetrized energy-momentum tensor and a
constant future-causal observer vector:

    j^mu = Theta^{mu nu} n_nu,     v^i = j^i / j^0,

which is future-causal with nonnegative density; its integral curves are
energy-flow lines, not particle trajectories (the charge current of the
theory is indefinite, exhibited by `charge_current` below), and every
output of this module labels them as such.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (ConfigurationError, DegenerateObserverError,
                     InvariantViolationError, NodeError, PhysicsError,
                     ShapeError)
from .matrices import METRIC, build_matrix_set

_SETS = {"spin0": build_matrix_set("dkp5"), "spin1": build_matrix_set("dkp10")}

CONSTRAINT_TOL = 1e-10
ONSHELL_TOL = 1e-9
RHO_FLOOR_REL = 1e-12


@dataclass(frozen=True)
class ObserverVector:
    """Constant future-causal 4-vector n^mu (n^0 > 0, n.n >= 0)."""
    n: np.ndarray
    source: str = "explicit"

    def __post_init__(self):
        n = np.asarray(self.n, dtype=float)
        if n.shape != (4,):
            raise ShapeError("observer vector must have 4 components")
        if not n[0] > 0:
            raise PhysicsError("observer vector must have positive time component")
        if n @ METRIC @ n < -1e-12 * (n @ n):
            raise PhysicsError("observer vector must be causal (n.n >= 0)")
        object.__setattr__(self, "n", n)

    @property
    def lower(self):
        return METRIC @ self.n


TIME_OBSERVER = ObserverVector(np.array([1.0, 0.0, 0.0, 0.0]))


def _spin0_components(p, e, mass):
    # psi = m^{-1/2} (d_mu phi, m phi)^T for phi = exp(i(p.x - E t))
    return np.concatenate(([-1j * e], 1j * p, [mass])) / np.sqrt(mass)


def _spin1_components(p, e, mass, pol, massless):
    pol = np.asarray(pol, dtype=complex)
    if pol.shape != (3,):
        raise PhysicsError("spin-1 terms need a 3-component polarization")
    if massless:
        if abs(p @ pol) > 1e-10 * max(np.linalg.norm(p) * np.linalg.norm(pol), 1e-30):
            raise PhysicsError("massless spin-1 polarization must be transverse")
        pol0 = 0.0
    else:
        pol0 = p @ pol / e               # Proca condition d_mu A^mu = 0
    efield = 1j * (e * pol - p * pol0)   # E = -grad A0 - d0 A
    bfield = 1j * np.cross(p, pol)
    return np.concatenate((-efield, bfield, mass * pol, [-mass * pol0])) \
        / np.sqrt(mass)


@dataclass(frozen=True)
class DkpState:
    """Plane-wave superposition of a DKP (massive) or HC (massless) field.

    rep is 'spin0' or 'spin1'.  For the massless kinds the `mass` is only
    a normalization scale of the wavefunction layout; the physical
    dispersion is E = |p|.
    """
    rep: str
    mass: float
    terms: tuple                 # (coef, p, E, components) per term
    massless: bool = False

    @property
    def mats(self):
        return _SETS[self.rep]

    @property
    def dim(self):
        return self.mats.dim

    def evaluate(self, x, t):
        """Field amplitude, shape (dim, npoints)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != 3:
            raise ShapeError("DKP states live in 3 spatial dimensions")
        out = np.zeros((self.dim, x.shape[0]), dtype=complex)
        for c, p, e, comp in self.terms:
            out += c * comp[:, None] * np.exp(1j * (x @ p - e * t))[None, :]
        return out

    def projected(self, psi_vals):
        """gamma psi for massless states, psi unchanged for massive."""
        if not self.massless:
            return psi_vals
        return self.mats.gamma_proj @ psi_vals

    def scale(self):
        return sum(abs(c) ** 2 * float(np.real(u.conj() @ u))
                   for c, _, _, u in self.terms)


def build_dkp_state(rep, mass, waves, massless=False):
    """Assemble a DKP/HC state from plane-wave specs.

    Each spec is {'coef': complex, 'p': 3-vector} plus, for spin1, a
    'polarization' 3-vector (transverse when massless).  Momenta must be
    on shell: E = sqrt(p^2 + m^2), or E = |p| for massless kinds.  The
    wavefunction components follow the physical reductions (scalar-field
    derivative stack for spin0; field-strength/potential stack for
    spin1), and the construction verifies the constraint per term; a
    residual above 1e-10 is a construction bug, not user error.
    """
    if rep not in _SETS:
        raise ConfigurationError(f"unknown DKP representation {rep!r}")
    if mass <= 0:
        raise PhysicsError("mass (or massless scale constant) must be positive")
    mats = _SETS[rep]
    terms = []
    for spec in waves:
        p = np.asarray(spec["p"], dtype=float)
        if p.shape != (3,):
            raise PhysicsError("momentum must be a 3-vector")
        e = np.linalg.norm(p) if massless else np.sqrt(p @ p + mass * mass)
        if "E" in spec and abs(spec["E"] - e) > ONSHELL_TOL * max(e, 1.0):
            raise PhysicsError(
                f"off-shell momentum: supplied E={spec['E']} vs {e}")
        if massless and e == 0:
            raise PhysicsError("massless terms need nonzero momentum")
        if rep == "spin0":
            comp = _spin0_components(p, e, mass)
        else:
            comp = _spin1_components(p, e, mass, spec["polarization"], massless)
        res = mats.constraint_residual_op(p, mass, massless=massless) @ comp
        if np.max(np.abs(res)) > CONSTRAINT_TOL * max(1.0, np.max(np.abs(comp))):
            raise ConfigurationError(
                "constraint residual above 1e-10: construction bug")
        terms.append((complex(spec.get("coef", 1.0)), p, e, comp))
    return DkpState(rep=rep, mass=mass, terms=tuple(terms), massless=massless)


def constraint_residual(state):
    """Max constraint residual over terms (exactly 0 for built states)."""
    worst = 0.0
    for c, p, e, comp in state.terms:
        res = state.mats.constraint_residual_op(p, state.mass,
                                                massless=state.massless) @ comp
        worst = max(worst, float(np.max(np.abs(res))))
    return worst


def theta_tensor(state, x, t):
    """Symmetrized energy-momentum tensor Theta^{mu nu} at points.

    Massive: m psi^dag eta0 (b^mu b^nu + b^nu b^mu - g^{mu nu}) psi;
    massless: the same sandwich around gamma psi.  Returns (n, 4, 4)."""
    psi = state.evaluate(x, t)
    npts = psi.shape[1]
    th = np.empty((npts, 4, 4))
    for mu in range(4):
        for nu in range(mu, 4):
            m = state.mats.theta_matrix(mu, nu, massless=state.massless)
            val = state.mass * np.real(np.einsum("sn,st,tn->n", psi.conj(), m, psi))
            th[:, mu, nu] = val
            th[:, nu, mu] = val
    return th


def energy_momentum_current(state, n, x, t, rho_floor_rel=RHO_FLOOR_REL):
    """j^mu = Theta^{mu nu} n_nu and the velocity v = j / j^0.

    Raises NodeError where j^0 falls below the floor and
    InvariantViolationError if j^0 were ever negative (cannot happen for
    valid states; kept as a test hook)."""
    if not isinstance(n, ObserverVector):
        n = ObserverVector(np.asarray(n, dtype=float))
    th = theta_tensor(state, x, t)
    j = th @ n.lower
    j0 = j[:, 0]
    if np.any(j0 < -1e-12 * state.scale()):
        raise InvariantViolationError("j^0 < 0 on a supposedly valid state")
    if np.any(j0 <= rho_floor_rel * state.scale()):
        raise NodeError("energy density at or below floor")
    v = j[:, 1:] / j0[:, None]
    if j.shape[0] == 1:
        return j[0], v[0]
    return j, v


def total_energy_momentum(state, box, points_per_axis=64):
    """P^mu = integral of Theta^{mu 0} over the box, by trapezoid
    quadrature, plus the normalized observer P / sqrt(P.P).

    For superpositions the box should be a periodicity box of the
    momentum differences so the cross terms integrate out."""
    axes = [np.linspace(lo, hi, points_per_axis, endpoint=False)
            for lo, hi in box]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    th = theta_tensor(state, pts, 0.0)
    cell = np.prod([(hi - lo) / points_per_axis for lo, hi in box])
    p_mu = th[:, :, 0].sum(axis=0) * cell
    p_sq = p_mu @ METRIC @ p_mu
    if p_sq <= 1e-8 * (p_mu @ p_mu):
        raise DegenerateObserverError(
            f"P.P = {p_sq:.3e} not timelike within quadrature error")
    return p_mu, ObserverVector(p_mu / np.sqrt(p_sq), source="total-P")


def charge_current(state, x, t):
    """Diagnostic charge current s^mu = psi^bar beta^mu psi (unit charge).

    Indefinite: superpositions can make s^0 locally negative, which is
    exactly why the energy-momentum route is used for trajectories."""
    psi = state.evaluate(x, t)
    bar = state.mats.eta0 @ psi
    out = np.empty((psi.shape[1], 4))
    for mu in range(4):
        out[:, mu] = np.real(np.einsum("sn,st,tn->n", bar.conj(),
                                       state.mats.generators[mu], psi))
    return out


# ---------------------------------------------------------------------------
# non-relativistic limit


def reduced_nonrel_state(state):
    """The Schroedinger-side state matching a massive DKP superposition.

    spin0: scalar psi' from phi = exp(-imt) psi'/sqrt(2) m; spin1: the
    3-component Phi = (phi^1, phi^2, phi^3) from A^mu = exp(-imt)
    phi^mu / sqrt(2) m.  Rest energy is removed; the exact relativistic
    frequencies are kept so the comparison is honest at every order."""
    if state.massless:
        raise PhysicsError("the non-relativistic limit needs massive states")
    terms = []
    for c, p, e, comp in state.terms:
        if state.rep == "spin0":
            chi = np.array([1.0 + 0j])
        else:
            chi = comp[6:9] * np.sqrt(state.mass) / state.mass  # polarization
        terms.append((c, p, e - state.mass, chi))
    return _ReducedState(terms, state.mass,
                         1 if state.rep == "spin0" else 3)


class _ReducedState:
    """Plane-wave superposition with explicit per-term frequencies."""

    representation = "parametric"

    def __init__(self, terms, mass, spin_dim):
        from .units import NATURAL
        self.terms = terms
        self.masses = (mass,)
        self.units = NATURAL
        self.spin_dim = spin_dim
        self.time = 0.0
        self.config_dim = 3
        self.particle_axes = ((0, 1, 2),)

    def at_time(self, t):
        out = _ReducedState(self.terms, self.masses[0], self.spin_dim)
        out.time = t
        return out

    def evaluate(self, x, t=None):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        tt = self.time if t is None else t
        out = np.zeros((self.spin_dim, x.shape[0]), dtype=complex)
        for c, p, w, chi in self.terms:
            out += c * chi[:, None] * np.exp(1j * (x @ p - w * tt))[None, :]
        return out

    def gradient(self, x, t=None):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        tt = self.time if t is None else t
        out = np.zeros((self.spin_dim, 3, x.shape[0]), dtype=complex)
        for c, p, w, chi in self.terms:
            ph = np.exp(1j * (x @ p - w * tt))
            out += c * chi[:, None, None] * (1j * p)[None, :, None] * ph[None, None, :]
        return out

    def density(self, x, t=None):
        v = self.evaluate(x, t)
        return np.sum(np.abs(v) ** 2, axis=0)


def nonrel_limit_check(rep, epsilons, mass=1.0, seed=0, n_points=16,
                       point_scale=0.5, tau=0.3):
    """Deviation of the DKP velocity (n = time observer) from the
    Schroedinger / non-relativistic spin-1 current velocity, per epsilon
    = |p|/m.  Returns the list of max relative deviations.

    The comparison uses corresponding states: momenta scale as eps m u,
    evaluation points as y / (eps m) and the time as tau / (m eps^2), so
    the interference pattern is epsilon-independent and the deviation
    scales as a clean eps^2 (ratios ~ 1/4 under halving)."""
    from .currents import SpinSpec, current

    rng = np.random.default_rng(seed)
    dirs = rng.normal(size=(3, 3))
    mags = np.array([1.0, 0.7, 0.45])
    coefs = rng.normal(size=3) + 1j * rng.normal(size=3)
    pols = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    y_pts = rng.normal(size=(n_points, 3)) * point_scale
    devs = []
    for eps in epsilons:
        waves = []
        for i in range(3):
            u = dirs[i] / np.linalg.norm(dirs[i]) * mags[i]
            spec = {"coef": coefs[i], "p": eps * mass * u}
            if rep == "spin1":
                spec["polarization"] = pols[i]
            waves.append(spec)
        state = build_dkp_state(rep, mass, waves)
        pts = y_pts / (eps * mass)
        t = tau / (mass * eps * eps)
        _, v_dkp = energy_momentum_current(state, TIME_OBSERVER, pts, t)
        red = reduced_nonrel_state(state)
        spin = SpinSpec(0) if rep == "spin0" else SpinSpec(1)
        f = current(red, spin, at=pts, t=t)
        v_nr = f.j / f.rho[:, None]
        num = np.linalg.norm(v_dkp - v_nr, axis=-1)
        devs.append(float(np.max(num) / np.max(np.linalg.norm(v_dkp, axis=-1))))
    return devs


# ---------------------------------------------------------------------------
# two-particle tensor current


def _gamma_matrix(mats, mu, nu, mass):
    return mass * (mats.eta0 @ (mats.generators[mu] @ mats.generators[nu]
                                + mats.generators[nu] @ mats.generators[mu]
                                - METRIC[mu, nu] * np.eye(mats.dim)))


def dkp2_velocity(state_a, state_b, x1, x2, t, a=None, symmetrized=False,
                  rho_floor_rel=RHO_FLOOR_REL):
    """Two-particle energy-flow velocities from the rank-2 tensor current.

    The two-particle wave is the product state_a(x1) state_b(x2),
    optionally symmetrized.  With the rank-2 contraction tensor
    n^{mu1 mu2} = a^{mu1} a^{mu2} (a future-causal, default the time
    observer), j^{mu1 mu2} = psi^dag G^{mu1} x G^{mu2} psi with
    G^mu = Gamma^{mu nu} a_nu, and v_r = j^{(r: i)} / j^{00}."""
    if state_a.rep != state_b.rep or state_a.massless != state_b.massless:
        raise ShapeError("two-particle states must share representation")
    if a is None:
        a = TIME_OBSERVER
    elif not isinstance(a, ObserverVector):
        a = ObserverVector(np.asarray(a, dtype=float))
    mats = state_a.mats
    low = a.lower
    # G^mu for each particle, contracted on the second index
    g_mu = {}
    for which, st in (("a", state_a), ("b", state_b)):
        g_mu[which] = [sum(_gamma_matrix(mats, mu, nu, st.mass) * low[nu]
                           for nu in range(4)) for mu in range(4)]

    x1 = np.atleast_2d(np.asarray(x1, dtype=float))
    x2 = np.atleast_2d(np.asarray(x2, dtype=float))

    def amp(y1, y2):
        va = state_a.projected(state_a.evaluate(y1, t))
        vb = state_b.projected(state_b.evaluate(y2, t))
        out = np.einsum("sn,tn->stn", va, vb)
        return out

    psi = amp(x1, x2)
    if symmetrized:
        psi = (psi + np.transpose(amp(x2, x1), (1, 0, 2))) / np.sqrt(2.0)

    def bilinear(mu1, mu2):
        return np.real(np.einsum("stn,su,tv,uvn->n", psi.conj(),
                                 g_mu["a"][mu1], g_mu["b"][mu2], psi))

    j00 = bilinear(0, 0)
    if np.any(j00 < -1e-12 * state_a.scale() * state_b.scale()):
        raise InvariantViolationError("j^{00} < 0 on a valid state")
    if np.any(j00 <= rho_floor_rel * state_a.scale() * state_b.scale()):
        raise NodeError("two-particle density at or below floor")
    v1 = np.stack([bilinear(i, 0) for i in (1, 2, 3)], axis=-1) / j00[:, None]
    v2 = np.stack([bilinear(0, i) for i in (1, 2, 3)], axis=-1) / j00[:, None]
    if j00.shape[0] == 1:
        return v1[0], v2[0]
    return v1, v2


def dkp2_tensor_causal(state_a, state_b, x1, x2, t, a=None, symmetrized=False):
    """Minkowski norms of j^{0 mu_r 0} for r = 1, 2 (must be >= 0)."""
    v1, v2 = dkp2_velocity(state_a, state_b, x1, x2, t, a=a,
                           symmetrized=symmetrized)
    v1 = np.atleast_2d(v1)
    v2 = np.atleast_2d(v2)
    return 1.0 - np.sum(v1**2, axis=-1), 1.0 - np.sum(v2**2, axis=-1)
