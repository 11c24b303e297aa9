"""Dirac-equation pilot-wave velocities for plane-wave spinor states.

States are finite superpositions of free plane-wave spinors, so the time
evolution is exact (each term rotates by exp(-i E t)) and there is no
grid propagation to destabilize.  Natural units hbar = c = 1.

Spinor normalization is u^dag u = 2|E|; velocities are ratios of
bilinears and therefore normalization independent (asserted by the
global-scaling invariance test).  Negative-energy terms are permitted
and labeled as such; no Dirac-sea machinery is attempted.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (CausalityViolationError, NodeError, PhysicsError,
                     ShapeError)
from .matrices import build_matrix_set

_DIRAC = build_matrix_set("dirac4")
_SIGMA = np.array([[[0, 1], [1, 0]],
                   [[0, -1j], [1j, 0]],
                   [[1, 0], [0, -1]]], dtype=complex)

RHO_FLOOR_REL = 1e-12


def free_spinor(p, mass, energy_sign, spin_label):
    """Eigenvector of alpha.p + beta m with eigenvalue sign * sqrt(p^2+m^2).

    spin_label selects the rest-frame spin-up/down basis vector; the
    returned spinor satisfies (gamma^0 E - gamma.p - m) u = 0 with the
    signed energy E, and u^dag u = 2|E|.
    """
    p = np.asarray(p, dtype=float)
    if energy_sign not in (+1, -1):
        raise PhysicsError("energy sign must be +1 or -1")
    if spin_label not in (0, 1):
        raise PhysicsError("spin label must be 0 or 1")
    e = np.sqrt(p @ p + mass * mass)
    chi = np.zeros(2, dtype=complex)
    chi[spin_label] = 1.0
    sp = np.einsum("iab,i->ab", _SIGMA, p)
    if energy_sign > 0:
        upper, lower = chi, (sp @ chi) / (e + mass)
    else:
        upper, lower = -(sp @ chi) / (e + mass), chi
    return np.sqrt(e + mass) * np.concatenate([upper, lower]), energy_sign * e


@dataclass(frozen=True)
class PlaneWaveSpinorState:
    """Superposition of free Dirac plane waves, one or two particles.

    One particle: terms = [(coef, p(3,), energy_sign, spin_label), ...].
    Two particles: terms = [(coef, (p1, sign1, spin1), (p2, sign2, spin2)), ...];
    the amplitude is a 16-component tensor product per term.
    """
    terms: tuple
    mass: float
    n_particles: int = 1

    def __post_init__(self):
        if self.n_particles not in (1, 2):
            raise ShapeError("only one- and two-particle states are supported")
        if not self.terms:
            raise ShapeError("state needs at least one term")
        spinors = []
        for term in self.terms:
            if self.n_particles == 1:
                c, p, sign, lab = term
                u, e = free_spinor(p, self.mass, sign, lab)
                self._check_term(u, e, p)
                spinors.append((complex(c), (np.asarray(p, float),), (e,), (u,)))
            else:
                c, one, two = term
                ps, es, us = [], [], []
                for (p, sign, lab) in (one, two):
                    u, e = free_spinor(p, self.mass, sign, lab)
                    self._check_term(u, e, p)
                    ps.append(np.asarray(p, float))
                    es.append(e)
                    us.append(u)
                spinors.append((complex(c), tuple(ps), tuple(es), tuple(us)))
        object.__setattr__(self, "_spinors", tuple(spinors))

    def _check_term(self, u, e, p):
        p = np.asarray(p, dtype=float)
        d = (_DIRAC.generators[0] * e
             - sum(_DIRAC.generators[i + 1] * p[i] for i in range(3))
             - self.mass * np.eye(4))
        if np.max(np.abs(d @ u)) > 1e-12 * max(1.0, np.max(np.abs(u))):
            raise PhysicsError("constructed spinor fails the Dirac equation")

    def antisymmetrized(self):
        """Two-particle state with exchanged-partner terms subtracted."""
        if self.n_particles != 2:
            raise ShapeError("antisymmetrization applies to two particles")
        new = []
        norm = 1.0 / np.sqrt(2.0)
        for (c, one, two) in self.terms:
            new.append((c * norm, one, two))
            new.append((-c * norm, two, one))
        return PlaneWaveSpinorState(tuple(new), self.mass, n_particles=2)

    def amplitude(self, x, t):
        """Complex spinor amplitude at configuration points.

        x has shape (n, 3) for one particle, (n, 6) for two; returns
        (4, n) or (16, n).
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != 3 * self.n_particles:
            raise ShapeError("configuration dimension mismatch")
        dim = 4 ** self.n_particles
        out = np.zeros((dim, x.shape[0]), dtype=complex)
        for c, ps, es, us in self._spinors:
            if self.n_particles == 1:
                phase = np.exp(1j * (x @ ps[0] - es[0] * t))
                out += c * us[0][:, None] * phase[None, :]
            else:
                phase = np.exp(1j * (x[:, :3] @ ps[0] + x[:, 3:] @ ps[1]
                                     - (es[0] + es[1]) * t))
                out += c * np.kron(us[0], us[1])[:, None] * phase[None, :]
        return out


def _alpha_for(particle, n_particles):
    eye = np.eye(4)
    mats = []
    for i in range(3):
        a = _DIRAC.beta_tilde[i]
        if n_particles == 1:
            mats.append(a)
        elif particle == 0:
            mats.append(np.kron(a, eye))
        else:
            mats.append(np.kron(eye, a))
    return mats


def dirac_velocity(state, x, t, rho_floor_rel=RHO_FLOOR_REL):
    """Guidance velocity v^i = psi^dag alpha^i psi / psi^dag psi and the
    normalized 4-velocity u^mu = j^mu / sqrt(j.j) (None when j is null).

    Raises NodeError at nodes and CausalityViolationError if j were ever
    spacelike (a test hook; it cannot fire on valid states).
    """
    if state.n_particles != 1:
        raise ShapeError("use dirac2_velocity for two-particle states")
    psi = state.amplitude(x, t)
    rho = np.real(np.einsum("sn,sn->n", psi.conj(), psi))
    scale = _state_scale(state)
    if np.any(rho <= rho_floor_rel * scale):
        raise NodeError("density at or below floor at the requested point")
    alphas = _alpha_for(0, 1)
    v = np.stack([np.real(np.einsum("sn,st,tn->n", psi.conj(), a, psi))
                  for a in alphas], axis=-1) / rho[:, None]
    jsq = rho**2 - np.sum((v * rho[:, None]) ** 2, axis=-1)
    if np.any(jsq < -1e-10 * rho**2):
        raise CausalityViolationError("spacelike Dirac current encountered")
    u = None
    if np.all(jsq > 0):
        norm = np.sqrt(jsq)
        u = np.concatenate([(rho / norm)[:, None],
                            v * (rho / norm)[:, None]], axis=-1)
    return (v[0], u[0] if u is not None else None) if v.shape[0] == 1 else (v, u)


def dirac2_velocity(state, x1, x2, t, rho_floor_rel=RHO_FLOOR_REL):
    """Per-particle velocities of a two-particle plane-wave state."""
    if state.n_particles != 2:
        raise ShapeError("state is not two-particle")
    x1 = np.atleast_2d(np.asarray(x1, dtype=float))
    x2 = np.atleast_2d(np.asarray(x2, dtype=float))
    x = np.concatenate([x1, x2], axis=1)
    psi = state.amplitude(x, t)
    rho = np.real(np.einsum("sn,sn->n", psi.conj(), psi))
    scale = _state_scale(state)
    if np.any(rho <= rho_floor_rel * scale):
        raise NodeError("density at or below floor (antisymmetrized zero?)")
    vs = []
    for r in (0, 1):
        alphas = _alpha_for(r, 2)
        v = np.stack([np.real(np.einsum("sn,st,tn->n", psi.conj(), a, psi))
                      for a in alphas], axis=-1) / rho[:, None]
        vs.append(v[0] if v.shape[0] == 1 else v)
    return vs[0], vs[1]


def tensor_current_causal(state, x1, x2, t):
    """j^{0 mu_r 0} j_{0 mu_r 0} >= 0 check for both particles; returns the
    two Minkowski norms (they must be nonnegative for valid states)."""
    v1, v2 = dirac2_velocity(state, x1, x2, t)
    x = np.concatenate([np.atleast_2d(x1), np.atleast_2d(x2)], axis=1)
    psi = state.amplitude(x, t)
    rho = np.real(np.einsum("sn,sn->n", psi.conj(), psi))
    out = []
    for v in (np.atleast_2d(v1), np.atleast_2d(v2)):
        j0 = rho
        ji = v * rho[:, None]
        out.append(j0**2 - np.sum(ji**2, axis=-1))
    return out[0], out[1]


def _state_scale(state):
    """Typical density scale: sum of |c|^2 u^dag u over terms."""
    total = 0.0
    for c, ps, es, us in state._spinors:
        w = abs(c) ** 2
        for u in us:
            w *= float(np.real(u.conj() @ u))
        total += w
    return total


def nonrelativistic_pauli_state(state, hbar=1.0):
    """The 2-spinor Pauli state matching a positive-energy superposition.

    Each term c u(p) exp(i(p.x - E t)) maps onto c chi exp(i(p.x -
    (E - m) t)) with the rest energy removed; valid for |p| << m where
    the small components decouple.  Returns a ParametricWaveFunction
    ('superposition' of spinor_product plane waves is overkill here: the
    Pauli spinor is assembled directly as closed-form terms).
    """
    from .wavefunction import ParametricWaveFunction

    if state.n_particles != 1:
        raise ShapeError("one-particle states only")
    for c, (p,), (e,), (u,) in state._spinors:
        if e < 0:
            raise PhysicsError("non-relativistic limit needs positive energies")
    return _PauliLimitState(state, hbar)


class _PauliLimitState:
    """Minimal wavefunction adapter: 2-spinor plane-wave superposition with
    the relativistic dispersion minus the rest energy."""

    representation = "parametric"
    spin_dim = 2

    def __init__(self, state, hbar=1.0):
        from .units import NATURAL
        self.state = state
        self.masses = (state.mass,)
        self.units = NATURAL
        self.time = 0.0
        self.config_dim = 3
        self.particle_axes = ((0, 1, 2),)

    def at_time(self, t):
        out = _PauliLimitState(self.state)
        out.time = t
        return out

    def _terms(self):
        for c, (p,), (e,), (u,) in self.state._spinors:
            # upper components are proportional to the exact rest spinor
            chi = u[:2] / np.linalg.norm(u[:2])
            yield c, p, e - self.state.mass, chi

    def evaluate(self, x, t=None):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        tt = self.time if t is None else t
        out = np.zeros((2, x.shape[0]), dtype=complex)
        for c, p, w, chi in self._terms():
            out += c * chi[:, None] * np.exp(1j * (x @ p - w * tt))[None, :]
        return out

    def gradient(self, x, t=None):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        tt = self.time if t is None else t
        out = np.zeros((2, 3, x.shape[0]), dtype=complex)
        for c, p, w, chi in self._terms():
            ph = np.exp(1j * (x @ p - w * tt))
            out += c * chi[:, None, None] * (1j * p)[None, :, None] * ph[None, None, :]
        return out

    def density(self, x, t=None):
        v = self.evaluate(x, t)
        return np.sum(np.abs(v) ** 2, axis=0)
