"""Equations of motion and fixed-step integration.

Three formulations of the same rolling sphere:

  reduced     z = (K, gamma), K' = K x w, gamma' = gamma x w
  full        (g, x, y, K): adds the attitude and contact-point track via
              g' = g hat(w), x' = r w2_space, y' = -r w1_space
  multiplier  (g, x, y, M, px, py): the unreduced momentum-side equations
              with the rolling constraints enforced through Lagrange
              multipliers solved from a 2x2 linear system

plus the time-rescaled flow dz/dtau = mu(gamma) (K x w, gamma x w), whose
physical time is recovered as t = integral of mu dtau.

All integration is classical fixed-step RK4; drift repair (renormalizing
gamma, reorthonormalizing g) is off by default and applied every k steps
when requested. The weighted-divergence probe for the invariant measure
lives here as well.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from .model import (
    ReducedState,
    SphereParams,
    _mu_raw,
    _omega_w3_raw,
    t_matrix,
)
from .so3 import hat, is_rotation, poisson_vector, reorthonormalize


class IntegrationError(RuntimeError):
    """Non-finite state produced while stepping; carries the step index."""

    def __init__(self, step: int, message: str | None = None):
        self.step = step
        super().__init__(message or f"non-finite state at step {step}")


def _cross(a, b) -> np.ndarray:
    return np.array([
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])


# State containers -----------------------------------------------------------

_ROT_TOL = 1e-6


def _check_rotation(g: np.ndarray):
    if not is_rotation(g, tol=_ROT_TOL):
        raise ValueError("g must be a rotation matrix (orthonormal, det +1)")


@dataclass(frozen=True)
class FullState:
    """Attitude, contact point and contact-point momentum: (g, x, y, K)."""

    g: np.ndarray
    x: float
    y: float
    K: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.g, dtype=float).reshape(3, 3).copy()
        K = np.asarray(self.K, dtype=float).reshape(3).copy()
        _check_rotation(g)
        g.setflags(write=False)
        K.setflags(write=False)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))

    def reduced(self) -> ReducedState:
        return ReducedState(self.K, poisson_vector(self.g))

    def pack(self) -> np.ndarray:
        return np.concatenate([self.g.ravel(), [self.x, self.y], self.K])

    @classmethod
    def unpack(cls, z) -> "FullState":
        z = np.asarray(z, dtype=float)
        return cls(z[:9].reshape(3, 3), z[9], z[10], z[11:14])


@dataclass(frozen=True)
class MultiplierState:
    """Unreduced momentum-side state: attitude, position, center-of-mass
    angular momentum M (body frame) and linear momentum (px, py)."""

    g: np.ndarray
    x: float
    y: float
    M: np.ndarray
    px: float
    py: float

    def __post_init__(self):
        g = np.asarray(self.g, dtype=float).reshape(3, 3).copy()
        M = np.asarray(self.M, dtype=float).reshape(3).copy()
        _check_rotation(g)
        g.setflags(write=False)
        M.setflags(write=False)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "px", float(self.px))
        object.__setattr__(self, "py", float(self.py))

    def residuals(self, p: SphereParams) -> np.ndarray:
        """Rolling-constraint residuals (px - m r w2_space, py + m r w1_space)."""
        ws = self.g @ (self.M / p.inertia_vec)
        mr = p.m * p.r
        return np.array([self.px - mr * ws[1], self.py + mr * ws[0]])

    def reduced(self, p: SphereParams) -> ReducedState:
        """Project to (K, gamma): K_space = M_space + r (-py, px, 0)."""
        ms = self.g @ self.M
        ks = ms + np.array([-p.r * self.py, p.r * self.px, 0.0])
        return ReducedState(self.g.T @ ks, poisson_vector(self.g))

    def pack(self) -> np.ndarray:
        return np.concatenate([self.g.ravel(), [self.x, self.y], self.M, [self.px, self.py]])

    @classmethod
    def unpack(cls, z) -> "MultiplierState":
        z = np.asarray(z, dtype=float)
        return cls(z[:9].reshape(3, 3), z[9], z[10], z[11:14], z[14], z[15])


def multiplier_state_from_reduced(p: SphereParams, g, K, x: float = 0.0,
                                  y: float = 0.0) -> MultiplierState:
    """Constraint-consistent unreduced state matching the reduced data (K, gamma(g))."""
    if p.m <= 0.0:
        raise ValueError("multiplier model needs m > 0")
    g = np.asarray(g, dtype=float)
    K = np.asarray(K, dtype=float)
    gamma = poisson_vector(g)
    omega = t_matrix(p, gamma) @ K
    M = p.inertia_vec * omega
    ws = g @ omega
    mr = p.m * p.r
    return MultiplierState(g, x, y, M, mr * ws[1], -mr * ws[0])


class MultiplierRhs(NamedTuple):
    gdot: np.ndarray
    xdot: float
    ydot: float
    Mdot: np.ndarray
    pxdot: float
    pydot: float
    lambdas: np.ndarray        # (lambda_x, lambda_y)
    residual_rate: np.ndarray  # d/dt of the two constraint residuals


@dataclass
class Trajectory:
    """Recorded samples of one integration run.

    states holds packed coordinate rows (layout depends on kind); integrals
    holds (H, J, K.gamma, |gamma|^2) per sample. Rescaled runs carry the
    uniform tau grid in taus and the reconstructed physical time in times.
    """

    kind: str
    params: SphereParams
    dt: float
    times: np.ndarray
    states: np.ndarray
    integrals: np.ndarray
    integrator: str = "rk4"
    taus: Optional[np.ndarray] = None
    residuals: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.times)

    def reduced_z(self) -> np.ndarray:
        """Samples as rows (K1, K2, K3, g1, g2, g3) for any kind."""
        if self.kind in ("reduced", "rescaled"):
            return self.states.copy()
        if self.kind == "full":
            out = np.empty((len(self), 6))
            for idx, row in enumerate(self.states):
                out[idx, :3] = row[11:14]
                out[idx, 3:] = row[6:9]  # third row of g
            return out
        if self.kind == "multiplier":
            out = np.empty((len(self), 6))
            for idx, row in enumerate(self.states):
                s = MultiplierState.unpack(row).reduced(self.params)
                out[idx, :3] = s.K
                out[idx, 3:] = s.gamma
            return out
        raise ValueError(f"unknown trajectory kind {self.kind!r}")


# Right-hand sides -----------------------------------------------------------

def _reduced_rhs_z(p: SphereParams, z: np.ndarray) -> np.ndarray:
    K = z[:3]
    gamma = z[3:]
    omega, _ = _omega_w3_raw(p, K, gamma)
    return np.concatenate([_cross(K, omega), _cross(gamma, omega)])


def _rescaled_rhs_z(p: SphereParams, z: np.ndarray) -> np.ndarray:
    return _mu_raw(p, z[3:]) * _reduced_rhs_z(p, z)


def reduced_rhs(p: SphereParams, s: ReducedState) -> np.ndarray:
    """(K x w, gamma x w) packed as a 6-vector."""
    return _reduced_rhs_z(p, s.z)


def _full_rhs_z(p: SphereParams, z: np.ndarray) -> np.ndarray:
    g = z[:9].reshape(3, 3)
    K = z[11:14]
    gamma = g[2]
    omega, _ = _omega_w3_raw(p, K, gamma)
    ws = g @ omega
    out = np.empty(14)
    out[:9] = (g @ hat(omega)).ravel()
    out[9] = p.r * ws[1]
    out[10] = -p.r * ws[0]
    out[11:14] = _cross(K, omega)
    return out


def full_rhs(p: SphereParams, s: FullState):
    """Tangent data (gdot, xdot, ydot, Kdot) of the reconstructed flow.

    gdot = g hat(w); the contact point tracks the rolling velocities
    xdot = r w2_space, ydot = -r w1_space.
    """
    out = _full_rhs_z(p, s.pack())
    return out[:9].reshape(3, 3), float(out[9]), float(out[10]), out[11:14]


def _multiplier_rhs_z(p: SphereParams, z: np.ndarray, constrained: bool = True) -> np.ndarray:
    g = z[:9].reshape(3, 3)
    M = z[11:14]
    px, py = z[14], z[15]
    iinv = 1.0 / p.inertia_vec
    omega = iinv * M
    m_cross_w = _cross(M, omega)

    if constrained and p.mr2 > 0.0:
        # d/dt of the space angular velocity splits as g I^-1 Mdot; forcing
        # the residual rates to zero gives a symmetric positive definite
        # 2x2 system for the multipliers, inverted in closed form.
        u = g @ (iinv * m_cross_w)
        b_mat = g @ (iinv[:, None] * g.T)
        mr2 = p.mr2
        mr = p.m * p.r
        a11 = 1.0 + mr2 * b_mat[1, 1]
        a22 = 1.0 + mr2 * b_mat[0, 0]
        a12 = -mr2 * b_mat[0, 1]
        det = a11 * a22 - a12 * a12
        lam_x = (a22 * (mr * u[1]) - a12 * (-mr * u[0])) / det
        lam_y = (a11 * (-mr * u[0]) - a12 * (mr * u[1])) / det
    else:
        lam_x = lam_y = 0.0

    # Constraint torque: the one-forms dx - r rho2, dy + r rho1 pair with the
    # left-invariant frame through rows of g.
    m_dot = m_cross_w + p.r * (lam_y * g[0] - lam_x * g[1])
    out = np.empty(16)
    out[:9] = (g @ hat(omega)).ravel()
    out[9] = px / p.m
    out[10] = py / p.m
    out[11:14] = m_dot
    out[14] = lam_x
    out[15] = lam_y
    return out


def multiplier_rhs(p: SphereParams, s: MultiplierState, constrained: bool = True) -> MultiplierRhs:
    """Unreduced equations of motion with the rolling reaction forces.

    With constrained=False the multipliers are forced to zero and the
    equations are those of a free rigid body with frozen linear momentum.
    """
    if p.m <= 0.0:
        raise ValueError("multiplier model needs m > 0")
    out = _multiplier_rhs_z(p, s.pack(), constrained=constrained)
    lam = np.array([out[14], out[15]])
    mdot = out[11:14]
    wdot_space = s.g @ (mdot / p.inertia_vec)
    mr = p.m * p.r
    rate = np.array([lam[0] - mr * wdot_space[1], lam[1] + mr * wdot_space[0]])
    if not constrained:
        rate = np.zeros(2)
    return MultiplierRhs(
        gdot=out[:9].reshape(3, 3),
        xdot=float(out[9]),
        ydot=float(out[10]),
        Mdot=mdot,
        pxdot=float(out[14]),
        pydot=float(out[15]),
        lambdas=lam,
        residual_rate=rate,
    )


# Integration ----------------------------------------------------------------

def rk4_step(rhs: Callable[[np.ndarray], np.ndarray], z: np.ndarray, dt: float) -> np.ndarray:
    k1 = rhs(z)
    k2 = rhs(z + (0.5 * dt) * k1)
    k3 = rhs(z + (0.5 * dt) * k2)
    k4 = rhs(z + dt * k3)
    return z + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)


def integrate(rhs: Callable[[np.ndarray], np.ndarray], z0, dt: float, steps: int, *,
              stride: int = 1,
              monitor: Callable[[np.ndarray], np.ndarray] | None = None,
              repair: Callable[[np.ndarray], np.ndarray] | None = None,
              repair_interval: int = 0):
    """Generic fixed-step RK4 driver.

    Records the state every `stride` steps (sample 0 included). `repair` is
    applied to the state every `repair_interval` steps when positive.
    Raises IntegrationError (with the offending step) on non-finite states.

    Returns (times, states, monitors); monitors is None when no monitor is
    given.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if stride < 1:
        raise ValueError("stride must be >= 1")

    z = np.array(z0, dtype=float)
    n_samples = steps // stride + 1
    times = np.empty(n_samples)
    states = np.empty((n_samples, z.size))
    monitors = None
    if monitor is not None:
        first = np.atleast_1d(np.asarray(monitor(z), dtype=float))
        monitors = np.empty((n_samples, first.size))
        monitors[0] = first
    times[0] = 0.0
    states[0] = z

    sample = 1
    for step in range(1, steps + 1):
        z = rk4_step(rhs, z, dt)
        if not np.all(np.isfinite(z)):
            raise IntegrationError(step)
        if repair is not None and repair_interval > 0 and step % repair_interval == 0:
            z = repair(z)
        if step % stride == 0:
            times[sample] = step * dt
            states[sample] = z
            if monitor is not None:
                monitors[sample] = monitor(z)
            sample += 1
    return times[:sample], states[:sample], None if monitors is None else monitors[:sample]


def _renormalize_gamma(z: np.ndarray) -> np.ndarray:
    out = z.copy()
    out[3:6] /= np.linalg.norm(out[3:6])
    return out


def _repair_rotation_block(z: np.ndarray) -> np.ndarray:
    out = z.copy()
    out[:9] = reorthonormalize(out[:9].reshape(3, 3)).ravel()
    return out


def integrate_reduced(p: SphereParams, s0: ReducedState, dt: float, steps: int, *,
                      stride: int = 1, renorm_interval: int = 0) -> Trajectory:
    """RK4 on the reduced equations, recording the four first integrals."""
    def monitor(z):
        return _integrals_of_z(p, z)

    times, states, mons = integrate(
        lambda z: _reduced_rhs_z(p, z), s0.z, dt, steps,
        stride=stride, monitor=monitor,
        repair=_renormalize_gamma if renorm_interval > 0 else None,
        repair_interval=renorm_interval,
    )
    return Trajectory("reduced", p, dt, times, states, mons)


def _integrals_of_z(p: SphereParams, z: np.ndarray) -> np.ndarray:
    K, gamma = z[:3], z[3:6]
    omega, _ = _omega_w3_raw(p, K, gamma)
    return np.array([
        0.5 * float(K @ omega),
        0.5 * float(K @ K),
        float(K @ gamma),
        float(gamma @ gamma),
    ])


def integrate_full(p: SphereParams, s0: FullState, dt: float, steps: int, *,
                   stride: int = 1, repair_interval: int = 0) -> Trajectory:
    """RK4 on the reconstructed flow, treating g as nine linear components."""
    def monitor(z):
        return _integrals_of_z(p, np.concatenate([z[11:14], z[6:9]]))

    times, states, mons = integrate(
        lambda z: _full_rhs_z(p, z), s0.pack(), dt, steps,
        stride=stride, monitor=monitor,
        repair=_repair_rotation_block if repair_interval > 0 else None,
        repair_interval=repair_interval,
    )
    return Trajectory("full", p, dt, times, states, mons)


def integrate_multiplier(p: SphereParams, s0: MultiplierState, dt: float, steps: int, *,
                         stride: int = 1, repair_interval: int = 0,
                         constrained: bool = True) -> Trajectory:
    """RK4 on the multiplier equations; records integrals and residuals."""
    if p.m <= 0.0:
        raise ValueError("multiplier model needs m > 0")
    mr = p.m * p.r

    def monitor(z):
        g = z[:9].reshape(3, 3)
        ms = g @ z[11:14]
        ks = ms + np.array([-p.r * z[15], p.r * z[14], 0.0])
        red = np.concatenate([g.T @ ks, g[2]])
        ws = g @ (z[11:14] / p.inertia_vec)
        res = np.array([z[14] - mr * ws[1], z[15] + mr * ws[0]])
        return np.concatenate([_integrals_of_z(p, red), res])

    times, states, mons = integrate(
        lambda z: _multiplier_rhs_z(p, z, constrained=constrained), s0.pack(), dt, steps,
        stride=stride, monitor=monitor,
        repair=_repair_rotation_block if repair_interval > 0 else None,
        repair_interval=repair_interval,
    )
    return Trajectory("multiplier", p, dt, times, states, mons[:, :4],
                      residuals=mons[:, 4:])


def integrate_rescaled(p: SphereParams, s0: ReducedState, dtau: float, steps: int, *,
                       stride: int = 1, renorm_interval: int = 0) -> Trajectory:
    """RK4 on dz/dtau = mu(gamma) (K x w, gamma x w).

    The tau grid is uniform; physical time is accumulated per step by the
    trapezoidal rule t = integral of mu(gamma(tau)) dtau.
    """
    def monitor(z):
        return _integrals_of_z(p, z)

    taus, states, mons = integrate(
        lambda z: _rescaled_rhs_z(p, z), s0.z, dtau, steps,
        stride=1, monitor=monitor,
        repair=_renormalize_gamma if renorm_interval > 0 else None,
        repair_interval=renorm_interval,
    )
    mus = np.array([_mu_raw(p, row[3:]) for row in states])
    times = np.concatenate([[0.0], np.cumsum(0.5 * dtau * (mus[:-1] + mus[1:]))])
    sel = np.arange(0, len(taus), stride)
    return Trajectory("rescaled", p, dtau, times[sel], states[sel], mons[sel],
                      taus=taus[sel])


# Invariant measure ----------------------------------------------------------

def divergence_weighted(p: SphereParams, s: ReducedState, h: float = 1e-5) -> float:
    """Ambient divergence of mu(gamma)^-1 (K x w, gamma x w), by central
    finite differences. Vanishing of this quantity expresses that the
    measure with density 1/mu is preserved by the reduced flow."""
    return _fd_divergence(lambda z: _reduced_rhs_z(p, z) / _mu_raw(p, z[3:]), s.z, h)


def divergence_unweighted(p: SphereParams, s: ReducedState, h: float = 1e-5) -> float:
    """Ambient divergence of the raw reduced field (generically nonzero)."""
    return _fd_divergence(lambda z: _reduced_rhs_z(p, z), s.z, h)


def _fd_divergence(field: Callable[[np.ndarray], np.ndarray], z: np.ndarray, h: float) -> float:
    total = 0.0
    for l in range(z.size):
        zp = z.copy()
        zm = z.copy()
        zp[l] += h
        zm[l] -= h
        total += (field(zp)[l] - field(zm)[l]) / (2.0 * h)
    return total
