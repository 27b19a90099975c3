"""Sphere parameters and the kinematics of rolling without slipping.

The reduced phase space is parametrized by the contact-point angular momentum
K (body frame) and the vertical unit vector gamma (body frame). This module
holds the dictionary between K and the angular velocity:

    K = I w + m r^2 (w - (w . gamma) gamma)          (momentum from velocity)
    w = A^-1 K + m r^2 w3 A^-1 gamma,   A = I + m r^2 E
    w3 = w . gamma = (K . A^-1 gamma) / Y(gamma)
    Y(gamma) = 1 - m r^2 (gamma . A^-1 gamma)

together with the closed-form inverse inertia T(gamma) (w = T K), the reduced
Hamiltonian H = K . w / 2, its gradient, the conformal factor mu = sqrt(Y),
and the four first integrals monitored along trajectories.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

# Unit-norm tolerance for operations that demand gamma on the sphere.
UNIT_TOL = 1e-8


@dataclass(frozen=True)
class SphereParams:
    """Mass (kg), radius (m) and principal moments of inertia (kg m^2).

    m == 0 is accepted as the exact free-rigid-body limit used in tests;
    the CLI rejects it for simulation runs.
    """

    m: float
    r: float
    inertia: tuple[float, float, float]

    def __post_init__(self):
        if not (self.m >= 0.0 and np.isfinite(self.m)):
            raise ValueError(f"mass must be >= 0, got {self.m}")
        if not (self.r > 0.0 and np.isfinite(self.r)):
            raise ValueError(f"radius must be > 0, got {self.r}")
        inertia = tuple(float(i) for i in self.inertia)
        if len(inertia) != 3 or not all(i > 0.0 and np.isfinite(i) for i in inertia):
            raise ValueError(f"moments of inertia must be three positive numbers, got {self.inertia}")
        object.__setattr__(self, "m", float(self.m))
        object.__setattr__(self, "r", float(self.r))
        object.__setattr__(self, "inertia", inertia)

    @cached_property
    def mr2(self) -> float:
        return self.m * self.r * self.r

    @cached_property
    def inertia_vec(self) -> np.ndarray:
        v = np.array(self.inertia)
        v.setflags(write=False)
        return v

    @cached_property
    def a_inv_diag(self) -> np.ndarray:
        """Diagonal of A^-1 = (I + m r^2 E)^-1."""
        v = 1.0 / (self.inertia_vec + self.mr2)
        v.setflags(write=False)
        return v


@dataclass(frozen=True)
class ReducedState:
    """Point (K, gamma) of the reduced space R^3 x S^2.

    gamma is stored as given, never silently renormalized; integrator drift
    off the sphere must stay visible to the conservation monitors.
    """

    K: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        K = np.asarray(self.K, dtype=float).reshape(3).copy()
        gamma = np.asarray(self.gamma, dtype=float).reshape(3).copy()
        if not (np.all(np.isfinite(K)) and np.all(np.isfinite(gamma))):
            raise ValueError("state components must be finite")
        K.setflags(write=False)
        gamma.setflags(write=False)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "gamma", gamma)

    @property
    def z(self) -> np.ndarray:
        """Packed coordinates (K1, K2, K3, g1, g2, g3)."""
        return np.concatenate([self.K, self.gamma])

    @classmethod
    def from_z(cls, z) -> "ReducedState":
        z = np.asarray(z, dtype=float).reshape(6)
        return cls(z[:3], z[3:])


class FirstIntegrals(NamedTuple):
    energy: float        # reduced Hamiltonian
    j_half_k_sq: float   # J = |K|^2 / 2
    k_gamma: float       # vertical momentum K . gamma
    gamma_sq: float      # |gamma|^2, the geometric integral


@dataclass(frozen=True)
class DerivedKinematics:
    """Per-state cache of the velocity-side quantities."""

    omega_body: np.ndarray
    omega3_space: float
    y: float
    mu: float
    t: np.ndarray


# Raw kernels on plain arrays. These implement the ambient extension of the
# formulas to gamma off the unit sphere, which the finite-difference checks
# and the RK4 substeps rely on; they perform no validation.

def _y_raw(p: SphereParams, gamma: np.ndarray) -> float:
    aig = p.a_inv_diag * gamma
    return 1.0 - p.mr2 * float(gamma @ aig)


def _omega_w3_raw(p: SphereParams, K: np.ndarray, gamma: np.ndarray):
    aig = p.a_inv_diag * gamma
    y = 1.0 - p.mr2 * float(gamma @ aig)
    w3 = float(K @ aig) / y
    omega = p.a_inv_diag * K + (p.mr2 * w3) * aig
    return omega, w3


def _mu_raw(p: SphereParams, gamma: np.ndarray) -> float:
    return float(np.sqrt(_y_raw(p, gamma)))


def _check_unit(gamma: np.ndarray):
    if abs(float(gamma @ gamma) - 1.0) > 2.0 * UNIT_TOL:
        raise ValueError(f"gamma must be a unit vector, got |gamma| = {np.linalg.norm(gamma):.6g}")


def a_inverse(p: SphereParams) -> np.ndarray:
    """A^-1 as a 3x3 matrix, A = I + m r^2 E (diagonal in this frame)."""
    return np.diag(p.a_inv_diag)


def y_gamma(p: SphereParams, gamma) -> float:
    """Y(gamma) = 1 - m r^2 (gamma . A^-1 gamma); lies in (0, 1] on the sphere."""
    gamma = np.asarray(gamma, dtype=float)
    _check_unit(gamma)
    return _y_raw(p, gamma)


def t_matrix(p: SphereParams, gamma) -> np.ndarray:
    """Symmetric positive definite T(gamma) with omega = T(gamma) K.

    T = A^-1 + (m r^2 / Y) (A^-1 gamma)(A^-1 gamma)^T.
    """
    gamma = np.asarray(gamma, dtype=float)
    aig = p.a_inv_diag * gamma
    y = 1.0 - p.mr2 * float(gamma @ aig)
    return np.diag(p.a_inv_diag) + (p.mr2 / y) * np.outer(aig, aig)


def omega_body(p: SphereParams, s: ReducedState) -> np.ndarray:
    """Angular velocity in body frame for the state (K, gamma)."""
    omega, _ = _omega_w3_raw(p, s.K, s.gamma)
    return omega


def omega3_space(p: SphereParams, s: ReducedState) -> float:
    """Vertical component of the space-frame angular velocity, w . gamma."""
    _, w3 = _omega_w3_raw(p, s.K, s.gamma)
    return w3


def k_from_omega(p: SphereParams, gamma, omega) -> np.ndarray:
    """Contact-point angular momentum for a given angular velocity.

    K = I w + m r^2 (w - (w . gamma) gamma); inverse of omega_body at fixed
    gamma.
    """
    gamma = np.asarray(gamma, dtype=float)
    omega = np.asarray(omega, dtype=float)
    return p.inertia_vec * omega + p.mr2 * (omega - float(omega @ gamma) * gamma)


def hamiltonian(p: SphereParams, s: ReducedState) -> float:
    """Reduced Hamiltonian H = K . w / 2, the rolling kinetic energy."""
    omega, _ = _omega_w3_raw(p, s.K, s.gamma)
    return 0.5 * float(s.K @ omega)


def grad_hamiltonian(p: SphereParams, s: ReducedState):
    """Gradient of H in the ambient coordinates (K, gamma).

    dH/dK = w and dH/dgamma = m r^2 w3 (w - w3 gamma). The gamma part is
    fixed only up to multiples of gamma on the sphere; this choice is the one
    whose contraction with the bracket tables reproduces the equations of
    motion.
    """
    omega, w3 = _omega_w3_raw(p, s.K, s.gamma)
    dgamma = (p.mr2 * w3) * (omega - w3 * s.gamma)
    return omega.copy(), dgamma


def mu(p: SphereParams, gamma) -> float:
    """Conformal factor mu(gamma) = sqrt(Y(gamma))."""
    gamma = np.asarray(gamma, dtype=float)
    _check_unit(gamma)
    return _mu_raw(p, gamma)


def first_integrals(p: SphereParams, s: ReducedState) -> FirstIntegrals:
    """The four monitored constants: H, J = |K|^2/2, K . gamma, |gamma|^2."""
    omega, _ = _omega_w3_raw(p, s.K, s.gamma)
    return FirstIntegrals(
        energy=0.5 * float(s.K @ omega),
        j_half_k_sq=0.5 * float(s.K @ s.K),
        k_gamma=float(s.K @ s.gamma),
        gamma_sq=float(s.gamma @ s.gamma),
    )


def kinematics(p: SphereParams, s: ReducedState) -> DerivedKinematics:
    """All derived velocity-side quantities for one state."""
    omega, w3 = _omega_w3_raw(p, s.K, s.gamma)
    y = _y_raw(p, s.gamma)
    return DerivedKinematics(
        omega_body=omega,
        omega3_space=w3,
        y=y,
        mu=float(np.sqrt(y)),
        t=t_matrix(p, s.gamma),
    )
