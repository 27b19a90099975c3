"""Coefficient tables of the three reduced almost-Poisson brackets.

In the coordinates z = (K1, K2, K3, g1, g2, g3) every variant has the block
form

    Lambda(z) = [ hat(S)     hat(gamma) ]
                [ hat(gamma)     0      ]

with Lambda_ij = {z_i, z_j}, where

    standard:  S = K + m r^2 (w - w3 gamma)
    affine:    S = K - m r^2 w3 gamma
    scaled:    mu(gamma) times the affine table

The standard and affine tables generate the same rolling dynamics through
z' = Lambda grad(H) but differ in their conserved structure: K . gamma is a
Casimir only for the affine (and scaled) variants, and only the scaled table
satisfies the Jacobi identity. The Jacobiator here is computed from analytic
coefficient derivatives; finite differences are too noisy for the 1e-9
certification tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .model import ReducedState, SphereParams, _mu_raw, _omega_w3_raw
from .so3 import hat

VARIANTS = ("standard", "affine", "scaled")

_COORD_NAMES = ("K1", "K2", "K3", "g1", "g2", "g3")


@dataclass(frozen=True)
class ScalarFieldWithGradient:
    """A smooth function on the reduced space with its 6-gradient.

    value: state -> float; gradient: state -> (dK, dgamma) packed as a
    6-vector. The gamma part of the gradient only matters up to multiples of
    gamma, which the tables annihilate.
    """

    name: str
    value: Callable[[ReducedState], float]
    gradient: Callable[[ReducedState], np.ndarray]


@dataclass(frozen=True)
class BracketTable:
    """State-dependent antisymmetric coefficient matrix with derivatives.

    coeffs(s) returns the 6x6 matrix Lambda(s); coeff_derivs(s) returns the
    6x6x6 tensor D with D[i, j, l] = d Lambda_ij / d z_l. Custom evaluator
    pairs may be supplied to certify third-party brackets with the same
    machinery.
    """

    variant: str
    coeffs: Callable[[ReducedState], np.ndarray]
    coeff_derivs: Callable[[ReducedState], np.ndarray]


def _assemble(S: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    lam = np.zeros((6, 6))
    lam[:3, :3] = hat(S)
    hg = hat(gamma)
    lam[:3, 3:] = hg
    lam[3:, :3] = hg
    return lam


def _s_vector(p: SphereParams, K, gamma, variant: str):
    omega, w3 = _omega_w3_raw(p, K, gamma)
    if variant == "standard":
        return K + p.mr2 * (omega - w3 * gamma)
    return K - (p.mr2 * w3) * gamma


def _s_jacobian(p: SphereParams, K, gamma, variant: str) -> np.ndarray:
    """3x6 Jacobian of the S vector in (K, gamma)."""
    ainv = p.a_inv_diag
    mr2 = p.mr2
    aig = ainv * gamma
    y = 1.0 - mr2 * float(gamma @ aig)
    w3 = float(K @ aig) / y
    omega = ainv * K + (mr2 * w3) * aig

    dw3_dK = aig / y
    dw3_dg = (ainv * K + (2.0 * mr2 * w3) * aig) / y

    eye = np.eye(3)
    jac = np.zeros((3, 6))
    if variant == "standard":
        dw_dK = np.diag(ainv) + mr2 * np.outer(aig, aig) / y
        dw_dg = mr2 * (np.outer(aig, dw3_dg) + w3 * np.diag(ainv))
        jac[:, :3] = eye + mr2 * (dw_dK - np.outer(gamma, dw3_dK))
        jac[:, 3:] = mr2 * (dw_dg - np.outer(gamma, dw3_dg) - w3 * eye)
    else:
        jac[:, :3] = eye - mr2 * np.outer(gamma, dw3_dK)
        jac[:, 3:] = -mr2 * (np.outer(gamma, dw3_dg) + w3 * eye)
    return jac


def _coeffs(p: SphereParams, s: ReducedState, variant: str) -> np.ndarray:
    K, gamma = s.K, s.gamma
    if variant == "scaled":
        lam = _assemble(_s_vector(p, K, gamma, "affine"), gamma)
        return _mu_raw(p, gamma) * lam
    return _assemble(_s_vector(p, K, gamma, variant), gamma)


def _coeff_derivs(p: SphereParams, s: ReducedState, variant: str) -> np.ndarray:
    K, gamma = s.K, s.gamma
    base = "affine" if variant == "scaled" else variant
    sjac = _s_jacobian(p, K, gamma, base)

    deriv = np.zeros((6, 6, 6))
    eye = np.eye(3)
    for l in range(6):
        deriv[:3, :3, l] = hat(sjac[:, l])
    for n in range(3):
        hen = hat(eye[n])
        deriv[:3, 3:, 3 + n] = hen
        deriv[3:, :3, 3 + n] = hen

    if variant == "scaled":
        lam = _assemble(_s_vector(p, K, gamma, "affine"), gamma)
        mu = _mu_raw(p, gamma)
        dmu_dg = -(p.mr2 / mu) * (p.a_inv_diag * gamma)
        deriv *= mu
        for n in range(3):
            deriv[:, :, 3 + n] += dmu_dg[n] * lam
    return deriv


def standard_coeffs(p: SphereParams, s: ReducedState) -> np.ndarray:
    """Table of the reduced standard bracket: S = K + m r^2 (w - w3 gamma)."""
    return _coeffs(p, s, "standard")


def affine_coeffs(p: SphereParams, s: ReducedState) -> np.ndarray:
    """Table of the reduced affine bracket: S = K - m r^2 w3 gamma."""
    return _coeffs(p, s, "affine")


def scaled_coeffs(p: SphereParams, s: ReducedState) -> np.ndarray:
    """mu(gamma) times the affine table; this one is genuinely Poisson."""
    return _coeffs(p, s, "scaled")


def bracket_table(p: SphereParams, variant: str) -> BracketTable:
    """Built-in table for one of the variants in :data:`VARIANTS`."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown bracket variant {variant!r}, expected one of {VARIANTS}")
    return BracketTable(
        variant=variant,
        coeffs=lambda s, _p=p, _v=variant: _coeffs(_p, s, _v),
        coeff_derivs=lambda s, _p=p, _v=variant: _coeff_derivs(_p, s, _v),
    )


def bracket_eval(table: BracketTable, f: ScalarFieldWithGradient,
                 g: ScalarFieldWithGradient, s: ReducedState) -> float:
    """{f, g}(s) = grad(f) . Lambda(s) grad(g)."""
    lam = table.coeffs(s)
    return float(f.gradient(s) @ lam @ g.gradient(s))


def ham_vector_field(table: BracketTable, f: ScalarFieldWithGradient,
                     s: ReducedState) -> np.ndarray:
    """Almost-Hamiltonian vector field of f: component i is {z_i, f}(s).

    Equals Lambda(s) grad(f); the gamma components are automatically tangent
    to the sphere.
    """
    return table.coeffs(s) @ f.gradient(s)


def jacobiator(table: BracketTable, i: int, j: int, k: int, s: ReducedState) -> float:
    """Cyclic Jacobi defect {z_i,{z_j,z_k}} + {z_j,{z_k,z_i}} + {z_k,{z_i,z_j}}.

    Coordinate indices are 0-based positions in (K1, K2, K3, g1, g2, g3).
    Uses the analytic coefficient derivatives.
    """
    for idx in (i, j, k):
        if not 0 <= idx <= 5:
            raise ValueError(f"coordinate index {idx} out of range 0..5")
    lam = table.coeffs(s)
    deriv = table.coeff_derivs(s)
    total = 0.0
    for a, b, c in ((i, j, k), (j, k, i), (k, i, j)):
        total += float(lam[a] @ deriv[b, c])
    return total


def jacobiator_tensor(table: BracketTable, s: ReducedState) -> np.ndarray:
    """All Jacobiator components at once, as the antisymmetric 6x6x6 tensor."""
    lam = table.coeffs(s)
    deriv = table.coeff_derivs(s)
    t = np.einsum("il,jkl->ijk", lam, deriv)
    return t + np.transpose(t, (1, 2, 0)) + np.transpose(t, (2, 0, 1))


def jacobiator_max(table: BracketTable, s: ReducedState) -> float:
    """Largest |Jacobiator| over all coordinate triples at one state."""
    return float(np.abs(jacobiator_tensor(table, s)).max())


def coordinate_name(i: int) -> str:
    return _COORD_NAMES[i]


# Built-in scalar fields.

def energy_field(p: SphereParams) -> ScalarFieldWithGradient:
    """The reduced Hamiltonian as a bracket-ready field."""

    def value(s: ReducedState) -> float:
        omega, _ = _omega_w3_raw(p, s.K, s.gamma)
        return 0.5 * float(s.K @ omega)

    def gradient(s: ReducedState) -> np.ndarray:
        omega, w3 = _omega_w3_raw(p, s.K, s.gamma)
        return np.concatenate([omega, (p.mr2 * w3) * (omega - w3 * s.gamma)])

    return ScalarFieldWithGradient("H", value, gradient)


def momentum_square_field() -> ScalarFieldWithGradient:
    """J = |K|^2 / 2, in involution with H under every variant."""
    return ScalarFieldWithGradient(
        "J",
        lambda s: 0.5 * float(s.K @ s.K),
        lambda s: np.concatenate([s.K, np.zeros(3)]),
    )


def vertical_momentum_field() -> ScalarFieldWithGradient:
    """K . gamma, a Casimir of the affine and scaled tables."""
    return ScalarFieldWithGradient(
        "Kgamma",
        lambda s: float(s.K @ s.gamma),
        lambda s: np.concatenate([s.gamma, s.K]),
    )


def gamma_square_field() -> ScalarFieldWithGradient:
    """|gamma|^2, a Casimir of all three tables."""
    return ScalarFieldWithGradient(
        "gnorm",
        lambda s: float(s.gamma @ s.gamma),
        lambda s: np.concatenate([np.zeros(3), 2.0 * s.gamma]),
    )
