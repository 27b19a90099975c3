"""Rotation-group utilities: hat map, Levi-Civita symbol, Rodrigues
exponential, polar reorthonormalization, and the vertical (Poisson) vector.

Conventions: rotations act on the left (space = g @ body), and the vertical
unit vector in body coordinates is the third *row* of g.
"""

from __future__ import annotations

import numpy as np

# Series fallback below this angle avoids dividing by a vanishing norm.
_SMALL_ANGLE = 1e-8


def hat(v) -> np.ndarray:
    """Skew matrix of a 3-vector, with hat(v) @ w == cross(v, w)."""
    v = np.asarray(v, dtype=float)
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def unhat(w) -> np.ndarray:
    """Inverse of :func:`hat`. Exact on skew matrices (reads one triangle)."""
    w = np.asarray(w, dtype=float)
    return np.array([w[2, 1], w[0, 2], w[1, 0]])


def levi_civita(i: int, j: int, l: int) -> int:
    """Totally antisymmetric symbol with levi_civita(0, 1, 2) == +1.

    Indices are 0-based (axis numbers). Raises ValueError if any index is
    outside {0, 1, 2}.
    """
    for idx in (i, j, l):
        if idx not in (0, 1, 2):
            raise ValueError(f"index {idx} out of range, expected 0, 1 or 2")
    if i == j or j == l or i == l:
        return 0
    if (i, j, l) in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        return 1
    return -1


def exp_rotation(v) -> np.ndarray:
    """Rotation matrix exp(hat(v)) by the Rodrigues formula.

    For angles below 1e-8 the sin(t)/t and (1-cos(t))/t^2 factors are
    replaced by their series to avoid the small-angle division.
    """
    v = np.asarray(v, dtype=float)
    theta = float(np.linalg.norm(v))
    w = hat(v)
    if theta < _SMALL_ANGLE:
        a = 1.0 - theta * theta / 6.0
        b = 0.5 - theta * theta / 24.0
    else:
        a = np.sin(theta) / theta
        b = (1.0 - np.cos(theta)) / (theta * theta)
    return np.eye(3) + a * w + b * (w @ w)


def reorthonormalize(g) -> np.ndarray:
    """Closest rotation to g in the Frobenius norm (polar projection).

    Raises ValueError when g is farther than 0.1 from SO(3); the routine is
    meant for drift repair, not for projecting arbitrary matrices.
    """
    g = np.asarray(g, dtype=float)
    u, _, vt = np.linalg.svd(g)
    d = np.sign(np.linalg.det(u @ vt))
    rot = u @ np.diag([1.0, 1.0, d]) @ vt
    if np.linalg.norm(g - rot) > 0.1:
        raise ValueError("matrix too far from SO(3) for drift repair")
    return rot


def poisson_vector(g) -> np.ndarray:
    """Vertical unit vector in body coordinates: the third row of g.

    The caller is responsible for g being a rotation; for such g the result
    is a unit vector, invariant under left multiplication by rotations about
    the vertical axis.
    """
    g = np.asarray(g, dtype=float)
    return g[2, :].copy()


def is_rotation(g, tol: float = 1e-9) -> bool:
    """True when g^T g = E and det g = 1 within tol."""
    g = np.asarray(g, dtype=float)
    if g.shape != (3, 3) or not np.all(np.isfinite(g)):
        return False
    return (np.abs(g.T @ g - np.eye(3)).max() <= tol
            and abs(np.linalg.det(g) - 1.0) <= tol)
