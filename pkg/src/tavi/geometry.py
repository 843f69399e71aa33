"""Fixed-size SO(3) primitives.

Vectors in R^3 are length-3 float arrays and matrices are 3x3 float arrays.
Rotations are plain 3x3 arrays; :func:`as_rotation` validates one on entry,
after which steppers compose them without re-projecting (drift is measured
with :func:`orthogonality_error`, never corrected).
"""
from __future__ import annotations

import math

import numpy as np

from .errors import NoConvergence, NotRotation, NotSkew, StepTooLarge

SMALL_ANGLE = 1e-8
SKEW_TOL = 1e-9
ROTATION_TOL = 1e-9

_I3 = np.eye(3)


def hat(v) -> np.ndarray:
    """Skew matrix S with ``S @ w == cross(v, w)``."""
    x, y, z = float(v[0]), float(v[1]), float(v[2])
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def vee(s) -> np.ndarray:
    """Inverse of :func:`hat`; reads the canonical entries (2,1), (0,2), (1,0)."""
    s = np.asarray(s, dtype=float)
    if s.shape != (3, 3):
        raise NotSkew(f"expected a 3x3 matrix, got shape {s.shape}")
    asym = np.linalg.norm(s + s.T)
    if not asym <= SKEW_TOL:
        raise NotSkew(f"matrix is not skew: |S + S^T|_F = {asym:.3e}")
    return np.array([s[2, 1], s[0, 2], s[1, 0]])


def rodrigues_exp(v) -> np.ndarray:
    """Matrix exponential of ``hat(v)`` via the axis-angle closed form."""
    x, y, z = float(v[0]), float(v[1]), float(v[2])
    theta2 = x * x + y * y + z * z
    theta = math.sqrt(theta2)
    if theta < SMALL_ANGLE:
        # second-order series; the dropped terms are O(theta^3) < 1e-24
        a, b = 1.0, 0.5
    else:
        a = math.sin(theta) / theta
        b = (1.0 - math.cos(theta)) / theta2
    k = hat((x, y, z))
    return _I3 + a * k + b * (k @ k)


def asin_step_map(a) -> np.ndarray:
    """Rotation by angle ``asin(|a|)`` about ``a / |a|``.

    This is the closed-form solve of the implicit SO(3) momentum equation with
    unit inertia: the returned ``F`` satisfies ``vee((F - F^T) / 2) == a``.

    Raises
    ------
    StepTooLarge
        If ``|a| >= 1``; no rotation has ``sin(theta) = |a|`` then, and the
        fictive step has to be reduced.
    """
    a = np.asarray(a, dtype=float)
    n = math.sqrt(float(a @ a))
    if not n < 1.0:
        raise StepTooLarge(f"|a| = {n!r} >= 1: reduce the fictive step h", norm=n)
    if n < SMALL_ANGLE:
        return rodrigues_exp(a)
    return rodrigues_exp((math.asin(n) / n) * a)


def svd3(a):
    """Singular value decomposition ``a = U @ diag(s) @ V.T``.

    Returns ``(U, s, V)`` with ``s`` sorted descending. Backed by LAPACK; the
    contract checked here is the reconstruction bound, not the algorithm.
    """
    a = np.asarray(a, dtype=float)
    if a.shape != (3, 3) or not np.all(np.isfinite(a)):
        raise NoConvergence("svd3 needs a finite 3x3 matrix")
    try:
        u, s, vt = np.linalg.svd(a)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NoConvergence(str(exc)) from exc
    resid = np.linalg.norm(u @ np.diag(s) @ vt - a)
    if not resid <= 1e-10 * (1.0 + np.linalg.norm(a)):
        raise NoConvergence(f"svd3 reconstruction residual {resid:.3e}")
    return u, s, vt.T


def orthogonality_error(r) -> float:
    """Frobenius norm of ``R^T R - I``."""
    r = np.asarray(r, dtype=float)
    return float(np.linalg.norm(r.T @ r - _I3))


def as_rotation(m, tol: float = ROTATION_TOL) -> np.ndarray:
    """Validate ``m`` as an element of SO(3) and return it as a float array."""
    m = np.array(m, dtype=float)
    if m.shape != (3, 3) or not np.all(np.isfinite(m)):
        raise NotRotation("rotation must be a finite 3x3 matrix")
    err = orthogonality_error(m)
    if err > tol:
        raise NotRotation(f"|R^T R - I|_F = {err:.3e} exceeds {tol:g}")
    det = np.linalg.det(m)
    if abs(det - 1.0) > tol:
        raise NotRotation(f"det(R) = {det!r} is not 1")
    return m
