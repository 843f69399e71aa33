"""Benchmark objectives with exact gradients and finite-difference checks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .errors import DimensionMismatch, TaviError
from .geometry import as_rotation, rodrigues_exp, svd3, vee

_MASK64 = (1 << 64) - 1


@dataclass
class Objective:
    """A differentiable function on R^d."""

    f: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    dim: int
    f_star: Optional[float] = None
    name: str = "objective"


@dataclass
class So3Objective:
    """A differentiable function on SO(3) with its left-trivialized gradient."""

    f: Callable[[np.ndarray], float]
    grad_left: Callable[[np.ndarray], np.ndarray]
    f_star: Optional[float] = None
    r_star: Optional[np.ndarray] = None
    name: str = "so3-objective"
    data: dict = field(default_factory=dict)


# -- quartic ------------------------------------------------------------------


@dataclass(frozen=True)
class QuarticSpec:
    dim: int

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise DimensionMismatch(f"quartic dimension must be a positive integer, got {self.dim!r}")

    @property
    def sigma(self) -> np.ndarray:
        idx = np.arange(self.dim)
        return 0.9 ** np.abs(idx[:, None] - idx[None, :])


def _shifted(x, spec: QuarticSpec) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.dim,):
        raise DimensionMismatch(f"expected a vector of length {spec.dim}, got shape {x.shape}")
    return x - 1.0


def quartic_eval(x, spec: QuarticSpec) -> float:
    """``[(x-1)^T S (x-1)]^2`` with ``S_ij = 0.9**|i-j|``; minimum 0 at x = 1."""
    y = _shifted(x, spec)
    s = float(y @ spec.sigma @ y)
    return s * s


def quartic_grad(x, spec: QuarticSpec) -> np.ndarray:
    y = _shifted(x, spec)
    sy = spec.sigma @ y
    return 4.0 * float(y @ sy) * sy


def quartic_objective(dim: int) -> Objective:
    spec = QuarticSpec(dim)
    sigma = spec.sigma

    # closures reuse one sigma; the module-level functions rebuild it per call
    def f(x):
        y = _shifted(x, spec)
        s = float(y @ sigma @ y)
        return s * s

    def grad(x):
        y = _shifted(x, spec)
        sy = sigma @ y
        return 4.0 * float(y @ sy) * sy

    return Objective(f=f, grad=grad, dim=dim, f_star=0.0, name=f"quartic-{dim}")


# -- Wahba's problem ----------------------------------------------------------


def wahba_eval(R, A) -> float:
    """``0.5 * |A - R|_F^2``."""
    d = np.asarray(A, dtype=float) - np.asarray(R, dtype=float)
    return 0.5 * float(np.sum(d * d))


def wahba_eval_trace(R, A) -> float:
    """Same value as :func:`wahba_eval`, via ``0.5(|A|^2 + 3) - tr(A^T R)``.

    Only equal to it when ``R`` is orthogonal.
    """
    A = np.asarray(A, dtype=float)
    return 0.5 * (float(np.sum(A * A)) + 3.0) - float(np.sum(A * np.asarray(R, dtype=float)))


def wahba_grad_left(R, A) -> np.ndarray:
    """Left-trivialized gradient ``(A^T R - R^T A)^vee``."""
    m = np.asarray(A, dtype=float).T @ np.asarray(R, dtype=float)
    return vee(m - m.T)


def wahba_optimal(A) -> np.ndarray:
    """Closed-form minimizer ``U diag(1, 1, det(U V)) V^T`` from ``A = U S V^T``."""
    u, _, v = svd3(A)
    d = np.linalg.det(u @ v)
    return as_rotation(u @ np.diag([1.0, 1.0, 1.0 if d > 0 else -1.0]) @ v.T, tol=1e-9)


def wahba_objective(A) -> So3Objective:
    A = np.array(A, dtype=float)
    if A.shape != (3, 3) or not np.all(np.isfinite(A)):
        raise DimensionMismatch("Wahba data matrix must be a finite 3x3 array")
    r_star = wahba_optimal(A)

    def f(R):
        d = A - R
        return 0.5 * float(np.sum(d * d))

    def grad_left(R):
        m = A.T @ R
        return vee(m - m.T)

    return So3Objective(
        f=f, grad_left=grad_left, f_star=f(r_star), r_star=r_star, name="wahba", data={"A": A}
    )


class SplitMix64:
    """splitmix64 stream; pure integer arithmetic, identical on every platform."""

    GAMMA = 0x9E3779B97F4A7C15

    def __init__(self, seed: int):
        self.state = int(seed) & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + self.GAMMA) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        # top 53 bits -> [0, 1) exactly representable
        u = (self.next_u64() >> 11) * (1.0 / (1 << 53))
        return lo + (hi - lo) * u


def random_wahba_matrix(seed: int) -> np.ndarray:
    """3x3 matrix with entries i.i.d. uniform on [-1, 1), row-major from splitmix64."""
    rng = SplitMix64(seed)
    return np.array([[rng.uniform(-1.0, 1.0) for _ in range(3)] for _ in range(3)])


def load_wahba_matrix(path) -> np.ndarray:
    """Read a 3-line, comma-separated 3x3 matrix."""
    rows = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if len(rows) != 3:
        raise TaviError(f"{path}: expected 3 non-empty lines, found {len(rows)}")
    try:
        m = np.array([[float(x) for x in row.split(",")] for row in rows])
    except ValueError as exc:
        raise TaviError(f"{path}: {exc}") from exc
    if m.shape != (3, 3) or not np.all(np.isfinite(m)):
        raise TaviError(f"{path}: expected 3 comma-separated finite values per line")
    return m


# -- gradient checks ----------------------------------------------------------


def fd_check_vector(obj: Objective, x) -> float:
    """Max deviation between ``obj.grad`` and central differences.

    Component ``i`` uses the step ``1e-6 * (1 + |x_i|)``; deviations are scaled
    by ``max(1, |grad|_inf)``.
    """
    x = np.asarray(x, dtype=float)
    g = np.asarray(obj.grad(x), dtype=float)
    fd = np.empty_like(x)
    for i in range(x.size):
        eps = 1e-6 * (1.0 + abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += eps
        xm[i] -= eps
        fd[i] = (obj.f(xp) - obj.f(xm)) / (xp[i] - xm[i])
    return float(np.max(np.abs(g - fd)) / max(1.0, float(np.max(np.abs(g)))))


def fd_check_so3(obj: So3Objective, R, eps: float = 1e-6) -> float:
    """Max deviation between ``grad_left`` and ``d/ds f(R exp(s e_i))`` at s = 0."""
    R = np.asarray(R, dtype=float)
    g = np.asarray(obj.grad_left(R), dtype=float)
    fd = np.empty(3)
    for i in range(3):
        e = np.zeros(3)
        e[i] = eps
        fd[i] = (obj.f(R @ rodrigues_exp(e)) - obj.f(R @ rodrigues_exp(-e))) / (2.0 * eps)
    return float(np.max(np.abs(g - fd)) / max(1.0, float(np.max(np.abs(g)))))


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Haar-uniform rotation from a unit quaternion."""
    q = rng.standard_normal(4)
    q /= math.sqrt(float(q @ q))
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


__all__ = [
    "Objective",
    "So3Objective",
    "QuarticSpec",
    "quartic_eval",
    "quartic_grad",
    "quartic_objective",
    "wahba_eval",
    "wahba_eval_trace",
    "wahba_grad_left",
    "wahba_optimal",
    "wahba_objective",
    "SplitMix64",
    "random_wahba_matrix",
    "load_wahba_matrix",
    "fd_check_vector",
    "fd_check_so3",
    "random_rotation",
]
