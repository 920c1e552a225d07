"""Two-level propagator algebra.

Unitaries are plain ``(2, 2)`` complex numpy arrays; the helpers here build
them from a Cayley-Klein parametrization or from a rotation angle and axis,
multiply them in pulse order and pull the parameters back out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def wrap_pi(angle):
    """Wrap an angle (or array of angles) to the interval (-pi, pi]."""
    wrapped = np.pi - np.mod(np.pi - np.asarray(angle, dtype=float), TWO_PI)
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


def wrap_2pi(angle):
    """Wrap an angle (or array of angles) to the interval [0, 2*pi)."""
    wrapped = np.mod(np.asarray(angle, dtype=float), TWO_PI)
    # np.mod can round tiny negative inputs up to exactly 2*pi
    wrapped = np.where(wrapped >= TWO_PI, 0.0, wrapped)
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


def angle_distance(a, b):
    """Absolute difference of two angles modulo 2*pi, in [0, pi]."""
    return np.abs(wrap_pi(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)))


@dataclass(frozen=True)
class CayleyKlein:
    """Single-pulse propagator parameters.

    ``eps`` is the deviation from an ideal population swap (0 means a perfect
    pi pulse), ``alpha`` the dynamical phase on the diagonal and ``beta`` the
    off-diagonal phase. ``alpha`` is ``None`` when it cannot be recovered
    (``eps == 0``).
    """

    eps: float
    alpha: Optional[float] = 0.0
    beta: float = 0.0


@dataclass(frozen=True)
class RotationParams:
    theta: float
    axis: tuple[float, float, float]

    def __post_init__(self):
        norm = math.sqrt(sum(c * c for c in self.axis))
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"rotation axis must be a unit vector, got norm {norm!r}")


def is_unitary(u: np.ndarray, tol: float = 1e-10) -> bool:
    u = np.asarray(u)
    return bool(np.max(np.abs(u.conj().T @ u - IDENTITY)) <= tol)


def unitarity_error(u: np.ndarray) -> float:
    u = np.asarray(u)
    return float(np.max(np.abs(u.conj().T @ u - IDENTITY)))


def from_cayley_klein(p: CayleyKlein, phi: float = 0.0) -> np.ndarray:
    """Propagator of one pulse with extra drive phase ``phi``.

    Returns ``[[eps e^{i alpha}, s e^{i phi'}], [-s e^{-i phi'}, eps e^{-i alpha}]]``
    with ``s = sqrt(1 - eps^2)`` and ``phi' = phi + beta``. Negative ``eps`` is
    accepted so the odd-in-eps structure of composite products can be probed.
    """
    eps = float(p.eps)
    if abs(eps) > 1.0:
        raise ValueError(f"|eps| must not exceed 1, got {eps!r}")
    alpha = 0.0 if p.alpha is None else float(p.alpha)
    s = math.sqrt(max(0.0, 1.0 - eps * eps))
    off = s * complex(math.cos(phi + p.beta), math.sin(phi + p.beta))
    diag = eps * complex(math.cos(alpha), math.sin(alpha))
    return np.array([[diag, off], [-off.conjugate(), diag.conjugate()]], dtype=complex)


def to_cayley_klein(u: np.ndarray, tol: float = 1e-10) -> tuple[CayleyKlein, Optional[float]]:
    """Invert :func:`from_cayley_klein`.

    Returns ``(params, phi)`` with ``params.beta == 0``. ``params.alpha`` is
    ``None`` for an ideal swap (``eps < 1e-14``) and ``phi`` is ``None`` when
    the off-diagonal vanishes (``eps > 1 - 1e-14``).
    """
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {u.shape}")
    if not is_unitary(u, tol):
        raise ValueError(f"matrix is not unitary (error {unitarity_error(u):.3g})")
    eps = min(1.0, float(abs(u[0, 0])))
    alpha = float(np.angle(u[0, 0])) if eps >= 1e-14 else None
    phi = float(np.angle(u[0, 1])) if eps <= 1.0 - 1e-14 else None
    return CayleyKlein(eps=eps, alpha=alpha), phi


def rotation_unitary(r: RotationParams) -> np.ndarray:
    """``cos(theta/2) 1 - i sin(theta/2) (n . sigma)``."""
    nx, ny, nz = r.axis
    c = math.cos(r.theta / 2.0)
    s = math.sin(r.theta / 2.0)
    return np.array(
        [[c - 1j * s * nz, -1j * s * (nx - 1j * ny)],
         [-1j * s * (nx + 1j * ny), c + 1j * s * nz]],
        dtype=complex,
    )


def ordered_product(factors: Iterable[np.ndarray]) -> np.ndarray:
    """Composite propagator ``U_N ... U_2 U_1`` (first factor acts first)."""
    total = None
    for u in factors:
        total = np.asarray(u, dtype=complex) if total is None else np.asarray(u) @ total
    if total is None:
        raise ValueError("ordered_product needs at least one factor")
    return total


def diagonal_phase_gate(phi: float) -> np.ndarray:
    return np.diag([np.exp(0.5j * phi), np.exp(-0.5j * phi)])


def relative_phase(u: np.ndarray) -> float:
    """Relative phase ``arg(u11 / u22)`` of a (near-)diagonal unitary, in (-pi, pi]."""
    return float(np.angle(u[0, 0] * np.conj(u[1, 1])))


def conjugate_by_z(u: np.ndarray, phi: float) -> np.ndarray:
    """Return ``Rz U Rz^dag`` with ``Rz = diag(e^{i phi/2}, e^{-i phi/2})``.

    Shifting the drive phase by ``phi`` acts on a pulse propagator this way.
    Works on stacked arrays of shape ``(..., 2, 2)``.
    """
    out = np.array(u, dtype=complex, copy=True)
    e = np.exp(1j * phi)
    out[..., 0, 1] *= e
    out[..., 1, 0] *= np.conj(e)
    return out


def unitary_error_stack(u: np.ndarray) -> np.ndarray:
    """Elementwise unitarity error for a stack ``(..., 2, 2)``."""
    prod = np.conj(np.swapaxes(u, -1, -2)) @ u
    return np.max(np.abs(prod - IDENTITY), axis=(-1, -2))


def multiply_stack(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Batched ``a @ b`` for ``(..., 2, 2)`` arrays, written out elementwise.

    Explicit products keep the result bit-identical no matter how the batch
    is chunked.
    """
    out = np.empty(np.broadcast_shapes(a.shape, b.shape), dtype=complex)
    out[..., 0, 0] = a[..., 0, 0] * b[..., 0, 0] + a[..., 0, 1] * b[..., 1, 0]
    out[..., 0, 1] = a[..., 0, 0] * b[..., 0, 1] + a[..., 0, 1] * b[..., 1, 1]
    out[..., 1, 0] = a[..., 1, 0] * b[..., 0, 0] + a[..., 1, 1] * b[..., 1, 0]
    out[..., 1, 1] = a[..., 1, 0] * b[..., 0, 1] + a[..., 1, 1] * b[..., 1, 1]
    return out


def as_unit_axis(vector: Sequence[float]) -> tuple[float, float, float]:
    v = np.asarray(vector, dtype=float)
    return tuple(float(c) for c in v / np.linalg.norm(v))
