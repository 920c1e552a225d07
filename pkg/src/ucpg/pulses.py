"""Physical pulse propagators under amplitude and detuning errors.

Time is measured in units of the pulse duration ``T`` and the nominal Rabi
frequency is ``Omega_0 = A / T``. During a pulse with phase ``phi`` the
Hamiltonian is

    H = 1/2 [[-Delta, Omega e^{i phi}], [Omega e^{-i phi}, Delta]]

with ``Omega = Omega_0 (1 + eps_a) g(t)`` and ``Delta = delta Omega_0``. The
drive phase only conjugates the propagator by a z rotation, so every routine
computes the ``phi = 0`` propagator and rotates it per pulse.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.special import erf

from .design import PhaseSequence
from .su2 import RotationParams, conjugate_by_z, multiply_stack, rotation_unitary, unitary_error_stack

RECTANGULAR = "rectangular"
GAUSSIAN = "truncated-gaussian"


class UnitarityWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ErrorPoint:
    eps_a: float = 0.0
    delta: float = 0.0

    def __post_init__(self):
        if not self.eps_a > -1.0:
            raise ValueError(f"eps_a must exceed -1, got {self.eps_a!r}")


@dataclass(frozen=True)
class PulseEnvelope:
    """Rabi-frequency profile of a single pulse.

    ``sigma_fraction`` and ``truncation_sigmas`` only matter for the truncated
    Gaussian, whose shape is scaled to unit time average over the pulse so
    the integrated area stays ``nominal_area * (1 + eps_a)``.
    """

    kind: str = RECTANGULAR
    nominal_area: float = math.pi
    sigma_fraction: float = 0.18
    truncation_sigmas: float = 2.5

    def __post_init__(self):
        if self.kind not in (RECTANGULAR, GAUSSIAN):
            raise ValueError(f"unknown envelope kind {self.kind!r}")
        if not self.nominal_area > 0:
            raise ValueError("nominal_area must be positive")
        if self.kind == GAUSSIAN and not (self.sigma_fraction > 0 and self.truncation_sigmas > 0):
            raise ValueError("Gaussian width and truncation must be positive")

    @classmethod
    def rectangular(cls, nominal_area: float = math.pi) -> "PulseEnvelope":
        return cls(RECTANGULAR, nominal_area)

    @classmethod
    def gaussian(cls, nominal_area: float = math.pi, sigma_fraction: float = 0.18,
                 truncation_sigmas: float = 2.5) -> "PulseEnvelope":
        return cls(GAUSSIAN, nominal_area, sigma_fraction, truncation_sigmas)

    def window(self) -> tuple[float, float]:
        """Support of the envelope within ``[0, 1]``."""
        if self.kind == RECTANGULAR:
            return 0.0, 1.0
        half = self.truncation_sigmas * self.sigma_fraction
        return max(0.0, 0.5 - half), min(1.0, 0.5 + half)

    def normalization(self) -> float:
        """Time average over ``[0, 1]`` of the bare truncated Gaussian (closed form)."""
        if self.kind == RECTANGULAR:
            return 1.0
        a, b = self.window()
        s = self.sigma_fraction
        root2 = math.sqrt(2.0)
        return s * math.sqrt(math.pi / 2.0) * (erf((b - 0.5) / (s * root2)) - erf((a - 0.5) / (s * root2)))

    def shape(self, t):
        """Normalized envelope ``g(t)`` with unit mean over ``[0, 1]``."""
        t = np.asarray(t, dtype=float)
        if self.kind == RECTANGULAR:
            return np.where((t >= 0) & (t <= 1), 1.0, 0.0)
        a, b = self.window()
        g = np.exp(-0.5 * ((t - 0.5) / self.sigma_fraction) ** 2) / self.normalization()
        return np.where((t >= a) & (t <= b), g, 0.0)

    def describe(self) -> dict:
        d = asdict(self)
        if self.kind == RECTANGULAR:
            d.pop("sigma_fraction")
            d.pop("truncation_sigmas")
        return d


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step RK4 settings; the steps span the nonzero part of the envelope."""

    steps_per_pulse: int = 2000
    method: str = "rk4"

    def __post_init__(self):
        if self.method != "rk4":
            raise ValueError(f"unsupported integrator {self.method!r}")
        if int(self.steps_per_pulse) < 100:
            raise ValueError("steps_per_pulse must be at least 100")


def _rect_stack(area: float, eps_a: np.ndarray, delta: np.ndarray) -> np.ndarray:
    """Closed-form propagator at ``phi = 0`` for arrays of error points."""
    a = 1.0 + eps_a
    r = np.sqrt(a * a + delta * delta)
    theta = area * r
    safe = np.where(r > 0, r, 1.0)
    nx = np.where(r > 0, a / safe, 1.0)
    nz = np.where(r > 0, -delta / safe, 0.0)
    c = np.cos(theta / 2.0)
    s = np.sin(theta / 2.0)
    out = np.empty(np.shape(theta) + (2, 2), dtype=complex)
    out[..., 0, 0] = c - 1j * s * nz
    out[..., 0, 1] = -1j * s * nx
    out[..., 1, 0] = -1j * s * nx
    out[..., 1, 1] = c + 1j * s * nz
    return out


def _free_evolution(detuning: np.ndarray, duration: float) -> np.ndarray:
    """Propagator of ``H = -Delta sigma_z / 2`` over ``duration``."""
    out = np.zeros(np.shape(detuning) + (2, 2), dtype=complex)
    out[..., 0, 0] = np.exp(0.5j * detuning * duration)
    out[..., 1, 1] = np.exp(-0.5j * detuning * duration)
    return out


def _rk4_stack(env: PulseEnvelope, eps_a: np.ndarray, delta: np.ndarray, steps: int) -> np.ndarray:
    """RK4 propagator at ``phi = 0`` for a shaped pulse, vectorized over error points.

    Zero-field stretches outside the truncation window evolve in closed form.
    """
    area = env.nominal_area
    det = delta * area
    amp = area * (1.0 + eps_a)
    t0, t1 = env.window()
    h = (t1 - t0) / steps
    shape = np.shape(eps_a)
    # U' = -i H U with H = 1/2 [[-det, w], [w, det]], state kept per component
    u11 = np.ones(shape, dtype=complex)
    u12 = np.zeros(shape, dtype=complex)
    u21 = np.zeros(shape, dtype=complex)
    u22 = np.ones(shape, dtype=complex)
    hd = 0.5 * det
    times = t0 + h * np.arange(steps + 1)
    g_nodes = env.shape(times)
    g_mid = env.shape(times[:-1] + 0.5 * h)
    # endpoints are inside the closed window, keep the one-sided limits
    g_nodes[0] = env.shape(t0)
    g_nodes[-1] = env.shape(t1)

    def deriv(a11, a12, a21, a22, w):
        hw = 0.5 * w
        return (-1j * (-hd * a11 + hw * a21), -1j * (-hd * a12 + hw * a22),
                -1j * (hw * a11 + hd * a21), -1j * (hw * a12 + hd * a22))

    for n in range(steps):
        w0 = amp * g_nodes[n]
        wm = amp * g_mid[n]
        w1 = amp * g_nodes[n + 1]
        k1 = deriv(u11, u12, u21, u22, w0)
        k2 = deriv(u11 + 0.5 * h * k1[0], u12 + 0.5 * h * k1[1], u21 + 0.5 * h * k1[2], u22 + 0.5 * h * k1[3], wm)
        k3 = deriv(u11 + 0.5 * h * k2[0], u12 + 0.5 * h * k2[1], u21 + 0.5 * h * k2[2], u22 + 0.5 * h * k2[3], wm)
        k4 = deriv(u11 + h * k3[0], u12 + h * k3[1], u21 + h * k3[2], u22 + h * k3[3], w1)
        u11 = u11 + (h / 6.0) * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
        u12 = u12 + (h / 6.0) * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
        u21 = u21 + (h / 6.0) * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
        u22 = u22 + (h / 6.0) * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3])

    core = np.empty(shape + (2, 2), dtype=complex)
    core[..., 0, 0] = u11
    core[..., 0, 1] = u12
    core[..., 1, 0] = u21
    core[..., 1, 1] = u22
    out = core
    if t0 > 0.0:
        out = multiply_stack(out, _free_evolution(det, t0))
    if t1 < 1.0:
        out = multiply_stack(_free_evolution(det, 1.0 - t1), out)
    return out


def _check_errors(eps_a: np.ndarray) -> None:
    if np.any(~(eps_a > -1.0)):
        raise ValueError("eps_a must exceed -1 at every error point")


def base_pulse_stack(env: PulseEnvelope, eps_a, delta, cfg: Optional[IntegratorConfig] = None) -> np.ndarray:
    """Single-pulse propagators at drive phase 0 for broadcast arrays ``eps_a``, ``delta``."""
    eps_a, delta = np.broadcast_arrays(np.asarray(eps_a, dtype=float), np.asarray(delta, dtype=float))
    _check_errors(eps_a)
    if env.kind == RECTANGULAR:
        return _rect_stack(env.nominal_area, eps_a, delta)
    cfg = cfg or IntegratorConfig()
    out = _rk4_stack(env, eps_a, delta, int(cfg.steps_per_pulse))
    drift = float(np.max(unitary_error_stack(out))) if out.size else 0.0
    if drift > 1e-7:
        warnings.warn(f"shaped-pulse propagator drifts from unitarity by {drift:.2e}; "
                      "increase steps_per_pulse", UnitarityWarning, stacklevel=2)
    return out


def rect_pulse_propagator(phase: float, env: PulseEnvelope, err: ErrorPoint) -> np.ndarray:
    """Closed-form rotation for a rectangular pulse.

    Angle ``theta = A sqrt((1+eps_a)^2 + delta^2)`` about the axis
    ``((1+eps_a) cos phi, -(1+eps_a) sin phi, -delta) / sqrt(...)``, the axis
    of the Hamiltonian matrix above. A vanishing field gives the identity.
    """
    if env.kind != RECTANGULAR:
        raise ValueError("rect_pulse_propagator needs a rectangular envelope")
    a = 1.0 + err.eps_a
    r = math.hypot(a, err.delta)
    if r == 0.0:
        return np.eye(2, dtype=complex)
    axis = (a * math.cos(phase) / r, -a * math.sin(phase) / r, -err.delta / r)
    return rotation_unitary(RotationParams(theta=env.nominal_area * r, axis=axis))


def shaped_pulse_propagator(phase: float, env: PulseEnvelope, err: ErrorPoint,
                            cfg: Optional[IntegratorConfig] = None) -> np.ndarray:
    if env.kind != GAUSSIAN:
        raise ValueError("shaped_pulse_propagator needs a truncated-gaussian envelope")
    base = base_pulse_stack(env, np.array([err.eps_a]), np.array([err.delta]), cfg)[0]
    return conjugate_by_z(base, phase)


def pulse_propagator(phase: float, env: PulseEnvelope, err: ErrorPoint,
                     cfg: Optional[IntegratorConfig] = None) -> np.ndarray:
    if env.kind == RECTANGULAR:
        return rect_pulse_propagator(phase, env, err)
    return shaped_pulse_propagator(phase, env, err, cfg)


def compose_stack(phases, base: np.ndarray) -> np.ndarray:
    """Composite propagators ``U(phi_N) ... U(phi_1)`` from a phase-0 pulse stack."""
    total = None
    for phi in phases:
        u = conjugate_by_z(base, float(phi))
        total = u if total is None else multiply_stack(u, total)
    if total is None:
        raise ValueError("empty phase list")
    return total


def composite_propagator(seq: PhaseSequence, env: PulseEnvelope, err: ErrorPoint,
                         cfg: Optional[IntegratorConfig] = None) -> np.ndarray:
    """Gate propagator with the same error point applied to every pulse."""
    base = base_pulse_stack(env, np.array([err.eps_a]), np.array([err.delta]), cfg)
    return compose_stack(seq.phases, base)[0]


def composite_grid(seq: PhaseSequence, env: PulseEnvelope, eps_a, delta,
                   cfg: Optional[IntegratorConfig] = None) -> np.ndarray:
    """Composite propagators over broadcast arrays of error coordinates."""
    return compose_stack(seq.phases, base_pulse_stack(env, eps_a, delta, cfg))


@lru_cache(maxsize=8)
def _cached_base(env: PulseEnvelope, eps_key: bytes, delta_key: bytes, shape: tuple,
                 cfg: Optional[IntegratorConfig]) -> np.ndarray:
    eps_a = np.frombuffer(eps_key, dtype=float).reshape(shape)
    delta = np.frombuffer(delta_key, dtype=float).reshape(shape)
    out = base_pulse_stack(env, eps_a, delta, cfg)
    out.setflags(write=False)
    return out


def cached_base_stack(env: PulseEnvelope, eps_a: np.ndarray, delta: np.ndarray,
                      cfg: Optional[IntegratorConfig] = None) -> np.ndarray:
    """Memoized :func:`base_pulse_stack`; shaped integrations are shared across sequences."""
    eps_a, delta = np.broadcast_arrays(np.asarray(eps_a, dtype=float), np.asarray(delta, dtype=float))
    eps_a = np.ascontiguousarray(eps_a)
    delta = np.ascontiguousarray(delta)
    if env.kind == RECTANGULAR:
        cfg = None
    return _cached_base(env, eps_a.tobytes(), delta.tobytes(), eps_a.shape, cfg)
