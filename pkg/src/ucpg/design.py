"""Analytic universal composite phase gates.

A gate is a list of ``N`` (even) nominal pi pulses. Pulse ``k`` (1-based)
carries the phase

    phi_k = (k - 1) Phi / N + (2 pi / N) (k - 1) (k - 2)   (mod 2 pi)

which yields the phase gate ``diag(e^{i Phi/2}, e^{-i Phi/2})`` in the ideal
limit and cancels the leakage element through order ``eps^(2m-1)``,
``m = N // 4``, for any dynamical phase.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .su2 import (
    TWO_PI,
    CayleyKlein,
    diagonal_phase_gate,
    from_cayley_klein,
    ordered_product,
    wrap_2pi,
    wrap_pi,
)

log = logging.getLogger(__name__)

ANALYTIC = "ucpg-analytic"
EXTERNAL = "external"
TWO_BLOCK = "two-block"

#: Largest N for which the phase law has been checked against the cancellation conditions.
VERIFIED_MAX_N = 26


class SequenceWarning(UserWarning):
    """Sequence is valid but degenerate (e.g. ``N = 2`` has no cancelled orders)."""


@dataclass(frozen=True)
class PhaseSequence:
    """Ordered pulse phases of a composite gate.

    ``target_phase`` is stored as requested (not reduced mod 2 pi); phases are
    wrapped to ``[0, 2 pi)`` with the first one fixed to zero.
    """

    phases: tuple[float, ...]
    target_phase: float
    family: str = EXTERNAL
    label: str = ""
    nominal_area: float = math.pi
    provenance: str = ""
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        phases = tuple(float(p) for p in wrap_2pi(np.asarray(self.phases, dtype=float)).ravel())
        if not phases:
            raise ValueError("a sequence needs at least one pulse")
        if phases[0] != 0.0:
            raise ValueError("first phase must be 0 (gauge convention); use PhaseSequence.gauge_fixed")
        object.__setattr__(self, "phases", phases)
        if not self.label:
            object.__setattr__(self, "label", f"{self.family}-N{len(phases)}")

    @property
    def n_pulses(self) -> int:
        return len(self.phases)

    @property
    def is_even(self) -> bool:
        return self.n_pulses % 2 == 0

    @property
    def target_phase_wrapped(self) -> float:
        return wrap_2pi(self.target_phase)

    @property
    def universality_order(self) -> int:
        """Number ``m`` of cancelled odd orders predicted by the phase law."""
        return self.n_pulses // 4

    @property
    def conjectured(self) -> bool:
        """True when the predicted order lies beyond the verified range ``N <= 26``."""
        return self.n_pulses > VERIFIED_MAX_N

    def phases_array(self) -> np.ndarray:
        return np.asarray(self.phases, dtype=float)

    def offset(self, phi0: float) -> np.ndarray:
        """Phases shifted by a common ``phi0`` (no gauge fix); used for gauge checks."""
        return wrap_2pi(self.phases_array() + phi0)

    def exact_phases(self, dps: int):
        """Phases as mpmath numbers at ``dps`` digits.

        Analytic sequences are re-evaluated from the phase law so that the
        cancelled orders vanish to the working precision rather than to the
        rounding of the stored doubles.
        """
        import mpmath

        with mpmath.workdps(dps):
            if self.family == ANALYTIC and self.is_even:
                law = wrap_2pi(analytic_phases(self.n_pulses, self.target_phase))
                if np.all(np.abs(wrap_pi(law - self.phases_array())) < 1e-9):
                    return [+p for p in _analytic_phases_mp(self.n_pulses, self.target_phase)]
            return [mpmath.mpf(p) for p in self.phases]

    @classmethod
    def gauge_fixed(cls, phases: Sequence[float], target_phase: float, **kwargs) -> "PhaseSequence":
        """Build a sequence after subtracting the first phase from all phases."""
        arr = np.asarray(phases, dtype=float)
        if arr.size == 0:
            raise ValueError("a sequence needs at least one pulse")
        return cls(phases=tuple(wrap_2pi(arr - arr[0])), target_phase=target_phase, **kwargs)


@dataclass(frozen=True)
class GatePhase:
    """Ideal-limit phases: ``lambda_n`` on the (1,1) entry, gate phase ``phi = 2 lambda_n``."""

    lambda_n: float
    phi: float


def _check_even(n_pulses: int) -> None:
    if isinstance(n_pulses, bool) or int(n_pulses) != n_pulses:
        raise ValueError(f"n must be an integer, got {n_pulses!r}")
    if n_pulses <= 0 or n_pulses % 2:
        raise ValueError(f"n must be even and positive, got {n_pulses}")


def analytic_phases(n_pulses: int, target_phase: float) -> np.ndarray:
    """Unwrapped phase law for ``k = 1..N`` as a float array."""
    _check_even(n_pulses)
    k = np.arange(1, n_pulses + 1, dtype=float)
    return (k - 1.0) * target_phase / n_pulses + (TWO_PI / n_pulses) * (k - 1.0) * (k - 2.0)


def _analytic_phases_mp(n_pulses: int, target_phase: float):
    import mpmath

    phi = mpmath.mpf(target_phase)
    two_pi = 2 * mpmath.pi
    return [(k - 1) * phi / n_pulses + two_pi * (k - 1) * (k - 2) / n_pulses
            for k in range(1, n_pulses + 1)]


def generate_sequence(n_pulses: int, target_phase: float) -> PhaseSequence:
    """Universal composite phase gate with ``n_pulses`` pulses and gate phase ``target_phase``.

    >>> seq = generate_sequence(4, 0.0)
    >>> [round(p / math.pi, 12) for p in seq.phases]
    [0.0, 0.0, 1.0, 1.0]
    """
    _check_even(n_pulses)
    if n_pulses == 2:
        warnings.warn("N = 2 gives the ideal phase gate but cancels no error orders",
                      SequenceWarning, stacklevel=2)
    if n_pulses > VERIFIED_MAX_N:
        log.info("N = %d is beyond the verified range; universality order is conjectured", n_pulses)
    phases = wrap_2pi(analytic_phases(n_pulses, target_phase))
    return PhaseSequence(
        phases=tuple(phases),
        target_phase=float(target_phase),
        family=ANALYTIC,
        label=f"UCPG{n_pulses}",
    )


def four_pulse_solution_family(phi1: float) -> PhaseSequence:
    """Four-pulse family ``(0, phi1, 2 phi1 + pi, 3 phi1 + pi)`` with gate phase ``4 phi1``."""
    phases = wrap_2pi(np.array([0.0, phi1, 2.0 * phi1 + math.pi, 3.0 * phi1 + math.pi]))
    return PhaseSequence(phases=tuple(phases), target_phase=4.0 * phi1, family=ANALYTIC, label="UCPG4")


def alternating_phase_sum(phases: Sequence[float]) -> float:
    """``-phi_1 + phi_2 - phi_3 + ... + phi_N`` for an even-length list."""
    arr = np.asarray(phases, dtype=float)
    signs = np.where(np.arange(arr.size) % 2 == 1, 1.0, -1.0)
    return float(np.dot(signs, arr))


def ideal_product(seq: PhaseSequence) -> np.ndarray:
    """Composite of ideal swaps (``eps = 0``) in the Cayley-Klein form."""
    return ordered_product(from_cayley_klein(CayleyKlein(0.0), p) for p in seq.phases)


def ideal_gate_phase(seq: PhaseSequence, check: bool = True) -> GatePhase:
    """Ideal-limit gate phase of an even sequence.

    With ``check`` the alternating sum is confirmed against the explicit
    product of ideal pulses, which must be ``+-diag(e^{i L}, e^{-i L})``.
    """
    if not seq.is_even:
        raise ValueError(f"an even number of pulses is required, got {seq.n_pulses}")
    lam = alternating_phase_sum(seq.phases)
    if check:
        u = ideal_product(seq)
        if abs(u[0, 1]) > 1e-12 or abs(u[1, 0]) > 1e-12:
            raise RuntimeError("ideal product is not diagonal")
        sign = (-1.0) ** (seq.n_pulses // 2)
        if abs(sign * u[0, 0] - np.exp(1j * lam)) > 1e-9:
            raise RuntimeError("ideal product disagrees with the alternating phase sum")
    return GatePhase(lambda_n=wrap_pi(lam), phi=wrap_2pi(2.0 * lam))


def target_gate(phi: float) -> np.ndarray:
    """Phase gate ``diag(e^{i phi/2}, e^{-i phi/2})``."""
    return diagonal_phase_gate(phi)


def predicted_leakage_exponent(n_pulses: int) -> int:
    """Leading power of eps in the leakage element, ``2 (N // 4) + 1``."""
    return 2 * (n_pulses // 4) + 1


def sequence_from_degrees(phases_deg: Sequence[float], target_phase: float,
                          family: str = EXTERNAL, label: Optional[str] = None) -> PhaseSequence:
    return PhaseSequence.gauge_fixed(np.deg2rad(phases_deg), target_phase, family=family, label=label or "")
