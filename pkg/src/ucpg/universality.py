"""Order-by-order leakage checks in the Cayley-Klein parametrization.

Every pulse is modelled as ``U(eps, alpha; phi_k)`` with a common, unknown
deviation ``eps`` and dynamical phase ``alpha``. A sequence is universal to
order ``2m - 1`` when the Taylor coefficients ``C_1, C_3, ..., C_{2m-1}`` of
the composite ``U_12`` in ``eps`` vanish for every ``alpha``.

Taylor coefficients are extracted with central finite differences in ``eps``
plus Richardson extrapolation, then resolved into harmonics ``e^{i h alpha}``
by a discrete Fourier transform over a uniform ``alpha`` grid. High orders
need more than double precision, so sampling runs in mpmath at a working
precision chosen from the requested order unless ``dps <= 16`` is given.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .design import PhaseSequence, predicted_leakage_exponent
from .su2 import TWO_PI, CayleyKlein, from_cayley_klein, ordered_product

DOUBLE_DPS = 16

CANCEL_THRESHOLD = 1e-8
NONZERO_THRESHOLD = 1e-4
NOISE_WARN = 1e-9

DEFAULT_EPS_RANGE = (1e-3, 5e-2)


class PrecisionWarning(UserWarning):
    """Finite-difference noise floor is above the cancellation resolution."""


@dataclass(frozen=True)
class LeakageSample:
    eps: float
    alpha: float
    u12: complex


@dataclass(frozen=True)
class OrderEstimate:
    fitted_exponent: float
    predicted_exponent: int
    worst_alpha: float
    fit_residual: float
    conjectured: bool = False
    tolerance: float = 0.1

    @property
    def passed(self) -> bool:
        return abs(self.fitted_exponent - self.predicted_exponent) <= self.tolerance


@dataclass(frozen=True)
class HarmonicSpectrum:
    """Harmonic content of the ``eps**order`` coefficient of ``U_12``.

    ``coefficients[h]`` is the amplitude of ``e^{i h alpha}``; ``max_over_alpha``
    is the largest ``|C_order(alpha)|`` on the sampled grid.
    """

    order: int
    coefficients: dict
    max_over_alpha: float = 0.0
    noise_floor: float = 0.0

    @property
    def max_amplitude(self) -> float:
        return max((abs(c) for c in self.coefficients.values()), default=0.0)


@dataclass
class OrderCheck:
    order: int
    max_harmonic_amplitude: float
    max_over_alpha: float
    expect_zero: bool
    passed: bool
    worst_harmonic: int


@dataclass
class LadderReport:
    sequence: PhaseSequence
    predicted_order: int
    per_order: list = field(default_factory=list)
    fitted_exponent: Optional[float] = None
    conjectured: bool = False

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.per_order)

    @property
    def first_failure(self) -> Optional[OrderCheck]:
        return next((c for c in self.per_order if not c.passed), None)

    def to_dict(self) -> dict:
        seq = self.sequence
        failure = self.first_failure
        return {
            "sequence": {
                "label": seq.label,
                "family": seq.family,
                "n_pulses": seq.n_pulses,
                "target_phase": seq.target_phase,
                "phases_rad": list(seq.phases),
            },
            "predicted_order": self.predicted_order,
            "conjectured": self.conjectured,
            "fitted_exponent": self.fitted_exponent,
            "per_order": [
                {
                    "order": c.order,
                    "max_harmonic_amplitude": c.max_harmonic_amplitude,
                    "max_over_alpha": c.max_over_alpha,
                    "expect": "zero" if c.expect_zero else "nonzero",
                    "worst_harmonic": c.worst_harmonic,
                    "pass": c.passed,
                }
                for c in self.per_order
            ],
            "pass": self.passed,
            "first_failure": None if failure is None else {
                "order": failure.order, "harmonic": failure.worst_harmonic},
        }


def composite_from_parametrization(seq: PhaseSequence, eps: float, alpha: float) -> np.ndarray:
    """``U(eps, alpha; phi_N) ... U(eps, alpha; phi_1)`` in double precision."""
    p = CayleyKlein(eps=eps, alpha=alpha)
    return ordered_product(from_cayley_klein(p, phi) for phi in seq.phases)


def _u12_double(phases: np.ndarray, eps: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """Vectorized ``U_12`` over an (eps, alpha) mesh."""
    eps = np.asarray(eps, dtype=float)[:, None]
    ea = np.exp(1j * np.asarray(alpha, dtype=float))[None, :]
    s = np.sqrt(1.0 - eps * eps)
    d1 = eps * ea
    d2 = eps * np.conj(ea)
    shape = np.broadcast_shapes(eps.shape, ea.shape)
    a11 = np.ones(shape, dtype=complex)
    a12 = np.zeros(shape, dtype=complex)
    a21 = np.zeros(shape, dtype=complex)
    a22 = np.ones(shape, dtype=complex)
    for phi in phases:
        e = complex(math.cos(phi), math.sin(phi))
        m12 = s * e
        m21 = -s * e.conjugate()
        a11, a12, a21, a22 = (d1 * a11 + m12 * a21, d1 * a12 + m12 * a22,
                              m21 * a11 + d2 * a21, m21 * a12 + d2 * a22)
    return a12


def _u12_mp(phases, eps, alpha):
    import mpmath

    s = mpmath.sqrt(1 - eps * eps)
    ea = mpmath.expj(alpha)
    d1 = eps * ea
    d2 = eps / ea
    a11, a12, a21, a22 = mpmath.mpc(1), mpmath.mpc(0), mpmath.mpc(0), mpmath.mpc(1)
    for e in phases:
        m12 = s * e
        m21 = -s / e
        a11, a12, a21, a22 = (d1 * a11 + m12 * a21, d1 * a12 + m12 * a22,
                              m21 * a11 + d2 * a21, m21 * a12 + d2 * a22)
    return a12


def _alpha_grid(alpha_samples: int) -> np.ndarray:
    return TWO_PI * np.arange(alpha_samples) / alpha_samples


def leakage_grid(seq: PhaseSequence, eps_values: Sequence[float], alpha_values: Sequence[float],
                 dps: Optional[int] = None) -> np.ndarray:
    """``U_12`` on the outer product of ``eps_values`` and ``alpha_values``.

    Returns a complex array of shape ``(len(eps_values), len(alpha_values))``.
    ``dps <= 16`` samples in double precision; otherwise in mpmath at ``dps``
    digits (default 50) and the result is rounded to complex128 at the end.
    """
    eps_values = [float(e) for e in eps_values]
    alpha_values = [float(a) for a in alpha_values]
    if any(abs(e) > 1.0 for e in eps_values):
        raise ValueError("|eps| must not exceed 1")
    if dps is not None and dps <= DOUBLE_DPS:
        return _u12_double(seq.phases_array(), np.array(eps_values), np.array(alpha_values))
    import mpmath

    dps = dps or 50
    out = np.empty((len(eps_values), len(alpha_values)), dtype=complex)
    with mpmath.workdps(dps):
        phase_factors = [mpmath.expj(p) for p in seq.exact_phases(dps)]
        alphas = [mpmath.mpf(a) for a in alpha_values]
        for i, e in enumerate(eps_values):
            e = mpmath.mpf(e)
            for j, a in enumerate(alphas):
                out[i, j] = complex(_u12_mp(phase_factors, e, a))
    return out


def sample_leakage(seq: PhaseSequence, eps_values, alpha_values, dps: Optional[int] = None) -> list:
    grid = leakage_grid(seq, eps_values, alpha_values, dps=dps)
    return [LeakageSample(float(e), float(a), complex(grid[i, j]))
            for i, e in enumerate(eps_values) for j, a in enumerate(alpha_values)]


def _auto_fit_dps(seq: PhaseSequence, eps_min: float) -> int:
    exponent = predicted_leakage_exponent(seq.n_pulses)
    return max(30, math.ceil(exponent * -math.log10(eps_min)) + 20)


def estimate_leakage_order(seq: PhaseSequence, eps_grid: Optional[Sequence[float]] = None,
                           alpha_grid: Optional[Sequence[float]] = None,
                           dps: Optional[int] = None, tolerance: float = 0.1) -> OrderEstimate:
    """Fit the leading power of ``eps`` in ``max_alpha |U_12|``.

    The maximum over ``alpha`` is taken at each ``eps`` so that isolated phases
    where the leading coefficient happens to vanish cannot bias the slope.
    """
    if not seq.is_even:
        raise ValueError("leakage order is defined for even sequences only")
    if eps_grid is None:
        eps_grid = np.geomspace(DEFAULT_EPS_RANGE[0], DEFAULT_EPS_RANGE[1], 12)
    if alpha_grid is None:
        alpha_grid = _alpha_grid(64)
    eps_grid = np.asarray(eps_grid, dtype=float)
    alpha_grid = np.asarray(alpha_grid, dtype=float)
    if eps_grid.size < 2 or np.any(eps_grid <= 0):
        raise ValueError("eps_grid must hold at least two strictly positive values")
    if eps_grid.max() / eps_grid.min() < 10.0:
        raise ValueError("eps_grid must span at least one decade for a stable fit")
    if alpha_grid.size < 64:
        raise ValueError("alpha_grid needs at least 64 points covering [0, 2 pi)")
    if dps is None:
        dps = _auto_fit_dps(seq, float(eps_grid.min()))

    mag = np.abs(leakage_grid(seq, eps_grid, alpha_grid, dps=dps))
    peak = mag.max(axis=1)
    floor = np.finfo(float).tiny
    x = np.log(eps_grid)
    y = np.log(np.maximum(peak, floor))
    coeffs, residuals, *_ = np.polyfit(x, y, 1, full=True)
    residual = float(np.sqrt(residuals[0] / x.size)) if residuals.size else 0.0
    worst = float(alpha_grid[int(np.argmax(mag[int(np.argmax(eps_grid))]))])
    return OrderEstimate(
        fitted_exponent=float(coeffs[0]),
        predicted_exponent=predicted_leakage_exponent(seq.n_pulses),
        worst_alpha=worst,
        fit_residual=residual,
        conjectured=seq.conjectured,
        tolerance=tolerance,
    )


@lru_cache(maxsize=None)
def fd_weights(order: int) -> tuple[tuple[int, Fraction], ...]:
    """Central-difference weights for the ``eps**order`` Taylor coefficient.

    Nodes are ``j h`` for ``j = -p..p`` with ``p = (order + 1) // 2``; the
    weights are exact rationals (Fornberg's recursion) already divided by
    ``order!``, so ``sum(w f(j h)) / h**order`` approximates the coefficient
    with an ``O(h**2)`` error.
    """
    if order < 1:
        raise ValueError("order must be positive")
    p = (order + 1) // 2
    nodes = list(range(-p, p + 1))
    # Fornberg, expansion point 0
    n = len(nodes)
    c = [[[Fraction(0)] * (order + 1) for _ in range(n)] for _ in range(n)]
    c[0][0][0] = Fraction(1)
    c1 = Fraction(1)
    for i in range(1, n):
        c2 = Fraction(1)
        for j in range(i):
            c3 = Fraction(nodes[i] - nodes[j])
            c2 *= c3
            for m in range(min(i, order) + 1):
                prev = c[i - 1][j][m - 1] if m else Fraction(0)
                c[i][j][m] = (nodes[i] * c[i - 1][j][m] - m * prev) / c3
        for m in range(min(i, order) + 1):
            prev = c[i - 1][i - 1][m - 1] if m else Fraction(0)
            c[i][i][m] = c1 / c2 * (m * prev - nodes[i - 1] * c[i - 1][i - 1][m])
        c1 = c2
    fact = math.factorial(order)
    return tuple((nodes[j], c[n - 1][j][order] / fact) for j in range(n) if c[n - 1][j][order] != 0)


def _richardson(values: list):
    """Eliminate the ``h**2, h**4, ...`` error terms from a halving sequence."""
    table = list(values)
    for level in range(1, len(values)):
        r = 4 ** level
        table = [(r * table[i + 1] - table[i]) / (r - 1) for i in range(len(table) - 1)]
    return table[0]


def _default_step(dps: int) -> float:
    return 1e-2 if dps <= DOUBLE_DPS else 1e-3


def _auto_taylor_dps(max_order: int, step: float, levels: int) -> int:
    h_min = step / 2 ** levels
    return max(30, math.ceil(max_order * -math.log10(h_min)) + 20)


def taylor_coefficients(seq: PhaseSequence, orders: Sequence[int], alpha_values: Sequence[float],
                        step: Optional[float] = None, levels: int = 2,
                        dps: Optional[int] = None) -> tuple[dict, dict]:
    """Finite-difference Taylor coefficients of ``U_12`` in ``eps``.

    Returns ``(coeffs, noise)`` where ``coeffs[k]`` is a complex array over
    ``alpha_values`` and ``noise[k]`` the estimated rounding floor for order
    ``k``. All orders share one set of samples at ``+-j step / 2**l``.
    """
    orders = sorted(set(int(k) for k in orders))
    if any(k < 1 for k in orders):
        raise ValueError("orders must be positive")
    if dps is None:
        dps = _auto_taylor_dps(max(orders), step or _default_step(50), levels)
    if step is None:
        step = _default_step(dps)
    stencils = {k: fd_weights(k) for k in orders}
    p_max = max(abs(j) for k in orders for j, _ in stencils[k])
    nodes = sorted({Fraction(j, 2 ** l) for l in range(levels + 1) for j in range(-p_max, p_max + 1) if j})
    alpha_values = [float(a) for a in alpha_values]

    if dps <= DOUBLE_DPS:
        node_eps = np.array([float(x) * step for x in nodes])
        if np.any(np.abs(node_eps) > 1):
            raise ValueError("finite-difference nodes leave |eps| <= 1; reduce the step")
        samples = _u12_double(seq.phases_array(), node_eps, np.array(alpha_values))
        table = {x: samples[i] for i, x in enumerate(nodes)}
        unit = np.finfo(float).eps
        h = step
    else:
        import mpmath

        with mpmath.workdps(dps):
            h = mpmath.mpf(step)
            phase_factors = [mpmath.expj(p) for p in seq.exact_phases(dps)]
            alphas = [mpmath.mpf(a) for a in alpha_values]
            table = {}
            for x in nodes:
                e = h * x.numerator / x.denominator
                if abs(e) > 1:
                    raise ValueError("finite-difference nodes leave |eps| <= 1; reduce the step")
                table[x] = [_u12_mp(phase_factors, e, a) for a in alphas]
        unit = 10.0 ** (-dps)

    fmax = max(float(np.max(np.abs(np.asarray(v, dtype=complex)))) for v in table.values())
    coeffs, noise = {}, {}
    for k in orders:
        weights = stencils[k]
        amp = float(sum(abs(w) for _, w in weights)) * float(np.prod([(4 ** l + 1) / (4 ** l - 1)
                                                                      for l in range(1, levels + 1)]))
        noise[k] = unit * fmax * amp / (step / 2 ** levels) ** k
        if dps <= DOUBLE_DPS:
            estimates = []
            for l in range(levels + 1):
                hl = step / 2 ** l
                acc = sum(float(w) * table[Fraction(j, 2 ** l)] for j, w in weights)
                estimates.append(acc / hl ** k)
            coeffs[k] = np.asarray(_richardson(estimates), dtype=complex)
        else:
            import mpmath

            with mpmath.workdps(dps):
                out = []
                for ia in range(len(alpha_values)):
                    estimates = []
                    for l in range(levels + 1):
                        hl = h / 2 ** l
                        acc = mpmath.fsum(mpmath.mpf(w.numerator) / w.denominator * table[Fraction(j, 2 ** l)][ia]
                                          for j, w in weights)
                        estimates.append(acc / hl ** k)
                    out.append(complex(_richardson(estimates)))
            coeffs[k] = np.array(out, dtype=complex)
    return coeffs, noise


def _spectrum(order: int, alpha_values: np.ndarray, values: np.ndarray, noise: float) -> HarmonicSpectrum:
    m = alpha_values.size
    coefficients = {}
    for hmc in range(-order, order + 1):
        coefficients[hmc] = complex(np.sum(values * np.exp(-1j * hmc * alpha_values)) / m)
    return HarmonicSpectrum(order=order, coefficients=coefficients,
                            max_over_alpha=float(np.max(np.abs(values))), noise_floor=noise)


def _warn_noise(order: int, noise: float) -> None:
    if noise > NOISE_WARN:
        warnings.warn(
            f"finite-difference noise floor {noise:.2e} at order {order} exceeds {NOISE_WARN:g}; "
            "raise dps or the step", PrecisionWarning, stacklevel=3)


def harmonic_coefficients(seq: PhaseSequence, order: int, alpha_samples: int = 64,
                          step: Optional[float] = None, levels: int = 2,
                          dps: Optional[int] = None) -> HarmonicSpectrum:
    """Fourier amplitudes (in ``alpha``) of the ``eps**order`` coefficient of ``U_12``.

    Harmonics are indexed by the true exponent ``h`` of ``e^{i h alpha}``, so
    order ``k`` can only populate odd ``|h| <= k``.
    """
    if order < 1 or order % 2 == 0:
        raise ValueError(f"order must be a positive odd integer, got {order}")
    if alpha_samples < 4 * order + 1:
        raise ValueError(f"alpha_samples must be at least {4 * order + 1} for order {order}")
    alphas = _alpha_grid(alpha_samples)
    coeffs, noise = taylor_coefficients(seq, [order], alphas, step=step, levels=levels, dps=dps)
    _warn_noise(order, noise[order])
    return _spectrum(order, alphas, coeffs[order], noise[order])


def verify_cancellation_ladder(seq: PhaseSequence, alpha_samples: int = 64, max_order: Optional[int] = None,
                               step: Optional[float] = None, levels: int = 2, dps: Optional[int] = None,
                               fit: bool = False,
                               cancel_threshold: float = CANCEL_THRESHOLD,
                               nonzero_threshold: float = NONZERO_THRESHOLD) -> LadderReport:
    """Check that orders ``1, 3, ..., 2m-1`` vanish and order ``2m+1`` survives.

    ``m = N // 4``. Thresholds apply to the largest harmonic amplitude and to
    the largest coefficient over the sampled ``alpha`` grid. ``max_order``
    truncates the ladder (orders above it are not evaluated).
    """
    if not seq.is_even:
        raise ValueError("the cancellation ladder applies to even sequences only")
    m = seq.universality_order
    top = 2 * m + 1
    if max_order is not None:
        if max_order < 1 or max_order % 2 == 0:
            raise ValueError("max_order must be a positive odd integer")
        top = min(top, max_order)
    orders = list(range(1, top + 1, 2))
    if alpha_samples < 4 * top + 1:
        raise ValueError(f"alpha_samples must be at least {4 * top + 1} for order {top}")
    alphas = _alpha_grid(alpha_samples)
    coeffs, noise = taylor_coefficients(seq, orders, alphas, step=step, levels=levels, dps=dps)

    report = LadderReport(sequence=seq, predicted_order=2 * m + 1, conjectured=seq.conjectured)
    for k in orders:
        _warn_noise(k, noise[k])
        spec = _spectrum(k, alphas, coeffs[k], noise[k])
        worst_h = max(spec.coefficients, key=lambda h: abs(spec.coefficients[h]))
        expect_zero = k < 2 * m + 1
        if expect_zero:
            ok = spec.max_amplitude < cancel_threshold and spec.max_over_alpha < cancel_threshold
        else:
            ok = spec.max_amplitude > nonzero_threshold
        report.per_order.append(OrderCheck(
            order=k,
            max_harmonic_amplitude=spec.max_amplitude,
            max_over_alpha=spec.max_over_alpha,
            expect_zero=expect_zero,
            passed=bool(ok),
            worst_harmonic=int(worst_h),
        ))
    if fit:
        report.fitted_exponent = estimate_leakage_order(seq).fitted_exponent
    return report
