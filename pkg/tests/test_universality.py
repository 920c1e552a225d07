import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from conftest import u12_series

from ucpg.design import PhaseSequence, four_pulse_solution_family, generate_sequence
from ucpg.su2 import CayleyKlein, from_cayley_klein, ordered_product
from ucpg.universality import (
    PrecisionWarning,
    composite_from_parametrization,
    estimate_leakage_order,
    fd_weights,
    harmonic_coefficients,
    leakage_grid,
    taylor_coefficients,
    verify_cancellation_ladder,
)

NAIVE = PhaseSequence((0.0, 0.0, 0.0, 0.0), 0.0, label="naive")


def test_series_oracle_matches_direct_product():
    phases = generate_sequence(8, 0.9).phases
    eps, alpha = 0.07, 0.4
    direct = ordered_product(from_cayley_klein(CayleyKlein(eps, alpha), p) for p in phases)[0, 1]
    coeffs = u12_series(phases, alpha, 30)
    assert abs(np.polyval(coeffs[::-1], eps) - direct) < 1e-14


def test_leakage_grid_double_and_mp_agree():
    seq = generate_sequence(8, 1.1)
    eps = [0.01, 0.2]
    alphas = [0.0, 1.0, 2.5]
    a = leakage_grid(seq, eps, alphas, dps=16)
    b = leakage_grid(seq, eps, alphas, dps=40)
    assert np.allclose(a, b, atol=1e-13)
    direct = composite_from_parametrization(seq, 0.2, 2.5)[0, 1]
    assert abs(a[1, 2] - direct) < 1e-14


def test_fd_weights_known_values():
    w1 = dict(fd_weights(1))
    assert w1 == {-1: pytest.approx(-0.5), 1: pytest.approx(0.5)}
    w3 = [float(w) for _, w in fd_weights(3)]
    assert np.allclose(w3, [-1 / 12, 1 / 6, -1 / 6, 1 / 12])


@pytest.mark.parametrize("n", [4, 8, 12])
def test_taylor_coefficients_match_series_oracle(n):
    seq = generate_sequence(n, 0.7)
    alphas = np.linspace(0, 2 * math.pi, 9, endpoint=False)
    order = 2 * (n // 4) + 1
    coeffs, noise = taylor_coefficients(seq, range(1, order + 1, 2), alphas)
    for ia, a in enumerate(alphas):
        exact = u12_series(seq.phases, a, order)
        for k in range(1, order + 1, 2):
            assert abs(coeffs[k][ia] - exact[k]) < 1e-9 + 1e-8 * abs(exact[k]), (k, a)


def test_series_oracle_confirms_cancellation():
    # independent of the finite-difference machinery
    for n in (4, 8, 12, 20):
        seq = generate_sequence(n, math.pi / 4)
        m = n // 4
        for a in np.linspace(0, 2 * math.pi, 16, endpoint=False):
            c = u12_series(seq.phases, a, 2 * m + 1)
            assert np.all(np.abs(c[1 : 2 * m : 2]) < 1e-9)
        assert max(abs(u12_series(seq.phases, a, 2 * m + 1)[2 * m + 1])
                   for a in np.linspace(0, 2 * math.pi, 16, endpoint=False)) > 1e-4


def test_odd_expansion_in_eps():
    coeffs = u12_series(generate_sequence(8, 0.7).phases, 0.3, 12)
    assert np.all(np.abs(coeffs[0::2]) < 1e-13)


def test_naive_sequence_order_one_harmonics():
    spec = harmonic_coefficients(NAIVE, 1)
    assert abs(spec.coefficients[-1]) == pytest.approx(2.0, abs=1e-8)
    assert abs(spec.coefficients[1]) == pytest.approx(2.0, abs=1e-8)
    assert abs(spec.coefficients[0]) < 1e-10


def test_naive_sequence_fails_at_order_one():
    report = verify_cancellation_ladder(NAIVE)
    assert not report.passed
    assert report.first_failure.order == 1
    est = estimate_leakage_order(NAIVE)
    assert est.fitted_exponent == pytest.approx(1.0, abs=0.1)


def test_ladder_report_structure():
    report = verify_cancellation_ladder(generate_sequence(8, math.pi / 2))
    d = report.to_dict()
    assert d["pass"] is True and d["first_failure"] is None
    assert [o["order"] for o in d["per_order"]] == [1, 3, 5]
    assert [o["expect"] for o in d["per_order"]] == ["zero", "zero", "nonzero"]
    assert d["predicted_order"] == 5 and d["conjectured"] is False


def test_ladder_max_order_truncates():
    report = verify_cancellation_ladder(generate_sequence(12, 1.0), max_order=3)
    assert [c.order for c in report.per_order] == [1, 3]
    assert report.passed
    with pytest.raises(ValueError):
        verify_cancellation_ladder(generate_sequence(12, 1.0), max_order=4)


def test_perturbed_phase_breaks_order_three():
    seq = generate_sequence(8, 1.0)
    phases = np.array(seq.phases)
    phases[3] += 1e-3
    bad = PhaseSequence(tuple(phases), 1.0)
    report = verify_cancellation_ladder(bad)
    assert not report.passed


def test_double_precision_warns_about_noise():
    with pytest.warns(PrecisionWarning):
        harmonic_coefficients(generate_sequence(20, 1.0), 9, alpha_samples=64, dps=16)


def test_estimate_rejects_bad_grids():
    seq = generate_sequence(4, 1.0)
    with pytest.raises(ValueError, match="decade"):
        estimate_leakage_order(seq, eps_grid=[0.01, 0.02])
    with pytest.raises(ValueError, match="64"):
        estimate_leakage_order(seq, alpha_grid=np.linspace(0, 6, 10))
    with pytest.raises(ValueError):
        estimate_leakage_order(PhaseSequence((0.0, 1.0, 2.0), 0.0))


def test_harmonic_sampling_guard():
    with pytest.raises(ValueError):
        harmonic_coefficients(generate_sequence(4, 1.0), 3, alpha_samples=8)
    with pytest.raises(ValueError):
        harmonic_coefficients(generate_sequence(4, 1.0), 2)


def test_surviving_harmonics_are_odd_and_bounded():
    spec = harmonic_coefficients(generate_sequence(8, 0.5), 5)
    for h, c in spec.coefficients.items():
        if h % 2 == 0:
            assert abs(c) < 1e-12
    assert spec.max_amplitude > 1e-2


def test_conjectured_flag_for_large_n():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        report = verify_cancellation_ladder(generate_sequence(28, 1.0), max_order=3)
    assert report.conjectured and report.to_dict()["conjectured"] is True


def c1_closed_form(alpha, p1, p2, p3):
    e = np.exp
    return -e(-2j * (alpha + p1 + p2)) * (
        e(1j * alpha) * (e(1j * (p1 + 2 * p2 + p3)) + e(1j * (3 * p1 + p2 + p3)))
        + e(3j * alpha) * (e(1j * (p1 + 3 * p2)) + e(1j * (2 * p1 + p2 + p3))))


def test_order_one_matches_closed_form(rng):
    for alpha, p1, p2, p3 in rng.uniform(0, 2 * math.pi, size=(32, 4)):
        seq = PhaseSequence((0.0, p1, p2, p3), 0.0)
        coeffs, _ = taylor_coefficients(seq, [1], [alpha])
        assert abs(coeffs[1][0] - c1_closed_form(alpha, p1, p2, p3)) < 1e-8


def test_unit_eps_gives_identity():
    seq = generate_sequence(12, 2.2)
    assert np.allclose(composite_from_parametrization(seq, 1.0, 0.0), np.eye(2), atol=1e-15)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 2 * math.pi), st.floats(1e-3, 0.9), st.floats(0, 2 * math.pi), st.floats(-5, 5))
def test_gauge_invariance_and_oddness(phi, eps, alpha, shift):
    seq = generate_sequence(8, phi)
    shifted = [p + shift for p in seq.phases]
    u = ordered_product(from_cayley_klein(CayleyKlein(eps, alpha), p) for p in seq.phases)[0, 1]
    v = ordered_product(from_cayley_klein(CayleyKlein(eps, alpha), p) for p in shifted)[0, 1]
    assert abs(abs(u) - abs(v)) < 1e-12
    minus = ordered_product(from_cayley_klein(CayleyKlein(-eps, alpha), p) for p in seq.phases)[0, 1]
    assert abs(minus + u) < 1e-12
    assert abs(u) <= 1.0 + 1e-15


@pytest.mark.parametrize("phi", np.arange(16) * 2 * math.pi / 16)
def test_four_pulse_ladder_for_any_target(phi):
    report = verify_cancellation_ladder(generate_sequence(4, phi))
    assert report.passed and [c.expect_zero for c in report.per_order] == [True, False]
    # the cancelled harmonics are far below the stated 1e-10
    assert report.per_order[0].max_harmonic_amplitude < 1e-10


def test_four_pulse_order_three_spectrum_matches_closed_form():
    p1 = 0.6
    seq = four_pulse_solution_family(p1)
    spec = harmonic_coefficients(seq, 3)
    # e^{-3ia}(e^{2ia} - e^{ip})(e^{2ia} + e^{ip})^2 expanded in e^{iha}
    p = np.exp(1j * p1)
    want = {3: 1.0, 1: p, -1: -p ** 2, -3: -p ** 3}
    for h, c in spec.coefficients.items():
        assert abs(c - want.get(h, 0.0)) < 1e-10


def test_fitted_exponent_positive_and_samples_bounded():
    from ucpg.universality import sample_leakage

    samples = sample_leakage(generate_sequence(4, 1.0), [0.01, 0.2], [0.0, 1.0])
    assert all(abs(s.u12) <= 1.0 for s in samples) and len(samples) == 4
    assert estimate_leakage_order(generate_sequence(4, 1.0)).fitted_exponent > 0
