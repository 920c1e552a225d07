import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ucpg.design import (
    ANALYTIC,
    PhaseSequence,
    SequenceWarning,
    alternating_phase_sum,
    analytic_phases,
    four_pulse_solution_family,
    generate_sequence,
    ideal_gate_phase,
    ideal_product,
    predicted_leakage_exponent,
    sequence_from_degrees,
)
from ucpg.su2 import relative_phase, wrap_2pi, wrap_pi

even_n = st.integers(2, 20).map(lambda k: 2 * k)
target = st.floats(0.0, 2 * math.pi, exclude_max=True)


def law_by_hand(n, phi):
    return [((k - 1) * phi / n + 2 * math.pi / n * (k - 1) * (k - 2)) % (2 * math.pi) for k in range(1, n + 1)]


def test_four_pulse_phases_closed_form():
    phi = 1.234
    seq = generate_sequence(4, phi)
    expected = [0.0, phi / 4, phi / 2 + math.pi, 3 * phi / 4 + math.pi]
    assert np.all(np.abs(wrap_pi(np.array(seq.phases) - expected)) < 1e-12)


@given(even_n, target)
def test_generation_matches_law(n, phi):
    seq = generate_sequence(n, phi) if n > 2 else None
    if seq is None:
        return
    assert len(seq.phases) == n
    assert seq.phases[0] == 0.0
    assert all(0.0 <= p < 2 * math.pi for p in seq.phases)
    assert np.all(np.abs(wrap_pi(np.array(seq.phases) - law_by_hand(n, phi))) < 1e-10)


@settings(max_examples=60)
@given(even_n, target)
def test_ideal_product_is_target_gate(n, phi):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SequenceWarning)
        seq = generate_sequence(n, phi)
    u = ideal_product(seq)
    assert abs(u[0, 1]) < 1e-12 and abs(u[1, 0]) < 1e-12
    assert abs(wrap_pi(relative_phase(u) - phi)) < 1e-9
    gp = ideal_gate_phase(seq)
    assert abs(wrap_pi(gp.phi - phi)) < 1e-9


@given(st.lists(st.floats(0.0, 6.28), min_size=1, max_size=5).map(lambda x: x + x[::-1]), st.floats(-3, 3))
def test_gate_phase_invariant_under_common_offset(phases, phi0):
    a = PhaseSequence.gauge_fixed(phases, 0.0)
    b = PhaseSequence.gauge_fixed(np.array(phases) + phi0, 0.0)
    assert np.all(np.abs(wrap_pi(np.array(a.phases) - b.phases)) < 1e-9)
    assert abs(wrap_pi(ideal_gate_phase(a).phi - ideal_gate_phase(b).phi)) < 1e-9
    # without gauge fixing the alternating sum is unchanged too
    assert abs(wrap_pi(alternating_phase_sum(np.array(phases) + phi0) - alternating_phase_sum(phases))) < 1e-9


def test_alternating_sum_sign_convention():
    assert alternating_phase_sum([1.0, 2.0, 3.0, 5.0]) == pytest.approx(-1 + 2 - 3 + 5)


def test_odd_and_invalid_n_rejected():
    for n in (3, 0, -4):
        with pytest.raises(ValueError, match="even"):
            generate_sequence(n, 0.5)
    with pytest.raises(ValueError):
        ideal_gate_phase(PhaseSequence((0.0, 1.0, 2.0), 0.0))


def test_two_pulses_warns():
    with pytest.warns(SequenceWarning):
        seq = generate_sequence(2, 1.0)
    assert seq.universality_order == 0
    assert predicted_leakage_exponent(2) == 1


def test_zero_target_phase_four_pulses():
    seq = generate_sequence(4, 0.0)
    assert np.allclose(seq.phases, [0.0, 0.0, math.pi, math.pi])


def test_analytic_phases_are_unwrapped():
    raw = analytic_phases(8, 1.0)
    assert raw[-1] > 2 * math.pi


@given(st.floats(-3.0, 3.0))
def test_four_pulse_family_gate_phase(phi1):
    seq = four_pulse_solution_family(phi1)
    assert abs(wrap_pi(ideal_gate_phase(seq).phi - 4 * phi1)) < 1e-9


def test_four_pulse_family_contains_law():
    phi = 2.0
    assert np.allclose(four_pulse_solution_family(phi / 4).phases, generate_sequence(4, phi).phases)


@pytest.mark.parametrize("n, expected", [(4, 3), (6, 3), (8, 5), (12, 7), (20, 11), (26, 13)])
def test_predicted_exponent(n, expected):
    assert predicted_leakage_exponent(n) == expected


def test_sequence_metadata():
    seq = generate_sequence(28, 1.0)
    assert seq.family == ANALYTIC and seq.label == "UCPG28"
    assert seq.conjectured and not generate_sequence(26, 1.0).conjectured
    assert seq.target_phase == 1.0


def test_gauge_convention_enforced():
    with pytest.raises(ValueError, match="gauge"):
        PhaseSequence((0.5, 1.0), 0.0)
    seq = sequence_from_degrees([90, 180, 270, 0], 0.0)
    assert seq.phases[0] == 0.0
    assert np.allclose(seq.phases, np.deg2rad([0, 90, 180, 270]))


def test_exact_phases_recompute_law():
    import mpmath

    seq = generate_sequence(20, math.pi / 4)
    exact = seq.exact_phases(60)
    with mpmath.workdps(60):
        k = 7
        want = (k - 1) * mpmath.mpf(math.pi / 4) / 20 + 2 * mpmath.pi * (k - 1) * (k - 2) / 20
        assert abs(mpmath.cos(exact[k - 1]) - mpmath.cos(want)) < mpmath.mpf(10) ** -50
    # a perturbed file keeps its stored phases
    shifted = PhaseSequence(tuple(wrap_2pi(np.array(seq.phases) + np.r_[0, 1e-6, np.zeros(18)])),
                            seq.target_phase, family=ANALYTIC)
    assert float(shifted.exact_phases(40)[1]) == pytest.approx(shifted.phases[1], abs=1e-15)


def test_eight_pulse_half_pi_phases():
    want = np.array([0, 1 / 16, 5 / 8, 27 / 16, 5 / 4, 21 / 16, 15 / 8, 15 / 16]) * math.pi
    assert np.allclose(generate_sequence(8, math.pi / 2).phases, want, atol=1e-12)


def test_four_pulse_lambda_is_twice_phi1():
    phi = 1.7
    gp = ideal_gate_phase(generate_sequence(4, phi))
    assert abs(wrap_pi(gp.lambda_n - phi / 2)) < 1e-12
    assert ideal_gate_phase(PhaseSequence((0.0,) * 4, 0.0)).lambda_n == 0.0


def test_target_gate_examples():
    from ucpg.design import target_gate

    assert np.allclose(target_gate(0.0), np.eye(2))
    assert np.allclose(target_gate(2 * math.pi), -np.eye(2))
    assert np.allclose(target_gate(math.pi / 2), np.diag([np.exp(1j * math.pi / 4), np.exp(-1j * math.pi / 4)]))


def test_four_pulse_family_examples():
    assert np.allclose(four_pulse_solution_family(0.0).phases, [0, 0, math.pi, math.pi])
    seq = four_pulse_solution_family(math.pi / 4)
    assert np.allclose(seq.phases, [0, math.pi / 4, 3 * math.pi / 2, 7 * math.pi / 4])
    assert seq.target_phase == pytest.approx(math.pi)
