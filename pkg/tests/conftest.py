"""Shared oracles for the test suite.

The oracles here are written independently of the library: plain scipy
matrix exponentials for pulse propagators and exact truncated power series
for the Cayley-Klein product.
"""

import math

import numpy as np
import pytest
from scipy.linalg import expm


def expm_pulse(phase, eps_a=0.0, delta=0.0, area=math.pi):
    """One rectangular pulse of unit duration, ``H = 1/2 [[-D, W e^{i p}], [W e^{-i p}, D]]``."""
    w = area * (1.0 + eps_a)
    d = area * delta
    h = 0.5 * np.array([[-d, w * np.exp(1j * phase)], [w * np.exp(-1j * phase), d]])
    return expm(-1j * h)


def expm_composite(phases, eps_a=0.0, delta=0.0, area=math.pi):
    u = np.eye(2, dtype=complex)
    for p in phases:
        u = expm_pulse(p, eps_a, delta, area) @ u
    return u


def phase_fidelity(u, phi):
    g = np.diag([np.exp(0.5j * phi), np.exp(-0.5j * phi)])
    return 0.5 * abs(np.trace(g.conj().T @ u))


def _series_mul(a, b, order):
    return np.convolve(a, b)[: order + 1]


def u12_series(phases, alpha, order):
    """Exact power-series coefficients ``c_0..c_order`` of ``U_12`` in ``eps``.

    Each pulse is ``[[eps e^{ia}, s e^{ip}], [-s e^{-ip}, eps e^{-ia}]]`` with
    ``s = sqrt(1 - eps^2)`` expanded by the binomial series.
    """
    s = np.zeros(order + 1, dtype=complex)
    for k in range(order // 2 + 1):
        s[2 * k] = math.comb(2 * k, k) / ((1 - 2 * k) * 4 ** k)
    eps = np.zeros(order + 1, dtype=complex)
    if order >= 1:
        eps[1] = 1.0
    one = np.zeros(order + 1, dtype=complex)
    one[0] = 1.0
    zero = np.zeros(order + 1, dtype=complex)
    total = [[one, zero], [zero, one]]
    for p in phases:
        m = [[eps * np.exp(1j * alpha), s * np.exp(1j * p)],
             [-s * np.exp(-1j * p), eps * np.exp(-1j * alpha)]]
        total = [[sum(_series_mul(m[i][k], total[k][j], order) for k in range(2)) for j in range(2)]
                 for i in range(2)]
    return total[0][1]


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260514)


ACCEPTANCE_LINES = {}


def record_criterion(number, passed, detail):
    """Store (and echo) the one-line outcome of an acceptance criterion."""
    status = {True: "PASS", False: "FAIL", None: "SKIP"}[passed]
    line = f"criterion {number}: {status} {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
