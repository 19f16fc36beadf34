import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from oracle_values import MINIMIZER_MID, MODE_COST_T2, TOTAL_RATE_11
from spdeis import SpectralModel, preset
from spdeis.exceptions import DomainError
from spdeis.spectral import phi_all
from spdeis.variational import (
    euler_lagrange_residual, minimal_exit, minimizer, minimizer_values, mode_cost, quasipotential, total_rate,
)

UNIT = SpectralModel((1.0,), (1.0,))
TWO = SpectralModel((1.0, 4.0), (1.0, 1.0))


def test_minimizer_closed_form():
    assert minimizer_values(UNIT, 2.0, [1.0], [1.0])[0, 0] == pytest.approx(MINIMIZER_MID, rel=1e-14)


def test_minimizer_endpoints():
    m = preset("integer-squares", 5)
    z = [0.3, -0.2, 0.1, 0.0, 0.05]
    traj = minimizer(m, 1.5, z, grid=11)
    assert np.all(traj.samples[0] == 0.0)
    assert np.array_equal(traj.samples[-1], z)
    raw = minimizer_values(m, 1.5, z, [0.0, 1.5])
    assert np.allclose(raw[0], 0.0, atol=1e-15)
    assert np.allclose(raw[1], z, rtol=1e-14, atol=1e-16)
    assert traj.cost == pytest.approx(total_rate(m, z, 1.5), rel=1e-10)


def test_mode_cost_values():
    assert mode_cost(UNIT, 1, 0.0, 2.0) == 0.0
    assert mode_cost(UNIT, 1, 1.0, 2.0) == pytest.approx(MODE_COST_T2, rel=1e-14)
    assert mode_cost(UNIT, 1, 1.0, 40.0) == pytest.approx(1.0, rel=1e-15)


def test_total_rate_values():
    assert total_rate(TWO, [1.0, 1.0], 2.0) == pytest.approx(TOTAL_RATE_11, rel=1e-14)
    assert total_rate(TWO, [0.0, 0.0], 2.0) == 0.0
    assert total_rate(UNIT, [1.5], 60.0) == pytest.approx(2 * 1.5**2, rel=1e-14)


@pytest.mark.parametrize("a, lam, z, T", [(1.0, 1.0, 1.0, 2.0), (4.0, 0.5, -0.3, 0.7), (9.0, 2.0, 2.0, 0.05)])
def test_mode_cost_matches_quadrature(a, lam, z, T):
    m = SpectralModel((a,), (lam,))

    def v(t):
        return 2 * z * a * math.exp(-a * (T - t)) / (lam * (1 - math.exp(-2 * a * T)))

    val, _ = quad(lambda t: 0.5 * v(t) ** 2, 0, T, epsabs=1e-12, epsrel=1e-12)
    assert mode_cost(m, 1, z, T) == pytest.approx(val, rel=1e-8)


def test_mode_cost_decreasing_in_T():
    T = np.linspace(0.1, 8, 50)
    c = [mode_cost(UNIT, 1, 1.0, t) for t in T]
    assert np.all(np.diff(c) < 0)


@settings(max_examples=80, deadline=None)
@given(
    st.lists(st.floats(-2, 2), min_size=1, max_size=5),
    st.lists(st.floats(-2, 2), min_size=1, max_size=5),
    st.floats(-3, 3),
    st.floats(0.05, 10),
)
def test_total_rate_additive_and_quadratic(z, w, c, T):
    m = preset("integer-squares", 5)
    n = min(len(z), len(w))
    z, w = np.array(z[:n]), np.array(w[:n])
    base = total_rate(m, z, T)
    assert total_rate(m, c * z, T) == pytest.approx(c * c * base, rel=1e-12, abs=1e-300)
    parts = sum(total_rate(m, np.eye(n)[k] * z, T) for k in range(n))
    assert base == pytest.approx(parts, rel=1e-12, abs=1e-300)


def test_minimal_exit_default_model():
    m = preset("integer-squares", 10)
    for T in (0.01, 1.0, 12.0):
        d = minimal_exit(m, 1.0, T)
        assert d.mode == 1 and not d.degenerate
        assert d.value == pytest.approx(phi_all(m, T).min(), rel=1e-15)


def test_minimal_exit_below_crossing():
    m = SpectralModel((1.0, 12.0), (1.0, 2.0))
    assert minimal_exit(m, 1.0, 0.1).mode == 2
    assert minimal_exit(m, 1.0, 2.0).mode == 1
    assert minimal_exit(UNIT, 2.0, 3.0).mode == 1


def test_minimal_exit_tie():
    # phi_1 carries the extra term, so an equal second eigenvalue is strictly cheaper
    d = minimal_exit(SpectralModel((1.0, 1.0, 9.0), (1.0, 1.0, 1.0)), 1.0, 10.0)
    assert d.mode == 2 and not d.degenerate
    # two identical modes below their crossing time tie for the minimum
    tie = SpectralModel((1.0, 12.0, 12.0), (1.0, 2.0, 2.0))
    d = minimal_exit(tie, 1.0, 0.1)
    assert d.mode == 2 and d.degenerate


def test_minimal_exit_links_to_phi():
    m = SpectralModel((1.0, 12.0, 30.0), (1.0, 2.0, 1.5))
    for T in np.geomspace(1e-3, 30, 25):
        assert minimal_exit(m, 1.3, T).value == pytest.approx(1.69 * phi_all(m, T).min(), rel=1e-14)


def test_euler_lagrange_second_order():
    res = []
    for h in (1e-2, 5e-3, 2.5e-3):
        n = int(round(2.0 / h)) + 1
        res.append(euler_lagrange_residual(minimizer(UNIT, 2.0, [1.0], grid=n), UNIT))
    rates = [math.log2(res[i] / res[i + 1]) for i in range(2)]
    assert all(1.9 < r < 2.1 for r in rates)
    fine = minimizer(UNIT, 2.0, [1.0], grid=2001)
    assert euler_lagrange_residual(fine, UNIT) < 1e-5


def test_euler_lagrange_detects_corruption():
    traj = minimizer(UNIT, 2.0, [1.0], grid=2001)
    traj.samples[1000, 0] += 1e-4
    assert euler_lagrange_residual(traj, UNIT) > 10.0


def test_euler_lagrange_needs_grid():
    with pytest.raises(DomainError):
        euler_lagrange_residual(minimizer(UNIT, 2.0, [1.0], grid=3), UNIT)


def test_quasipotential():
    assert quasipotential(UNIT, [0.0]) == 0.0
    assert quasipotential(UNIT, [1.0]) == 1.0
    assert quasipotential(SpectralModel((1.0, 4.0), (1.0, 2.0)), [1.0, 1.0]) == 2.0
    m = preset("integer-squares", 5)
    assert quasipotential(m, [0.1] * 5, tail_exponent=1.0) == math.inf
    assert math.isfinite(quasipotential(m, [0.1] * 5, tail_exponent=2.5))


def test_endpoint_validation():
    with pytest.raises(DomainError):
        total_rate(UNIT, [1.0, 2.0], 1.0)
    with pytest.raises(DomainError):
        mode_cost(UNIT, 2, 1.0, 1.0)
