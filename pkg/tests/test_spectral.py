import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracle_values import CROSSING_A2_9, CROSSING_A2_12, PHI1_T1
from spdeis import SpectralModel, preset
from spdeis.exceptions import ConfigError, DomainError, NoCrossingError
from spdeis.spectral import (
    PowerTail, check_assumptions, crossing_time, gap_report, one_minus_exp, phi, phi_all, psi, t0,
)

UNIT = SpectralModel((1.0,), (1.0,))


def model(alphas, lambdas=None):
    return SpectralModel(tuple(alphas), tuple(lambdas or [1.0] * len(alphas)))


class TestModel:
    def test_presets(self):
        m = preset("integer-squares", 5)
        assert m.alphas == (1, 4, 9, 16, 25)
        assert m.lambdas == (1,) * 5
        d = preset("dirichlet-laplacian-1d", 3)
        assert d.alphas[2] == pytest.approx(9 * math.pi**2, rel=1e-15)

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            preset("neumann", 3)

    @pytest.mark.parametrize("alphas, lambdas", [
        ((), ()), ((1, 2), (1,)), ((0, 1), (1, 1)), ((2, 1), (1, 1)), ((1, 2), (1, -1)), ((1, math.inf), (1, 1)),
    ])
    def test_rejects_invalid(self, alphas, lambdas):
        with pytest.raises(ConfigError):
            SpectralModel(alphas, lambdas)

    def test_trace_partial(self):
        assert preset("integer-squares", 3).trace_partial() == pytest.approx(1 + 1 / 4 + 1 / 9, rel=1e-15)

    def test_truncate_extends_through_tail(self):
        m = preset("integer-squares", 4)
        assert m.truncate(2).alphas == (1, 4)
        assert m.truncate(6).alphas == (1, 4, 9, 16, 25, 36)
        with pytest.raises(ConfigError):
            model([1, 4]).truncate(3)

    def test_power_tail_flags(self):
        assert PowerTail(1, 2).trace_converges()
        assert not PowerTail(1, 0.5).trace_converges()
        assert PowerTail(1, 2).gap_diverges()
        assert not PowerTail(1, 0).gap_diverges()


class TestPhi:
    def test_phi1_large_T(self):
        assert phi(UNIT, 1, 60.0) == pytest.approx(2.0, rel=1e-15)

    def test_phi1_at_one(self):
        assert phi(UNIT, 1, 1.0) == pytest.approx(PHI1_T1, rel=1e-14)

    def test_phik_large_T(self):
        assert phi(model([1, 4]), 2, 60.0) == pytest.approx(4.0, rel=1e-15)

    def test_psi_limits(self):
        m = model([1, 4])
        assert psi(m, 2, 1e-9) == pytest.approx(-0.5, abs=1e-6)
        assert psi(m, 2, 50.0) == pytest.approx(-2.0, rel=1e-12)
        assert psi(model([1, 4], [1, 2]), 2, 1e-6) > 1e3

    def test_small_horizon_is_stable(self):
        # a naive 1 - exp(-x) loses every digit here
        assert float(one_minus_exp(1e-12)) == pytest.approx(1e-12, rel=1e-12)
        assert phi(UNIT, 1, 1e-12) == pytest.approx(1 / 2e-12 + 1.5, rel=1e-9)

    def test_phi_all_matches_phi(self):
        m = preset("integer-squares", 6)
        v = phi_all(m, 0.7)
        assert np.allclose(v, [phi(m, k, 0.7) for k in range(1, 7)], rtol=1e-15, atol=0)

    def test_bad_arguments(self):
        with pytest.raises(DomainError):
            phi(UNIT, 2, 1.0)
        with pytest.raises(DomainError):
            phi(UNIT, 1, 0.0)

    def test_phi_strictly_decreasing(self):
        m = preset("integer-squares", 4)
        for k in range(1, 5):
            # beyond 2 alpha_k T ~ 36 the decrease is below double resolution
            T = np.geomspace(1e-4, 15.0 / m.alphas[k - 1], 400)
            v = np.array([phi(m, k, t) for t in T])
            assert np.all(np.diff(v) < 0)


class TestAssumptions:
    def test_integer_squares(self):
        r = check_assumptions(preset("integer-squares", 50))
        assert r.assumption_A_holds and r.assumption_B_holds

    def test_degraded_second_mode(self):
        r = check_assumptions(model([1, 2, 9, 16]))
        assert not r.assumption_A_holds and not r.assumption_B_holds
        assert r.first_failure_A == 2 and r.first_failure_B == 2

    def test_equal_leading(self):
        r = check_assumptions(model([1, 1, 9]))
        assert not r.assumption_A_holds
        assert r.first_failure_A == 2


class TestCrossing:
    def test_zero_under_first_assumption(self):
        assert crossing_time(preset("integer-squares", 3), 2) == 0.0
        assert t0(preset("integer-squares", 20)) == 0.0

    def test_single_mode(self):
        assert t0(UNIT) == 0.0

    @pytest.mark.parametrize("a2, ref", [(12, CROSSING_A2_12), (9, CROSSING_A2_9)])
    def test_root(self, a2, ref):
        m = model([1, a2], [1, 2])
        T = crossing_time(m, 2, tol=1e-12)
        assert T == pytest.approx(ref, abs=1e-11)
        assert abs(phi(m, 1, T) - phi(m, 2, T)) < 1e-9
        assert t0(m) == T

    def test_root_matches_dense_scan(self):
        m = model([1, 12], [1, 2])
        grid = np.linspace(1e-3, 10, 200001)
        s = np.array([psi(m, 2, t) for t in grid[::100]])
        i = np.flatnonzero(np.diff(np.sign(s)))[0]
        lo, hi = grid[::100][i], grid[::100][i + 1]
        assert lo <= crossing_time(m, 2) <= hi

    def test_boundary_has_no_crossing(self):
        # 2 alpha_1 / lambda_1^2 equals alpha_2 / lambda_2^2
        with pytest.raises(NoCrossingError):
            crossing_time(model([1, 8], [1, 2]), 2)

    def test_invariant_under_scan_refinement(self):
        m = model([1, 12], [1, 2])
        ref = crossing_time(m, 2)
        for f in (1.1, 1.5, 3.0, 10.0):
            assert crossing_time(m, 2, factor=f) == pytest.approx(ref, abs=1e-11)

    def test_report(self):
        r = gap_report(model([1, 12, 40], [1, 2, 1]))
        assert r.t_k[0] > 0 and r.t_k[1] == 0.0
        assert r.t0 == r.t_k[0]
        assert r.tail_monotone
        bad = gap_report(model([1, 2, 9]))
        assert bad.t_k[0] is None and bad.t0 is None

    def test_tail_notes(self):
        r = gap_report(preset("integer-squares", 5))
        assert any("converges" in n for n in r.tail_notes)


positive = st.floats(0.05, 50.0)


@st.composite
def gapped_models(draw):
    """Models satisfying lambda_1 >= lambda_k and 3 alpha_1 < alpha_k."""
    a1 = draw(st.floats(0.1, 5.0))
    l1 = draw(st.floats(0.5, 2.0))
    n = draw(st.integers(2, 6))
    ratios = sorted(draw(st.lists(st.floats(3.01, 40.0), min_size=n - 1, max_size=n - 1)))
    lams = draw(st.lists(st.floats(0.1, 1.0), min_size=n - 1, max_size=n - 1))
    return SpectralModel((a1,) + tuple(a1 * r for r in ratios), (l1,) + tuple(l1 * f for f in lams))


@settings(max_examples=60, deadline=None)
@given(gapped_models())
def test_first_assumption_forces_e1(m):
    r = check_assumptions(m)
    assert r.assumption_A_holds and r.assumption_B_holds
    for T in np.geomspace(1e-4, 1e4, 41):
        for k in range(2, m.n_modes + 1):
            assert psi(m, k, T) < 0
    assert t0(m) == 0.0


@settings(max_examples=60, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(2.1, 30.0), st.floats(1.05, 4.0))
def test_larger_second_lambda_crosses(a1, gap, lam_ratio):
    # alpha_2 chosen so that the second assumption holds with margin
    a2 = gap * a1 * lam_ratio**2
    m = SpectralModel((a1, a2), (1.0, lam_ratio))
    assert psi(m, 2, 1e-7) > 0
    assert psi(m, 2, 1e3) < 0
    T = crossing_time(m, 2)
    assert T > 0
    assert abs(psi(m, 2, T)) < 1e-9 * max(1.0, phi(m, 1, T))
