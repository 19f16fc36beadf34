"""Recompute the frozen reference values in extended precision."""

import pytest

from oracle_values import (
    CROSSING_A2_9, CROSSING_A2_12, MINIMIZER_MID, MODE_COST_T2, MOLLIFY_RHO1, MOLLIFY_U, PHI1_T1,
    SCHEME1_F2, SCHEME1_F2_DEN, SCHEME1_F2_NUM, STEP_ONE, TAIL_SUM_100, TOTAL_RATE_11,
)

mpmath = pytest.importorskip("mpmath")
mp, mpf, exp, log = mpmath.mp, mpmath.mpf, mpmath.exp, mpmath.log
mp.dps = 40


def phi1(a, lam, T):
    return a / (lam * lam * (1 - exp(-2 * a * T))) + a / (lam * lam)


def phik(a, lam, T):
    return a / (lam * lam * (1 - exp(-2 * a * T)))


def close(frozen, exact):
    assert abs(frozen - float(exact)) <= 2e-16 * max(1.0, abs(frozen))


def test_phi_and_costs():
    close(PHI1_T1, phi1(1, 1, 1))
    close(MODE_COST_T2, 1 / (1 - exp(-4)))
    close(TOTAL_RATE_11, phi1(1, 1, 2) + phik(4, 1, 2))
    close(MINIMIZER_MID, (exp(-1) - exp(-3)) / (1 - exp(-4)))


def test_step_and_controls():
    close(STEP_ONE, exp(mpf("-0.01")) + (1 - exp(mpf("-0.01"))) * 2)
    z, x = mpf("0.5"), mpf("0.3")
    num = z * z + exp(-2) * x * x - 2 * exp(-1) * z * x
    den = mpf(1) / 10 + 1 - exp(-2)
    close(SCHEME1_F2_NUM, num)
    close(SCHEME1_F2_DEN, den)
    close(SCHEME1_F2, num / den + mpf("0.75"))
    close(MOLLIFY_U, 1 - log(1 + exp(-1)))
    close(MOLLIFY_RHO1, 1 / (1 + exp(-1)))


def test_tail_sum():
    close(TAIL_SUM_100, mpmath.zeta(mpf("1.5"), 101))


@pytest.mark.parametrize("a2, frozen", [(12, CROSSING_A2_12), (9, CROSSING_A2_9)])
def test_crossing_roots(a2, frozen):
    root = mpmath.findroot(lambda T: phi1(1, 1, T) - phik(a2, 2, T), frozen)
    close(frozen, root)
