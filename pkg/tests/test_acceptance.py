"""Acceptance criteria, each run at its stated tolerance.

Every test records a one-line verdict that is printed in the terminal
summary, whether or not the assertion holds.
"""

import math
import os
import time

import numpy as np
from scipy.integrate import quad

from acceptance_log import record
from spdeis import SchemeConfig, SimConfig, SpectralModel, preset
from spdeis.controls import (
    mollify, scheme1_control, scheme1_u_delta, scheme2_control, scheme2_u_delta, verify_regions,
)
from spdeis.dynamics import simulate
from spdeis.estimator import estimate
from spdeis.galerkin import CALIBRATION, discrepancy_check, within_calibration
from spdeis.spectral import crossing_time, phi, psi
from spdeis.variational import euler_lagrange_residual, minimizer, mode_cost

SQ4 = preset("integer-squares", 4)
SQ100 = preset("integer-squares", 100)
UNIT = SpectralModel((1.0,), (1.0,))


def run(model, eps, T, steps, scheme, K, seed, threads=None):
    return estimate(model, SimConfig(eps, T, 1.0, steps), scheme, K, seed, threads)


def test_01_unbiased_across_schemes():
    reps = {}
    for name, scheme in (
        ("none", SchemeConfig("none")),
        ("scheme1", SchemeConfig("scheme1")),
        # kappa = 0.6 violates the scheme-2 precondition at eps = 0.3
        ("scheme2", SchemeConfig("scheme2", kappa=0.4)),
    ):
        reps[name] = run(SQ4, 0.3, 2.0, 400, scheme, 10**5, 101)
    worst = 0.0
    names = list(reps)
    for i in range(3):
        for j in range(i + 1, 3):
            a, b = reps[names[i]], reps[names[j]]
            worst = max(worst, abs(a.estimate - b.estimate) / math.hypot(a.std_err, b.std_err))
    detail = ", ".join(f"{k} {r.estimate:.5f}+-{r.std_err:.5f}" for k, r in reps.items())
    ok = record(1, "unbiasedness cross-check", worst <= 3.0, f"{detail}; worst gap {worst:.2f} combined SE")
    assert ok


def test_02_magnitudes():
    s2 = SchemeConfig("scheme2", kappa=0.6)
    mid = run(SQ100, 0.06, 12.0, 1200, s2, 10**5, 202)
    deep = run(SQ100, 0.02, 12.0, 1200, s2, 10**5, 203)
    ok_mid = 1.6e-6 <= mid.estimate <= 6.5e-6
    ok_deep = deep.estimate > 0 and abs(math.log10(deep.estimate / 1.6e-20)) <= 1.0
    ok = record(
        2, "magnitude check", ok_mid and ok_deep,
        f"eps=0.06: {mid.estimate:.3e} (band [1.6e-6, 6.5e-6]); eps=0.02: {deep.estimate:.3e} (target 1.6e-20 within 10x)",
    )
    assert ok


def test_03_relative_error():
    s2 = SchemeConfig("scheme2")
    r4 = run(SQ4, 0.09, 12.0, 1200, s2, 20000, 303)
    r100 = run(SQ100, 0.09, 12.0, 1200, s2, 20000, 304)
    a, b = r4.re_per_sample, r100.re_per_sample
    in_band = all(0.6 <= v <= 1.3 for v in (a, b))
    agree = abs(b / a - 1.0) <= 0.25
    ok = record(3, "relative error per sample", in_band and agree,
                f"N=4: {a:.3f}, N=100: {b:.3f} (band [0.6, 1.3]); N=100/N=4 - 1 = {b / a - 1:+.3f}")
    assert ok


def test_04_dimension_contrast():
    mc = run(SQ100, 0.08, 12.0, 1200, SchemeConfig("none"), 20000, 404)
    s2 = run(SQ100, 0.08, 12.0, 1200, SchemeConfig("scheme2"), 20000, 405)
    ok = mc.re_per_sample > 30 and s2.re_per_sample < 1.5 and mc.re_per_sample >= 5 * s2.re_per_sample
    ok = record(4, "dimension-degradation contrast", ok,
                f"standard MC re {mc.re_per_sample:.1f}{' (no successes)' if mc.no_successes else ''}, "
                f"scheme2 re {s2.re_per_sample:.3f}, ratio {mc.re_per_sample / s2.re_per_sample:.1f}")
    assert ok


def test_05_rate_slope():
    target = 1.0 / (1.0 - math.exp(-24.0))
    rates = {}
    for eps, seed in ((0.04, 501), (0.02, 502)):
        r = run(SQ4, eps, 12.0, 1200, SchemeConfig("scheme2"), 10**5, seed)
        rates[eps] = -eps * math.log(r.estimate)
    within = all(abs(v / target - 1) <= 0.15 for v in rates.values())
    toward = abs(rates[0.02] - target) < abs(rates[0.04] - target)
    ok = record(5, "rate slope", within and toward,
                f"-eps log theta: eps=0.04 {rates[0.04]:.4f}, eps=0.02 {rates[0.02]:.4f}; target {target:.4f} +-15%")
    assert ok


def test_06_region_verification():
    rep = verify_regions(UNIT, 1.0, SchemeConfig("scheme2", kappa=0.6, eta=0.25), 0.04, samples=10**4)
    mins = ", ".join(f"{g.name} {g.min_bound:.3e}" for g in rep.regions)
    ok = record(6, "region verification", rep.passed,
                f"min bound {mins}; threshold {-rep.slack:.3e}; value at x1=0 is {rep.bound_origin:.3e}")
    assert ok


def _mollifier_check(n_calls):
    rng = np.random.default_rng(7)
    bad = 0
    for _ in range(n_calls):
        m = int(rng.integers(1, 5))
        delta = 10.0 ** rng.uniform(-3, 1)
        spread = 10.0 ** rng.uniform(-2, 8)
        f = rng.uniform(-1, 1, size=m) * spread * delta
        s = mollify(f, delta)
        w = s.weights
        tol = 4e-16 * max(1.0, abs(f.min()))
        if not (abs(w.sum() - 1) <= 1e-12 and np.all((w >= 0) & (w <= 1))):
            bad += 1
        elif not (f.min() - delta * math.log(m) - tol <= s.u_delta <= f.min() + tol):
            bad += 1
    return bad


def _gradient_check():
    worst = 0.0
    eps = 0.04
    m = SpectralModel((2.0, 9.0), (0.7, 0.5))
    l1 = m.lambdas[0]
    r1 = SchemeConfig("scheme1", kappa=0.5).resolve(m, 1.0, eps)
    T = 6.0
    for x in np.linspace(-0.95, 0.95, 39):
        h = 1e-6 * max(1.0, abs(x))
        u = scheme2_control(m, 1.0, 0.6, 2 * eps, eps, x)
        g = (scheme2_u_delta(m, 1.0, 0.6, 2 * eps, eps, x + h) - scheme2_u_delta(m, 1.0, 0.6, 2 * eps, eps, x - h)) / (2 * h)
        worst = max(worst, abs(u + l1 * g) / max(abs(u), 1e-3))
        for t in (0.5, T - r1.t_star + 0.1):
            u = scheme1_control(m, 1.0, r1, t, T, x)
            g = (scheme1_u_delta(m, 1.0, r1, t, T, x + h) - scheme1_u_delta(m, 1.0, r1, t, T, x - h)) / (2 * h)
            worst = max(worst, abs(u + l1 * g) / max(abs(u), 1e-3))
    return worst


def test_07_analytic_suite():
    checks = {}
    t0 = time.perf_counter()
    checks["mollifier 1e6"] = _mollifier_check(10**6) == 0
    checks["gradient 1e-6"] = _gradient_check() <= 1e-6

    res = []
    for h in (1e-2, 5e-3, 2.5e-3):
        res.append(euler_lagrange_residual(minimizer(UNIT, 2.0, [1.0], grid=int(round(2 / h)) + 1), UNIT))
    orders = [math.log2(res[i] / res[i + 1]) for i in range(2)]
    checks["EL order 2"] = all(1.8 <= o <= 2.2 for o in orders)

    worst_q = 0.0
    for a, lam, z, T in ((1.0, 1.0, 1.0, 2.0), (4.0, 0.5, -0.3, 0.7), (9.0, 2.0, 2.0, 0.05), (0.3, 1.5, 0.8, 12.0)):
        def v2(t):
            return 0.5 * (2 * z * a * math.exp(-a * (T - t)) / (lam * (1 - math.exp(-2 * a * T)))) ** 2
        val, _ = quad(v2, 0, T, epsabs=1e-12, epsrel=1e-12)
        worst_q = max(worst_q, abs(mode_cost(SpectralModel((a,), (lam,)), 1, z, T) / val - 1))
    checks["mode_cost quadrature 1e-8"] = worst_q <= 1e-8

    grid = np.geomspace(1e-4, 1e4, 161)
    checks["psi < 0 under A"] = all(psi(SQ100.truncate(20), k, T) < 0 for k in range(2, 21) for T in grid)

    worst_root = 0.0
    for a2 in (9.0, 12.0, 16.0, 40.0):
        m = SpectralModel((1.0, a2), (1.0, 2.0))
        T = crossing_time(m, 2, tol=1e-12)
        worst_root = max(worst_root, abs(phi(m, 1, T) - phi(m, 2, T)))
    checks["crossing residual 1e-9"] = worst_root < 1e-9

    b = simulate(SQ4, SimConfig(0.3, 2.0, steps=400), SchemeConfig("scheme2", kappa=0.4), 707, 10**5)
    w = np.exp(b.log_weight)
    z = abs(w.mean() - 1) / (w.std(ddof=1) / math.sqrt(w.size))
    checks["Girsanov mean one"] = z <= 3

    ok = all(checks.values())
    detail = "; ".join(f"{k} {'ok' if v else 'FAILED'}" for k, v in checks.items())
    detail += f" (EL orders {orders[0]:.2f}/{orders[1]:.2f}, weight mean {w.mean():.4f} at {z:.2f} SE, {time.perf_counter() - t0:.0f}s)"
    assert record(7, "analytic and property suite", ok, detail)


def test_08_exit_direction():
    s2 = SchemeConfig("scheme2")
    conc = {}
    for eps, seed in ((0.09, 801), (0.06, 802), (0.04, 803)):
        conc[eps] = run(SQ100, eps, 8.0, 800, s2, 20000, seed).e1_concentration
    mc = run(SQ100, 0.3, 8.0, 800, SchemeConfig("none"), 20000, 804).e1_concentration
    trend = conc[0.09] < conc[0.06] < conc[0.04]
    ok = conc[0.04] >= 0.9 and conc[0.04] > mc and trend
    detail = ", ".join(f"eps={e}: {c:.4f}" for e, c in conc.items()) + f"; standard MC at eps=0.3: {mc:.4f}"
    assert record(8, "exit-direction concentration", ok, detail)


def test_09_determinism_and_scaling():
    sim = SimConfig(0.06, 12.0, 1.0, 1200)
    s2 = SchemeConfig("scheme2")
    reps = [estimate(SQ100, sim, s2, 2000, 909, threads=t).comparable() for t in (1, 4, 8)]
    same = reps[0] == reps[1] == reps[2]

    def rate(threads):
        t0 = time.perf_counter()
        simulate(SQ100, sim, s2, 910, 4000, threads=threads)
        return 4000 / (time.perf_counter() - t0)

    r1, r4 = rate(1), rate(4)
    scale = r4 / r1
    ok = same and scale >= 3.0
    detail = (f"reports identical for 1/4/8 workers: {same}; throughput 1 worker {r1:.0f} paths/s, "
              f"4 workers {r4:.0f} paths/s, scaling {scale:.2f}x on {os.cpu_count()} cpu(s)")
    assert record(9, "determinism and scaling", ok, detail)


def test_10_galerkin_regression():
    c = CALIBRATION
    out = {}
    for eps, seed in ((0.1, 1001), (0.05, 1002)):
        out[eps] = discrepancy_check(SQ100, c["N"], eps, c["T"], K=4000, seed=seed, gamma=c["gamma"], dt=c["dt"])
    in_band = all(within_calibration(ch.ratio) for ch in out.values())
    slope = math.log(out[0.1].empirical_sup_mean / out[0.05].empirical_sup_mean) / math.log(2.0)
    ok = in_band and 0.4 <= slope <= 0.6
    detail = ", ".join(f"eps={e}: ratio {ch.ratio:.5f}" for e, ch in out.items())
    detail += f" (band {c['ratio']} +-{c['band']:.0%}); sqrt(eps) slope {slope:.3f}"
    assert record(10, "Galerkin bound regression", ok, detail)
