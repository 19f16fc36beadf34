"""Pure-numpy batch simulator, vectorized across trajectories.

Used when the compiled extension is unavailable.  It performs the same
floating-point operations in the same order as the compiled kernel
(including a sequential sum for the squared norm), so the two agree to the
last few ulps.  ``threads`` is accepted for interface parity and ignored.
"""

from __future__ import annotations

import math

import numpy as np

from . import rng

CHUNK = 2048


def _rho_pair(f, f2, delta):
    d = (f - f2) / delta
    e = np.exp(-np.abs(d))
    return np.where(d >= 0, e / (1.0 + e), 1.0 / (1.0 + e))


def _controls(p, t, x):
    v = p["variant"]
    proj = p["proj"]
    if v == 1:
        s = x[:, proj[0]] * x[:, proj[0]]
        for j in proj[1:]:
            s = s + x[:, j] * x[:, j]
        rho = _rho_pair(p["c1"] * (p["L"] * p["L"] - s), p["f2eps"], p["delta"])
        return [2.0 * p["c1"] * p["proj_lambda"][i] * rho * x[:, j] for i, j in enumerate(proj)]
    x1 = x[:, 0]
    if v == 3:
        return [2.0 * p["alpha1"] / p["lambda1"] * x1]
    # scheme1
    if t > p["horizon"] - p["t_star"]:
        return [2.0 * p["alpha1"] / p["lambda1"] * x1]
    c1, L, z1, delta = p["c1"], p["L"], p["z1"], p["delta"]
    e1 = math.exp(p["alpha1"] * (t - p["horizon"]))
    e2 = e1 * e1
    D = 1.0 / p["M"] + 1.0 - e2
    base = c1 * (L * L - z1 * z1)
    sq = z1 * z1 + e2 * x1 * x1
    cross = 2.0 * e1 * z1 * x1
    f1 = c1 * (L * L - x1 * x1)
    f2 = c1 * (sq - cross) / D + base
    f3 = c1 * (sq + cross) / D + base
    fmin = np.minimum(np.minimum(f1, f2), f3)
    w1 = np.exp(-(f1 - fmin) / delta)
    w2 = np.exp(-(f2 - fmin) / delta)
    w3 = np.exp(-(f3 - fmin) / delta)
    s = w1 + w2 + w3
    g1 = -2.0 * c1 * x1
    g2 = c1 * (2.0 * e2 * x1 - 2.0 * e1 * z1) / D
    g3 = c1 * (2.0 * e2 * x1 + 2.0 * e1 * z1) / D
    return [-p["lambda1"] * (w1 / s * g1 + w2 / s * g2 + w3 / s * g3)]


def _run_chunk(p, trajs, out, keep, tail_from):
    n = p["decay"].shape[0]
    key = (p["k0"], p["k1"])
    variant = p["variant"]
    proj = list(p["proj"]) if variant != 0 else []
    pset = {j: i for i, j in enumerate(proj)}
    m = trajs.size
    x = np.tile(p["x0"], (m, 1))
    lw = np.zeros(m)
    tmax = np.zeros(m)
    alive = np.arange(m)  # rows of the chunk still being simulated
    modes = np.arange(n)
    for k in range(p["steps"]):
        if alive.size == 0:
            break
        xa = x[alive]
        t = k * p["h"]
        u = _controls(p, t, xa) if variant != 0 else []
        xi = rng.normals(key, k, modes, trajs[alive], rng.STREAM_STATE)
        if variant != 0:
            su = np.zeros(alive.size)
            suu = np.zeros(alive.size)
            if p["companion"]:
                zeta = rng.normals(key, k, np.asarray(proj), trajs[alive], rng.STREAM_COMPANION)
            for i, j in enumerate(proj):
                if p["companion"]:
                    db = p["cb"][i] * xi[:, j] + p["db"][i] * zeta[:, i]
                else:
                    db = p["cb"][i] * xi[:, j]
                su = su + u[i] * db
                suu = suu + u[i] * u[i]
            lw[alive] = lw[alive] - p["inv_sqrt_eps"] * su - p["half_h_over_eps"] * suu
        for j in range(n):
            if j in pset:
                xa[:, j] = p["decay"][j] * xa[:, j] + p["drift"][j] * u[pset[j]] + p["noise"][j] * xi[:, j]
            else:
                xa[:, j] = p["decay"][j] * xa[:, j] + p["noise"][j] * xi[:, j]
        x[alive] = xa
        norm2 = xa[:, 0] * xa[:, 0]
        for j in range(1, n):
            norm2 = norm2 + xa[:, j] * xa[:, j]
        bad = ~(norm2 <= p["guard2"])
        if tail_from >= 0:
            tail = np.zeros(alive.size)
            for j in range(tail_from, n):
                tail = tail + xa[:, j] * xa[:, j]
            tmax[alive] = np.maximum(tmax[alive], np.where(bad, tmax[alive], tail))
        hit = ~bad & (norm2 >= p["L2"]) & (out["exited"][alive] == 0)
        if hit.any():
            rows = alive[hit]
            out["exited"][rows] = 1
            out["exit_step"][rows] = k + 1
            out["x1"][rows] = xa[hit, 0]
            out["norm2"][rows] = norm2[hit]
        if bad.any():
            out["invalid"][alive[bad]] = 1
        stop = bad | hit if p["stop_at_exit"] else bad
        if stop.any():
            alive = alive[~stop]
    # paths that never exited report their final state
    still = np.flatnonzero(out["exited"] == 0)
    if still.size:
        out["x1"][still] = x[still, 0]
        fin = x[still, 0] * x[still, 0]
        for j in range(1, n):
            fin = fin + x[still, j] * x[still, j]
        out["norm2"][still] = fin
    out["logw"][:] = lw
    out["tailsup"][:] = tmax
    if keep:
        out["state"][:] = x


def simulate_batch(prm, traj_start, n_traj, threads, exited, exit_step, logw, x1, norm2, invalid, tailsup, state):
    keep = state.shape[0] > 0
    exited[:] = 0
    exit_step[:] = -1
    invalid[:] = 0
    for lo in range(0, n_traj, CHUNK):
        hi = min(lo + CHUNK, n_traj)
        out = {
            "exited": exited[lo:hi],
            "exit_step": exit_step[lo:hi],
            "logw": logw[lo:hi],
            "x1": x1[lo:hi],
            "norm2": norm2[lo:hi],
            "invalid": invalid[lo:hi],
            "tailsup": tailsup[lo:hi],
            "state": state[lo:hi] if keep else None,
        }
        trajs = np.arange(traj_start + lo, traj_start + hi, dtype=np.uint64)
        _run_chunk(prm, trajs, out, keep, prm["tail_from"])
