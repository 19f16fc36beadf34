# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled batch simulator (OpenMP over trajectories).

Mirrors ``spdeis._fallback.simulate_batch`` operation for operation; see that
module for the meaning of every parameter.
"""

from cython.parallel cimport parallel, prange
from libc.math cimport exp
from libc.stdint cimport int8_t, int64_t, uint64_t
from libc.stdlib cimport free, malloc

import numpy as np


cdef extern from "_philox.h" nogil:
    void spdeis_philox(uint64_t c0, uint64_t c1, uint64_t c2, uint64_t c3,
                       uint64_t k0, uint64_t k1, uint64_t* out)
    double spdeis_zig(uint64_t r, uint64_t k0, uint64_t k1, uint64_t step, uint64_t mode,
                      uint64_t traj, uint64_t stream, const uint64_t* ki, const double* wi,
                      const double* fi)
    void spdeis_normals(double* out, int n, uint64_t k0, uint64_t k1, uint64_t step,
                        uint64_t traj, uint64_t stream, const uint64_t* ki, const double* wi,
                        const double* fi)


cdef struct Params:
    int n
    int n_proj
    int64_t steps
    int variant
    int companion
    int stop_at_exit
    int tail_from
    uint64_t k0
    uint64_t k1
    double h
    double horizon
    double L2
    double guard2
    double inv_sqrt_eps
    double half_h_over_eps
    double c1
    double alpha1
    double lambda1
    double L
    double delta
    double f2eps
    double M
    double t_star
    double z1
    const double* decay
    const double* drift
    const double* noise
    const double* x0
    const int64_t* proj
    const double* proj_lambda
    const double* cb
    const double* db
    const uint64_t* ki
    const double* wi
    const double* fi


cdef inline double _rho_pair(double f, double f2, double delta) noexcept nogil:
    cdef double d = (f - f2) / delta
    cdef double e
    if d >= 0:
        e = exp(-d)
        return e / (1.0 + e)
    return 1.0 / (1.0 + exp(d))


cdef inline double _scheme1_u(const Params* p, double t, double x1) noexcept nogil:
    cdef double e1, e2, D, base, sq, cross, f1, f2, f3, fmin, w1, w2, w3, s, g1, g2, g3
    if t > p.horizon - p.t_star:
        return 2.0 * p.alpha1 / p.lambda1 * x1
    e1 = exp(p.alpha1 * (t - p.horizon))
    e2 = e1 * e1
    D = 1.0 / p.M + 1.0 - e2
    base = p.c1 * (p.L * p.L - p.z1 * p.z1)
    sq = p.z1 * p.z1 + e2 * x1 * x1
    cross = 2.0 * e1 * p.z1 * x1
    f1 = p.c1 * (p.L * p.L - x1 * x1)
    f2 = p.c1 * (sq - cross) / D + base
    f3 = p.c1 * (sq + cross) / D + base
    fmin = f1
    if f2 < fmin:
        fmin = f2
    if f3 < fmin:
        fmin = f3
    w1 = exp(-(f1 - fmin) / p.delta)
    w2 = exp(-(f2 - fmin) / p.delta)
    w3 = exp(-(f3 - fmin) / p.delta)
    s = w1 + w2 + w3
    g1 = -2.0 * p.c1 * x1
    g2 = p.c1 * (2.0 * e2 * x1 - 2.0 * e1 * p.z1) / D
    g3 = p.c1 * (2.0 * e2 * x1 + 2.0 * e1 * p.z1) / D
    return -p.lambda1 * (w1 / s * g1 + w2 / s * g2 + w3 / s * g3)


cdef void _controls(const Params* p, double t, const double* x, double* u) noexcept nogil:
    cdef int i
    cdef double v, rho
    if p.variant == 1:
        v = 0.0
        for i in range(p.n_proj):
            v = v + x[p.proj[i]] * x[p.proj[i]]
        rho = _rho_pair(p.c1 * (p.L * p.L - v), p.f2eps, p.delta)
        for i in range(p.n_proj):
            u[i] = 2.0 * p.c1 * p.proj_lambda[i] * rho * x[p.proj[i]]
    elif p.variant == 2:
        u[0] = _scheme1_u(p, t, x[0])
    elif p.variant == 3:
        u[0] = 2.0 * p.alpha1 / p.lambda1 * x[0]


cdef void _run_one(const Params* p, int64_t traj, double* x, double* xi, double* u,
                   int8_t* exited, int64_t* exit_step, double* logw, double* x1,
                   double* norm2_out, int8_t* invalid, double* tailsup) noexcept nogil:
    cdef int j, i
    cdef int64_t k
    cdef double t, norm2, tail, su, suu, zeta, db_
    cdef double lw = 0.0
    cdef double tmax = 0.0
    cdef uint64_t w[4]
    cdef int64_t jj
    for j in range(p.n):
        x[j] = p.x0[j]
    exited[0] = 0
    exit_step[0] = -1
    invalid[0] = 0
    norm2 = 0.0
    for k in range(p.steps):
        t = k * p.h
        if p.variant != 0:
            _controls(p, t, x, u)
        spdeis_normals(xi, p.n, p.k0, p.k1, <uint64_t>k, <uint64_t>traj, 0, p.ki, p.wi, p.fi)
        if p.variant != 0:
            su = 0.0
            suu = 0.0
            for i in range(p.n_proj):
                jj = p.proj[i]
                if p.companion:
                    spdeis_philox(<uint64_t>k, <uint64_t>(jj >> 2), <uint64_t>traj, 1, p.k0, p.k1, w)
                    zeta = spdeis_zig(w[jj & 3], p.k0, p.k1, <uint64_t>k, <uint64_t>jj, <uint64_t>traj, 1,
                                      p.ki, p.wi, p.fi)
                    db_ = p.cb[i] * xi[jj] + p.db[i] * zeta
                else:
                    db_ = p.cb[i] * xi[jj]
                su = su + u[i] * db_
                suu = suu + u[i] * u[i]
            lw = lw - p.inv_sqrt_eps * su - p.half_h_over_eps * suu
        i = 0
        for j in range(p.n):
            if p.variant != 0 and i < p.n_proj and p.proj[i] == j:
                x[j] = p.decay[j] * x[j] + p.drift[j] * u[i] + p.noise[j] * xi[j]
                i = i + 1
            else:
                x[j] = p.decay[j] * x[j] + p.noise[j] * xi[j]
        norm2 = 0.0
        for j in range(p.n):
            norm2 = norm2 + x[j] * x[j]
        if not (norm2 <= p.guard2):
            invalid[0] = 1
            break
        if p.tail_from >= 0:
            tail = 0.0
            for j in range(p.tail_from, p.n):
                tail = tail + x[j] * x[j]
            if tail > tmax:
                tmax = tail
        if norm2 >= p.L2 and exited[0] == 0:
            exited[0] = 1
            exit_step[0] = k + 1
            x1[0] = x[0]
            norm2_out[0] = norm2
            if p.stop_at_exit:
                break
    if exited[0] == 0:
        x1[0] = x[0]
        norm2_out[0] = norm2
    logw[0] = lw
    tailsup[0] = tmax


def simulate_batch(dict prm, int64_t traj_start, int64_t n_traj, int threads,
                   int8_t[::1] exited, int64_t[::1] exit_step, double[::1] logw,
                   double[::1] x1, double[::1] norm2, int8_t[::1] invalid,
                   double[::1] tailsup, double[:, ::1] state):
    """Run trajectories ``traj_start .. traj_start + n_traj - 1`` in parallel."""
    cdef Params p
    cdef double[::1] decay = prm["decay"]
    cdef double[::1] drift = prm["drift"]
    cdef double[::1] noise = prm["noise"]
    cdef double[::1] x0 = prm["x0"]
    cdef int64_t[::1] proj = prm["proj"]
    cdef double[::1] proj_lambda = prm["proj_lambda"]
    cdef double[::1] cb = prm["cb"]
    cdef double[::1] db = prm["db"]
    cdef const uint64_t[::1] ki = prm["ki"]
    cdef const double[::1] wi = prm["wi"]
    cdef const double[::1] fi = prm["fi"]
    cdef int keep = state.shape[0] > 0
    cdef int64_t i
    cdef int j
    cdef double* buf
    cdef int n = decay.shape[0]

    p.n = n
    p.n_proj = proj.shape[0]
    p.steps = prm["steps"]
    p.variant = prm["variant"]
    p.companion = prm["companion"]
    p.stop_at_exit = prm["stop_at_exit"]
    p.tail_from = prm["tail_from"]
    p.k0 = prm["k0"]
    p.k1 = prm["k1"]
    p.h = prm["h"]
    p.horizon = prm["horizon"]
    p.L2 = prm["L2"]
    p.guard2 = prm["guard2"]
    p.inv_sqrt_eps = prm["inv_sqrt_eps"]
    p.half_h_over_eps = prm["half_h_over_eps"]
    p.c1 = prm["c1"]
    p.alpha1 = prm["alpha1"]
    p.lambda1 = prm["lambda1"]
    p.L = prm["L"]
    p.delta = prm["delta"]
    p.f2eps = prm["f2eps"]
    p.M = prm["M"]
    p.t_star = prm["t_star"]
    p.z1 = prm["z1"]
    p.decay = &decay[0]
    p.drift = &drift[0]
    p.noise = &noise[0]
    p.x0 = &x0[0]
    p.proj = &proj[0]
    p.proj_lambda = &proj_lambda[0]
    p.cb = &cb[0]
    p.db = &db[0]
    p.ki = &ki[0]
    p.wi = &wi[0]
    p.fi = &fi[0]

    if threads < 1:
        threads = 1
    with nogil, parallel(num_threads=threads):
        buf = <double*>malloc((2 * n + p.n_proj + 1) * sizeof(double))
        for i in prange(n_traj, schedule="dynamic", chunksize=16):
            _run_one(&p, traj_start + i, buf, buf + n, buf + 2 * n,
                     &exited[i], &exit_step[i], &logw[i], &x1[i], &norm2[i], &invalid[i], &tailsup[i])
            if keep:
                for j in range(n):
                    state[i, j] = buf[j]
        free(buf)


def normals(uint64_t k0, uint64_t k1, uint64_t step, uint64_t traj, int n, uint64_t stream,
            const uint64_t[::1] ki, const double[::1] wi, const double[::1] fi):
    """Normals for modes 0..n-1 of one trajectory (cross-check helper)."""
    out = np.empty(n)
    cdef double[::1] o = out
    spdeis_normals(&o[0], n, k0, k1, step, traj, stream, &ki[0], &wi[0], &fi[0])
    return out

