/* Philox4x64-10 and a 256-layer ziggurat, mirroring spdeis/rng.py. */
#ifndef SPDEIS_PHILOX_H
#define SPDEIS_PHILOX_H

#include <math.h>
#include <stdint.h>

#define SPDEIS_M0 0xD2E7470EE14C6C93ULL
#define SPDEIS_M1 0xCA5A826395121157ULL
#define SPDEIS_W0 0x9E3779B97F4A7C15ULL
#define SPDEIS_W1 0xBB67AE8584CAA73BULL
#define SPDEIS_ZIG_R 3.6541528853610088
#define SPDEIS_RETRY_TAG 0x80ULL

static inline void spdeis_philox(uint64_t c0, uint64_t c1, uint64_t c2, uint64_t c3,
                                 uint64_t k0, uint64_t k1, uint64_t out[4])
{
    for (int r = 0; r < 10; r++) {
        __uint128_t p0 = (__uint128_t)c0 * SPDEIS_M0;
        __uint128_t p1 = (__uint128_t)c2 * SPDEIS_M1;
        uint64_t hi0 = (uint64_t)(p0 >> 64), lo0 = (uint64_t)p0;
        uint64_t hi1 = (uint64_t)(p1 >> 64), lo1 = (uint64_t)p1;
        c0 = hi1 ^ c1 ^ k0;
        c1 = lo1;
        c2 = hi0 ^ c3 ^ k1;
        c3 = lo0;
        k0 += SPDEIS_W0;
        k1 += SPDEIS_W1;
    }
    out[0] = c0;
    out[1] = c1;
    out[2] = c2;
    out[3] = c3;
}

static inline double spdeis_unit(uint64_t w)
{
    return (double)(w >> 11) * (1.0 / 9007199254740992.0);
}

/* Rejection path: retry blocks live at counter (step, mode, traj, tag). */
static double spdeis_zig_slow(uint64_t r, uint64_t k0, uint64_t k1, uint64_t step,
                              uint64_t mode, uint64_t traj, uint64_t stream,
                              const uint64_t *ki, const double *wi, const double *fi)
{
    uint64_t w[4];
    uint64_t attempt = 1;
    for (;;) {
        int idx = (int)(r & 0xff);
        uint64_t rr = r >> 8;
        int neg = (int)(rr & 1);
        uint64_t rabs = (rr >> 1) & 0x000fffffffffffffULL;
        double x = (double)rabs * wi[idx];
        if (neg) x = -x;
        if (rabs < ki[idx]) return x;
        if (idx == 0) {
            for (;;) {
                spdeis_philox(step, mode, traj, SPDEIS_RETRY_TAG | stream | (attempt << 8), k0, k1, w);
                attempt++;
                double xx = -log1p(-spdeis_unit(w[0])) / SPDEIS_ZIG_R;
                double yy = -log1p(-spdeis_unit(w[1]));
                if (yy + yy > xx * xx)
                    return ((rabs >> 8) & 1) ? -(SPDEIS_ZIG_R + xx) : SPDEIS_ZIG_R + xx;
            }
        }
        spdeis_philox(step, mode, traj, SPDEIS_RETRY_TAG | stream | (attempt << 8), k0, k1, w);
        attempt++;
        if ((fi[idx - 1] - fi[idx]) * spdeis_unit(w[0]) + fi[idx] < exp(-0.5 * x * x)) return x;
        r = w[1];
    }
}

static inline double spdeis_zig(uint64_t r, uint64_t k0, uint64_t k1, uint64_t step,
                                uint64_t mode, uint64_t traj, uint64_t stream,
                                const uint64_t *ki, const double *wi, const double *fi)
{
    int idx = (int)(r & 0xff);
    uint64_t rr = r >> 8;
    uint64_t rabs = (rr >> 1) & 0x000fffffffffffffULL;
    if (rabs < ki[idx]) {
        /* branch-free sign: flip the sign bit of x */
        union { double d; uint64_t u; } v;
        v.d = (double)(int64_t)rabs * wi[idx];
        v.u ^= (rr & 1) << 63;
        return v.d;
    }
    return spdeis_zig_slow(r, k0, k1, step, mode, traj, stream, ki, wi, fi);
}

/* Normals for modes [0, n) of one trajectory at one step.  Bits for a chunk
 * of modes are generated first in a branch-free loop so independent Philox
 * blocks overlap in the pipeline; the ziggurat then runs over the buffer. */
#define SPDEIS_CHUNK 64
static inline void spdeis_normals(double *out, int n, uint64_t k0, uint64_t k1, uint64_t step,
                                  uint64_t traj, uint64_t stream,
                                  const uint64_t *ki, const double *wi, const double *fi)
{
    uint64_t words[SPDEIS_CHUNK];
    for (int base = 0; base < n; base += SPDEIS_CHUNK) {
        int m = n - base < SPDEIS_CHUNK ? n - base : SPDEIS_CHUNK;
        for (int b = 0; 4 * b < m; b++)
            spdeis_philox(step, (uint64_t)(base / 4 + b), traj, stream, k0, k1, words + 4 * b);
        for (int l = 0; l < m; l++)
            out[base + l] = spdeis_zig(words[l], k0, k1, step, (uint64_t)(base + l), traj, stream, ki, wi, fi);
    }
}

#endif
