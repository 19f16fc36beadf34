"""Counter-based normal variates shared by every simulation backend.

Each standard normal is a pure function of (key, step, mode, trajectory,
stream), so a trajectory draws the same noise no matter which worker runs it
or in what order.  The bits come from Philox4x64-10 and are turned into
normals by a 256-layer ziggurat.  Every backend uses the tables built here,
so all of them produce the same variates.

Counter layout of the main block: (step, mode // 4, trajectory, stream).  One
block gives four 64-bit words, i.e. the candidates for four consecutive modes.
A ziggurat rejection draws extra blocks from (step, mode, trajectory,
0x80 | stream | attempt << 8); the high tag bit keeps them disjoint from main
blocks.
"""

from __future__ import annotations

import math

import numpy as np

RNG_ID = "philox4x64-10/ziggurat256"

STREAM_STATE = 0
STREAM_COMPANION = 1

PHILOX_M0 = 0xD2E7470EE14C6C93
PHILOX_M1 = 0xCA5A826395121157
PHILOX_W0 = 0x9E3779B97F4A7C15
PHILOX_W1 = 0xBB67AE8584CAA73B
PHILOX_ROUNDS = 10

MASK64 = (1 << 64) - 1
_M32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)

ZIG_LAYERS = 256
ZIG_R = 3.6541528853610088
ZIG_V = 0.00492867323399
RETRY_TAG = 0x80


def _build_ziggurat():
    m = 2.0**52
    ki = np.zeros(ZIG_LAYERS, dtype=np.uint64)
    wi = np.zeros(ZIG_LAYERS)
    fi = np.zeros(ZIG_LAYERS)
    dn = tn = ZIG_R
    q = ZIG_V / math.exp(-0.5 * dn * dn)
    ki[0] = int(dn / q * m)
    ki[1] = 0
    wi[0] = q / m
    wi[-1] = dn / m
    fi[0] = 1.0
    fi[-1] = math.exp(-0.5 * dn * dn)
    for i in range(ZIG_LAYERS - 2, 0, -1):
        dn = math.sqrt(-2.0 * math.log(ZIG_V / dn + math.exp(-0.5 * dn * dn)))
        ki[i + 1] = int(dn / tn * m)
        tn = dn
        fi[i] = math.exp(-0.5 * dn * dn)
        wi[i] = dn / m
    for arr in (ki, wi, fi):
        arr.flags.writeable = False
    return ki, wi, fi


ZIG_KI, ZIG_WI, ZIG_FI = _build_ziggurat()


def seed_key(seed: int) -> tuple[int, int]:
    """Philox key for an integer seed (reduced mod 2**64)."""
    return (int(seed) & MASK64, 0)


def _mulhilo(a: np.ndarray, b: int):
    bl = np.uint64(b & 0xFFFFFFFF)
    bh = np.uint64(b >> 32)
    al = a & _M32
    ah = a >> _S32
    ll = al * bl
    lh = al * bh
    hl = ah * bl
    mid = (ll >> _S32) + (lh & _M32) + (hl & _M32)
    hi = ah * bh + (lh >> _S32) + (hl >> _S32) + (mid >> _S32)
    return hi, a * np.uint64(b)


def philox4x64(c0, c1, c2, c3, key: tuple[int, int]):
    """Vectorized Philox4x64-10 over broadcastable counter words.

    Returns four uint64 arrays.  Matches the Random123 reference, e.g.
    ``numpy.random.Philox(key=k, counter=c).random_raw()`` yields the first
    output word of the block at counter ``c + 1``.
    """
    c0, c1, c2, c3 = np.broadcast_arrays(
        *(np.atleast_1d(np.asarray(c, dtype=np.uint64)) for c in (c0, c1, c2, c3))
    )
    k0, k1 = int(key[0]) & MASK64, int(key[1]) & MASK64
    for r in range(PHILOX_ROUNDS):
        hi0, lo0 = _mulhilo(c0, PHILOX_M0)
        hi1, lo1 = _mulhilo(c2, PHILOX_M1)
        c0 = hi1 ^ c1 ^ np.uint64(k0)
        c1 = lo1
        c2 = hi0 ^ c3 ^ np.uint64(k1)
        c3 = lo0
        if r < PHILOX_ROUNDS - 1:
            k0 = (k0 + PHILOX_W0) & MASK64
            k1 = (k1 + PHILOX_W1) & MASK64
    return c0, c1, c2, c3


def _to_unit(w: np.ndarray) -> np.ndarray:
    return (w >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def _zig_fast(r: np.ndarray):
    idx = (r & np.uint64(0xFF)).astype(np.intp)
    rr = r >> np.uint64(8)
    neg = (rr & np.uint64(1)).astype(bool)
    rabs = (rr >> np.uint64(1)) & np.uint64(0x000FFFFFFFFFFFFF)
    x = rabs.astype(np.float64) * ZIG_WI[idx]
    x = np.where(neg, -x, x)
    return x, rabs < ZIG_KI[idx], idx, rabs


def _zig_slow(r, key, step, mode, traj, stream):
    """Resolve rejected ziggurat candidates with retry blocks (vectorized)."""
    n = r.shape[0]
    out = np.empty(n)
    x, _, idx, rabs = _zig_fast(r)
    tail_neg = ((rabs >> np.uint64(8)) & np.uint64(1)).astype(bool)
    attempt = np.ones(n, dtype=np.uint64)
    pending = np.arange(n)
    while pending.size:
        p = pending
        tag = np.uint64(RETRY_TAG | stream) | (attempt[p] << np.uint64(8))
        w0, w1, _, _ = philox4x64(step[p], mode[p], traj[p], tag, key)
        attempt[p] += np.uint64(1)
        u0 = _to_unit(w0)
        done = np.zeros(p.size, dtype=bool)

        t = idx[p] == 0
        if t.any():
            xx = -np.log1p(-u0[t]) / ZIG_R
            yy = -np.log1p(-_to_unit(w1[t]))
            acc = yy + yy > xx * xx
            val = np.where(tail_neg[p[t]], -(ZIG_R + xx), ZIG_R + xx)
            out[p[t][acc]] = val[acc]
            done[np.flatnonzero(t)[acc]] = True

        w = ~t
        if w.any():
            wp = p[w]
            ii = idx[wp]
            acc = (ZIG_FI[ii - 1] - ZIG_FI[ii]) * u0[w] + ZIG_FI[ii] < np.exp(-0.5 * x[wp] ** 2)
            out[wp[acc]] = x[wp[acc]]
            done[np.flatnonzero(w)[acc]] = True
            # a rejected wedge point restarts from the block's second word
            rj = wp[~acc]
            if rj.size:
                xn, ok, idn, rabn = _zig_fast(w1[w][~acc])
                x[rj] = xn
                idx[rj] = idn
                tail_neg[rj] = ((rabn >> np.uint64(8)) & np.uint64(1)).astype(bool)
                out[rj[ok]] = xn[ok]
                done[np.flatnonzero(w)[~acc][ok]] = True
        pending = p[~done]
    return out


def normals(key, step, modes, traj, stream: int = STREAM_STATE) -> np.ndarray:
    """Standard normals for every (trajectory, mode) pair at one step.

    ``traj`` and ``modes`` are 1-d integer arrays (0-based mode indices); the
    result has shape ``(len(traj), len(modes))``.
    """
    traj = np.asarray(traj, dtype=np.uint64).reshape(-1, 1)
    modes = np.asarray(modes, dtype=np.uint64).ravel()
    ublk, inv = np.unique(modes >> np.uint64(2), return_inverse=True)
    blocks = philox4x64(np.uint64(step), ublk.reshape(1, -1), traj, np.uint64(stream), key)
    lane = (modes & np.uint64(3)).astype(np.intp)
    words = np.stack(blocks, axis=-1)[:, inv, lane]
    x, ok, _, _ = _zig_fast(words)
    if not ok.all():
        bad = np.nonzero(~ok)
        t_b = np.broadcast_to(traj, words.shape)[bad]
        m_b = np.broadcast_to(modes.reshape(1, -1), words.shape)[bad]
        s_b = np.full(t_b.shape, step, dtype=np.uint64)
        x[bad] = _zig_slow(words[bad], key, s_b, m_b, t_b, stream)
    return x


class TrajectoryStream:
    """The noise of a single trajectory, addressed by (step, mode)."""

    def __init__(self, seed: int, index: int):
        self.key = seed_key(seed)
        self.index = int(index)

    def normals(self, step: int, n_modes: int, stream: int = STREAM_STATE) -> np.ndarray:
        return normals(self.key, step, np.arange(n_modes), [self.index], stream)[0]
