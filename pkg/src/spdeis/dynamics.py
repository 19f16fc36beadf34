"""Exponential Euler time stepping of the Galerkin-projected controlled SPDE.

Per mode j and step h the state update is exact for frozen control:

    x' = e^{-a h} x + (1 - e^{-a h})/a * lambda_j u_j + sqrt(eps) lambda_j eta_j

with eta_j ~ N(0, (1 - e^{-2 a h}) / (2a)).  The log-likelihood ratio needs
the raw Brownian increment dB_j, which is sampled jointly with eta_j:
dB_j = (C / s) xi_j + sqrt(h - C^2 / s^2) zeta_j where s^2 = Var(eta_j),
C = Cov(eta_j, dB_j) = (1 - e^{-a h}) / a and xi_j, zeta_j are independent
standard normals.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import _backend, rng
from .controls import ResolvedScheme, SchemeConfig, control_vector
from .exceptions import ConfigError, DomainError
from .spectral import SpectralModel

GUARD_FACTOR = 1e3


@dataclass(frozen=True)
class SimConfig:
    eps: float
    horizon: float
    radius: float = 1.0
    steps: int = 1200
    n_modes: Optional[int] = None
    initial: Optional[tuple] = None
    exact_brownian: bool = True

    def __post_init__(self):
        if not (self.eps >= 0 and math.isfinite(self.eps)):
            raise ConfigError(f"eps must be a nonnegative number, got {self.eps}")
        if not self.horizon > 0:
            raise ConfigError(f"horizon must be positive, got {self.horizon}")
        if not self.radius > 0:
            raise ConfigError(f"radius must be positive, got {self.radius}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ConfigError(f"steps must be a positive integer, got {self.steps}")
        if self.n_modes is not None and self.n_modes < 1:
            raise ConfigError("n_modes must be positive")
        if self.initial is not None:
            x0 = tuple(float(v) for v in self.initial)
            if math.fsum(v * v for v in x0) >= self.radius**2:
                raise ConfigError("initial state must lie strictly inside the ball")
            object.__setattr__(self, "initial", x0)
        object.__setattr__(self, "steps", int(self.steps))

    @property
    def h(self) -> float:
        return self.horizon / self.steps

    def with_cell(self, eps: float, horizon: float) -> "SimConfig":
        """Same time step, new (eps, T); the step count is rescaled."""
        steps = max(1, int(round(self.steps * horizon / self.horizon)))
        return replace(self, eps=float(eps), horizon=float(horizon), steps=steps)

    def model_for(self, model: SpectralModel) -> SpectralModel:
        return model if self.n_modes is None or self.n_modes == model.n_modes else model.truncate(self.n_modes)

    def initial_state(self, n: int) -> np.ndarray:
        x = np.zeros(n)
        if self.initial is not None:
            if len(self.initial) > n:
                raise ConfigError(f"initial state has {len(self.initial)} coefficients but N={n}")
            x[: len(self.initial)] = self.initial
        return x


@dataclass(frozen=True)
class TrajectoryOutcome:
    exited: bool
    exit_step: Optional[int]
    exit_time: Optional[float]
    exit_coeffs: Optional[np.ndarray]
    log_weight: float
    e1_share: Optional[float]
    invalid: bool = False


def noise_coefficients(model: SpectralModel, sim: SimConfig, exact_brownian: bool = True):
    """(decay, drift, noise, cb, db) arrays for the update and the weight."""
    a = model.alpha_array
    lam = model.lambda_array
    h = sim.h
    x = a * h
    decay = np.exp(-x)
    C = -np.expm1(-x) / a
    var = -np.expm1(-2.0 * x) / (2.0 * a)
    s = np.sqrt(var)
    if exact_brownian:
        cb = C / s
        # h - C^2/s^2 = (x - 2 tanh(x/2)) / a, by series when x is small
        resid = np.where(
            x < 1e-2,
            x**3 / 12.0 - x**5 / 120.0 + 17.0 * x**7 / 20160.0,
            x - 2.0 * np.tanh(0.5 * x),
        ) / a
        db = np.sqrt(np.maximum(resid, 0.0))
    else:
        cb = s.copy()
        db = np.zeros_like(s)
    noise = math.sqrt(sim.eps) * lam * s
    return decay, C * lam, noise, cb, db


def step(state, model: SpectralModel, sim: SimConfig, control_coeffs, noise) -> np.ndarray:
    """One exponential Euler step given control u and standard normals xi."""
    state = np.asarray(state, dtype=float)
    u = np.asarray(control_coeffs, dtype=float)
    xi = np.asarray(noise, dtype=float)
    n = model.n_modes
    if not state.shape == u.shape == xi.shape == (n,):
        raise DomainError(f"state, control and noise must all have length N={n}")
    decay, drift, nz, _, _ = noise_coefficients(model, sim)
    return decay * state + drift * u + nz * xi


def exit_check(state, L: float) -> bool:
    x = np.asarray(state, dtype=float)
    return bool(math.fsum(x * x) >= L * L)


def _resolve(scheme, model: SpectralModel, sim: SimConfig) -> ResolvedScheme:
    if isinstance(scheme, ResolvedScheme):
        return scheme
    if scheme is None:
        scheme = SchemeConfig("none")
    r = scheme.resolve(model, sim.radius, sim.eps) if sim.eps > 0 else scheme.resolve(model, sim.radius, 1.0)
    if sim.eps == 0 and r.variant != "none":
        raise ConfigError("eps = 0 is only meaningful without a change of measure")
    return r


def run_trajectory(model: SpectralModel, sim: SimConfig, scheme, rng_stream: rng.TrajectoryStream) -> TrajectoryOutcome:
    """Reference single-path simulator (plain Python; slow but transparent).

    Consumes the same counter-based noise as the batch kernels, so the two
    must agree path by path.
    """
    model = sim.model_for(model)
    r = _resolve(scheme, model, sim)
    n = model.n_modes
    decay, drift, nz, cb, db = noise_coefficients(model, sim, sim.exact_brownian)
    x = sim.initial_state(n)
    L2 = sim.radius**2
    guard2 = (GUARD_FACTOR * sim.radius) ** 2
    proj = np.asarray(r.config.projected_modes) - 1
    lw = 0.0
    for k in range(sim.steps):
        t = k * sim.h
        u = control_vector(model, r, t, sim.horizon, x)
        xi = rng_stream.normals(k, n, rng.STREAM_STATE)
        if r.variant != "none":
            zeta = rng_stream.normals(k, n, rng.STREAM_COMPANION) if sim.exact_brownian else np.zeros(n)
            dB = cb[proj] * xi[proj] + db[proj] * zeta[proj]
            lw += -math.fsum(u[proj] * dB) / math.sqrt(sim.eps) - sim.h / (2.0 * sim.eps) * math.fsum(u[proj] ** 2)
        x = decay * x + drift * u + nz * xi
        n2 = math.fsum(x * x)
        if not n2 <= guard2:
            return TrajectoryOutcome(False, None, None, None, lw, None, invalid=True)
        if n2 >= L2:
            return TrajectoryOutcome(True, k + 1, (k + 1) * sim.h, x.copy(), lw, x[0] ** 2 / n2)
    return TrajectoryOutcome(False, None, None, x.copy(), lw, None)


def kernel_params(
    model: SpectralModel,
    sim: SimConfig,
    scheme: ResolvedScheme,
    seed: int,
    tail_from: int = -1,
    stop_at_exit: bool = True,
) -> dict:
    """Flat parameter dictionary understood by both batch backends."""
    n = model.n_modes
    decay, drift, nz, cb, db = noise_coefficients(model, sim, sim.exact_brownian)
    proj = np.asarray(scheme.config.projected_modes, dtype=np.int64) - 1
    k0, k1 = rng.seed_key(seed)
    eps = sim.eps
    return {
        "decay": decay,
        "drift": drift,
        "noise": nz,
        "x0": sim.initial_state(n),
        "proj": proj,
        "proj_lambda": model.lambda_array[proj].copy(),
        "cb": cb[proj].copy(),
        "db": db[proj].copy(),
        "ki": rng.ZIG_KI,
        "wi": rng.ZIG_WI,
        "fi": rng.ZIG_FI,
        "steps": sim.steps,
        "variant": scheme.code,
        "companion": int(sim.exact_brownian),
        "stop_at_exit": int(stop_at_exit),
        "tail_from": int(tail_from),
        "k0": k0,
        "k1": k1,
        "h": sim.h,
        "horizon": sim.horizon,
        "L2": sim.radius**2,
        "guard2": (GUARD_FACTOR * sim.radius) ** 2,
        "inv_sqrt_eps": 1.0 / math.sqrt(eps) if eps > 0 else 0.0,
        "half_h_over_eps": sim.h / (2.0 * eps) if eps > 0 else 0.0,
        "c1": scheme.c1,
        "alpha1": scheme.alpha1,
        "lambda1": scheme.lambda1,
        "L": sim.radius,
        "delta": scheme.delta,
        "f2eps": scheme.f2eps,
        "M": scheme.M,
        "t_star": scheme.t_star,
        "z1": scheme.z1,
    }


@dataclass
class BatchResult:
    exited: np.ndarray
    exit_step: np.ndarray
    log_weight: np.ndarray
    x1: np.ndarray
    norm2: np.ndarray
    invalid: np.ndarray
    tail_sup: np.ndarray
    state: Optional[np.ndarray]
    h: float

    def __len__(self):
        return self.exited.size

    def outcome(self, i: int) -> TrajectoryOutcome:
        ex = bool(self.exited[i])
        coeffs = None if self.state is None else self.state[i].copy()
        return TrajectoryOutcome(
            ex,
            int(self.exit_step[i]) if ex else None,
            float(self.exit_step[i] * self.h) if ex else None,
            coeffs,
            float(self.log_weight[i]),
            float(self.x1[i] ** 2 / self.norm2[i]) if ex else None,
            bool(self.invalid[i]),
        )


def default_threads() -> int:
    return os.cpu_count() or 1


def simulate(
    model: SpectralModel,
    sim: SimConfig,
    scheme,
    seed: int,
    n_traj: int,
    traj_start: int = 0,
    threads: Optional[int] = None,
    keep_state: bool = False,
    tail_from: Optional[int] = None,
    stop_at_exit: bool = True,
    backend: Optional[str] = None,
) -> BatchResult:
    """Simulate trajectories ``traj_start .. traj_start + n_traj - 1``.

    ``tail_from`` (0-based) additionally records the running maximum of the
    squared norm of modes ``tail_from..N-1``.
    """
    model = sim.model_for(model)
    r = _resolve(scheme, model, sim)
    n_traj = int(n_traj)
    if n_traj < 0:
        raise ConfigError("n_traj must be nonnegative")
    prm = kernel_params(model, sim, r, seed, -1 if tail_from is None else tail_from, stop_at_exit)
    n = model.n_modes
    out = BatchResult(
        exited=np.zeros(n_traj, dtype=np.int8),
        exit_step=np.full(n_traj, -1, dtype=np.int64),
        log_weight=np.zeros(n_traj),
        x1=np.zeros(n_traj),
        norm2=np.zeros(n_traj),
        invalid=np.zeros(n_traj, dtype=np.int8),
        tail_sup=np.zeros(n_traj),
        state=np.zeros((n_traj, n)) if keep_state else None,
        h=sim.h,
    )
    if n_traj == 0:
        return out
    state_buf = out.state if keep_state else np.zeros((0, n))
    fn = _backend.get(backend)
    fn(
        prm, int(traj_start), n_traj, int(threads or default_threads()),
        out.exited, out.exit_step, out.log_weight, out.x1, out.norm2, out.invalid, out.tail_sup, state_buf,
    )
    out.exited = out.exited.astype(bool)
    out.invalid = out.invalid.astype(bool)
    return out
