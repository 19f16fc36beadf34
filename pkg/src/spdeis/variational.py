"""Closed-form solution of the noiseless control problem.

Starting from 0, the cheapest control that puts mode k at z_k by time T
yields the trajectory ``y_k(t) = z_k (e^{-a(T-t)} - e^{-a(t+T)}) / (1 - e^{-2aT})``.
Its cost is quadratic in the endpoint, which is where the spectral functions
``phi_k`` come from.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .exceptions import DomainError
from .spectral import SpectralModel, one_minus_exp, phi_all


@dataclass(frozen=True)
class MinimizerTrajectory:
    horizon: float
    endpoint: np.ndarray
    times: np.ndarray
    samples: np.ndarray  # shape (len(times), n_modes)
    cost: float


class ExitDirection(NamedTuple):
    mode: int
    value: float
    degenerate: bool


def _endpoint(model: SpectralModel, z) -> np.ndarray:
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if z.size == 0:
        raise DomainError("endpoint must have at least one coefficient")
    if z.size > model.n_modes:
        raise DomainError(f"endpoint has {z.size} coefficients but the model has {model.n_modes} modes")
    return z


def minimizer_values(model: SpectralModel, T: float, z, t) -> np.ndarray:
    """Optimal trajectory evaluated at times ``t``; shape (len(t), len(z))."""
    if not T > 0:
        raise DomainError("horizon must be positive")
    z = _endpoint(model, z)
    a = model.alpha_array[: z.size]
    t = np.atleast_1d(np.asarray(t, dtype=float))[:, None]
    num = np.exp(-a * (T - t)) - np.exp(-a * (t + T))
    return z * num / one_minus_exp(2.0 * a * T)


def mode_cost(model: SpectralModel, k: int, z_k: float, T: float) -> float:
    """Control energy spent on mode k alone."""
    if not T > 0:
        raise DomainError("horizon must be positive")
    if not 1 <= k <= model.n_modes:
        raise DomainError(f"mode index {k} outside 1..{model.n_modes}")
    a = model.alphas[k - 1]
    lam = model.lambdas[k - 1]
    return a * z_k * z_k / (lam * lam * float(one_minus_exp(2.0 * a * T)))


def total_rate(model: SpectralModel, z, T: float) -> float:
    """Quadratic exit cost of the endpoint z: sum_k phi_k(T) z_k**2.

    phi_1 carries the extra alpha_1/lambda_1**2 term from the boundary
    contribution of the first mode.
    """
    z = _endpoint(model, z)
    ph = phi_all(model, T)[: z.size]
    return math.fsum(ph * z * z)


def minimizer(model: SpectralModel, T: float, z, grid: int = 201) -> MinimizerTrajectory:
    """Sample the optimal trajectory on a uniform grid of ``grid`` points."""
    if grid < 2:
        raise DomainError("grid needs at least two points")
    z = _endpoint(model, z)
    times = np.linspace(0.0, T, int(grid))
    samples = minimizer_values(model, T, z, times)
    # pin the endpoints exactly; the closed form matches them only to rounding
    samples[0] = 0.0
    samples[-1] = z
    return MinimizerTrajectory(T, z.copy(), times, samples, total_rate(model, z, T))


def minimal_exit(model: SpectralModel, L: float, T: float, rtol: float = 1e-12) -> ExitDirection:
    """Cheapest exit mode on the sphere |z| = L and its cost.

    Ties (within ``rtol``) go to the lowest index and set ``degenerate``.
    """
    ph = phi_all(model, T)
    best = float(ph.min())
    ties = np.flatnonzero(ph <= best * (1.0 + rtol))
    return ExitDirection(int(ties[0]) + 1, L * L * best, ties.size > 1)


def euler_lagrange_residual(traj: MinimizerTrajectory, model: SpectralModel) -> float:
    """Max violation of y'' = alpha**2 y by second central differences."""
    t = traj.times
    if t.size < 5:
        raise DomainError("residual needs a uniform grid with at least 5 points")
    h = t[1] - t[0]
    if not np.allclose(np.diff(t), h, rtol=1e-9, atol=0.0):
        raise DomainError("residual needs a uniform grid")
    y = traj.samples
    a = model.alpha_array[: y.shape[1]]
    d2 = (y[2:] - 2.0 * y[1:-1] + y[:-2]) / (h * h)
    return float(np.max(np.abs(d2 - a * a * y[1:-1])))


def quasipotential(model: SpectralModel, x: Sequence[float], tail_exponent: Optional[float] = None) -> float:
    """sum_k (alpha_k / lambda_k**2) x_k**2 over the given coefficients.

    If ``tail_exponent`` s is given, the coefficients are taken to continue as
    |x_k| ~ k**(-s) beyond the list; the sum is then infinite whenever the
    model's tail makes alpha_k x_k**2 / lambda_k**2 non-summable.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size > model.n_modes:
        raise DomainError(f"point has {x.size} coefficients but the model has {model.n_modes} modes")
    w = model.alpha_array[: x.size] / model.lambda_array[: x.size] ** 2
    if tail_exponent is not None and model.tail is not None:
        # terms decay like k**(p + 2q - 2s); summable iff that exponent < -1
        if model.tail.p + 2.0 * model.tail.q - 2.0 * tail_exponent >= -1.0:
            return math.inf
    return math.fsum(w * x * x)
