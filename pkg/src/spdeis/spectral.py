"""Diagonal operator pair (A, B) and the spectral-gap quantities built on it.

A acts as ``A e_k = -alpha_k e_k`` and B as ``B e_k = lambda_k e_k``.  The
exit cost along mode k over a horizon T is ``phi_k(T) * L**2``; comparing
``phi_1`` with the other modes decides whether the rare event concentrates
on the first eigendirection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .exceptions import ConfigError, DomainError, NoCrossingError

PRESETS = ("integer-squares", "dirichlet-laplacian-1d")

SCAN_START = 1e-8
SCAN_CAP = 2.0**60


@dataclass(frozen=True)
class PowerTail:
    """Symbolic growth ``alpha_k = c k**p``, ``lambda_k = d k**(-q)``."""

    c: float
    p: float
    d: float = 1.0
    q: float = 0.0

    def alpha(self, k):
        return self.c * np.asarray(k, dtype=float) ** self.p

    def lam(self, k):
        return self.d * np.asarray(k, dtype=float) ** (-self.q)

    @property
    def trace_exponent(self) -> float:
        """Decay exponent of lambda_k**2 / alpha_k."""
        return self.p + 2.0 * self.q

    def trace_converges(self) -> bool:
        return self.trace_exponent > 1.0

    def gap_diverges(self) -> bool:
        # alpha_k / lambda_k**2 -> infinity, so phi_k outgrows phi_1 for large k
        return self.c > 0 and self.p + 2.0 * self.q > 0


@dataclass(frozen=True)
class SpectralModel:
    alphas: tuple
    lambdas: tuple
    tail: Optional[PowerTail] = None
    name: str = "custom"
    basis: str = "sine"

    def __post_init__(self):
        a = tuple(float(v) for v in self.alphas)
        lam = tuple(float(v) for v in self.lambdas)
        if not a:
            raise ConfigError("model needs at least one mode")
        if len(a) != len(lam):
            raise ConfigError(f"alphas has {len(a)} entries but lambdas has {len(lam)}")
        if not all(math.isfinite(v) and v > 0 for v in a):
            raise ConfigError("alphas must be finite and strictly positive")
        if any(a[i + 1] < a[i] for i in range(len(a) - 1)):
            raise ConfigError("alphas must be nondecreasing")
        if not all(math.isfinite(v) and v > 0 for v in lam):
            raise ConfigError("lambdas must be finite and strictly positive")
        object.__setattr__(self, "alphas", a)
        object.__setattr__(self, "lambdas", lam)

    @property
    def n_modes(self) -> int:
        return len(self.alphas)

    @property
    def alpha_array(self) -> np.ndarray:
        return np.array(self.alphas)

    @property
    def lambda_array(self) -> np.ndarray:
        return np.array(self.lambdas)

    def trace_partial(self) -> float:
        """Partial sum of lambda_k**2 / alpha_k over the explicit modes."""
        return math.fsum(l * l / a for a, l in zip(self.alphas, self.lambdas))

    def truncate(self, n: int) -> "SpectralModel":
        """Model restricted (or extended through the tail) to ``n`` modes."""
        n = int(n)
        if n < 1:
            raise ConfigError("number of modes must be positive")
        if n <= self.n_modes:
            return SpectralModel(self.alphas[:n], self.lambdas[:n], self.tail, self.name, self.basis)
        if self.tail is None:
            raise ConfigError(f"model has {self.n_modes} explicit modes and no tail; cannot extend to {n}")
        k = np.arange(self.n_modes + 1, n + 1)
        return SpectralModel(
            self.alphas + tuple(self.tail.alpha(k)),
            self.lambdas + tuple(self.tail.lam(k)),
            self.tail,
            self.name,
            self.basis,
        )

    def with_alpha(self, k: int, value: float) -> "SpectralModel":
        a = list(self.alphas)
        a[k - 1] = float(value)
        return SpectralModel(tuple(a), self.lambdas, self.tail, self.name + f"[alpha{k}={value:g}]", self.basis)


def preset(name: str, n_modes: int) -> SpectralModel:
    """Named eigenvalue families.

    ``integer-squares`` has alpha_k = k**2, lambda_k = 1; this normalization
    is the one the reference Monte Carlo magnitudes are quoted in.
    ``dirichlet-laplacian-1d`` is the Laplacian on (0, 1) with Dirichlet
    conditions, alpha_k = (pi k)**2 and e_k = sqrt(2) sin(k pi xi).
    """
    if name == "integer-squares":
        tail = PowerTail(1.0, 2.0)
    elif name == "dirichlet-laplacian-1d":
        tail = PowerTail(math.pi**2, 2.0)
    else:
        raise ConfigError(f"unknown preset {name!r}; choose one of {', '.join(PRESETS)}")
    k = np.arange(1, int(n_modes) + 1)
    return SpectralModel(tuple(tail.alpha(k)), tuple(tail.lam(k)), tail, name)


def _check_mode(model: SpectralModel, k: int) -> None:
    if not 1 <= k <= model.n_modes:
        raise DomainError(f"mode index {k} outside 1..{model.n_modes}")


def _check_horizon(T: float) -> None:
    if not T > 0:
        raise DomainError(f"horizon must be positive, got {T}")


def one_minus_exp(x):
    """1 - exp(-x) without cancellation for small x."""
    return -np.expm1(-np.asarray(x, dtype=float))


def phi(model: SpectralModel, k: int, T: float) -> float:
    """Exit cost per unit squared amplitude along mode k over horizon T."""
    _check_mode(model, k)
    _check_horizon(T)
    a = model.alphas[k - 1]
    lam = model.lambdas[k - 1]
    val = a / (lam * lam * float(one_minus_exp(2.0 * a * T)))
    if k == 1:
        val += a / (lam * lam)
    return val


def phi_all(model: SpectralModel, T: float) -> np.ndarray:
    """phi_k(T) for every mode, as an array indexed from 0."""
    _check_horizon(T)
    a = model.alpha_array
    lam2 = model.lambda_array**2
    out = a / (lam2 * one_minus_exp(2.0 * a * T))
    out[0] += a[0] / lam2[0]
    return out


def psi(model: SpectralModel, k: int, T: float) -> float:
    """phi_1(T) - phi_k(T); negative means mode 1 is the cheaper exit."""
    if k == 1:
        raise DomainError("psi is defined for modes k >= 2")
    return phi(model, 1, T) - phi(model, k, T)


@dataclass(frozen=True)
class GapReport:
    assumption_A_holds: bool
    assumption_B_holds: bool
    gap_margin: float
    first_failure_A: Optional[int]
    first_failure_B: Optional[int]
    trace_partial: float
    t_k: Optional[tuple] = None
    t0: Optional[float] = None
    tail_monotone: Optional[bool] = None
    tail_notes: tuple = field(default_factory=tuple)


def _fails_a(model: SpectralModel, k: int) -> bool:
    a1, l1 = model.alphas[0], model.lambdas[0]
    return not (l1 >= model.lambdas[k - 1] and 3.0 * a1 < model.alphas[k - 1])


def _fails_b(model: SpectralModel, k: int) -> bool:
    a1, l1 = model.alphas[0], model.lambdas[0]
    ak, lk = model.alphas[k - 1], model.lambdas[k - 1]
    return not (2.0 * a1 / (l1 * l1) < ak / (lk * lk))


def _tail_notes(model: SpectralModel) -> tuple:
    if model.tail is None:
        return ()
    t = model.tail
    notes = [
        "trace sum lambda_k^2/alpha_k " + ("converges" if t.trace_converges() else "diverges")
        + f" (decay exponent {t.trace_exponent:g})",
        "alpha_k/lambda_k^2 " + ("grows without bound, so T_k -> 0" if t.gap_diverges() else "stays bounded"),
    ]
    return tuple(notes)


def check_assumptions(model: SpectralModel) -> GapReport:
    """Evaluate both gap assumptions over modes 2..N (crossing times omitted)."""
    ks = range(2, model.n_modes + 1)
    fail_a = next((k for k in ks if _fails_a(model, k)), None)
    fail_b = next((k for k in ks if _fails_b(model, k)), None)
    a1, l1 = model.alphas[0], model.lambdas[0]
    margins = [model.alphas[k - 1] / model.lambdas[k - 1] ** 2 - 2.0 * a1 / l1**2 for k in ks]
    return GapReport(
        assumption_A_holds=fail_a is None,
        assumption_B_holds=fail_b is None,
        gap_margin=min(margins) if margins else math.inf,
        first_failure_A=fail_a,
        first_failure_B=fail_b,
        trace_partial=model.trace_partial(),
        tail_notes=_tail_notes(model),
    )


def crossing_time(model: SpectralModel, k: int, tol: float = 1e-12, factor: float = 2.0) -> float:
    """Largest T with phi_1(T) >= phi_k(T), or 0 if mode 1 is always cheaper.

    The horizon axis is scanned on a geometric grid starting at 1e-8.  The
    scan stops once phi_1(T) falls below alpha_k / lambda_k**2, the floor of
    phi_k, since psi_k stays negative from there on.  The last grid point with
    psi_k >= 0 and its successor bracket the root, which is then bisected.
    """
    _check_mode(model, k)
    if k == 1:
        raise DomainError("crossing time is defined for modes k >= 2")
    if not tol > 0 or not factor > 1:
        raise DomainError("tol must be positive and factor greater than 1")
    if _fails_b(model, k):
        raise NoCrossingError(f"no finite crossing guaranteed for mode {k}: 2*alpha_1/lambda_1^2 >= alpha_k/lambda_k^2")
    floor_k = model.alphas[k - 1] / model.lambdas[k - 1] ** 2
    last_nonneg = None
    T = SCAN_START
    while T <= SCAN_CAP:
        if psi(model, k, T) >= 0:
            last_nonneg = T
        if phi(model, 1, T) < floor_k:
            break
        T *= factor
    if last_nonneg is None:
        return 0.0
    lo, hi = last_nonneg, last_nonneg * factor
    for _ in range(400):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if psi(model, k, mid) >= 0:
            lo = mid
        else:
            hi = mid
    return lo


def t0(model: SpectralModel, tol: float = 1e-12) -> float:
    """Largest crossing time over modes 2..N; zero for a single mode."""
    return max((crossing_time(model, k, tol) for k in range(2, model.n_modes + 1)), default=0.0)


def _tail_is_monotone(tk: Sequence[float]) -> bool:
    if not tk:
        return True
    start = int(np.argmax(tk))
    rest = tk[start:]
    return all(rest[i + 1] <= rest[i] for i in range(len(rest) - 1))


def gap_report(model: SpectralModel, tol: float = 1e-12) -> GapReport:
    """Assumption flags plus every crossing time and T0.

    Crossing times are left as None for modes that violate the second
    assumption, in which case T0 is undefined as well.
    """
    base = check_assumptions(model)
    tk = []
    for k in range(2, model.n_modes + 1):
        try:
            tk.append(crossing_time(model, k, tol))
        except NoCrossingError:
            tk.append(None)
    defined = None not in tk
    return GapReport(
        assumption_A_holds=base.assumption_A_holds,
        assumption_B_holds=base.assumption_B_holds,
        gap_margin=base.gap_margin,
        first_failure_A=base.first_failure_A,
        first_failure_B=base.first_failure_B,
        trace_partial=base.trace_partial,
        t_k=tuple(tk),
        t0=max(tk, default=0.0) if defined else None,
        tail_monotone=_tail_is_monotone(tk) if defined else None,
        tail_notes=base.tail_notes,
    )
