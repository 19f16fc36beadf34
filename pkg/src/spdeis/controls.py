"""Feedback controls for the change of measure.

All controls are derived from a smooth minimum of candidate value functions,
``U = -delta log sum_i exp(-F_i / delta)``, with the convention u = -B* DU.
Only the first mode (or the projected modes of the multimode variant) is
ever steered, so the controls here act on scalar coordinates.

Variants:

* ``none``: u = 0 (plain Monte Carlo).
* ``scheme1``: time-dependent mix of F1 with the regularized two-point
  functions F2 and F3; pure F1 once t > T - t_star.
* ``scheme2``: F1 mixed with the constant (alpha1/lambda1^2)(L^2 - eps^kappa).
* ``multimode``: scheme2 with F1 summed over several projected modes.
* ``forced``: the F1 control everywhere, with no mollification at all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .exceptions import ConfigError, DomainError, PreconditionError
from .spectral import SpectralModel

VARIANTS = ("none", "scheme1", "scheme2", "multimode", "forced")
VARIANT_CODES = {"none": 0, "scheme2": 1, "multimode": 1, "scheme1": 2, "forced": 3}

# constant K of the outer edge of region B2
_K_REGION = -math.log(3.0)


def _c1(model: SpectralModel) -> float:
    return model.alphas[0] / model.lambdas[0] ** 2


def f1(model: SpectralModel, L: float, x1) -> float:
    return _c1(model) * (L * L - np.asarray(x1) ** 2)


def f1_multi(model: SpectralModel, L: float, x: Sequence[float], modes: Sequence[int]) -> float:
    """F1 with the squared amplitude summed over ``modes`` (1-based)."""
    x = np.asarray(x, dtype=float)
    idx = np.asarray(modes, dtype=int) - 1
    return _c1(model) * (L * L - math.fsum(x[idx] ** 2))


def f2_eps(model: SpectralModel, L: float, eps: float, kappa: float) -> float:
    return _c1(model) * (L * L - eps**kappa)


def scheme1_f23(model: SpectralModel, L: float, M: float, z1: float, t: float, T: float, x1: float):
    """Regularized cost-to-go towards +z1 (F2) and -z1 (F3)."""
    if not M > 0:
        raise DomainError("M must be positive")
    if t > T:
        raise DomainError("t must not exceed the horizon")
    a = model.alphas[0]
    c = _c1(model)
    e1 = math.exp(a * (t - T))
    e2 = e1 * e1
    D = 1.0 / M + 1.0 - e2
    base = c * (L * L - z1 * z1)
    sq = z1 * z1 + e2 * x1 * x1
    cross = 2.0 * e1 * z1 * x1
    return c * (sq - cross) / D + base, c * (sq + cross) / D + base


def scheme1_f23_grad(model: SpectralModel, M: float, z1: float, t: float, T: float, x1: float):
    """x1-derivatives of (F2, F3)."""
    a = model.alphas[0]
    c = _c1(model)
    e1 = math.exp(a * (t - T))
    e2 = e1 * e1
    D = 1.0 / M + 1.0 - e2
    return c * (2.0 * e2 * x1 - 2.0 * e1 * z1) / D, c * (2.0 * e2 * x1 + 2.0 * e1 * z1) / D


@dataclass(frozen=True)
class MollifierState:
    f_values: np.ndarray
    weights: np.ndarray
    u_delta: float
    control_coeffs: Optional[np.ndarray] = None


def mollify(f_values: Sequence[float], delta: float) -> MollifierState:
    """Smooth minimum -delta log sum exp(-F_i/delta) and its simplex weights."""
    f = np.asarray(f_values, dtype=float).ravel()
    if f.size == 0:
        raise DomainError("mollify needs at least one value")
    if not delta > 0:
        raise DomainError("delta must be positive")
    fmin = f.min()
    e = np.exp(-(f - fmin) / delta)
    s = e.sum()
    return MollifierState(f, e / s, float(fmin - delta * math.log(s)))


@dataclass(frozen=True)
class SchemeConfig:
    variant: str = "scheme2"
    kappa: float = 0.6
    eta: float = 0.25
    delta: Optional[float] = None  # None means 2 * eps
    M: Optional[float] = None
    t_star: Optional[float] = None
    z1: Optional[float] = None
    projected_modes: tuple = (1,)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown scheme variant {self.variant!r}; choose one of {', '.join(VARIANTS)}")
        if not 0 < self.kappa < 1:
            raise ConfigError(f"kappa must lie in (0, 1), got {self.kappa}")
        if not 0 < self.eta < 1:
            raise ConfigError(f"eta must lie in (0, 1), got {self.eta}")
        if self.delta is not None and not self.delta > 0:
            raise ConfigError("delta must be positive")
        modes = tuple(sorted({int(m) for m in self.projected_modes}))
        if not modes or modes[0] < 1:
            raise ConfigError("projected_modes must be a nonempty set of positive mode indices")
        if self.variant != "multimode" and modes != (1,):
            raise ConfigError("projected_modes other than {1} require the multimode variant")
        object.__setattr__(self, "projected_modes", modes)

    def with_variant(self, variant: str) -> "SchemeConfig":
        modes = self.projected_modes if variant == "multimode" else (1,)
        return replace(self, variant=variant, projected_modes=modes)

    def resolve(self, model: SpectralModel, L: float, eps: float) -> "ResolvedScheme":
        """Fill in eps-dependent defaults and check the variant's preconditions."""
        if not eps > 0:
            raise ConfigError("eps must be positive")
        a1, l1 = model.alphas[0], model.lambdas[0]
        delta = 2.0 * eps if self.delta is None else float(self.delta)
        r = ResolvedScheme(self, model.n_modes, L, eps, delta, a1, l1)
        if self.variant in ("scheme2", "multimode"):
            lhs = eps ** (1.0 - self.kappa)
            bound = a1 / (2.0 * l1 * l1)
            if lhs > bound:
                raise PreconditionError(
                    f"{self.variant} needs eps^(1-kappa) <= alpha_1/(2 lambda_1^2): "
                    f"{lhs:.6g} > {bound:.6g} at eps={eps:g}, kappa={self.kappa:g}"
                )
            if self.projected_modes[-1] > model.n_modes:
                raise PreconditionError(f"projected mode {self.projected_modes[-1]} exceeds N={model.n_modes}")
            r.f2eps = f2_eps(model, L, eps, self.kappa)
        elif self.variant == "scheme1":
            M = eps ** (-self.kappa) if self.M is None else float(self.M)
            t_star = (2.0 * l1 * l1 / a1) * self.kappa * math.log(1.0 / eps) if self.t_star is None else float(self.t_star)
            z1 = 0.5 * L if self.z1 is None else float(self.z1)
            if not M > 1:
                raise PreconditionError(f"scheme1 needs M > 1, got {M:.6g}")
            if not t_star > 0:
                raise PreconditionError(f"scheme1 needs t_star > 0, got {t_star:.6g}")
            if not z1 * z1 < L * L:
                raise PreconditionError(f"scheme1 needs z1^2 < L^2, got z1={z1:g}, L={L:g}")
            r.M, r.t_star, r.z1 = M, t_star, z1
        return r


def scheme1_scaling(model: SpectralModel, eps: float, power: float):
    """(M, t_star) = (eps^-power, (2 lambda1^2/alpha1) power log(1/eps))."""
    a1, l1 = model.alphas[0], model.lambdas[0]
    return eps ** (-power), (2.0 * l1 * l1 / a1) * power * math.log(1.0 / eps)


@dataclass
class ResolvedScheme:
    """A scheme with every eps-dependent number filled in."""

    config: SchemeConfig
    n_modes: int
    L: float
    eps: float
    delta: float
    alpha1: float
    lambda1: float
    f2eps: float = math.nan
    M: float = math.nan
    t_star: float = math.nan
    z1: float = math.nan

    @property
    def variant(self) -> str:
        return self.config.variant

    @property
    def code(self) -> int:
        return VARIANT_CODES[self.config.variant]

    @property
    def c1(self) -> float:
        return self.alpha1 / self.lambda1**2

    def as_dict(self) -> dict:
        out = {"variant": self.variant, "delta": self.delta}
        if self.variant in ("scheme2", "multimode"):
            out.update(kappa=self.config.kappa, f2eps=self.f2eps, projected_modes=list(self.config.projected_modes))
        if self.variant == "scheme1":
            out.update(kappa=self.config.kappa, M=self.M, t_star=self.t_star, z1=self.z1)
        return out


def _scheme2_rho(c1: float, L: float, f2: float, delta: float, v: float) -> float:
    f = c1 * (L * L - v)
    # weight of F1 against the constant F2, written to avoid overflow
    d = (f - f2) / delta
    if d >= 0:
        e = math.exp(-d)
        return e / (1.0 + e)
    return 1.0 / (1.0 + math.exp(d))


def scheme2_u_delta(model: SpectralModel, L: float, kappa: float, delta: float, eps: float, x1: float) -> float:
    return mollify([f1(model, L, x1), f2_eps(model, L, eps, kappa)], delta).u_delta


def scheme2_control(model: SpectralModel, L: float, kappa: float, delta: float, eps: float, x1: float) -> float:
    """u_1 = rho_1(x) (2 alpha_1 / lambda_1) x1."""
    a1, l1 = model.alphas[0], model.lambdas[0]
    lhs, bound = eps ** (1.0 - kappa), a1 / (2.0 * l1 * l1)
    if lhs > bound:
        raise PreconditionError(f"scheme2 needs eps^(1-kappa) <= alpha_1/(2 lambda_1^2): {lhs:.6g} > {bound:.6g}")
    rho = _scheme2_rho(_c1(model), L, f2_eps(model, L, eps, kappa), delta, x1 * x1)
    return rho * 2.0 * a1 / l1 * x1


def _scheme1_parts(model, L, r: ResolvedScheme, t, T, x1):
    f2, f3 = scheme1_f23(model, L, r.M, r.z1, t, T, x1)
    return np.array([float(f1(model, L, x1)), f2, f3])


def scheme1_u_delta(model: SpectralModel, L: float, r: ResolvedScheme, t: float, T: float, x1: float) -> float:
    if t > T - r.t_star:
        return float(f1(model, L, x1))
    return mollify(_scheme1_parts(model, L, r, t, T, x1), r.delta).u_delta


def scheme1_control(model: SpectralModel, L: float, r: ResolvedScheme, t: float, T: float, x1: float) -> float:
    """-lambda_1 dU/dx1 with U the time-switched mollified minimum."""
    a1, l1 = model.alphas[0], model.lambdas[0]
    if t > T - r.t_star:
        return 2.0 * a1 / l1 * x1
    w = mollify(_scheme1_parts(model, L, r, t, T, x1), r.delta).weights
    g2, g3 = scheme1_f23_grad(model, r.M, r.z1, t, T, x1)
    g1 = -2.0 * _c1(model) * x1
    return -l1 * (w[0] * g1 + w[1] * g2 + w[2] * g3)


def control_vector(model: SpectralModel, r: ResolvedScheme, t: float, T: float, x: np.ndarray) -> np.ndarray:
    """Control coefficients u_j for every mode at state x and time t."""
    u = np.zeros(model.n_modes)
    v = r.variant
    a1, l1 = model.alphas[0], model.lambdas[0]
    if v == "none":
        return u
    if v == "forced":
        u[0] = 2.0 * a1 / l1 * x[0]
    elif v == "scheme1":
        u[0] = scheme1_control(model, r.L, r, t, T, float(x[0]))
    else:
        idx = np.asarray(r.config.projected_modes) - 1
        vsum = math.fsum(x[idx] ** 2)
        rho = _scheme2_rho(r.c1, r.L, r.f2eps, r.delta, vsum)
        u[idx] = 2.0 * r.c1 * model.lambda_array[idx] * rho * x[idx]
    return u


def g_epsilon_bound(model: SpectralModel, L: float, config: SchemeConfig, eps: float, x1: float) -> float:
    """Lower bound for the operator G^eps of the mollified scheme-2 value.

    (1-eta)/2 (1 - eps/delta) beta0 + (1-eta) rho1 gamma1
    + ((eta - 2 eta^2)/2) rho1^2 |B* DF1|^2, with beta0 = rho1 (1 - rho1) |B* DF1|^2,
    gamma1 = -eps alpha1 and |B* DF1|^2 = 4 alpha1^2 x1^2 / lambda1^2.
    """
    if config.variant not in ("scheme2", "multimode"):
        raise ConfigError("the G^eps bound is defined for the scheme2 control")
    r = config.resolve(model, L, eps)
    a1, l1 = model.alphas[0], model.lambdas[0]
    eta = config.eta
    rho = _scheme2_rho(r.c1, L, r.f2eps, r.delta, x1 * x1)
    grad2 = 4.0 * a1 * a1 * x1 * x1 / (l1 * l1)
    beta0 = rho * (1.0 - rho) * grad2
    gamma1 = -eps * a1
    return (
        0.5 * (1.0 - eta) * (1.0 - eps / r.delta) * beta0
        + (1.0 - eta) * rho * gamma1
        + 0.5 * (eta - 2.0 * eta * eta) * rho * rho * grad2
    )


@dataclass(frozen=True)
class RegionResult:
    name: str
    v_low: float
    v_high: float
    count: int
    min_bound: float
    argmin_x1: float
    min_rho1: float
    passed: bool


@dataclass(frozen=True)
class RegionReport:
    eps: float
    kappa: float
    eta: float
    delta: float
    alpha: float
    slack: float
    regions: tuple
    rho1_origin: float
    bound_origin: float

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.regions)


def verify_regions(
    model: SpectralModel,
    L: float,
    config: SchemeConfig,
    eps: float,
    samples: int = 10_000,
    seed: int = 0,
    alpha: Optional[float] = None,
    slack: Optional[float] = None,
) -> RegionReport:
    """Evaluate the G^eps lower bound on stratified points of three regions.

    With V1 = x1^2 the regions are B1: V1 <= eps^(kappa+alpha),
    B2: up to 2 eps^kappa - eps K with K = -ln 3, and B3: up to L^2.  A
    region passes when its minimum is at least ``-slack``, by default
    ``-eps exp(-1/eps)``.
    """
    r = config.resolve(model, L, eps)
    kappa = config.kappa
    if alpha is None:
        alpha = 0.5 * (1.0 - kappa)
    if not 0 < alpha < 1 - kappa:
        raise DomainError(f"alpha must lie in (0, 1 - kappa) = (0, {1 - kappa:g}), got {alpha}")
    if samples < 1:
        raise DomainError("samples must be positive")
    if slack is None:
        slack = eps * math.exp(-1.0 / eps)
    v1 = eps ** (kappa + alpha)
    v2 = 2.0 * eps**kappa - eps * _K_REGION
    cuts = [("B1", 0.0, v1), ("B2", v1, v2), ("B3", v2, L * L)]
    rng = np.random.default_rng(seed)
    results = []
    for name, lo, hi in cuts:
        if hi <= lo:
            results.append(RegionResult(name, lo, hi, 0, math.inf, math.nan, math.nan, True))
            continue
        # one jittered point per stratum, random sign
        u = (np.arange(samples) + rng.random(samples)) / samples
        v = lo + (hi - lo) * u
        x = np.sqrt(v) * np.where(rng.random(samples) < 0.5, -1.0, 1.0)
        b = np.array([g_epsilon_bound(model, L, config, eps, xi) for xi in x])
        rho = np.array([_scheme2_rho(r.c1, L, r.f2eps, r.delta, xi * xi) for xi in x])
        i = int(np.argmin(b))
        results.append(RegionResult(name, lo, hi, samples, float(b[i]), float(x[i]), float(rho.min()), bool(b[i] >= -slack)))
    rho0 = _scheme2_rho(r.c1, L, r.f2eps, r.delta, 0.0)
    return RegionReport(
        eps, kappa, config.eta, r.delta, alpha, slack, tuple(results), rho0, g_epsilon_bound(model, L, config, eps, 0.0)
    )


def scheme2_origin_value(model: SpectralModel, L: float, config: SchemeConfig, eps: float):
    """U^delta(0) and the scheme-2 second-moment rate (1/2)(1-eta) U^delta(0)."""
    r = config.resolve(model, L, eps)
    u0 = mollify([float(f1(model, L, 0.0)), r.f2eps], r.delta).u_delta
    return u0, 0.5 * (1.0 - config.eta) * u0
