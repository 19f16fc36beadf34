"""Monte Carlo estimation of exit probabilities and sweeps over (eps, T).

Each path contributes ``1{exit before T} * exp(log_weight)``.  All reductions
use ``math.fsum``, which is exact and order-independent, so a report depends
only on the seed and the configuration and never on the thread count.
"""

from __future__ import annotations

import io
import csv
import math
import time
from dataclasses import asdict, dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .controls import SchemeConfig
from .dynamics import BatchResult, SimConfig, simulate
from .exceptions import ConfigError
from .spectral import SpectralModel

NO_SUCCESS_MARK = "−"

CSV_COLUMNS = (
    "eps", "T", "N", "K", "scheme", "estimate", "std_err", "re_per_sample", "ci_low", "ci_high",
    "exit_fraction", "e1_concentration", "invalid_count", "wall_time_s", "status",
)


@dataclass
class EstimateReport:
    estimate: float
    sample_std: float
    std_err: float
    re_per_sample: float
    ci95: tuple
    k_used: int
    exit_fraction: float
    e1_concentration: Optional[float]
    invalid_count: int
    wall_time_s: float
    no_successes: bool = False
    eps: float = math.nan
    horizon: float = math.nan
    n_modes: int = 0
    scheme: str = ""
    seed: Optional[int] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def comparable(self) -> dict:
        """Every field except the wall time."""
        d = asdict(self)
        d.pop("wall_time_s")
        return d


def _summarize(values: np.ndarray, k: int):
    mean = math.fsum(values) / k
    var = math.fsum((values - mean) ** 2) / (k - 1)
    return mean, math.sqrt(var)


def exit_direction_stat(outcomes, L: float) -> Optional[float]:
    """Mean of <X(tau), e1>^2 / L^2 over exited paths (unweighted), or None."""
    if isinstance(outcomes, BatchResult):
        sel = outcomes.exited & ~outcomes.invalid
        if not sel.any():
            return None
        return math.fsum(outcomes.x1[sel] ** 2) / (int(sel.sum()) * L * L)
    vals = [float(o.exit_coeffs[0]) ** 2 for o in outcomes if o.exited and not o.invalid]
    if not vals:
        return None
    return math.fsum(vals) / (len(vals) * L * L)


def report_from_batch(batch: BatchResult, L: float, wall: float = 0.0) -> EstimateReport:
    valid = ~batch.invalid
    k = int(valid.sum())
    invalid = int(batch.invalid.size - k)
    if k < 2:
        raise ConfigError(f"only {k} valid trajectories; need at least 2")
    hit = batch.exited & valid
    values = np.where(hit, np.exp(np.where(hit, batch.log_weight, 0.0)), 0.0)[valid]
    mean, std = _summarize(values, k)
    se = std / math.sqrt(k)
    exit_frac = float(hit.sum()) / k
    e1 = exit_direction_stat(batch, L)
    if mean > 0:
        re = std / mean
        none = False
    else:
        # the sentinel value for a cell without a single success
        re = math.sqrt(k)
        none = True
    return EstimateReport(
        estimate=mean,
        sample_std=std,
        std_err=se,
        re_per_sample=re,
        ci95=(mean - 1.96 * se, mean + 1.96 * se),
        k_used=k,
        exit_fraction=exit_frac,
        e1_concentration=e1,
        invalid_count=invalid,
        wall_time_s=wall,
        no_successes=none,
    )


def estimate(
    model: SpectralModel,
    sim: SimConfig,
    scheme: SchemeConfig,
    K: int,
    seed: int,
    threads: Optional[int] = None,
    backend: Optional[str] = None,
) -> EstimateReport:
    """Importance-sampling estimate of P(exit before T) from K paths."""
    if int(K) != K or K < 2:
        raise ConfigError(f"K must be an integer >= 2, got {K}")
    t0 = time.perf_counter()
    batch = simulate(model, sim, scheme, seed, int(K), threads=threads, backend=backend)
    rep = report_from_batch(batch, sim.radius, time.perf_counter() - t0)
    if rep.invalid_count == K:
        raise ConfigError("all trajectories were invalid")
    rep.eps, rep.horizon = sim.eps, sim.horizon
    rep.n_modes = sim.model_for(model).n_modes
    rep.scheme, rep.seed = scheme.variant, int(seed)
    return rep


def cell_seed(seed: int, i: int, j: int) -> int:
    """Seed of sweep cell (i, j), derived with numpy's SeedSequence."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(i), int(j)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def sweep(
    model: SpectralModel,
    eps_grid: Sequence[float],
    T_grid: Sequence[float],
    sim: SimConfig,
    scheme: SchemeConfig,
    K: int,
    seed: int,
    threads: Optional[int] = None,
    backend: Optional[str] = None,
    progress=None,
) -> list:
    """One report per (eps, T) cell; a failing cell is recorded, not raised.

    ``sim`` is a template: each cell keeps its time step and radius and
    replaces eps and the horizon.
    """
    eps_grid, T_grid = list(eps_grid), list(T_grid)
    if not eps_grid or not T_grid:
        raise ConfigError("sweep grid is empty")
    reports = []
    for i, eps in enumerate(eps_grid):
        for j, T in enumerate(T_grid):
            s = cell_seed(seed, i, j)
            try:
                cell = sim.with_cell(eps, T)
                rep = estimate(model, cell, scheme, K, s, threads, backend)
            except ConfigError as exc:
                rep = EstimateReport(
                    math.nan, math.nan, math.nan, math.nan, (math.nan, math.nan), 0, math.nan, None, 0, 0.0,
                    eps=float(eps), horizon=float(T), n_modes=sim.model_for(model).n_modes,
                    scheme=scheme.variant, seed=s, error=str(exc),
                )
            reports.append(rep)
            if progress is not None:
                progress(rep)
    return reports


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(float(v)) if math.isfinite(v) else ""
    return str(v)


def csv_text(reports: Iterable[EstimateReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in reports:
        status = "ok" if r.ok and not r.no_successes else ("no_successes" if r.ok else f"error: {r.error}")
        re = NO_SUCCESS_MARK if r.no_successes else _fmt(r.re_per_sample)
        w.writerow([
            _fmt(r.eps), _fmt(r.horizon), r.n_modes, r.k_used, r.scheme, _fmt(r.estimate), _fmt(r.std_err), re,
            _fmt(r.ci95[0]), _fmt(r.ci95[1]), _fmt(r.exit_fraction), _fmt(r.e1_concentration),
            r.invalid_count, f"{r.wall_time_s:.3f}", status,
        ])
    return buf.getvalue()


def _cell(r: EstimateReport, what: str) -> str:
    if not r.ok:
        return "n/a"
    if r.no_successes:
        return NO_SUCCESS_MARK
    if what == "estimate":
        return f"{r.estimate:.2e}"
    return f"{r.re_per_sample:.2g}"


def markdown_table(reports: Sequence[EstimateReport], what: str = "estimate") -> str:
    """Grid with eps rows and T columns; ``what`` is 'estimate' or 're'."""
    eps = sorted({r.eps for r in reports}, reverse=True)
    Ts = sorted({r.horizon for r in reports})
    cells = {(r.eps, r.horizon): r for r in reports}
    lines = ["| ε \\ T | " + " | ".join(f"{t:g}" for t in Ts) + " |"]
    lines.append("|" + "---|" * (len(Ts) + 1))
    for e in eps:
        row = [_cell(cells[(e, t)], what) if (e, t) in cells else "" for t in Ts]
        lines.append(f"| {e:g} | " + " | ".join(row) + " |")
    return "\n".join(lines) + "\n"


def markdown_text(reports: Sequence[EstimateReport], title: str = "") -> str:
    head = f"# {title}\n\n" if title else ""
    return (
        head
        + "## Estimated exit probability\n\n"
        + markdown_table(reports, "estimate")
        + "\n## Relative error per sample\n\n"
        + markdown_table(reports, "re")
    )


def json_rows(reports: Sequence[EstimateReport]) -> list:
    out = []
    for r in reports:
        d = asdict(r)
        d["ci95"] = list(r.ci95)
        if r.no_successes:
            d["re_per_sample"] = NO_SUCCESS_MARK
        for k, v in d.items():
            if isinstance(v, float) and not math.isfinite(v):
                d[k] = None
        out.append(d)
    return out
