"""JSON run configuration: parsing, validation and the resolved manifest form.

A config has the sections ``model``, ``sim``, ``scheme``, ``run``, and
optionally ``analyze`` and ``verify``.  Every key is checked; errors name the
offending key path (e.g. ``scheme.kappa``) or the JSON line and column.
A results manifest carries the same sections fully resolved, so it can be
fed back in as a config.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .controls import VARIANTS, SchemeConfig
from .dynamics import SimConfig
from .exceptions import ConfigError
from .spectral import PRESETS, PowerTail, SpectralModel, preset

DEFAULTS: dict = {
    "model": {
        "preset": "integer-squares",
        "n_modes": 100,
        "alphas": None,
        "lambdas": None,
        "alpha_overrides": {},
        "tail": None,
    },
    "sim": {"radius": 1.0, "dt": 0.01, "initial": None, "exact_brownian": True},
    "scheme": {
        "variant": "scheme2",
        "kappa": 0.6,
        "eta": 0.25,
        "delta": None,
        "M": None,
        "t_star": None,
        "z1": None,
        "projected_modes": [1],
    },
    "run": {
        "eps_grid": [0.09, 0.08, 0.07, 0.06, 0.05, 0.04, 0.03, 0.02],
        "T_grid": [1, 2, 3, 4, 6, 8, 10, 12],
        "K": 100000,
        "seed": 1,
        "threads": None,
        "out_format": ["csv", "md"],
        "out_dir": "results",
        "name": "sweep",
        "backend": None,
        "field_paths": 8,
        "field_points": 101,
    },
    "analyze": {"T_values": [1.0, 12.0], "points": [], "tol": 1e-12},
    "verify": {
        "eps": 0.04,
        "samples": 10000,
        "seed": 0,
        "alpha": None,
        "galerkin": {"N": 4, "eps": 0.1, "T": 4.0, "K": 2000, "gamma": 0.75, "seed": 0, "dt": 0.01},
    },
}

OUT_FORMATS = ("csv", "md", "json")
BACKENDS = (None, "compiled", "python")
IGNORED_TOP = ("manifest",)


def _num(path: str, v: Any, *, positive=False, nonneg=False, integer=False, optional=False):
    if v is None and optional:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"config key '{path}' must be a number, got {v!r}")
    if integer and int(v) != v:
        raise ConfigError(f"config key '{path}' must be an integer, got {v!r}")
    if not math.isfinite(v):
        raise ConfigError(f"config key '{path}' must be finite")
    if positive and not v > 0:
        raise ConfigError(f"config key '{path}' must be positive, got {v!r}")
    if nonneg and v < 0:
        raise ConfigError(f"config key '{path}' must be nonnegative, got {v!r}")
    return int(v) if integer else float(v)


def _numlist(path: str, v: Any, **kw) -> list:
    if not isinstance(v, list):
        raise ConfigError(f"config key '{path}' must be a list, got {v!r}")
    return [_num(f"{path}[{i}]", x, **kw) for i, x in enumerate(v)]


def _merge(defaults: dict, given: dict, path: str) -> dict:
    if not isinstance(given, dict):
        raise ConfigError(f"config key '{path}' must be an object")
    out = copy.deepcopy(defaults)
    for k, v in given.items():
        if k not in defaults:
            known = ", ".join(sorted(defaults))
            raise ConfigError(f"config key '{path}.{k}' is not recognized (known keys: {known})")
        if isinstance(defaults[k], dict) and k != "alpha_overrides":
            out[k] = _merge(defaults[k], v, f"{path}.{k}")
        else:
            out[k] = v
    return out


def read_json(path) -> dict:
    p = Path(path)
    try:
        text = p.read_text()
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {p}") from None
    except OSError as exc:
        raise ConfigError(f"cannot read config file {p}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{p}: top level must be a JSON object")
    return data


def normalize(raw: dict) -> dict:
    """Merge with defaults and validate every key; returns a plain dict."""
    for k in raw:
        if k not in DEFAULTS and k not in IGNORED_TOP:
            raise ConfigError(f"config section '{k}' is not recognized (known: {', '.join(DEFAULTS)})")
    cfg = {s: _merge(DEFAULTS[s], raw.get(s, {}), s) for s in DEFAULTS}

    m = cfg["model"]
    if m["alphas"] is not None:
        m["alphas"] = _numlist("model.alphas", m["alphas"], positive=True)
        m["preset"] = None
        if m["lambdas"] is None:
            m["lambdas"] = [1.0] * len(m["alphas"])
        m["lambdas"] = _numlist("model.lambdas", m["lambdas"], positive=True)
        if raw.get("model", {}).get("n_modes") is None:
            m["n_modes"] = len(m["alphas"])
    elif m["preset"] not in PRESETS:
        raise ConfigError(f"config key 'model.preset' must be one of {', '.join(PRESETS)}, got {m['preset']!r}")
    elif m["lambdas"] is not None:
        raise ConfigError("config key 'model.lambdas' requires explicit 'model.alphas'")
    m["n_modes"] = _num("model.n_modes", m["n_modes"], positive=True, integer=True)
    if not isinstance(m["alpha_overrides"], dict):
        raise ConfigError("config key 'model.alpha_overrides' must be an object mapping mode index to value")
    ov = {}
    for k, v in m["alpha_overrides"].items():
        try:
            idx = int(k)
        except ValueError:
            raise ConfigError(f"config key 'model.alpha_overrides.{k}' must be a mode index") from None
        if not 1 <= idx <= m["n_modes"]:
            raise ConfigError(f"config key 'model.alpha_overrides.{k}' is outside 1..{m['n_modes']}")
        ov[str(idx)] = _num(f"model.alpha_overrides.{k}", v, positive=True)
    m["alpha_overrides"] = ov
    if m["tail"] is not None:
        t = _merge({"c": 1.0, "p": 2.0, "d": 1.0, "q": 0.0}, m["tail"], "model.tail")
        m["tail"] = {k: _num(f"model.tail.{k}", v) for k, v in t.items()}

    s = cfg["sim"]
    s["radius"] = _num("sim.radius", s["radius"], positive=True)
    s["dt"] = _num("sim.dt", s["dt"], positive=True)
    if s["initial"] is not None:
        s["initial"] = _numlist("sim.initial", s["initial"])
    if not isinstance(s["exact_brownian"], bool):
        raise ConfigError("config key 'sim.exact_brownian' must be true or false")

    sc = cfg["scheme"]
    if sc["variant"] not in VARIANTS:
        raise ConfigError(f"config key 'scheme.variant' must be one of {', '.join(VARIANTS)}, got {sc['variant']!r}")
    for k in ("kappa", "eta"):
        sc[k] = _num(f"scheme.{k}", sc[k], positive=True)
    for k in ("delta", "M", "t_star"):
        sc[k] = _num(f"scheme.{k}", sc[k], positive=True, optional=True)
    sc["z1"] = _num("scheme.z1", sc["z1"], optional=True)
    sc["projected_modes"] = _numlist("scheme.projected_modes", sc["projected_modes"], positive=True, integer=True)

    r = cfg["run"]
    r["eps_grid"] = _numlist("run.eps_grid", r["eps_grid"], positive=True)
    r["T_grid"] = _numlist("run.T_grid", r["T_grid"], positive=True)
    r["K"] = _num("run.K", r["K"], integer=True)
    if r["K"] < 2:
        raise ConfigError(f"config key 'run.K' must be at least 2, got {r['K']}")
    r["seed"] = _num("run.seed", r["seed"], integer=True, nonneg=True)
    r["threads"] = _num("run.threads", r["threads"], integer=True, positive=True, optional=True)
    fmts = r["out_format"]
    if isinstance(fmts, str):
        fmts = [fmts]
    if not isinstance(fmts, list) or not fmts or any(f not in OUT_FORMATS for f in fmts):
        raise ConfigError(f"config key 'run.out_format' must list formats from {', '.join(OUT_FORMATS)}")
    r["out_format"] = list(dict.fromkeys(fmts))
    if not isinstance(r["out_dir"], str) or not isinstance(r["name"], str) or not r["name"]:
        raise ConfigError("config keys 'run.out_dir' and 'run.name' must be nonempty strings")
    if r["backend"] not in BACKENDS:
        raise ConfigError("config key 'run.backend' must be null, 'compiled' or 'python'")
    r["field_paths"] = _num("run.field_paths", r["field_paths"], integer=True, positive=True)
    r["field_points"] = _num("run.field_points", r["field_points"], integer=True, positive=True)

    a = cfg["analyze"]
    a["T_values"] = _numlist("analyze.T_values", a["T_values"], positive=True)
    if not isinstance(a["points"], list):
        raise ConfigError("config key 'analyze.points' must be a list of coefficient lists")
    a["points"] = [_numlist(f"analyze.points[{i}]", p) for i, p in enumerate(a["points"])]
    a["tol"] = _num("analyze.tol", a["tol"], positive=True)

    v = cfg["verify"]
    v["eps"] = _num("verify.eps", v["eps"], positive=True)
    v["samples"] = _num("verify.samples", v["samples"], positive=True, integer=True)
    v["seed"] = _num("verify.seed", v["seed"], integer=True, nonneg=True)
    v["alpha"] = _num("verify.alpha", v["alpha"], positive=True, optional=True)
    g = v["galerkin"]
    g["N"] = _num("verify.galerkin.N", g["N"], positive=True, integer=True)
    g["K"] = _num("verify.galerkin.K", g["K"], integer=True)
    if g["K"] < 2:
        raise ConfigError("config key 'verify.galerkin.K' must be at least 2")
    g["seed"] = _num("verify.galerkin.seed", g["seed"], integer=True, nonneg=True)
    for k in ("eps", "T", "gamma", "dt"):
        g[k] = _num(f"verify.galerkin.{k}", g[k], positive=True)
    return cfg


@dataclass
class Config:
    data: dict

    @classmethod
    def load(cls, path) -> "Config":
        return cls(normalize(read_json(path)))

    @classmethod
    def from_dict(cls, raw: dict) -> "Config":
        return cls(normalize(raw))

    def model(self) -> SpectralModel:
        m = self.data["model"]
        n = m["n_modes"]
        try:
            if m["alphas"] is not None:
                tail = PowerTail(**m["tail"]) if m["tail"] else None
                model = SpectralModel(tuple(m["alphas"]), tuple(m["lambdas"]), tail)
                model = model.truncate(n)
            else:
                model = preset(m["preset"], n)
            for k, v in sorted(m["alpha_overrides"].items(), key=lambda kv: int(kv[0])):
                model = model.with_alpha(int(k), v)
        except ConfigError as exc:
            raise ConfigError(f"model section: {exc}") from None
        return model

    def scheme(self) -> SchemeConfig:
        sc = self.data["scheme"]
        try:
            return SchemeConfig(
                variant=sc["variant"], kappa=sc["kappa"], eta=sc["eta"], delta=sc["delta"], M=sc["M"],
                t_star=sc["t_star"], z1=sc["z1"], projected_modes=tuple(sc["projected_modes"]),
            )
        except ConfigError as exc:
            raise ConfigError(f"scheme section: {exc}") from None

    def sim(self, eps: float, T: float) -> SimConfig:
        s = self.data["sim"]
        steps = max(1, int(round(T / s["dt"])))
        init = tuple(s["initial"]) if s["initial"] is not None else None
        try:
            return SimConfig(eps, T, s["radius"], steps, None, init, s["exact_brownian"])
        except ConfigError as exc:
            raise ConfigError(f"sim section: {exc}") from None

    def apply_overrides(self, **flags) -> None:
        """Command-line overrides of scalar and list fields (None = keep)."""
        d = copy.deepcopy(self.data)
        mapping = {
            "eps_grid": ("run", "eps_grid"), "T_grid": ("run", "T_grid"), "N": ("model", "n_modes"),
            "K": ("run", "K"), "seed": ("run", "seed"), "scheme": ("scheme", "variant"),
            "kappa": ("scheme", "kappa"), "threads": ("run", "threads"), "out_format": ("run", "out_format"),
            "out_dir": ("run", "out_dir"), "dt": ("sim", "dt"), "backend": ("run", "backend"),
        }
        for k, v in flags.items():
            if v is None:
                continue
            sec, key = mapping[k]
            d[sec][key] = v
            if k == "scheme" and v != "multimode":
                d["scheme"]["projected_modes"] = [1]
        self.data = normalize(d)

    def to_dict(self) -> dict:
        return copy.deepcopy(self.data)
