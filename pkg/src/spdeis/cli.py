"""Command-line entry point: ``spdeis {analyze,run,verify,explain-scheme}``.

Exit codes: 0 success, 1 verification failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, _backend, controls, estimator, galerkin, spectral, variational
from .config import DEFAULTS, OUT_FORMATS, Config
from .controls import VARIANTS
from .dynamics import simulate
from .exceptions import ConfigError, PreconditionError
from .rng import RNG_ID

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2


def _floats(text: str) -> list:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _formats(text: str) -> list:
    out = [t.strip() for t in text.split(",") if t.strip()]
    bad = [t for t in out if t not in OUT_FORMATS]
    if bad or not out:
        raise argparse.ArgumentTypeError(f"formats must be from {', '.join(OUT_FORMATS)}")
    return out


def _load(path) -> Config:
    if path is None:
        return Config.from_dict({})
    return Config.load(path)


def _fmt_flag(ok: bool) -> str:
    return "holds" if ok else "fails"


def cmd_analyze(args) -> int:
    cfg = _load(args.config)
    model = cfg.model()
    a = cfg.data["analyze"]
    L = cfg.data["sim"]["radius"]
    rep = spectral.gap_report(model, a["tol"])
    name = cfg.data["model"]["preset"] or "explicit eigenvalues"
    print(f"model: {name}, N = {model.n_modes}")
    print(f"alpha[1..4] = {', '.join(f'{v:g}' for v in model.alphas[:4])}; "
          f"lambda[1..4] = {', '.join(f'{v:g}' for v in model.lambdas[:4])}")
    print(f"trace partial sum sum lambda^2/alpha = {rep.trace_partial:.6g}")
    for note in rep.tail_notes:
        print(f"tail: {note}")
    print("Assumption A: " + ("holds" if rep.assumption_A_holds else f"fails at k={rep.first_failure_A}"))
    print("Assumption B: " + ("holds" if rep.assumption_B_holds else f"fails at k={rep.first_failure_B}"))
    print(f"gap margin: {rep.gap_margin:.6g}")
    if rep.t0 is None:
        print("T0 = undefined (some mode has no finite crossing)")
    else:
        print(f"T0 = {rep.t0:.12g}")
        nz = [(k + 2, t) for k, t in enumerate(rep.t_k) if t > 0]
        if nz:
            print("nonzero crossing times: " + ", ".join(f"T_{k} = {t:.12g}" for k, t in nz))
        print(f"crossing times nonincreasing past the maximum: {'yes' if rep.tail_monotone else 'no'}")
    for T in a["T_values"]:
        d = variational.minimal_exit(model, L, T)
        extra = " (degenerate: tied modes)" if d.degenerate else ""
        print(f"T = {T:g}: minimal exit: mode {d.mode}, cost L^2 min phi = {d.value:.10g}{extra}")
    for p in a["points"]:
        q = variational.quasipotential(model, p)
        print(f"quasipotential at {p}: {q:.10g}")
    return EXIT_OK


def _write_field(path: Path, model, cfg: Config, scheme, reports, backend, threads) -> None:
    r = cfg.data["run"]
    xi = np.linspace(0.0, 1.0, r["field_points"])
    k = np.arange(1, model.n_modes + 1)
    basis = math.sqrt(2.0) * np.sin(np.pi * np.outer(k, xi))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["eps", "T", "path", "exited", "time", "xi", "value"])
        for rep in reports:
            if not rep.ok:
                continue
            sim = cfg.sim(rep.eps, rep.horizon)
            b = simulate(model, sim, scheme, rep.seed, r["field_paths"], keep_state=True, threads=threads, backend=backend)
            for i in range(len(b)):
                t = b.exit_step[i] * sim.h if b.exited[i] else sim.horizon
                vals = b.state[i] @ basis
                for x, v in zip(xi, vals):
                    w.writerow([rep.eps, rep.horizon, i, int(b.exited[i]), repr(float(t)), repr(float(x)), repr(float(v))])


def cmd_run(args) -> int:
    cfg = _load(args.config)
    cfg.apply_overrides(
        eps_grid=args.eps_grid, T_grid=args.T_grid, N=args.N, K=args.K, seed=args.seed, scheme=args.scheme,
        kappa=args.kappa, threads=args.threads, out_format=args.out_format, out_dir=args.out_dir, dt=args.dt,
        backend=args.backend,
    )
    model = cfg.model()
    scheme = cfg.scheme()
    r = cfg.data["run"]
    backend = r["backend"]
    template = cfg.sim(r["eps_grid"][0], r["T_grid"][0])

    def progress(rep):
        if rep.ok:
            est = "no successes" if rep.no_successes else f"{rep.estimate:.3e} (re {rep.re_per_sample:.3g})"
            print(f"eps={rep.eps:g} T={rep.horizon:g}: {est} [{rep.wall_time_s:.1f}s]", file=sys.stderr)
        else:
            print(f"eps={rep.eps:g} T={rep.horizon:g}: skipped: {rep.error}", file=sys.stderr)

    reports = estimator.sweep(
        model, r["eps_grid"], r["T_grid"], template, scheme, r["K"], r["seed"], r["threads"], backend,
        progress=None if args.quiet else progress,
    )
    out = Path(r["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    stem = out / r["name"]
    written = []
    if "csv" in r["out_format"]:
        p = stem.with_suffix(".csv")
        p.write_text(estimator.csv_text(reports))
        written.append(p)
    if "md" in r["out_format"]:
        p = stem.with_suffix(".md")
        title = f"{scheme.variant}, N = {model.n_modes}, K = {r['K']}"
        p.write_text(estimator.markdown_text(reports, title))
        written.append(p)
    if "json" in r["out_format"]:
        p = stem.with_suffix(".json")
        p.write_text(json.dumps(estimator.json_rows(reports), indent=2, ensure_ascii=False) + "\n")
        written.append(p)
    if args.emit_field:
        p = Path(args.emit_field)
        _write_field(p, model, cfg, scheme, reports, backend, r["threads"])
        written.append(p)
    manifest = cfg.to_dict()
    manifest["manifest"] = {
        "version": __version__,
        "rng": RNG_ID,
        "seed": r["seed"],
        "backend": backend or _backend.name(),
        "cell_seeds": [[rep.eps, rep.horizon, rep.seed] for rep in reports],
    }
    p = Path(str(stem) + ".manifest.json")
    p.write_text(json.dumps(manifest, indent=2, ensure_ascii=False) + "\n")
    written.append(p)
    for p in written:
        print(f"wrote {p}")
    failed = [rep for rep in reports if not rep.ok]
    if failed:
        print(f"{len(failed)} of {len(reports)} cells skipped by precondition checks", file=sys.stderr)
    return EXIT_OK


def _region_lines(rep) -> list:
    lines = [
        f"region check at eps={rep.eps:g}, kappa={rep.kappa:g}, eta={rep.eta:g}, delta={rep.delta:g}, "
        f"alpha={rep.alpha:g}; pass threshold -{rep.slack:.3e}"
    ]
    for g in rep.regions:
        lines.append(
            f"  {g.name}: V1 in [{g.v_low:.4g}, {g.v_high:.4g}], {g.count} points, min bound {g.min_bound:.6e} "
            f"at x1={g.argmin_x1:.4g}, min rho1 {g.min_rho1:.4f}: {'pass' if g.passed else 'FAIL'}"
        )
    lines.append(
        f"  at x1=0 the bound equals -(1-eta) rho1(0) eps alpha1 = {rep.bound_origin:.6e} with rho1(0) = {rep.rho1_origin:.6g}"
    )
    return lines


def cmd_verify(args) -> int:
    cfg = _load(args.config)
    model = cfg.model()
    v = cfg.data["verify"]
    eps = args.eps if args.eps is not None else v["eps"]
    scheme = cfg.scheme()
    if args.kappa is not None:
        scheme = controls.SchemeConfig("scheme2", kappa=args.kappa, eta=scheme.eta, delta=scheme.delta)
    elif scheme.variant not in ("scheme2", "multimode"):
        scheme = controls.SchemeConfig("scheme2", kappa=scheme.kappa, eta=scheme.eta, delta=scheme.delta)
    L = cfg.data["sim"]["radius"]
    ok = True
    try:
        rep = controls.verify_regions(model, L, scheme, eps, v["samples"], v["seed"], v["alpha"])
    except PreconditionError as exc:
        print(f"precondition violation: {exc}")
        return EXIT_CONFIG
    for line in _region_lines(rep):
        print(line)
    print(f"G^eps region verification: {'PASS' if rep.passed else 'FAIL'}")
    ok &= rep.passed
    g = v["galerkin"]
    chk = galerkin.discrepancy_check(
        model, g["N"], g["eps"], g["T"], g["K"], g["seed"], g["gamma"], g["dt"], backend=cfg.data["run"]["backend"]
    )
    print(
        f"Galerkin coupling N={chk.N} vs {2 * chk.N}, eps={chk.eps:g}, T={chk.T:g}: analytic bound {chk.analytic_bound:.5g}, "
        f"E sup discrepancy {chk.empirical_sup_mean:.5g} +- {chk.std_err:.2g}, ratio {chk.ratio:.4g} "
        f"(guard {chk.ceiling:g}): {'PASS' if chk.passed else 'FAIL'}"
    )
    ok &= chk.passed
    print("overall: " + ("PASS" if ok else "FAIL"))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_explain(args) -> int:
    cfg = _load(args.config)
    model = cfg.model()
    scheme = cfg.scheme()
    if args.scheme is not None:
        scheme = scheme.with_variant(args.scheme)
    L = cfg.data["sim"]["radius"]
    eps = args.eps if args.eps is not None else cfg.data["run"]["eps_grid"][0]
    print("scheme defaults:")
    for k, val in DEFAULTS["scheme"].items():
        print(f"  {k} = {json.dumps(val)}")
    print(f"configured: variant={scheme.variant}, kappa={scheme.kappa:g}, eta={scheme.eta:g}, "
          f"delta={'2*eps' if scheme.delta is None else scheme.delta}, projected_modes={list(scheme.projected_modes)}")
    a1, l1 = model.alphas[0], model.lambdas[0]
    print(f"at eps = {eps:g} (alpha1 = {a1:g}, lambda1 = {l1:g}, L = {L:g}):")
    try:
        r = scheme.resolve(model, L, eps)
    except PreconditionError as exc:
        print(f"  precondition violation: {exc}")
        return EXIT_CONFIG
    for k, val in r.as_dict().items():
        print(f"  {k} = {val}")
    if scheme.variant in ("scheme2", "multimode"):
        print(f"  precondition eps^(1-kappa) = {eps ** (1 - scheme.kappa):.6g} <= alpha1/(2 lambda1^2) = {a1 / (2 * l1 * l1):.6g}")
        u0, rate = controls.scheme2_origin_value(model, L, scheme, eps)
        print(f"  U^delta(0) = {u0:.10g}; second-moment rate (1/2)(1-eta) U^delta(0) = {rate:.10g}")
    if scheme.variant == "scheme1":
        print("  control is pure F1 for t > T - t_star; mollified {F1, F2, F3} before")
    if scheme.eta > 0.25:
        print("  note: eta > 1/4 lies outside the range covered by the performance bounds")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spdeis", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="spectral gap report and minimal exit directions")
    a.add_argument("config", nargs="?")
    a.set_defaults(func=cmd_analyze)

    r = sub.add_parser("run", help="Monte Carlo sweep over an (eps, T) grid")
    r.add_argument("config", nargs="?")
    r.add_argument("--eps-grid", type=_floats)
    r.add_argument("--T-grid", type=_floats)
    r.add_argument("--N", type=int)
    r.add_argument("--K", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--scheme", choices=VARIANTS)
    r.add_argument("--kappa", type=float)
    r.add_argument("--threads", type=int)
    r.add_argument("--dt", type=float)
    r.add_argument("--out-format", type=_formats)
    r.add_argument("--out-dir")
    r.add_argument("--backend", choices=_backend.available())
    r.add_argument("--emit-field", metavar="CSV", help="write X(t, xi) at exit (or T) for the first paths of each cell")
    r.add_argument("--quiet", action="store_true")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="G^eps region check and Galerkin coupling check")
    v.add_argument("config", nargs="?")
    v.add_argument("--eps", type=float)
    v.add_argument("--kappa", type=float)
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("explain-scheme", help="print scheme defaults and resolved parameters")
    e.add_argument("config", nargs="?")
    e.add_argument("--eps", type=float)
    e.add_argument("--scheme", choices=VARIANTS)
    e.set_defaults(func=cmd_explain)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
