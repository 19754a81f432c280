"""Experiment orchestration and bit-exact output emission.

Usage:
    zk <subcommand> --config <path> [--set key=value]... --out <dir>

Subcommands: simulate, linear-check, potential, decay-study, invariants.
Config files are flat key=value text with namespaced keys (solver.N_x,
weight.kind, decay.alpha, ...); --set flags override file values.  Exit
codes: 0 success, 1 tolerance failure, 2 configuration error, 3 blow-up.

Every CSV starts with a manifest comment line carrying the config hash, then
a header row; floats print as shortest round-trip decimals, so identical
spec + seed gives byte-identical outputs.  ZK_THREADS caps the BLAS worker
count and must therefore be applied before numpy loads (handled in main()).
"""

from __future__ import annotations

import hashlib
import os
import sys


DEFAULTS = {
    "seed": "0",
    "solver.case": "a",
    "solver.L": "3.141592653589793",
    "solver.X_max": "40.0",
    "solver.N_x": "256",
    "solver.l_max": "8",
    "solver.b": "0.0",
    "solver.T": "1.0",
    "solver.dt": "auto",
    "solver.cfl_fraction": "0.6",
    "solver.nonlinearity": "full",
    "solver.h": "",
    "solver.snapshot_dt": "0.1",
    "solver.engine": "auto",
    "initial.kind": "zero",
    "initial.amplitude": "",
    "initial.x0": "",
    "initial.width": "",
    "initial.mode": "",
    "initial.modes": "",
    "initial.mode_weights": "",
    "initial.norm": "",
    "initial.band": "",
    "boundary.kind": "zero",
    "boundary.amplitude": "",
    "boundary.t0": "",
    "boundary.width": "",
    "boundary.mode": "",
    "forcing.kind": "zero",
    "weight.kind": "unit",
    "weight.alpha": "",
    "decay.alpha": "auto",
    "decay.T": "20.0",
    "potential.stations": "0,0.5,1,2,4",
    "potential.n_t": "257",
    "linear_check.tol": "0.01",
    "linear_check.exclude_cells": "2",
    "invariants.l_max": "32",
    "snapshot.times": "",
}

_FLOAT_KEYS = {
    "solver.L", "solver.X_max", "solver.b", "solver.T", "solver.cfl_fraction",
    "solver.snapshot_dt", "decay.T", "linear_check.tol",
}
_INT_KEYS = {"solver.N_x", "solver.l_max", "seed", "potential.n_t",
             "linear_check.exclude_cells", "invariants.l_max"}


def parse_config(path: str | None, overrides: list[str]) -> dict:
    """Resolve file + flag overrides against the documented defaults.

    Unknown keys, malformed lines, and type mismatches raise
    ConfigurationError naming the offender (CLI maps this to exit code 2).
    """
    from .errors import ConfigurationError

    spec = dict(DEFAULTS)
    items = []
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                lines = fh.readlines()
        except OSError as exc:
            raise ConfigurationError(f"cannot read config file: {exc}") from exc
        for ln, raw in enumerate(lines, 1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ConfigurationError(f"{path}:{ln}: expected key=value, got {raw!r}")
            key, val = (s.strip() for s in text.split("=", 1))
            items.append((key, val))
    for ov in overrides:
        if "=" not in ov:
            raise ConfigurationError(f"--set expects key=value, got {ov!r}")
        key, val = (s.strip() for s in ov.split("=", 1))
        items.append((key, val))   # flags come last, so they win
    for key, val in items:
        if key not in spec:
            raise ConfigurationError(f"unknown config key {key!r}")
        spec[key] = val
    for key in _FLOAT_KEYS:
        try:
            float(spec[key])
        except ValueError:
            raise ConfigurationError(f"key {key!r} expects a number, got {spec[key]!r}")
    for key in _INT_KEYS:
        try:
            int(spec[key])
        except ValueError:
            raise ConfigurationError(f"key {key!r} expects an integer, got {spec[key]!r}")
    return spec


def config_hash(spec: dict) -> str:
    canon = "\n".join(f"{k}={spec[k]}" for k in sorted(spec))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


class OutputDir:
    def __init__(self, path: str, spec: dict):
        self.path = path
        self.hash = config_hash(spec)
        self.spec = spec
        os.makedirs(path, exist_ok=True)
        self.artifacts = []

    def write_csv(self, name: str, header: list[str], rows):
        full = os.path.join(self.path, name)
        with open(full, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# manifest config_hash={self.hash} seed={self.spec['seed']}\n")
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(fmt(v) for v in row) + "\n")
        self.artifacts.append(name)

    def write_manifest(self, status: str):
        full = os.path.join(self.path, "MANIFEST")
        with open(full, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"config_hash={self.hash}\n")
            fh.write(f"seed={self.spec['seed']}\n")
            fh.write(f"status={status}\n")
            for a in sorted(self.artifacts):
                fh.write(f"artifact={a}\n")

    def echo_config(self):
        full = os.path.join(self.path, "config_resolved.cfg")
        with open(full, "w", encoding="utf-8", newline="\n") as fh:
            for k in sorted(self.spec):
                fh.write(f"{k}={self.spec[k]}\n")
        self.artifacts.append("config_resolved.cfg")


def build_solver_config(spec: dict):
    import numpy as np

    from .errors import ConfigurationError
    from .synthetic import resolve_boundary, resolve_initial
    from .weights import make_weight
    from .zk_solver import SolverConfig

    seed = int(spec["seed"])
    sub = lambda prefix: {k.split(".", 1)[1]: v for k, v in spec.items()
                          if k.startswith(prefix + ".") and v != ""}
    if spec["forcing.kind"] != "zero":
        raise ConfigurationError("CLI forcing kinds: only 'zero' is defined")
    weight = make_weight(spec["weight.kind"],
                         float(spec["weight.alpha"]) if spec["weight.alpha"] else None)
    dt = None if spec["solver.dt"] in ("auto", "") else float(spec["solver.dt"])
    l_max = int(spec["solver.l_max"])
    cfg = SolverConfig(
        case=spec["solver.case"],
        L=float(spec["solver.L"]),
        X_max=float(spec["solver.X_max"]),
        N_x=int(spec["solver.N_x"]),
        l_max=l_max,
        b=float(spec["solver.b"]),
        T=float(spec["solver.T"]),
        dt=dt,
        cfl_fraction=float(spec["solver.cfl_fraction"]),
        nonlinearity=spec["solver.nonlinearity"],
        h=float(spec["solver.h"]) if spec["solver.h"] else None,
        snapshot_dt=float(spec["solver.snapshot_dt"]),
        weight=weight,
        initial=resolve_initial(sub("initial"), seed),
        boundary=resolve_boundary(sub("boundary"), l_max),
        forcing=None,
        engine=spec["solver.engine"],
    )
    return cfg


def _series_rows(report):
    for k in range(len(report.times)):
        flux_at = report.boundary_flux[
            min(k * ((len(report.flux_times) - 1) // max(len(report.times) - 1, 1)),
                len(report.boundary_flux) - 1)]
        yield (float(report.times[k]), float(report.mass[k]), float(report.energy[k]),
               float(report.weighted_norm[k]), float(flux_at))


def cmd_simulate(spec: dict, out: OutputDir) -> int:
    import numpy as np

    from .zk_solver import run

    cfg = build_solver_config(spec)
    result = run(cfg)
    traj, report = result.trajectory, result.report
    out.write_csv("series.csv", ["t", "mass", "energy", "weighted_norm", "boundary_flux"],
                  _series_rows(report))
    want = spec["snapshot.times"]
    snap_at = ([float(s) for s in want.split(",")] if want
               else [float(traj.times[0]), float(traj.times[-1])])
    for t in snap_at:
        k = int(np.argmin(np.abs(traj.times - t)))
        phys = traj.field(k).physical()
        rows = ((float(xv), float(yv), float(phys[i, j]))
                for i, xv in enumerate(traj.x)
                for j, yv in enumerate(traj.basis.nodes))
        out.write_csv(f"snapshot_{fmt(float(traj.times[k]))}.csv", ["x", "y", "u"], rows)
    rows = [("lambda_plus", report.lambda_plus_u),
            ("smoothing", report.smoothing),
            ("residual_mass", report.residual_mass),
            ("residual_energy", report.residual_energy),
            ("compatibility_gap", traj.compatibility_gap)]
    out.write_csv("report.csv", ["key", "value"],
                  ((k, fmt(v) if v is not None else "") for k, v in rows))
    return 0


def cmd_linear_check(spec: dict, out: OutputDir) -> int:
    import numpy as np

    from dataclasses import replace

    from .semigroup import solve_linear_superposition
    from .zk_solver import run

    cfg = replace(build_solver_config(spec), nonlinearity="off")
    result = run(cfg, collect_report=False)
    traj = result.trajectory
    u0 = traj.modal[0]
    n_trace = 512
    sup = solve_linear_superposition(
        u0, None, None, np.array([cfg.T]), traj.basis, cfg.b, cfg.X_max,
        n_trace=n_trace, on_truncation="warn")
    skip = int(spec["linear_check.exclude_cells"])
    a = traj.modal[-1][skip:]
    bfield = sup.fields[0][skip:]
    denom = np.sqrt(np.sum(bfield**2))
    disc = float(np.sqrt(np.sum((a - bfield) ** 2)) / denom) if denom > 0 else 0.0
    tol = float(spec["linear_check.tol"])
    out.write_csv("report.csv", ["key", "value"], [
        ("discrepancy_rel_l2", fmt(disc)),
        ("tolerance", fmt(tol)),
        ("excluded_cells", spec["linear_check.exclude_cells"]),
        ("trace_gap", fmt(sup.trace_gap)),
        ("verdict", "pass" if disc <= tol else "fail"),
    ])
    return 0 if disc <= tol else 1


def cmd_potential(spec: dict, out: OutputDir) -> int:
    import numpy as np

    from .eigenbasis import build_basis
    from .potential import BoundaryData, eval_J, transform_mu
    from .synthetic import resolve_boundary

    case = spec["solver.case"]
    L = float(spec["solver.L"])
    l_max = int(spec["solver.l_max"])
    b = float(spec["solver.b"])
    T = float(spec["solver.T"])
    basis = build_basis(case, L, l_max)
    n_t = int(spec["potential.n_t"])
    t = np.linspace(0.0, T, n_t)
    mu_fn = resolve_boundary(
        {k.split(".", 1)[1]: v for k, v in spec.items()
         if k.startswith("boundary.") and v != ""}, l_max)
    if mu_fn is None:
        samples = np.zeros((n_t, basis.n_nodes))
    else:
        modal = np.stack([mu_fn(tv) for tv in t])
        samples = modal @ basis.psi.T
    mu = BoundaryData(t, samples, basis)
    table = transform_mu(mu, basis)
    stations = [float(s) for s in spec["potential.stations"].split(",")]
    for xs in stations:
        times, vals = eval_J(table, xs, basis, b)
        rows = ((float(tv), float(yv), float(vals[i, j]))
                for i, tv in enumerate(times[: n_t])
                for j, yv in enumerate(basis.nodes))
        out.write_csv(f"potential_x{fmt(xs)}.csv", ["t", "y", "J"], rows)
    out.write_csv("report.csv", ["key", "value"],
                  [("stations", spec["potential.stations"]), ("n_freq", len(table.theta))])
    return 0


def cmd_decay_study(spec: dict, out: OutputDir) -> int:
    import numpy as np

    from dataclasses import replace

    from .diagnostics import decay_thresholds, fit_cubic_constant, fit_decay
    from .weights import make_weight, weighted_l2_modal
    from .zk_solver import run

    cfg = build_solver_config(spec)
    case = cfg.case
    thr = decay_thresholds(cfg.b, cfg.L, case)
    rows = [("L0", fmt(thr.L0)), ("alpha0", fmt(thr.alpha0)), ("beta", fmt(thr.beta)),
            ("c0", fmt(thr.c0))]
    if not thr.in_decay_regime():
        rows.append(("verdict", "outside decay regime"))
        out.write_csv("report.csv", ["key", "value"], rows)
        return 0
    alpha = (thr.alpha0 / 2.0 if spec["decay.alpha"] in ("auto", "")
             else float(spec["decay.alpha"]))
    weight = make_weight("exponential", alpha)
    T_decay = float(spec["decay.T"])
    cfg = replace(cfg, T=T_decay, weight=weight)
    result = run(cfg)
    traj = result.trajectory
    series = result.report.weighted_norm**2
    c_fit = fit_cubic_constant(traj, weight)
    thr = decay_thresholds(cfg.b, cfg.L, case, c_empirical=c_fit)
    fit = fit_decay(series, traj.times, alpha_beta=alpha * thr.beta)
    u0_norm = float(np.sqrt(np.trapezoid(np.sum(traj.modal[0] ** 2, -1), traj.x)))
    rows += [
        ("alpha", fmt(alpha)),
        ("c_empirical", fmt(c_fit)),
        ("eps0_bound_rhs", fmt(thr.eps0_bound)),
        ("eps0_max", fmt(thr.eps0_max)),
        ("u0_norm", fmt(u0_norm)),
        ("u0_within_bound", str(u0_norm <= thr.eps0_max).lower()),
        ("fitted_rate", fmt(fit.rate)),
        ("alpha_beta", fmt(alpha * thr.beta)),
        ("monotone_within_1pct", str(bool(fit.monotone)).lower()),
        ("verdict", "decay regime"),
    ]
    out.write_csv("report.csv", ["key", "value"], rows)
    series_rows = ((float(t), float(s)) for t, s in zip(traj.times, series))
    out.write_csv("decay_series.csv", ["t", "weighted_norm_sq"], series_rows)
    return 0 if fit.monotone and fit.rate >= alpha * thr.beta else 1


def cmd_invariants(spec: dict, out: OutputDir) -> int:
    import numpy as np

    from .eigenbasis import analyze, build_basis, synthesize
    from .dispersion import r0_lambda, residual
    from .potential import BoundaryData, eval_J, transform_mu
    from .semigroup import StripField, eval_S, extend_field, make_strip_grid

    rng = np.random.default_rng(int(spec["seed"]))
    l_max = int(spec["invariants.l_max"])
    rows = []
    ok = True

    def check(name, value, tol):
        nonlocal ok
        passed = value <= tol
        ok = ok and passed
        rows.append((name, fmt(float(value)), fmt(float(tol)),
                     "pass" if passed else "fail"))

    for case in "abcd":
        basis = build_basis(case, float(spec["solver.L"]), l_max)
        G = basis.psi.T @ (basis.weights[:, None] * basis.psi)
        check(f"orthonormality_{case}", np.abs(G - np.eye(l_max)).max(), 1e-10)
        coeffs = rng.standard_normal(l_max)
        back = analyze(synthesize(coeffs, basis), basis)
        check(f"roundtrip_{case}", np.abs(back - coeffs).max(), 1e-10)

    theta = rng.uniform(-1e3, 1e3, 20000)
    lam = rng.uniform(0, 1e3, 20000)
    bs = rng.uniform(-5, 5, 20000)
    vals = np.empty(len(theta), dtype=complex)
    for i in range(len(theta)):
        vals[i] = r0_lambda(np.array([theta[i]]), lam[i], bs[i])[0][0]
    res = residual(vals, lam, bs, theta) / (1.0 + np.abs(vals) ** 3)
    check("cardano_residual", res.max(), 1e-10)

    basis = build_basis("a", float(spec["solver.L"]), 4)
    t = np.linspace(0, 1.0, 129)
    samples = rng.standard_normal((129, basis.n_nodes)) * 0.1
    mu = BoundaryData(t, samples, basis)
    table = transform_mu(mu, basis)
    _, j0 = eval_J(table, 0.0, basis, 0.0)
    check("potential_trace", np.abs(j0[:129] - samples).max()
          / max(np.abs(samples).max(), 1e-30), 1e-10)

    grid = make_strip_grid(20.0, 128)
    x = np.arange(128) * grid.dx
    u0 = np.zeros((128, 4))
    u0[:, 0] = np.exp(-(((x - 8) / 1.5) ** 2))
    field = extend_field(u0, grid, basis)
    n0 = np.sqrt(np.sum(field.modal**2))
    st = eval_S(field, 3.7, 0.0, on_truncation="ignore")
    check("semigroup_norm", abs(np.sqrt(np.sum(st.modal**2)) - n0) / n0, 1e-12)

    out.write_csv("suite.csv", ["check", "value", "tolerance", "verdict"], rows)
    return 0 if ok else 1


COMMANDS = {
    "simulate": cmd_simulate,
    "linear-check": cmd_linear_check,
    "potential": cmd_potential,
    "decay-study": cmd_decay_study,
    "invariants": cmd_invariants,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    threads = os.environ.get("ZK_THREADS")
    if threads:
        # must happen before numpy initializes its BLAS thread pool
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                    "NUMBA_NUM_THREADS"):
            os.environ.setdefault(var, threads)

    import argparse

    parser = argparse.ArgumentParser(prog="zk", description=__doc__)
    parser.add_argument("subcommand", choices=sorted(COMMANDS))
    parser.add_argument("--config", default=None)
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="key=value")
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)

    from .errors import BlowUpError, ConfigurationError

    try:
        spec = parse_config(args.config, args.overrides)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    out = OutputDir(args.out, spec)
    out.echo_config()
    try:
        code = COMMANDS[args.subcommand](spec, out)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        out.write_manifest("failed_configuration")
        return 2
    except BlowUpError as exc:
        print(f"blow-up: {exc}", file=sys.stderr)
        out.write_manifest("incomplete_blowup")
        return 3
    out.write_manifest("complete" if code == 0 else "complete_tolerance_failure")
    return code


if __name__ == "__main__":
    sys.exit(main())
