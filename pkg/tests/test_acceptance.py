"""Acceptance suite: one test per criterion, each printing a verdict line.

Run with `pytest tests/test_acceptance.py -v -s` to see the verdicts and
runtimes.  Criteria with stated runtime budgets assert them.
"""

import time

import numpy as np
import pytest

from zkstrip.eigenbasis import analyze, build_basis, synthesize
from zkstrip.dispersion import r0_elementwise, r0_lambda, residual, window_threshold
from zkstrip.diagnostics import (
    conservation_residuals, decay_thresholds, fit_cubic_constant, fit_decay,
)
from zkstrip.potential import BoundaryData, eval_J_modal, residual_J, transform_mu
from zkstrip.semigroup import (
    StripField, eval_K, eval_S, extend_field, make_strip_grid,
    solve_linear_superposition,
)
from zkstrip.synthetic import initial_gaussian_modes
from zkstrip.weights import make_weight, weighted_l2_modal
from zkstrip.zk_solver import SolverConfig, run


def _verdict(name, ok, detail, elapsed=None):
    stamp = f" [{elapsed:.1f}s]" if elapsed is not None else ""
    print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}{stamp}")
    assert ok, f"{name}: {detail}"


# ---------------------------------------------------------------- criterion 1

def test_criterion_1_eigenbasis_suite():
    t0 = time.perf_counter()
    worst_ortho = 0.0
    worst_resid = 0.0
    for case in "abcd":
        for L in (1.0, np.pi, 5.0):
            basis = build_basis(case, L, 64)
            gram = basis.psi.T @ (basis.weights[:, None] * basis.psi)
            worst_ortho = max(worst_ortho, np.abs(gram - np.eye(64)).max())
            y = np.linspace(0, L, 257)
            for l in range(1, 65):
                r = -basis.eval_psi_d2(l, y) - basis.lambdas[l - 1] * basis.eval_psi(l, y)
                worst_resid = max(worst_resid, np.abs(r).max())
    dt = time.perf_counter() - t0
    ok = worst_ortho <= 1e-10 and worst_resid <= 1e-8 and dt < 5.0
    _verdict("criterion 1 (eigenbasis)",
             ok, f"orthonormality {worst_ortho:.2e} <= 1e-10, "
                 f"eigen-residual {worst_resid:.2e} <= 1e-8", dt)


# ---------------------------------------------------------------- criterion 2

def test_criterion_2_cardano_suite():
    t0 = time.perf_counter()
    rng = np.random.default_rng(12345)
    n = 100_000
    theta = rng.uniform(-1e3, 1e3, n)
    lam = rng.uniform(0.0, 1e3, n)
    b = rng.uniform(-5.0, 5.0, n)
    vals, osc = r0_elementwise(theta, lam, b)
    res = residual(vals, lam, b, theta) / (1.0 + np.abs(vals) ** 3)
    worst_res = res.max()

    conj_vals, _ = r0_elementwise(-theta, lam, b)
    conj_exact = np.array_equal(conj_vals, np.conj(vals))

    worst_p = np.abs(vals.real[osc]).max() if osc.any() else 0.0

    gaps = []
    for lam_c, b_c in ((1.0, 4.0), (0.0, 2.0), (10.0, 14.5)):
        thr = window_threshold(lam_c, b_c)
        d = 1e-14 * (1 + thr)
        lo = r0_lambda(np.array([thr - d]), lam_c, b_c)[0][0]
        hi = r0_lambda(np.array([thr + d]), lam_c, b_c)[0][0]
        gaps.append(abs(lo - hi))
    worst_gap = max(gaps)
    dt = time.perf_counter() - t0
    ok = (worst_res <= 1e-10 and conj_exact and worst_p <= 1e-12
          and worst_gap <= 1e-6 and dt < 10.0)
    _verdict("criterion 2 (Cardano)",
             ok, f"residual {worst_res:.2e} <= 1e-10, conjugate exact: {conj_exact}, "
                 f"oscillatory |p| {worst_p:.2e} <= 1e-12, "
                 f"window gap {worst_gap:.2e} <= 1e-6", dt)


# ---------------------------------------------------------------- criterion 3

def test_criterion_3_boundary_potential():
    t0 = time.perf_counter()
    basis = build_basis("a", np.pi, 4)
    n_t = 257
    t = np.linspace(0, 1.0, n_t)
    modal = np.zeros((n_t, 4))
    modal[:, 0] = np.exp(-(((t - 0.45) / 0.1) ** 2))
    modal[:, 2] = 0.5 * np.exp(-(((t - 0.55) / 0.15) ** 2))
    mu = BoundaryData(t, modal @ basis.psi.T, basis)
    table = transform_mu(mu, basis)

    j0 = eval_J_modal(table, 0.0, b=0.0)
    trace_err = np.abs(j0[:n_t] - modal).max() / np.abs(modal).max()

    b = 0.3
    x = 1.7
    Jhat = np.fft.rfft(eval_J_modal(table, x, b=b), axis=0)
    damp_err = 0.0
    for l in range(4):
        r0 = r0_lambda(table.theta, float(basis.lambdas[l]), b)[0]
        expect = np.exp(r0.real * x) * np.abs(table.muhat[:, l])
        damp_err = max(damp_err,
                       np.abs(np.abs(Jhat[:, l]) - expect).max())
    damp_err /= np.abs(table.muhat).max()

    res = [residual_J(table, np.linspace(0.5, 2.5, n), basis, b=0.0)
           for n in (33, 65, 129)]
    ratios = [res[i] / res[i + 1] for i in range(2)]
    conv_ok = all(3.0 <= r <= 5.0 for r in ratios)
    dt = time.perf_counter() - t0
    ok = trace_err <= 1e-10 and damp_err <= 1e-12 and conv_ok and dt < 30.0
    _verdict("criterion 3 (boundary potential)",
             ok, f"trace {trace_err:.2e} <= 1e-10, damping {damp_err:.2e} <= 1e-12, "
                 f"residual ratios {[f'{r:.2f}' for r in ratios]} ~ 4x", dt)


# ---------------------------------------------------------------- criterion 4

def test_criterion_4_semigroup():
    t0 = time.perf_counter()
    basis = build_basis("a", np.pi, 4)
    grid = make_strip_grid(25.0, 161)
    vals = np.zeros((grid.n, 4))
    vals[:, 0] = np.exp(-(((grid.x - 8.0) / 1.5) ** 2))
    vals[:, 1] = 0.4 * np.exp(-(((grid.x - 10.0) / 2.0) ** 2))
    f = StripField(grid, basis, vals)
    n0 = np.sqrt(np.sum(vals**2))
    cons_err = max(
        abs(np.sqrt(np.sum(eval_S(f, tv, 1.1).modal**2)) - n0) / n0
        for tv in (0.1, 1.0, 5.0, 10.0)
    )
    s12 = eval_S(eval_S(f, 4.3, 1.1), 5.7, 1.1, on_truncation="ignore").modal
    s3 = eval_S(f, 10.0, 1.1).modal
    group_err = np.abs(s12 - s3).max() / np.abs(s3).max()

    basis_b = build_basis("b", np.pi, 2)
    gridK = make_strip_grid(60.0, 241)
    fv = np.zeros((gridK.n, 2))
    fv[:, 0] = np.exp(-((gridK.x / 18.0) ** 2))
    tsmall = 1e-3
    K = eval_K(np.stack([fv, fv]), np.array([0.0, tsmall]), tsmall, gridK, basis_b, 0.0)
    taylor_err = np.sqrt(np.sum((K - tsmall * fv) ** 2) / np.sum((tsmall * fv) ** 2))
    dt = time.perf_counter() - t0
    ok = cons_err <= 1e-12 and group_err <= 1e-12 and taylor_err <= 1e-6 and dt < 10.0
    _verdict("criterion 4 (semigroup)",
             ok, f"norm conservation {cons_err:.2e} <= 1e-12, group {group_err:.2e} "
                 f"<= 1e-12, K Taylor {taylor_err:.2e} <= 1e-6", dt)


# ---------------------------------------------------------------- criterion 5

def test_criterion_5_linear_cross_oracle():
    t0 = time.perf_counter()
    cfg = SolverConfig(
        case="a", L=np.pi, X_max=40.0, N_x=512, l_max=32, b=0.0, T=1.0,
        nonlinearity="off", snapshot_dt=1.0,
        initial=initial_gaussian_modes(amplitude=1.0, x0=10.0, width=2.0,
                                       modes=(1, 2, 3),
                                       mode_weights=(1.0, 0.6, 0.3)))
    traj = run(cfg, collect_report=False).trajectory
    sup = solve_linear_superposition(
        traj.modal[0], None, None, np.array([1.0]), traj.basis, 0.0, 40.0,
        n_trace=512, on_truncation="warn")
    a = traj.modal[-1][2:]
    o = sup.fields[0][2:]
    disc = float(np.sqrt(np.sum((a - o) ** 2) / np.sum(o**2)))
    dt = time.perf_counter() - t0
    ok = disc <= 0.01 and dt < 120.0
    _verdict("criterion 5 (linear cross-oracle)",
             ok, f"relative L2 discrepancy {disc:.2e} <= 1e-2 "
                 f"(excluding 2 cells at x=0)", dt)


# ---------------------------------------------------------------- criterion 6

def test_criterion_6_conservation_budgets():
    t0 = time.perf_counter()

    def budget(N_x, pin_dt):
        # the reference resolution pins dt = dx^3/8; the coarse comparison
        # run is CFL-limited (the transverse advection bound binds there)
        dt = (40.0 / (N_x - 1)) ** 3 / 8.0 if pin_dt else None
        cfg = SolverConfig(
            case="a", L=np.pi, X_max=40.0, N_x=N_x, l_max=32, b=0.0, T=5.0,
            dt=dt, nonlinearity="full", snapshot_dt=0.25,
            initial=initial_gaussian_modes(amplitude=1.0, x0=8.0, width=2.0,
                                           modes=(1, 2), mode_weights=(1.0, 0.5),
                                           norm=0.1))
        return conservation_residuals(run(cfg, collect_report=False).trajectory)

    coarse = budget(256, pin_dt=False)
    fine = budget(512, pin_dt=True)
    dt = time.perf_counter() - t0
    ok = (fine[0] <= 1e-3 and fine[1] <= 5e-3
          and fine[0] < coarse[0] and fine[1] < coarse[1] and dt < 180.0)
    _verdict("criterion 6 (conservation)",
             ok, f"mass residual {fine[0]:.2e} <= 1e-3, energy residual "
                 f"{fine[1]:.2e} <= 5e-3, refinement {coarse[0]:.2e}->{fine[0]:.2e}, "
                 f"{coarse[1]:.2e}->{fine[1]:.2e}", dt)


# ---------------------------------------------------------------- criterion 7

def test_criterion_7_decay_certificate():
    t0 = time.perf_counter()
    results = []
    for case in ("a", "c"):
        thr = decay_thresholds(0.0, np.pi, case)
        alpha = thr.alpha0 / 2.0
        if case == "a":
            assert alpha == pytest.approx(1.0 / (16.0 * np.sqrt(2.0)), rel=1e-12)
            assert thr.beta == pytest.approx(1.0 / 8.0, rel=1e-12)
        else:
            assert thr.beta == pytest.approx(1.0 / 32.0, rel=1e-12)
        weight = make_weight("exponential", alpha)
        cfg = SolverConfig(
            case=case, L=np.pi, X_max=36.0, N_x=288, l_max=8, b=0.0, T=20.0,
            nonlinearity="full", snapshot_dt=0.25, weight=weight,
            initial=initial_gaussian_modes(amplitude=1.0, x0=8.0, width=2.0,
                                           norm=0.05))
        traj = run(cfg, collect_report=False).trajectory
        series = np.array([
            weighted_l2_modal(traj.modal[k], traj.x, weight) ** 2
            for k in range(len(traj.times))
        ])
        fit = fit_decay(series, traj.times, alpha_beta=alpha * thr.beta, tol=0.01)
        c_fit = fit_cubic_constant(traj, weight)
        bound = decay_thresholds(0.0, np.pi, case, c_empirical=c_fit)
        u0 = float(np.sqrt(np.trapezoid(np.sum(traj.modal[0] ** 2, -1), traj.x)))
        results.append((case, fit, alpha * thr.beta, u0, bound.eps0_max))
    dt = time.perf_counter() - t0
    ok = all(f.monotone and f.rate >= ab and u0 <= eps
             for _, f, ab, u0, eps in results) and dt < 300.0
    detail = "; ".join(
        f"case {c}: rate {f.rate:.3e} >= {ab:.3e}, monotone(1%)={f.monotone}, "
        f"|u0|={u0:.3g} <= eps0={eps:.3g}"
        for c, f, ab, u0, eps in results)
    _verdict("criterion 7 (decay)", ok, detail, dt)


# ---------------------------------------------------------------- criterion 8

def test_criterion_8_continuous_dependence():
    t0 = time.perf_counter()
    base_init = initial_gaussian_modes(amplitude=1.0, x0=9.0, width=2.0,
                                       modes=(1, 2), mode_weights=(1.0, 0.4),
                                       norm=0.1)
    bump = initial_gaussian_modes(amplitude=1.0, x0=10.0, width=1.5, modes=(2,),
                                  norm=1.0)

    def solved(delta):
        def init(x, basis):
            u = base_init(x, basis)
            if delta:
                u = u + delta * bump(x, basis)
            return u

        cfg = SolverConfig(case="a", L=np.pi, X_max=30.0, N_x=256, l_max=8,
                           b=0.0, T=1.0, nonlinearity="full", snapshot_dt=0.5,
                           initial=init)
        return run(cfg, collect_report=False).trajectory.modal[-1]

    base = solved(0.0)
    d1 = np.sqrt(np.sum((solved(1e-3) - base) ** 2))
    d2 = np.sqrt(np.sum((solved(1e-4) - base) ** 2))
    ratio = d1 / d2
    dt = time.perf_counter() - t0
    ok = 5.0 <= ratio <= 20.0 and dt < 300.0
    _verdict("criterion 8 (continuous dependence)",
             ok, f"distance ratio {ratio:.2f} within factor 2 of delta ratio 10", dt)


# ---------------------------------------------------------------- criterion 9

def test_criterion_9_regularization_consistency():
    t0 = time.perf_counter()
    common = dict(case="a", L=np.pi, X_max=25.0, N_x=192, l_max=6, b=0.0, T=0.3,
                  snapshot_dt=0.15,
                  initial=initial_gaussian_modes(amplitude=3.2, x0=10.0, width=2.0))
    full = run(SolverConfig(nonlinearity="full", **common),
               collect_report=False).trajectory
    sup_norm = np.abs(full.field(0).physical()).max()
    gaps = []
    for h in (1.0, 0.5, 0.25, 0.125):
        sat = run(SolverConfig(nonlinearity="saturated", h=h, **common),
                  collect_report=False).trajectory
        gaps.append(float(np.sqrt(np.sum((sat.modal[-1] - full.modal[-1]) ** 2))))
    dt = time.perf_counter() - t0
    monotone = all(g2 <= g1 + 1e-15 for g1, g2 in zip(gaps, gaps[1:]))
    # h = 0.125 gives 1/h = 8 >= 4x the solution sup-norm, where g_h is
    # exactly quadratic, so the gap collapses
    ok = monotone and gaps[0] > 1e-8 and gaps[-1] <= 1e-6 and dt < 120.0
    _verdict("criterion 9 (regularization)",
             ok, f"sup|u|={sup_norm:.2f}, gaps vs h {[f'{g:.2e}' for g in gaps]} "
                 f"monotone={monotone}, final <= 1e-6", dt)
