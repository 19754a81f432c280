import numpy as np
import pytest

from zkstrip.errors import ConfigurationError, TruncationError
from zkstrip.eigenbasis import build_basis
from zkstrip.dispersion import phi_lambda
from zkstrip.potential import BoundaryData
from zkstrip.semigroup import (
    StripField, eval_K, eval_K_trajectory, eval_S, extend_field, make_strip_grid,
    solve_linear_superposition,
)

BASIS = build_basis("a", np.pi, 4)


def _gaussian_strip(grid, basis, x0=8.0, width=1.5, mode=1, amp=1.0):
    vals = np.zeros((grid.n, basis.l_max))
    vals[:, mode - 1] = amp * np.exp(-(((grid.x - x0) / width) ** 2))
    return StripField(grid=grid, basis=basis, modal=vals)


def test_grid_contains_origin_and_matches_spacing():
    grid = make_strip_grid(20.0, 129)
    assert grid.x[grid.i_zero] == 0.0
    assert grid.dx == pytest.approx(20.0 / 128)
    assert grid.x[0] == pytest.approx(-20.0)


def test_identity_at_t0():
    grid = make_strip_grid(20.0, 129)
    f = _gaussian_strip(grid, BASIS, x0=0.0)
    out = eval_S(f, 0.0, 0.7, on_truncation="ignore")
    assert np.abs(out.modal - f.modal).max() <= 1e-12


def test_plane_wave_phase_factor():
    grid = make_strip_grid(10.0, 65)
    k_idx = 7
    xi = grid.xi[k_idx]
    lam = float(BASIS.lambdas[2])
    b = 0.4
    vals = np.zeros((grid.n, BASIS.l_max))
    vals[:, 2] = np.cos(xi * grid.x)
    f = StripField(grid=grid, basis=BASIS, modal=vals)
    t = 0.63
    out = eval_S(f, t, b, on_truncation="ignore")
    expect = np.cos(xi * grid.x + t * phi_lambda(xi, lam, b))
    assert np.abs(out.modal[:, 2] - expect).max() <= 1e-11
    # magnitude of the single spectral line is untouched
    assert np.abs(np.abs(np.fft.fft(out.modal[:, 2])) -
                  np.abs(np.fft.fft(vals[:, 2]))).max() <= 1e-9


def test_norm_conservation_and_group_property():
    grid = make_strip_grid(25.0, 161)
    f = _gaussian_strip(grid, BASIS)
    n0 = np.sqrt(np.sum(f.modal**2))
    for t in (0.3, 2.0, 10.0):
        out = eval_S(f, t, 1.2)
        assert abs(np.sqrt(np.sum(out.modal**2)) - n0) <= 1e-12 * n0
    s1 = eval_S(eval_S(f, 1.1, 1.2), 0.7, 1.2, on_truncation="ignore")
    s2 = eval_S(f, 1.8, 1.2)
    assert np.abs(s1.modal - s2.modal).max() <= 1e-12 * np.abs(s2.modal).max()


def test_linearity():
    grid = make_strip_grid(25.0, 161)
    f = _gaussian_strip(grid, BASIS, mode=1)
    g = _gaussian_strip(grid, BASIS, x0=12.0, mode=2)
    combo = StripField(grid, BASIS, 2.0 * f.modal - 3.0 * g.modal)
    lhs = eval_S(combo, 1.3, 0.0).modal
    rhs = 2.0 * eval_S(f, 1.3, 0.0).modal - 3.0 * eval_S(g, 1.3, 0.0).modal
    assert np.abs(lhs - rhs).max() <= 1e-12


def test_truncation_guard():
    grid = make_strip_grid(10.0, 65)
    f = _gaussian_strip(grid, BASIS, x0=9.5, width=1.0)  # leaning on the edge
    with pytest.raises(TruncationError):
        eval_S(f, 1.0, 0.0, on_truncation="raise")
    with pytest.warns(RuntimeWarning):
        eval_S(f, 1.0, 0.0, on_truncation="warn")


def test_duhamel_zero_forcing():
    grid = make_strip_grid(10.0, 65)
    tau = np.linspace(0, 1, 33)
    f = np.zeros((33, grid.n, BASIS.l_max))
    out = eval_K_trajectory(f, tau, grid, BASIS, 0.5)
    assert np.all(out == 0)


def test_duhamel_small_time_taylor():
    # constant-in-time forcing with only slow modes: K(t) = t f + O(t^2).
    # case b supplies the lambda = 0 constant mode, keeping |phi| tiny.
    basis_b = build_basis("b", np.pi, 2)
    grid = make_strip_grid(60.0, 241)
    vals = np.zeros((grid.n, 2))
    vals[:, 0] = np.exp(-((grid.x / 18.0) ** 2))
    t = 1e-3
    tau = np.array([0.0, t])
    f = np.stack([vals, vals])
    out = eval_K(f, tau, t, grid, basis_b, 0.0)
    err = np.sqrt(np.sum((out - t * vals) ** 2)) / np.sqrt(np.sum((t * vals) ** 2))
    assert err <= 1e-6


def test_duhamel_norm_bound():
    rng = np.random.default_rng(1)
    grid = make_strip_grid(10.0, 65)
    tau = np.linspace(0, 1, 65)
    f = rng.standard_normal((65, grid.n, BASIS.l_max))
    traj = eval_K_trajectory(f, tau, grid, BASIS, 0.9)
    dt = tau[1] - tau[0]
    norms = np.sqrt(np.sum(f**2, axis=(1, 2)))
    for k in range(1, 65):
        bound = np.trapezoid(norms[: k + 1], dx=dt)
        assert np.sqrt(np.sum(traj[k] ** 2)) <= bound * (1 + 1e-12)


def test_eval_K_needs_grid_time():
    grid = make_strip_grid(10.0, 65)
    tau = np.linspace(0, 1, 33)
    f = np.zeros((33, grid.n, BASIS.l_max))
    with pytest.raises(ConfigurationError):
        eval_K(f, tau, 0.017, grid, BASIS, 0.0)


def test_superposition_reduces_to_J_for_zero_bulk_data():
    from zkstrip.potential import transform_mu, eval_J_modal

    N = 129
    T = 1.0
    n_trace = 128
    tb = np.linspace(0, T, n_trace + 1)
    modal = np.zeros((n_trace + 1, BASIS.l_max))
    modal[:, 0] = 0.3 * np.exp(-(((tb - 0.4) / 0.12) ** 2))
    mu = BoundaryData(tb, modal @ BASIS.psi.T, BASIS)
    res = solve_linear_superposition(
        np.zeros((N, BASIS.l_max)), mu, None, np.array([0.5, 1.0]), BASIS,
        b=0.0, X_max=20.0, n_trace=n_trace)
    table = transform_mu(mu, BASIS)
    for k, t in enumerate(res.times):
        j_idx = int(round(t / (T / n_trace)))
        for i in (0, 10, 40):
            direct = eval_J_modal(table, float(res.x[i]), 0.0)[j_idx]
            assert np.abs(res.fields[k, i] - direct).max() <= 1e-11


def test_superposition_self_consistency_with_matching_trace():
    # mu equal to the trace of S means the J correction vanishes
    N = 161
    X_max = 25.0
    grid = make_strip_grid(X_max, N)
    x_half = np.arange(N) * grid.dx
    u0 = np.zeros((N, BASIS.l_max))
    u0[:, 0] = np.exp(-(((x_half - 10.0) / 1.5) ** 2))
    T = 0.5
    n_trace = 256
    tb = np.linspace(0, T, n_trace + 1)
    strip = extend_field(u0, grid, BASIS)
    uhat = strip.modal_hat()
    from zkstrip.semigroup import eval_S_hat

    trace = np.stack([eval_S_hat(uhat, grid, BASIS, float(t), 0.0)[grid.i_zero]
                      for t in tb])
    mu = BoundaryData(tb, trace @ BASIS.psi.T, BASIS)
    res = solve_linear_superposition(u0, mu, None, np.array([T]), BASIS,
                                     b=0.0, X_max=X_max, n_trace=n_trace)
    expect = eval_S_hat(uhat, grid, BASIS, T, 0.0)
    expect_half = np.concatenate([expect[grid.i_zero:], expect[:1]])[:N]
    scale = np.abs(expect_half).max()
    assert np.abs(res.fields[0] - expect_half).max() <= 1e-9 * max(scale, 1.0)
    assert res.trace_gap <= 1e-12
