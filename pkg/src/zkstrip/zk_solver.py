"""Nonlinear half-strip solver: method of lines, spectral in y, FD in x.

Semi-discretization of u_t + b u_x + u_xxx + u_xyy + u u_x = f on
[0, X_max] x [0, L]: the transverse direction is modal (u_xyy acts as
-lambda_l d/dx per mode), x-derivatives use the stencils from ``fdops``, and
the quadratic term is evaluated pseudo-spectrally on a 3/2-rule padded node
set.  Time stepping is classical four-stage explicit Runge-Kutta under a
dt ~ dx^3 CFL limit; after each step the boundary rows are re-imposed:
u(t, 0, .) = mu(t, .) on the left and the clamped outflow u = u_x = 0 on the
right.

The saturation apparatus is here too: the smooth cutoff eta with
eta(x) + eta(1-x) = 1, the globally Lipschitz nonlinearity g_h that agrees
with u^2/2 on |u| <= 1/h, and the data truncation by eta(1/h - x).

The hot loop has a numba fast path (used automatically when the forcing is
zero) and a pure-numpy reference path; both follow identical stage
arithmetic and are cross-checked in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field, replace

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import BlowUpError, ConfigurationError
from .eigenbasis import BoundaryCase, EigenBasis, build_basis, synthesize
from .fdops import XOperators, build_operators
from .weights import Weight, WeightKind, make_weight

RK4_IMAG_EXTENT = 2.0 * np.sqrt(2.0)   # imaginary-axis stability reach of RK4


# --------------------------------------------------------------------------
# smooth cutoff eta and the saturated nonlinearity
# --------------------------------------------------------------------------

_ETA_N = 32769


def _eta_tables():
    s = np.linspace(0.0, 0.5, _ETA_N)
    with np.errstate(divide="ignore", over="ignore"):
        integrand = np.exp(-1.0 / (s * (1.0 - s)))
    integrand[0] = 0.0
    F = cumulative_trapezoid(integrand, s, initial=0.0)
    half = F / (2.0 * F[-1])
    return s, half


_ETA_S, _ETA_HALF = _eta_tables()


def cutoff_eta(x):
    """Smooth non-decreasing cutoff: 0 for x <= 0, 1 for x >= 1, and
    eta(x) + eta(1 - x) = 1 exactly.

    Built from the bump integral I(x) = int_0^x exp(-1/(s(1-s))) ds via a
    precomputed table; values on (1/2, 1) come from the complementary
    identity, which therefore holds bitwise.
    """
    x = np.asarray(x, dtype=float)
    lo = np.interp(np.minimum(x, 0.5), _ETA_S, _ETA_HALF)
    hi = 1.0 - np.interp(np.minimum(1.0 - x, 0.5), _ETA_S, _ETA_HALF)
    out = np.where(x < 0.5, lo, hi)
    out = np.where(x <= 0.0, 0.0, out)
    out = np.where(x >= 1.0, 1.0, out)
    return out if out.ndim else float(out)


def _eta_full_table(n: int = 4097):
    x = np.linspace(0.0, 1.0, n)
    return x, np.asarray(cutoff_eta(x))


_ETA_FULL_X, _ETA_FULL_Y = _eta_full_table()


def _gh_tables():
    # cumulative pieces of g_h on the saturation shoulder s = h|u| - 1 in [0, 1]
    s = _ETA_S  # reuse resolution; need full [0,1]
    s_full = np.linspace(0.0, 1.0, 2 * _ETA_N - 1)
    eta_up = np.asarray(cutoff_eta(s_full))          # eta(s)
    eta_down = np.asarray(cutoff_eta(1.0 - s_full))  # eta(1-s)
    T1 = cumulative_trapezoid((s_full + 1.0) * eta_down, s_full, initial=0.0)
    T2 = cumulative_trapezoid(eta_up, s_full, initial=0.0)
    return s_full, T1, T2


_GH_S, _GH_T1, _GH_T2 = _gh_tables()


def g_h(u, h: float):
    """Saturated nonlinearity (value, derivative).

    g_h(u) = u^2/2 for |u| <= 1/h; the derivative is globally bounded by 2/h
    and by 2|u| uniformly in h.  h must lie in (0, 1].
    """
    if not 0.0 < h <= 1.0:
        raise ConfigurationError(f"saturation parameter h must be in (0, 1], got {h}")
    u = np.asarray(u, dtype=float)
    au = np.abs(u)
    s = np.clip(h * au - 1.0, 0.0, 1.0)
    deriv = u * cutoff_eta(2.0 - h * au) + (2.0 / h) * np.sign(u) * cutoff_eta(h * au - 1.0)
    quad = 0.5 * u**2
    shoulder = (0.5 / h**2 + np.interp(s, _GH_S, _GH_T1) / h**2
                + 2.0 * np.interp(s, _GH_S, _GH_T2) / h**2)
    linear = shoulder + (2.0 / h) * np.maximum(au - 2.0 / h, 0.0)
    value = np.where(au <= 1.0 / h, quad, np.where(au <= 2.0 / h, shoulder, linear))
    if value.ndim == 0:
        return float(value), float(deriv)
    return value, deriv


def truncate_data(values: np.ndarray, x: np.ndarray, h: float) -> np.ndarray:
    """Multiply by eta(1/h - x); output vanishes for x >= 1/h."""
    if not 0.0 < h <= 1.0:
        raise ConfigurationError(f"truncation parameter h must be in (0, 1], got {h}")
    factor = np.asarray(cutoff_eta(1.0 / h - np.asarray(x, dtype=float)))
    values = np.asarray(values)
    if values.ndim == 2:
        return values * factor[:, None]
    return values * factor


# --------------------------------------------------------------------------
# configuration and state
# --------------------------------------------------------------------------

NONLINEARITY = ("full", "saturated", "off")


@dataclass(frozen=True)
class SolverConfig:
    case: BoundaryCase = BoundaryCase.DIRICHLET_DIRICHLET
    L: float = np.pi
    X_max: float = 40.0
    N_x: int = 256
    l_max: int = 8
    b: float = 0.0
    T: float = 1.0
    dt: float | None = None            # None: set from the CFL limit
    cfl_fraction: float = 0.6
    nonlinearity: str = "full"
    h: float | None = None             # saturation parameter for "saturated"
    snapshot_dt: float = 0.1
    weight: Weight = dc_field(default_factory=lambda: make_weight(WeightKind.UNIT))
    initial: object = None             # modal array (N_x, l_max) or callable(x, basis)
    boundary: object = None            # callable t -> modal (l_max,) or None
    forcing: object = None             # callable t -> modal (N_x, l_max) or None
    right_closure: str = "clamp_zero"
    engine: str = "auto"               # auto | numba | numpy
    amplitude_guess: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "case", BoundaryCase.parse(self.case))
        if self.N_x < 16:
            raise ConfigurationError(f"N_x must be at least 16, got {self.N_x}")
        if not self.X_max > 0:
            raise ConfigurationError("X_max must be positive")
        if not self.T > 0:
            raise ConfigurationError("T must be positive")
        if self.nonlinearity not in NONLINEARITY:
            raise ConfigurationError(
                f"nonlinearity must be one of {NONLINEARITY}, got {self.nonlinearity!r}")
        if self.nonlinearity == "saturated" and not (self.h and 0 < self.h <= 1):
            raise ConfigurationError("saturated nonlinearity requires h in (0, 1]")
        if self.right_closure != "clamp_zero":
            raise ConfigurationError("the only implemented right closure is clamp_zero")
        if self.engine not in ("auto", "numba", "numpy"):
            raise ConfigurationError("engine must be auto, numba, or numpy")

    @property
    def dx(self) -> float:
        return self.X_max / (self.N_x - 1)

    def x_grid(self) -> np.ndarray:
        return np.arange(self.N_x) * self.dx


@dataclass(frozen=True)
class Field:
    """Solution state: modal view u-hat_l(x_i) plus physical synthesis."""

    modal: np.ndarray          # (N_x, l_max) real
    x: np.ndarray
    basis: EigenBasis

    def physical(self) -> np.ndarray:
        return synthesize(self.modal, self.basis)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.modal)))


@dataclass
class Trajectory:
    config: SolverConfig
    basis: EigenBasis
    x: np.ndarray
    times: np.ndarray              # snapshot times
    modal: np.ndarray              # (n_snap, N_x, l_max)
    flux_times: np.ndarray         # every accepted step
    boundary_flux: np.ndarray      # int u_x^2 |_{x=0} dy
    boundary_flux_xx: np.ndarray   # int u_xx^2 |_{x=0} dy
    mu_zero: bool
    f_zero: bool
    compatibility_gap: float | None = None
    blow_time: float | None = None
    right_edge_ratio: float = 0.0  # max |u| near X_max over the global norm

    def field(self, k: int) -> Field:
        return Field(self.modal[k], self.x, self.basis)


# --------------------------------------------------------------------------
# semi-discrete right-hand side (numpy reference path)
# --------------------------------------------------------------------------

class Workspace:
    """Prebuilt operators, dealias rule, and scratch arrays for one config."""

    def __init__(self, cfg: SolverConfig, basis: EigenBasis):
        self.ops = build_operators(cfg.N_x, cfg.dx)
        dea = basis.dealias()
        self.synth = np.ascontiguousarray(dea.psi.T)               # (l, M)
        self.anal = np.ascontiguousarray(dea.weights[:, None] * dea.psi)  # (M, l)
        self.lam_minus_b = basis.lambdas - cfg.b
        self.ux = np.zeros((cfg.N_x, basis.l_max))
        self.uxxx = np.zeros((cfg.N_x, basis.l_max))


def rhs(state: Field, t: float, cfg: SolverConfig, work: Workspace | None = None,
        forcing=None) -> Field:
    """Time derivative of the semi-discrete system at the given state."""
    if work is None:
        work = Workspace(cfg, state.basis)
    out = _rhs_array(state.modal, cfg, work, None if forcing is None else forcing(t))
    if not np.all(np.isfinite(out)):
        raise BlowUpError(f"non-finite right-hand side at t={t}", time=t)
    return Field(out, state.x, state.basis)


def _rhs_array(U: np.ndarray, cfg: SolverConfig, work: Workspace,
               f_modal: np.ndarray | None) -> np.ndarray:
    ux = work.ops.apply_d1(U, work.ux)
    uxxx = work.ops.apply_d3(U, work.uxxx)
    out = ux * work.lam_minus_b - uxxx
    if cfg.nonlinearity != "off":
        phys = U @ work.synth
        physx = ux @ work.synth
        if cfg.nonlinearity == "full":
            prod = phys * physx
        else:
            prod = g_h(phys, cfg.h)[1] * physx
        out -= prod @ work.anal
    if f_modal is not None:
        out = out + f_modal
    return out


def step(state: Field, t: float, dt: float, cfg: SolverConfig,
         work: Workspace | None = None, boundary=None, forcing=None) -> Field:
    """One classical RK4 step followed by boundary re-imposition."""
    if work is None:
        work = Workspace(cfg, state.basis)
    mu = _boundary_modal_fn(boundary, state.basis)
    U = _rk4_numpy(state.modal, t, dt, cfg, work, mu, forcing)
    return Field(U, state.x, state.basis)


def _boundary_modal_fn(boundary, basis):
    if boundary is None:
        zero = np.zeros(basis.l_max)
        return lambda t: zero
    return boundary


def _set_bc(U, mu_row):
    U[0] = mu_row
    U[-1] = 0.0
    return U


def _rk4_numpy(U, t, dt, cfg, work, mu, forcing):
    f = (lambda s: None) if forcing is None else forcing
    k1 = _rhs_array(U, cfg, work, f(t)).copy()
    Y = _set_bc(U + (0.5 * dt) * k1, mu(t + 0.5 * dt))
    k2 = _rhs_array(Y, cfg, work, f(t + 0.5 * dt)).copy()
    Y = _set_bc(U + (0.5 * dt) * k2, mu(t + 0.5 * dt))
    k3 = _rhs_array(Y, cfg, work, f(t + 0.5 * dt)).copy()
    Y = _set_bc(U + dt * k3, mu(t + dt))
    k4 = _rhs_array(Y, cfg, work, f(t + dt))
    out = U + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return _set_bc(out, mu(t + dt))


# --------------------------------------------------------------------------
# CFL
# --------------------------------------------------------------------------

def cfl_dt_max(cfg: SolverConfig, basis: EigenBasis, ops: XOperators,
               amplitude: float) -> float:
    """Largest stable dt for RK4 from the stencil symbol bounds."""
    advect = float(np.max(np.abs(basis.lambdas - cfg.b))) + 2.0 * amplitude
    rate = ops.symbol_d3 / cfg.dx**3 + advect * ops.symbol_d1 / cfg.dx
    return RK4_IMAG_EXTENT / rate


# --------------------------------------------------------------------------
# numba fast loop
# --------------------------------------------------------------------------

def _build_numba_loop():
    import numba

    @numba.njit(cache=True)
    def loop(U, nsteps, dt, lam_minus_b,
             c1, c3, left_d1, left_d3, right_d1, right_d3,
             synth, anal, nonlin_mode, h, eta_x, eta_y,
             mu_stage, have_mu, trace_d1, trace_d2,
             snap_every, snaps, flux, flux_xx, check_every):
        N, l = U.shape
        M = synth.shape[1]
        ux = np.zeros((N, l))
        uxxx = np.zeros((N, l))
        k = np.zeros((4, N, l))
        acc = np.zeros((N, l))
        phys = np.zeros((N, M))
        physx = np.zeros((N, M))
        nl = np.zeros((N, l))
        Y = np.zeros((N, l))
        nL1 = left_d1.shape[1]
        nL3 = left_d3.shape[1]
        nR1 = right_d1.shape[1]
        nR3 = right_d3.shape[1]

        def traces(Uc, out_idx):
            fx = 0.0
            fxx = 0.0
            for j in range(l):
                s1 = 0.0
                s2 = 0.0
                for i in range(5):
                    s1 += trace_d1[i] * Uc[i, j]
                for i in range(6):
                    s2 += trace_d2[i] * Uc[i, j]
                fx += s1 * s1
                fxx += s2 * s2
            flux[out_idx] = fx
            flux_xx[out_idx] = fxx

        def rhs_into(Uc, out):
            for j in range(l):
                for i in range(2, N - 2):
                    ux[i, j] = (c1[0] * Uc[i - 2, j] + c1[1] * Uc[i - 1, j]
                                + c1[2] * Uc[i, j] + c1[3] * Uc[i + 1, j]
                                + c1[4] * Uc[i + 2, j])
                s = 0.0
                for i in range(nL1):
                    s += left_d1[0, i] * Uc[i, j]
                ux[1, j] = s
                s = 0.0
                for i in range(nR1):
                    s += right_d1[0, i] * Uc[N - nR1 + i, j]
                ux[N - 2, j] = s
                ux[0, j] = 0.0
                ux[N - 1, j] = 0.0
                for i in range(3, N - 3):
                    uxxx[i, j] = (c3[0] * Uc[i - 3, j] + c3[1] * Uc[i - 2, j]
                                  + c3[2] * Uc[i - 1, j] + c3[3] * Uc[i, j]
                                  + c3[4] * Uc[i + 1, j] + c3[5] * Uc[i + 2, j]
                                  + c3[6] * Uc[i + 3, j])
                for row in range(2):
                    s = 0.0
                    for i in range(nL3):
                        s += left_d3[row, i] * Uc[i, j]
                    uxxx[1 + row, j] = s
                for row in range(2):
                    s = 0.0
                    for i in range(nR3):
                        s += right_d3[row, i] * Uc[N - nR3 + i, j]
                    uxxx[N - 3 + row, j] = s
                uxxx[0, j] = 0.0
                uxxx[N - 1, j] = 0.0
                for i in range(N):
                    out[i, j] = ux[i, j] * lam_minus_b[j] - uxxx[i, j]
            if nonlin_mode > 0:
                np.dot(Uc, synth, phys)
                np.dot(ux, synth, physx)
                if nonlin_mode == 1:
                    for i in range(N):
                        for m in range(M):
                            phys[i, m] *= physx[i, m]
                else:
                    inv_h = 1.0 / h
                    for i in range(N):
                        for m in range(M):
                            u = phys[i, m]
                            au = abs(u)
                            gp = (u * np.interp(2.0 - h * au, eta_x, eta_y)
                                  + 2.0 * inv_h * np.sign(u)
                                  * np.interp(h * au - 1.0, eta_x, eta_y))
                            phys[i, m] = gp * physx[i, m]
                np.dot(phys, anal, nl)
                for i in range(N):
                    for j in range(l):
                        out[i, j] -= nl[i, j]

        traces(U, 0)
        snaps[0] = U
        snap_idx = 1
        for n in range(nsteps):
            rhs_into(U, k[0])
            for i in range(N):
                for j in range(l):
                    Y[i, j] = U[i, j] + 0.5 * dt * k[0, i, j]
            if have_mu:
                Y[0] = mu_stage[2 * n + 1]
            else:
                Y[0] = 0.0
            Y[N - 1] = 0.0
            rhs_into(Y, k[1])
            for i in range(N):
                for j in range(l):
                    Y[i, j] = U[i, j] + 0.5 * dt * k[1, i, j]
            if have_mu:
                Y[0] = mu_stage[2 * n + 1]
            else:
                Y[0] = 0.0
            Y[N - 1] = 0.0
            rhs_into(Y, k[2])
            for i in range(N):
                for j in range(l):
                    Y[i, j] = U[i, j] + dt * k[2, i, j]
            if have_mu:
                Y[0] = mu_stage[2 * n + 2]
            else:
                Y[0] = 0.0
            Y[N - 1] = 0.0
            rhs_into(Y, k[3])
            for i in range(N):
                for j in range(l):
                    acc[i, j] = (U[i, j] + dt / 6.0
                                 * (k[0, i, j] + 2.0 * k[1, i, j]
                                    + 2.0 * k[2, i, j] + k[3, i, j]))
            U[:, :] = acc
            if have_mu:
                U[0] = mu_stage[2 * n + 2]
            else:
                U[0] = 0.0
            U[N - 1] = 0.0
            traces(U, n + 1)
            if (n + 1) % snap_every == 0:
                snaps[snap_idx] = U
                snap_idx += 1
            if (n + 1) % check_every == 0:
                s = 0.0
                for i in range(N):
                    for j in range(l):
                        s += U[i, j] * U[i, j]
                if not np.isfinite(s):
                    return n + 1
        return -1

    return loop


_NUMBA_LOOP = None


def _numba_loop():
    global _NUMBA_LOOP
    if _NUMBA_LOOP is None:
        _NUMBA_LOOP = _build_numba_loop()
    return _NUMBA_LOOP


# --------------------------------------------------------------------------
# run
# --------------------------------------------------------------------------

@dataclass
class RunResult:
    trajectory: Trajectory
    report: "object"   # diagnostics.DiagnosticsReport


def _resolve_initial(cfg: SolverConfig, basis: EigenBasis) -> np.ndarray:
    x = cfg.x_grid()
    if cfg.initial is None:
        return np.zeros((cfg.N_x, basis.l_max))
    if callable(cfg.initial):
        u0 = np.asarray(cfg.initial(x, basis), dtype=float)
    else:
        u0 = np.asarray(cfg.initial, dtype=float)
    if u0.shape != (cfg.N_x, basis.l_max):
        raise ConfigurationError(
            f"initial data shape {u0.shape} != {(cfg.N_x, basis.l_max)}")
    return u0.copy()


def run(cfg: SolverConfig, collect_report: bool = True) -> RunResult:
    """Integrate the IBVP to T, recording snapshots and boundary traces.

    Deterministic for a fixed config.  Raises BlowUpError (with the partial
    trajectory attached) if the state stops being finite.
    """
    basis = build_basis(cfg.case, cfg.L, cfg.l_max)
    work = Workspace(cfg, basis)
    x = cfg.x_grid()
    U = _resolve_initial(cfg, basis)
    amp = cfg.amplitude_guess
    if amp is None:
        amp = float(np.abs(U @ work.synth).max()) if cfg.nonlinearity != "off" else 0.0
    dt_max = cfl_dt_max(cfg, basis, work.ops, amp)

    n_snap = max(1, int(round(cfg.T / cfg.snapshot_dt)))
    snap_dt = cfg.T / n_snap
    if cfg.dt is None:
        per_snap = int(np.ceil(snap_dt / (cfg.cfl_fraction * dt_max)))
    else:
        if cfg.dt > dt_max * (1 + 1e-12):
            raise ConfigurationError(
                f"dt={cfg.dt:.3e} violates the CFL limit dt_max={dt_max:.3e} "
                f"(dt*(pi/dx)^3 budget exceeded)")
        per_snap = max(1, int(round(snap_dt / cfg.dt)))
    dt = snap_dt / per_snap
    if dt > dt_max:
        raise ConfigurationError(
            f"snapshot cadence forces dt={dt:.3e} above the CFL limit {dt_max:.3e}")
    nsteps = n_snap * per_snap

    mu_fn = cfg.boundary
    have_mu = mu_fn is not None
    have_f = cfg.forcing is not None
    compat = None
    if have_mu:
        compat = float(np.max(np.abs(np.asarray(mu_fn(0.0)) - U[0])))
    _set_bc(U, np.asarray(mu_fn(0.0)) if have_mu else np.zeros(basis.l_max))

    snaps = np.zeros((n_snap + 1, cfg.N_x, basis.l_max))
    flux = np.zeros(nsteps + 1)
    flux_xx = np.zeros(nsteps + 1)

    engine = cfg.engine
    if engine == "auto":
        engine = "numpy" if have_f else "numba"
    if engine == "numba" and have_f:
        raise ConfigurationError("the numba engine does not support forcing; use numpy")

    blow_step = -1
    if engine == "numba":
        mu_stage = np.zeros((1, basis.l_max))
        if have_mu:
            stage_t = np.arange(2 * nsteps + 1) * (0.5 * dt)
            mu_stage = np.stack([np.asarray(mu_fn(t), dtype=float) for t in stage_t])
        nonlin_mode = {"off": 0, "full": 1, "saturated": 2}[cfg.nonlinearity]
        blow_step = _numba_loop()(
            U, nsteps, dt, work.lam_minus_b,
            work.ops.c1, work.ops.c3, work.ops.left_d1, work.ops.left_d3,
            work.ops.right_d1, work.ops.right_d3,
            work.synth, work.anal, nonlin_mode,
            float(cfg.h or 1.0), _ETA_FULL_X, _ETA_FULL_Y,
            mu_stage, have_mu, work.ops.trace_d1, work.ops.trace_d2,
            per_snap, snaps, flux, flux_xx, 25,
        )
    else:
        mu = _boundary_modal_fn(mu_fn, basis)
        snaps[0] = U
        _record_traces(U, work.ops, flux, flux_xx, 0)
        for n in range(nsteps):
            U = _rk4_numpy(U, n * dt, dt, cfg, work, mu, cfg.forcing)
            _record_traces(U, work.ops, flux, flux_xx, n + 1)
            if (n + 1) % per_snap == 0:
                snaps[(n + 1) // per_snap] = U
            if (n + 1) % 25 == 0 and not np.all(np.isfinite(U)):
                blow_step = n + 1
                break

    times = np.arange(n_snap + 1) * snap_dt
    flux_times = np.arange(nsteps + 1) * dt
    blow_time = None
    if blow_step >= 0:
        keep = blow_step // per_snap
        snaps = snaps[: keep + 1]
        times = times[: keep + 1]
        flux = flux[: blow_step + 1]
        flux_xx = flux_xx[: blow_step + 1]
        flux_times = flux_times[: blow_step + 1]
        blow_time = blow_step * dt

    traj = Trajectory(
        config=cfg, basis=basis, x=x, times=times, modal=snaps,
        flux_times=flux_times, boundary_flux=flux, boundary_flux_xx=flux_xx,
        mu_zero=not have_mu, f_zero=not have_f,
        compatibility_gap=compat, blow_time=blow_time,
    )
    if blow_time is not None:
        raise BlowUpError(f"solution blew up at t={blow_time:.6g}",
                          time=blow_time, trajectory=traj)
    report = None
    if collect_report:
        from . import diagnostics

        report = diagnostics.report_for(traj)
    return RunResult(trajectory=traj, report=report)


def _record_traces(U, ops: XOperators, flux, flux_xx, idx):
    ux0 = ops.trace_d1 @ U[:5]
    uxx0 = ops.trace_d2 @ U[:6]
    flux[idx] = float(ux0 @ ux0)
    flux_xx[idx] = float(uxx0 @ uxx0)
