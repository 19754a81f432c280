"""Whole-strip linear evolution and the superposition oracle.

The linear group S acts mode-by-mode as the unitary Fourier multiplier
exp(i t (xi^3 - b xi + lambda_l xi)); the Duhamel operator K accumulates
forcing through exact per-mode integrating factors with trapezoidal
quadrature in tau.  Together with the boundary potential J they assemble the
half-strip linear solution

    u = S(t; u0) + K(t; f) + J(t; mu - (S + K)|_{x=0})

which serves as an independent oracle for the finite-difference solver.

The whole-strip x-Fourier transform is realized on a periodic grid with an
extension region [-X_ext, 0); half-strip data are extended by smooth even
reflection and tapered to zero over the leftmost 20% of the extension, which
is deterministic and class-preserving.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, TruncationError
from .eigenbasis import EigenBasis
from .dispersion import phi_lambda
from .potential import BoundaryData, transform_mu, eval_J_modal
from .zk_solver import cutoff_eta


@dataclass(frozen=True)
class StripGrid:
    """Uniform periodic grid on [-X_ext, X_max); x = 0 sits at index i_zero."""

    x: np.ndarray
    dx: float
    i_zero: int

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def xi(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)

    @property
    def n_half(self) -> int:
        """number of half-strip nodes 0..X_max-dx carried by the grid"""
        return self.n - self.i_zero


def make_strip_grid(X_max: float, N_half: int, X_ext: float | None = None) -> StripGrid:
    """Periodic grid matching the half-strip grid spacing dx = X_max/(N-1)."""
    if N_half < 2:
        raise ConfigurationError("strip grid needs N_half >= 2")
    dx = X_max / (N_half - 1)
    if X_ext is None:
        X_ext = X_max
    m = int(round(X_ext / dx))
    if m < 4:
        raise ConfigurationError("extension region too small")
    n = m + N_half - 1
    x = (np.arange(n) - m) * dx
    return StripGrid(x=x, dx=dx, i_zero=m)


@dataclass(frozen=True)
class StripField:
    """Real modal values on the periodic strip grid; shape (n, l_max)."""

    grid: StripGrid
    basis: EigenBasis
    modal: np.ndarray

    def modal_hat(self) -> np.ndarray:
        return np.fft.fft(self.modal, axis=0)

    def half_view(self, N_half: int) -> np.ndarray:
        """Restriction to x >= 0 including the wrap point x = X_max."""
        g = self.grid
        return np.concatenate([self.modal[g.i_zero:], self.modal[:1]], axis=0)[:N_half]


def extend_field(u_half: np.ndarray, grid: StripGrid, basis: EigenBasis,
                 taper_frac: float = 0.2) -> StripField:
    """Even-reflect half-strip modal data through x = 0 and taper the left end."""
    m = grid.i_zero
    n = grid.n
    vals = np.zeros((n, u_half.shape[1]))
    n_right = min(n - m, u_half.shape[0])
    vals[m : m + n_right] = u_half[:n_right]
    n_left = min(m, u_half.shape[0] - 1)
    vals[m - n_left : m] = u_half[n_left:0:-1]
    X_ext = -grid.x[0]
    ramp = cutoff_eta((grid.x + X_ext) / (taper_frac * X_ext))
    return StripField(grid=grid, basis=basis, modal=vals * ramp[:, None])


def _check_truncation(field: StripField, on_truncation: str, tol: float = 1e-12):
    peak = np.abs(field.modal).max()
    if peak == 0:
        return
    edge = max(np.abs(field.modal[:2]).max(), np.abs(field.modal[-2:]).max())
    if edge > tol * peak:
        msg = (f"field magnitude {edge:.2e} at the strip-grid ends exceeds "
               f"{tol:.0e} of the peak {peak:.2e}")
        if on_truncation == "raise":
            raise TruncationError(msg)
        if on_truncation == "warn":
            import warnings

            warnings.warn(msg, RuntimeWarning, stacklevel=3)


def eval_S(u0: StripField, t: float, b: float, on_truncation: str = "raise") -> StripField:
    """Exact modal multiplier evolution; discrete L2 norm is conserved."""
    _check_truncation(u0, on_truncation)
    g = u0.grid
    mult = np.exp(1j * t * phi_lambda(g.xi[:, None], u0.basis.lambdas[None, :], b))
    out = np.fft.ifft(mult * u0.modal_hat(), axis=0).real
    return StripField(grid=g, basis=u0.basis, modal=out)


def eval_S_hat(uhat0: np.ndarray, grid: StripGrid, basis: EigenBasis,
               t: float, b: float) -> np.ndarray:
    """Spectral-in version of eval_S for repeated evaluation."""
    mult = np.exp(1j * t * phi_lambda(grid.xi[:, None], basis.lambdas[None, :], b))
    return np.fft.ifft(mult * uhat0, axis=0).real


def eval_K_trajectory(f_samples: np.ndarray, tau: np.ndarray, grid: StripGrid,
                      basis: EigenBasis, b: float) -> np.ndarray:
    """K(tau_k) for every grid time, by integrating-factor trapezoid.

    f_samples has shape (n_tau, n, l_max) on the solver time grid; the
    recursion K_{j+1} = E K_j + dtau/2 (E f_j + f_{j+1}) in spectral space is
    exact for the modal phases and second order in the forcing.
    """
    n_tau = len(tau)
    if f_samples.shape[0] != n_tau:
        raise ConfigurationError("forcing samples must align with the time grid")
    dtau = float(tau[1] - tau[0]) if n_tau > 1 else 0.0
    phase = phi_lambda(grid.xi[:, None], basis.lambdas[None, :], b)
    E = np.exp(1j * dtau * phase)
    out = np.zeros_like(f_samples)
    fhat_prev = np.fft.fft(f_samples[0], axis=0)
    Khat = np.zeros_like(fhat_prev)
    for j in range(1, n_tau):
        fhat = np.fft.fft(f_samples[j], axis=0)
        Khat = E * Khat + 0.5 * dtau * (E * fhat_prev + fhat)
        out[j] = np.fft.ifft(Khat, axis=0).real
        fhat_prev = fhat
    return out


def eval_K(f_samples: np.ndarray, tau: np.ndarray, t: float, grid: StripGrid,
           basis: EigenBasis, b: float) -> np.ndarray:
    """K(t) for t on the sample grid."""
    k = int(round(t / (tau[1] - tau[0]))) if len(tau) > 1 else 0
    if not np.isclose(tau[min(k, len(tau) - 1)], t, atol=1e-12 * max(1.0, abs(t))):
        raise ConfigurationError("eval_K requires t on the forcing time grid")
    return eval_K_trajectory(f_samples[: k + 1], tau[: k + 1], grid, basis, b)[k]


@dataclass(frozen=True)
class SuperpositionResult:
    times: np.ndarray          # requested output times
    fields: np.ndarray         # (n_out, N_half, l_max) modal on the half grid
    x: np.ndarray              # (N_half,)
    trace_times: np.ndarray    # fine sampling used for the J correction
    trace_gap: float           # max |(S+K+J)|_{x=0} - mu| over the window, modal L2


def solve_linear_superposition(
    u0_half: np.ndarray,
    mu: BoundaryData | None,
    f_half,
    t_out: np.ndarray,
    basis: EigenBasis,
    b: float,
    X_max: float,
    X_ext: float | None = None,
    n_trace: int = 512,
    on_truncation: str = "raise",
) -> SuperpositionResult:
    """Half-strip linear trajectory via S + K + J with trace correction.

    ``u0_half`` is modal (N, l_max) on the solver x grid; ``f_half`` is None
    or a callable t -> modal (N, l_max) forcing; ``mu`` is boundary data (its
    final time must bound t_out).  Output times must be multiples of
    T / n_trace.
    """
    N = u0_half.shape[0]
    grid = make_strip_grid(X_max, N, X_ext)
    t_out = np.atleast_1d(np.asarray(t_out, dtype=float))
    T = float(mu.T if mu is not None else t_out.max())
    if T <= 0:
        raise ConfigurationError("superposition horizon must be positive")
    tb = np.linspace(0.0, T, n_trace + 1)
    idx = t_out / (T / n_trace)
    if not np.allclose(idx, np.round(idx), atol=1e-9):
        raise ConfigurationError("output times must lie on the trace grid")
    idx = np.round(idx).astype(int)

    u0s = extend_field(u0_half, grid, basis)
    _check_truncation(u0s, on_truncation)
    uhat0 = u0s.modal_hat()

    if f_half is not None:
        f_samples = np.stack([
            extend_field(np.asarray(f_half(t), dtype=float), grid, basis).modal
            for t in tb
        ])
        K_traj = eval_K_trajectory(f_samples, tb, grid, basis, b)
    else:
        K_traj = None

    trace = np.empty((n_trace + 1, basis.l_max))
    S_at_out = {}
    for j, t in enumerate(tb):
        S_field = eval_S_hat(uhat0, grid, basis, float(t), b)
        if K_traj is not None:
            S_field = S_field + K_traj[j]
        trace[j] = S_field[grid.i_zero]
        if j in set(idx.tolist()):
            S_at_out[j] = S_field

    mu_modal = (np.zeros((n_trace + 1, basis.l_max)) if mu is None
                else _resample_modal(mu, basis, tb))
    corr = mu_modal - trace
    corr_phys = corr @ basis.psi.T
    table = transform_mu(BoundaryData(tb, corr_phys, basis), basis)

    x_half = np.arange(N) * grid.dx
    fields = np.zeros((len(t_out), N, basis.l_max))
    J0 = eval_J_modal(table, 0.0, b)
    gap = float(np.sqrt(np.sum((J0[: n_trace + 1] - corr) ** 2) * (tb[1] - tb[0])))
    for i, xv in enumerate(x_half):
        Jm = eval_J_modal(table, float(xv), b)
        for k, j in enumerate(idx):
            half = S_at_out[j]
            row = half[grid.i_zero + i] if grid.i_zero + i < grid.n else half[0]
            fields[k, i] = row + Jm[j]
    return SuperpositionResult(
        times=t_out, fields=fields, x=x_half, trace_times=tb, trace_gap=gap,
    )


def _resample_modal(mu: BoundaryData, basis: EigenBasis, tb: np.ndarray) -> np.ndarray:
    from .eigenbasis import analyze

    modal = analyze(mu.samples, basis)
    out = np.empty((len(tb), basis.l_max))
    for i in range(basis.l_max):
        out[:, i] = np.interp(tb, mu.times, modal[:, i])
    return out
