"""Boundary potential: the linear solution driven purely by data at x = 0.

Given boundary data mu(t, y) on [0, T], each (time-frequency, transverse
mode) pair is damped by exp(r0(theta, l) x) where r0 is the left-half-plane
dispersion root, and transformed back.  At x = 0 the construction reproduces
mu identically on the window.

The continuous transform runs over all of R_t; discretely, mu is extended by
zero for t < 0, tapered smoothly to zero over [T, 1.25 T] with a half-cosine,
and zero-padded to a total window of 2.5 T before the DFT.  The frequency
grid is the window's rfft grid, so real data stay real and Hermitian symmetry
is structural.  Window truncation error is an artifact of this module with no
externally prescribed tolerance; the tests pin build-time values.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError
from .eigenbasis import EigenBasis, analyze, synthesize
from .dispersion import r0_table

TAPER_FRACTION = 0.25   # taper length over [T, T + 0.25 T]
WINDOW_FACTOR = 2.5     # total padded window length in units of T


@dataclass(frozen=True)
class BoundaryData:
    """Real samples mu(t_n, y_j) on a uniform time grid and the basis nodes."""

    times: np.ndarray      # (n_t,) uniform, starting at 0
    samples: np.ndarray    # (n_t, n_nodes)
    basis: EigenBasis

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.samples, dtype=float)
        if t.ndim != 1 or len(t) < 2:
            raise ConfigurationError("boundary data needs at least two time samples")
        dt = np.diff(t)
        if not np.allclose(dt, dt[0], rtol=1e-12, atol=1e-12 * max(abs(t[-1]), 1.0)):
            raise ConfigurationError("boundary data requires a uniform time grid")
        if v.shape != (len(t), self.basis.n_nodes):
            raise ConfigurationError(
                f"samples shape {v.shape} does not match (n_t, n_nodes) = "
                f"({len(t)}, {self.basis.n_nodes})"
            )
        if not np.all(np.isfinite(v)):
            raise ConfigurationError("boundary samples must be finite")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "samples", v)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def T(self) -> float:
        return float(self.times[-1])

    def compatibility_gap(self, u0_trace: np.ndarray) -> float:
        """max |mu(0, y) - u0(0, y)| at the nodes; recorded, not enforced."""
        return float(np.max(np.abs(self.samples[0] - np.asarray(u0_trace))))


def zero_boundary(basis: EigenBasis, T: float, n_t: int = 129) -> BoundaryData:
    t = np.linspace(0.0, T, n_t)
    return BoundaryData(t, np.zeros((n_t, basis.n_nodes)), basis)


@dataclass(frozen=True)
class ModalFrequencyTable:
    """DFT of the windowed boundary data per transverse mode."""

    muhat: np.ndarray        # (n_freq, l_max) complex rfft coefficients
    theta: np.ndarray        # (n_freq,) angular frequencies >= 0
    n_pad: int               # padded window length in samples
    dt: float
    n_time: int              # original sample count (window [0, T])
    basis: EigenBasis
    window_modal: np.ndarray = field(repr=False, default=None)  # (n_pad, l_max)

    @property
    def window_times(self) -> np.ndarray:
        return np.arange(self.n_pad) * self.dt


def window_extend(modal: np.ndarray, n_time: int) -> np.ndarray:
    """Apply the pinned extension protocol to modal samples on [0, T].

    Returns the padded array of length round(WINDOW_FACTOR * (n_time - 1)):
    original samples, then the final value tapered by a half cosine over a
    quarter window, then zeros (which also stand in for t < 0 under the DFT's
    periodic wrap).
    """
    n_seg = n_time - 1
    n_pad = int(round(WINDOW_FACTOR * n_seg))
    n_taper = int(round(TAPER_FRACTION * n_seg))
    out = np.zeros((n_pad,) + modal.shape[1:])
    out[:n_time] = modal
    if n_taper > 1:
        k = np.arange(1, n_taper)
        w = 0.5 * (1.0 + np.cos(np.pi * k / n_taper))
        out[n_time : n_time + n_taper - 1] = modal[-1] * w[(...,) + (None,) * (modal.ndim - 1)]
    return out


def transform_mu(mu: BoundaryData, basis: EigenBasis) -> ModalFrequencyTable:
    """y-analysis per time step, then rfft over the padded window.

    Parseval holds discretely: sum |muhat|^2 relates to the windowed sample
    energy through the standard rfft weights (tested to 1e-10).
    """
    if mu.basis is not basis and mu.basis.n_nodes != basis.n_nodes:
        raise ConfigurationError("boundary data was sampled on a different node set")
    modal = analyze(mu.samples, basis)              # (n_t, l_max)
    padded = window_extend(modal, len(mu.times))    # (n_pad, l_max)
    muhat = np.fft.rfft(padded, axis=0)
    theta = 2.0 * np.pi * np.fft.rfftfreq(padded.shape[0], d=mu.dt)
    return ModalFrequencyTable(
        muhat=muhat, theta=theta, n_pad=padded.shape[0], dt=mu.dt,
        n_time=len(mu.times), basis=basis, window_modal=padded,
    )


def eval_J_modal(table: ModalFrequencyTable, x: float, b: float = 0.0) -> np.ndarray:
    """Modal time series of J at station x; shape (n_pad, l_max)."""
    if x < 0:
        raise DomainError(f"boundary potential is defined for x >= 0, got {x}")
    r0 = r0_table(table.theta, table.basis, b)
    Jhat = np.exp(r0 * x) * table.muhat
    return np.fft.irfft(Jhat, n=table.n_pad, axis=0)


def eval_J(table: ModalFrequencyTable, x: float, basis: EigenBasis,
           b: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """J(., x, .) sampled on the window time grid and the basis nodes.

    Returns (times, values) with values real of shape (n_pad, n_nodes).  At
    x = 0 the damping factors are 1 and the windowed mu is reproduced.
    Modal magnitudes are non-increasing in x on decaying branches and exactly
    preserved on oscillatory ones, since |exp(r0 x)| = exp(Re r0 x) <= 1.
    """
    modal = eval_J_modal(table, x, b)
    return table.window_times, synthesize(modal, basis)


def residual_J(table: ModalFrequencyTable, x_grid: np.ndarray,
               basis: EigenBasis, b: float = 0.0) -> float:
    """Discrete L2 residual of J_t + b J_x + J_xxx + J_xyy on an interior grid.

    The time derivative is spectral (exact on the window); x-derivatives use
    2nd-order centered differences, so the residual is O(dx^2) under grid
    refinement.  The grid must start at x0 > 0 and carry at least 7 points.
    """
    x_grid = np.asarray(x_grid, dtype=float)
    if len(x_grid) < 7:
        raise ConfigurationError("residual_J needs at least 7 x-grid points")
    if x_grid[0] <= 0:
        raise ConfigurationError("residual_J is an interior check; need x0 > 0")
    dx = x_grid[1] - x_grid[0]
    if not np.allclose(np.diff(x_grid), dx):
        raise ConfigurationError("residual_J requires a uniform x grid")
    r0 = r0_table(table.theta, table.basis, b)         # (n_freq, l_max)
    # J-hat on the station grid: (n_freq, n_x, l_max)
    Jh = np.exp(r0[:, None, :] * x_grid[None, :, None]) * table.muhat[:, None, :]
    Jt = 1j * table.theta[:, None, None] * Jh
    Jx = (Jh[:, 2:, :] - Jh[:, :-2, :]) / (2 * dx)
    Jxxx = (-Jh[:, :-4, :] + 2 * Jh[:, 1:-3, :] - 2 * Jh[:, 3:-1, :] + Jh[:, 4:, :]) / (2 * dx**3)
    lam = table.basis.lambdas[None, None, :]
    res = Jt[:, 2:-2, :] + (b - lam) * Jx[:, 1:-1, :] + Jxxx
    # Parseval in theta (rfft weights), exact modal sum in y, trapezoid in x
    w = np.full(len(table.theta), 2.0)
    w[0] = 1.0
    if table.n_pad % 2 == 0:
        w[-1] = 1.0
    density = np.tensordot(w, np.abs(res) ** 2, axes=(0, 0)) / (table.n_pad**2)
    per_x = density.sum(axis=-1) * table.n_pad * table.dt
    return float(np.sqrt(np.trapezoid(per_x, x_grid[2:-2])))
