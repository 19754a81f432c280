"""Finite-difference operators in x on the truncated half-line grid.

Grid: x_i = i dx, i = 0..N-1, with u(x_0) set by the boundary data and the
right closure u(x_{N-1}) = 0, u_x(x_{N-1}) = 0.  Interior stencils are
4th-order centered; the rows next to x = 0 use 4th-order one-sided (biased)
stencils, and the rows next to x = X_max fold the centered stencil through an
even reflection about the endpoint, which realizes u_x = 0 there.  This
closure pair was selected by an eigenvalue study (scripts/
boundary_closure_study.py): the semi-discrete operator (lam - b) D1 - D3 has
spectrum strictly in the closed left half-plane for the eigenvalue range used
at desk scale, so classical RK4 is stable under the dt ~ dx^3 CFL limit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


def fd_weights(z: float, x: np.ndarray, m: int) -> np.ndarray:
    """Fornberg weights for derivatives 0..m at z from nodes x; shape (m+1, n)."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    c = np.zeros((m + 1, n))
    c1 = 1.0
    c4 = x[0] - z
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[k, i] = c1 * (k * c[k - 1, i - 1] - c5 * c[k, i - 1]) / c2
                c[0, i] = -c1 * c5 * c[0, i - 1] / c2
            for k in range(mn, 0, -1):
                c[k, j] = (c4 * c[k, j] - k * c[k - 1, j]) / c3
            c[0, j] = c4 * c[0, j] / c3
        c1 = c2
    return c


def _symbol_max(coeffs: np.ndarray, offsets: np.ndarray) -> float:
    """max over wavenumbers of |sum_j c_j e^(i j k)| for a stencil row."""
    k = np.linspace(0.0, np.pi, 4001)
    sym = np.abs(np.exp(1j * np.outer(k, offsets)) @ coeffs)
    return float(sym.max())


@dataclass(frozen=True)
class XOperators:
    """Precomputed first/third derivative stencils plus boundary trace rows."""

    N: int
    dx: float
    c1: np.ndarray            # centered 4th-order first derivative, offsets -2..2
    c3: np.ndarray            # centered 4th-order third derivative, offsets -3..3
    left_d1: np.ndarray       # rows i=1 (d1 radius 2): coeffs over points 0..len-1
    left_d3: np.ndarray       # rows i=1,2 (d3 radius 3)
    right_d1: np.ndarray      # reflected rows i=N-2 over the last 3 points
    right_d3: np.ndarray      # reflected rows i=N-3, N-2 over the last 4 points
    trace_d1: np.ndarray      # 4th-order one-sided u_x at x=0 over points 0..4
    trace_d2: np.ndarray      # 4th-order one-sided u_xx at x=0 over points 0..5
    symbol_d1: float          # max |symbol| of c1, units 1/dx
    symbol_d3: float          # max |symbol| of c3, units 1/dx^3

    def apply_d1(self, u: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        """First derivative; rows 0 and N-1 are left as zero (boundary-pinned)."""
        if out is None:
            out = np.zeros_like(u)
        c = self.c1
        out[2:-2] = (c[0] * u[:-4] + c[1] * u[1:-3] + c[2] * u[2:-2]
                     + c[3] * u[3:-1] + c[4] * u[4:])
        out[1] = np.tensordot(self.left_d1[0], u[: self.left_d1.shape[1]], axes=(0, 0))
        out[-2] = np.tensordot(self.right_d1[0], u[-self.right_d1.shape[1]:], axes=(0, 0))
        out[0] = 0.0
        out[-1] = 0.0
        return out

    def apply_d3(self, u: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        if out is None:
            out = np.zeros_like(u)
        c = self.c3
        out[3:-3] = (c[0] * u[:-6] + c[1] * u[1:-5] + c[2] * u[2:-4] + c[3] * u[3:-3]
                     + c[4] * u[4:-2] + c[5] * u[5:-1] + c[6] * u[6:])
        nL = self.left_d3.shape[1]
        out[1] = np.tensordot(self.left_d3[0], u[:nL], axes=(0, 0))
        out[2] = np.tensordot(self.left_d3[1], u[:nL], axes=(0, 0))
        nR = self.right_d3.shape[1]
        out[-3] = np.tensordot(self.right_d3[0], u[-nR:], axes=(0, 0))
        out[-2] = np.tensordot(self.right_d3[1], u[-nR:], axes=(0, 0))
        out[0] = 0.0
        out[-1] = 0.0
        return out

    def dense_d1(self) -> np.ndarray:
        return self._dense(self.c1, 2, self.left_d1, self.right_d1)

    def dense_d3(self) -> np.ndarray:
        return self._dense(self.c3, 3, self.left_d3, self.right_d3)

    def _dense(self, c, r, left, right):
        N = self.N
        D = np.zeros((N, N))
        for i in range(r, N - r):
            D[i, i - r : i + r + 1] = c
        for k in range(left.shape[0]):
            D[1 + k, : left.shape[1]] = left[k]
        for k in range(right.shape[0]):
            D[N - 1 - right.shape[0] + k, N - right.shape[1]:] = right[k]
        D[0] = 0.0
        D[N - 1] = 0.0
        return D


def build_operators(N: int, dx: float) -> XOperators:
    if N < 16:
        raise ConfigurationError(f"N_x must be at least 16, got {N}")
    x = np.arange(7) * dx
    c1 = fd_weights(2 * dx, x[:5], 1)[1]
    c3 = fd_weights(3 * dx, x, 3)[3]
    # left: 4th-order biased stencils at i=1 (d1) and i=1,2 (d3)
    left_d1 = fd_weights(1 * dx, np.arange(5) * dx, 1)[1][None, :]
    left_d3 = np.stack([
        fd_weights(1 * dx, np.arange(7) * dx, 3)[3],
        fd_weights(2 * dx, np.arange(7) * dx, 3)[3],
    ])
    # right: centered stencil folded through even reflection about x_{N-1};
    # index j > N-1 maps to 2(N-1) - j, realizing u_x(X_max) = 0
    right_d1 = np.zeros((1, 5))      # row N-2 over window N-5..N-1
    for jj, off in enumerate(range(-2, 3)):
        j = 3 + off                  # local index, window local 0..4, end at 4
        jr = j if j <= 4 else 8 - j
        right_d1[0, jr] += c1[jj]
    right_d3 = np.zeros((2, 7))      # rows N-3, N-2 over window N-7..N-1
    for row, center in enumerate((4, 5)):  # local centers, end at local 6
        for jj, off in enumerate(range(-3, 4)):
            j = center + off
            jr = j if j <= 6 else 12 - j
            right_d3[row, jr] += c3[jj]
    trace_d1 = fd_weights(0.0, np.arange(5) * dx, 1)[1]
    trace_d2 = fd_weights(0.0, np.arange(6) * dx, 2)[2]
    return XOperators(
        N=N, dx=float(dx), c1=c1, c3=c3,
        left_d1=left_d1, left_d3=left_d3,
        right_d1=right_d1, right_d3=right_d3,
        trace_d1=trace_d1, trace_d2=trace_d2,
        symbol_d1=_symbol_max(c1, np.arange(-2, 3)) * dx,
        symbol_d3=_symbol_max(c3, np.arange(-3, 4)) * dx**3,
    )
