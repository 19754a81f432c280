"""Cubic dispersion symbol and its left-half-plane root.

The per-mode symbol is phi_l(xi) = xi^3 - b xi + lambda_l xi.  Three related
objects live here:

* ``kappa``: the monotone-branch inverse of phi_l, defined for every theta
  when lambda_l >= b and for |theta| >= 2((b - lambda_l)/3)^(3/2) otherwise.
* ``root_z0``: for Re p > 0, the unique root of z^3 - (lambda_l - b) z + p = 0
  with negative real part.
* ``root_r0``: the limit of that root as Re p -> 0+, written r0 = p + i q.

The limit root reduces to real cubic inversions.  With a = lambda_l - b the
cubic z^3 - a z + i theta always has the purely imaginary root i y with
y^3 + a y = theta on the monotone branch; factoring it out leaves

    r0 = -sqrt(3 y^2 + 4 a)/2 - i y/2

whenever that square root is real, which covers a >= 0 and the outer branch
for a < 0.  Inside the subcritical window (a < 0, |theta| below the branch
threshold) all three roots are purely imaginary and the limit selects the
middle one, giving p = 0 and q bounded by sqrt((b - lambda_l)/3).  Roots are
polished by a safeguarded Newton step so residuals sit at round-off, and odd
symmetry in theta is enforced bitwise so conjugate symmetry is exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError
from .eigenbasis import EigenBasis


class Branch(Enum):
    DECAYING = "decaying"        # Re r0 < 0
    OSCILLATORY = "oscillatory"  # Re r0 = 0, subcritical window


@dataclass(frozen=True)
class DispersionRoot:
    theta: float
    l: int
    value: complex
    branch: Branch

    @property
    def p(self) -> float:
        return self.value.real

    @property
    def q(self) -> float:
        return self.value.imag


def window_threshold(lam: float, b: float) -> float:
    """2((b - lambda)/3)^(3/2) for lambda < b, else 0."""
    m = b - lam
    return 2.0 * (m / 3.0) ** 1.5 if m > 0 else 0.0


def phi(xi, l: int, b: float, basis: EigenBasis):
    """Dispersion symbol xi^3 - b xi + lambda_l xi."""
    return phi_lambda(xi, _lam(basis, l), b)


def phi_lambda(xi, lam, b):
    xi = np.asarray(xi, dtype=float)
    out = xi**3 + (lam - b) * xi
    return out if out.ndim else float(out)


def _lam(basis: EigenBasis, l: int) -> float:
    if not 1 <= l <= basis.l_max:
        raise DomainError(f"mode index {l} outside 1..{basis.l_max}")
    return float(basis.lambdas[l - 1])


def _polish(k, a, theta, iters=3):
    # Newton on f(k) = k^3 + a k - theta; f' >= a on the branches we polish
    for _ in range(iters):
        f = k**3 + a * k - theta
        fp = 3.0 * k**2 + a
        fp = np.where(np.abs(fp) < 1e-300, 1e-300, fp)
        k = k - f / fp
    return k

def _monotone_root(theta, a):
    """Real root of k^3 + a k = theta for a >= 0 (vectorized, odd in theta)."""
    t = np.abs(theta)
    s = np.sqrt(0.25 * t**2 + (a / 3.0) ** 3)
    k = np.cbrt(0.5 * t + s) + np.cbrt(0.5 * t - s)
    k = _polish(k, a, t)
    return np.copysign(k, theta)


def _outer_root(theta, m):
    """Root of k^3 - m k = theta with |k| >= 2 sqrt(m/3); needs |theta| >= thr."""
    t = np.abs(theta)
    scale = 2.0 * np.sqrt(m / 3.0)
    thr = 2.0 * (m / 3.0) ** 1.5
    r = np.clip(t / thr, 1.0, None) if np.ndim(t) == 0 else np.maximum(t / thr, 1.0)
    k = scale * np.cosh(np.arccosh(r) / 3.0)
    k = _polish(k, -m, t)
    k = np.maximum(k, scale)  # stay on the outer branch after polishing
    return np.copysign(k, theta)


def _middle_root(theta, m):
    """Middle solution of k^3 - m k = theta, |k| <= sqrt(m/3); |theta| <= thr."""
    t = np.abs(theta)
    thr = 2.0 * (m / 3.0) ** 1.5
    r = np.clip(t / thr, 0.0, 1.0)
    k = 2.0 * np.sqrt(m / 3.0) * np.cos(np.arccos(r) / 3.0 - 2.0 * np.pi / 3.0)
    # polish only where the cubic is well-conditioned (away from the fold)
    fp = 3.0 * k**2 - m
    safe = np.abs(fp) > 1e-6 * max(m, 1.0) if np.ndim(fp) == 0 else np.abs(fp) > 1e-6 * (m + 1.0)
    kp = _polish(k, -m, t)
    k = np.where(safe & (np.abs(kp) <= np.sqrt(m / 3.0) * (1 + 1e-12)), kp, k)
    return np.copysign(k, -theta)  # middle branch is decreasing


def kappa(theta, l: int, b: float, basis: EigenBasis):
    """Monotone-branch inverse xi = phi_l^{-1}(theta).

    For lambda_l < b the inverse exists only outside the window
    |theta| < 2((b - lambda_l)/3)^(3/2); inside it a DomainError is raised.
    """
    return kappa_lambda(theta, _lam(basis, l), b)


def kappa_lambda(theta, lam, b):
    theta_arr = np.asarray(theta, dtype=float)
    a = lam - b
    # a window whose threshold underflows to zero is numerically absent
    if a >= 0 or window_threshold(lam, b) <= 0.0:
        out = _monotone_root(theta_arr, a)
    else:
        m = -a
        thr = window_threshold(lam, b)
        if np.any(np.abs(theta_arr) < thr * (1.0 - 1e-12)):
            raise DomainError(
                f"theta inside the forbidden window |theta| < {thr:.6g} for lambda < b"
            )
        out = _outer_root(theta_arr, m)
    return out if out.ndim else float(out)


def root_z0(p: complex, lam: float, b: float) -> complex:
    """Unique root of z^3 - (lam - b) z + p = 0 with Re z < 0, for Re p > 0."""
    p = complex(p)
    if not p.real > 0:
        raise DomainError("root_z0 requires Re p > 0; use root_r0 for the limit")
    a = lam - b
    roots = np.roots([1.0, 0.0, -a, p])
    # Re p > 0 rules out imaginary-axis roots, so exactly one sits on the left
    neg = roots[roots.real < 0]
    if len(neg) == 0:
        neg = roots
    z = neg[np.argmin(neg.real)]
    for _ in range(3):  # complex Newton polish
        f = z**3 - a * z + p
        fp = 3 * z**2 - a
        if abs(fp) < 1e-300:
            break
        z = z - f / fp
    return complex(z)


def r0_lambda(theta, lam, b):
    """Vectorized limit root r0(theta) for one eigenvalue.

    Returns (values complex array, oscillatory bool array).  Odd symmetry in
    theta is exact by construction: r0(-theta) = conj(r0(theta)) bitwise.
    """
    theta = np.asarray(theta, dtype=float)
    a = lam - b
    if a >= 0 or window_threshold(lam, b) <= 0.0:
        y = _monotone_root(theta, a)
        vals = -0.5 * np.sqrt(np.maximum(3.0 * y**2 + 4.0 * a, 0.0)) - 0.5j * y
        return vals, np.zeros(theta.shape, dtype=bool)
    m = -a
    thr = window_threshold(lam, b)
    inside = np.abs(theta) < thr
    vals = np.empty(theta.shape, dtype=complex)
    if np.any(inside):
        q = _middle_root(theta[inside], m)
        vals[inside] = 1j * q
    if np.any(~inside):
        y = _outer_root(theta[~inside], m)
        rad = np.maximum(3.0 * y**2 - 4.0 * m, 0.0)
        vals[~inside] = -0.5 * np.sqrt(rad) - 0.5j * y
    return vals, inside


def root_r0(theta: float, l: int, b: float, basis: EigenBasis) -> DispersionRoot:
    """Limit of root_z0 as Re p -> 0+, with branch classification.

    Total function: Decaying (p <= 0, strictly negative away from
    theta = 0 with lambda_l = b) or Oscillatory (p = 0) inside the window.
    """
    lam = _lam(basis, l)
    vals, inside = r0_lambda(np.asarray([theta], dtype=float), lam, b)
    branch = Branch.OSCILLATORY if bool(inside[0]) else Branch.DECAYING
    return DispersionRoot(float(theta), l, complex(vals[0]), branch)


def r0_table(theta: np.ndarray, basis: EigenBasis, b: float) -> np.ndarray:
    """r0 on a (theta, mode) grid; shape (len(theta), l_max)."""
    out = np.empty((len(theta), basis.l_max), dtype=complex)
    for i, lam in enumerate(basis.lambdas):
        out[:, i] = r0_lambda(theta, float(lam), b)[0]
    return out


def r0_elementwise(theta: np.ndarray, lam: np.ndarray, b: np.ndarray):
    """Limit roots for elementwise (theta_i, lam_i, b_i) triples.

    Fully vectorized counterpart of root_r0 used for bulk sampling; returns
    (values, oscillatory mask).
    """
    theta = np.asarray(theta, dtype=float)
    a = np.asarray(lam, dtype=float) - np.asarray(b, dtype=float)
    vals = np.empty(np.broadcast(theta, a).shape, dtype=complex)
    osc = np.zeros(vals.shape, dtype=bool)
    theta, a = np.broadcast_arrays(theta, a)
    with np.errstate(under="ignore"):
        thr_all = 2.0 * (np.maximum(-a, 0.0) / 3.0) ** 1.5
    mono = (a >= 0) | (thr_all <= 0.0)
    if mono.any():
        y = _monotone_root(theta[mono], a[mono])
        vals[mono] = -0.5 * np.sqrt(np.maximum(3.0 * y**2 + 4.0 * a[mono], 0.0)) - 0.5j * y
    rest = ~mono
    if rest.any():
        m = -a[rest]
        th = theta[rest]
        thr = 2.0 * (m / 3.0) ** 1.5
        inside = np.abs(th) < thr
        sub = np.zeros(vals.shape, dtype=bool)
        sub[rest] = inside
        if inside.any():
            q = _middle_root(th[inside], m[inside])
            vals[sub] = 1j * q
            osc[sub] = True
        outer = np.zeros(vals.shape, dtype=bool)
        outer[rest] = ~inside
        if (~inside).any():
            y = _outer_root(th[~inside], m[~inside])
            rad = np.maximum(3.0 * y**2 - 4.0 * m[~inside], 0.0)
            vals[outer] = -0.5 * np.sqrt(rad) - 0.5j * y
    return vals, osc


def residual(value, lam, b, theta):
    """|r^3 - (lam-b) r + i theta|, the defining cubic residual."""
    return np.abs(value**3 - (lam - b) * value + 1j * np.asarray(theta))
