"""Admissible weight functions rho(x) on the half-line and weighted norms.

A weight is admissible when it is smooth, positive, and every derivative is
dominated by the weight itself: |rho^(j)(x)| <= C_j rho(x).  The built-in
families are exp(2 alpha x), (1+x)^(2 alpha), 1 + (2/pi) arctan x, and the
unit weight.  Derivatives are closed-form (never finite-differenced), and any
real power of a weight is again a weight, so admissibility of rho^s can be
certified directly.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigurationError


class WeightKind(Enum):
    EXPONENTIAL = "exponential"
    POWER = "power"
    ARCTAN = "arctan"
    UNIT = "unit"

    @classmethod
    def parse(cls, token) -> "WeightKind":
        if isinstance(token, cls):
            return token
        token = str(token).strip().lower()
        for member in cls:
            if token == member.value or token == member.name.lower():
                return member
        raise ConfigurationError(f"unknown weight kind {token!r}")


def _base_derivatives(kind: WeightKind, alpha, x):
    """rho and its first three derivatives for the s=1 base family."""
    x = np.asarray(x, dtype=float)
    if kind is WeightKind.EXPONENTIAL:
        r = np.exp(2 * alpha * x)
        return r, 2 * alpha * r, (2 * alpha) ** 2 * r, (2 * alpha) ** 3 * r
    if kind is WeightKind.POWER:
        base = 1.0 + x
        p = 2 * alpha
        r = base**p
        return (
            r,
            p * base ** (p - 1),
            p * (p - 1) * base ** (p - 2),
            p * (p - 1) * (p - 2) * base ** (p - 3),
        )
    if kind is WeightKind.ARCTAN:
        r = 1.0 + (2.0 / np.pi) * np.arctan(x)
        q = 1.0 + x * x
        d1 = (2.0 / np.pi) / q
        d2 = (2.0 / np.pi) * (-2.0 * x) / q**2
        d3 = (2.0 / np.pi) * (6.0 * x * x - 2.0) / q**3
        return r, d1, d2, d3
    one = np.ones_like(x)
    zero = np.zeros_like(x)
    return one, zero, zero, zero


@dataclass(frozen=True)
class Weight:
    """rho(x)^s together with closed-form derivatives up to order three."""

    kind: WeightKind
    alpha: float | None = None
    s: float = 1.0

    def rho(self, x):
        r = _base_derivatives(self.kind, self.alpha, x)[0]
        return r if self.s == 1.0 else r**self.s

    def derivatives(self, x):
        """(rho^s, (rho^s)', (rho^s)'', (rho^s)''') at x."""
        r, d1, d2, d3 = _base_derivatives(self.kind, self.alpha, x)
        s = self.s
        if s == 1.0:
            return r, d1, d2, d3
        # chain rule for rho^s in terms of the base derivatives
        rs = r**s
        g1 = s * r ** (s - 1) * d1
        g2 = s * (s - 1) * r ** (s - 2) * d1**2 + s * r ** (s - 1) * d2
        g3 = (
            s * (s - 1) * (s - 2) * r ** (s - 3) * d1**3
            + 3 * s * (s - 1) * r ** (s - 2) * d1 * d2
            + s * r ** (s - 1) * d3
        )
        return rs, g1, g2, g3

    def power(self, s: float) -> "Weight":
        """rho^s; admissible for any real s."""
        return Weight(self.kind, self.alpha, self.s * s)


def make_weight(kind, alpha: float | None = None) -> Weight:
    """Build exp(2 alpha x), (1+x)^(2 alpha), 1 + (2/pi) arctan x, or 1.

    alpha must be positive for the exponential and power families.
    """
    kind = WeightKind.parse(kind)
    if kind in (WeightKind.EXPONENTIAL, WeightKind.POWER):
        if alpha is None or not alpha > 0:
            raise ConfigurationError(f"{kind.value} weight requires alpha > 0, got {alpha}")
        return Weight(kind, float(alpha))
    return Weight(kind, None)


@dataclass(frozen=True)
class AdmissibilityCertificate:
    ratios: tuple            # (C_1, ..., C_j) max sampled |rho^(j)|/rho
    passed: bool
    x_max: float
    n_samples: int

    def constant(self, j: int) -> float:
        return self.ratios[j - 1]


def check_admissible(w: Weight, x_max: float, j_max: int = 3,
                     n_samples: int = 1024) -> AdmissibilityCertificate:
    """Certify |rho^(j)| <= C_j rho on a log-spaced sample of [0, x_max].

    Pass iff every sampled ratio is finite.  The continuum statement is
    untestable numerically; the certificate records the max sampled ratios.
    """
    if not x_max > 0:
        raise ConfigurationError("x_max must be positive")
    if not 1 <= j_max <= 3:
        raise ConfigurationError("j_max must be between 1 and 3")
    x = np.concatenate([[0.0], np.geomspace(1e-6 * x_max, x_max, n_samples - 1)])
    derivs = w.derivatives(x)
    rho = derivs[0]
    ratios = []
    for j in range(1, j_max + 1):
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios.append(float(np.max(np.abs(derivs[j]) / rho)))
    passed = bool(rho.min() > 0 and all(np.isfinite(c) for c in ratios))
    return AdmissibilityCertificate(tuple(ratios), passed, float(x_max), n_samples)


def weighted_l2(field, w: Weight) -> float:
    """sqrt of the x-trapezoid / y-exact quadrature of phi^2 rho over the grid.

    ``field`` is anything with ``.modal`` (n_x, l_max) and ``.x`` attributes;
    the y-integral of phi^2 is the modal coefficient sum (Parseval).
    """
    return weighted_l2_modal(field.modal, field.x, w)


def weighted_l2_modal(modal: np.ndarray, x: np.ndarray, w: Weight) -> float:
    density = np.sum(np.asarray(modal) ** 2, axis=-1) * w.rho(x)
    return float(np.sqrt(np.trapezoid(density, x)))
