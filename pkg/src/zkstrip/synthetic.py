"""Synthetic data builders shared by the CLI and the test suite.

Each builder returns a callable in the shape the solver expects: initial data
as ``f(x, basis) -> modal (N_x, l_max)``, boundary data as
``g(t) -> modal (l_max,)``.  All randomness flows through an explicit seed.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError
from .eigenbasis import EigenBasis


def gaussian_profile(x, x0, width):
    return np.exp(-(((np.asarray(x) - x0) / width) ** 2))


def initial_gaussian_modes(amplitude=0.1, x0=8.0, width=2.0, modes=(1,),
                           mode_weights=None, norm=None):
    """Gaussian x-bump on one or more transverse modes.

    With ``norm`` given, the field is rescaled so its L2 norm over the grid
    equals that target.
    """
    modes = tuple(int(m) for m in modes)
    if mode_weights is None:
        mode_weights = (1.0,) * len(modes)
    if len(mode_weights) != len(modes):
        raise ConfigurationError("modes and mode_weights must have equal length")

    def build(x, basis: EigenBasis):
        u = np.zeros((len(x), basis.l_max))
        g = gaussian_profile(x, x0, width)
        for m, w in zip(modes, mode_weights):
            if not 1 <= m <= basis.l_max:
                raise ConfigurationError(f"mode {m} outside 1..{basis.l_max}")
            u[:, m - 1] = amplitude * w * g
        if norm is not None:
            current = np.sqrt(np.trapezoid(np.sum(u**2, axis=-1), x))
            if current > 0:
                u *= norm / current
        return u

    return build


def initial_random_band(seed=0, amplitude=0.05, x0=8.0, width=3.0, band=None):
    """Seeded random modal coefficients on a smooth compact x-profile."""

    def build(x, basis: EigenBasis):
        rng = np.random.default_rng(seed)
        nb = band or basis.l_max
        coeffs = rng.standard_normal(min(nb, basis.l_max))
        coeffs /= np.sqrt(np.sum(coeffs**2))
        g = gaussian_profile(x, x0, width)
        u = np.zeros((len(x), basis.l_max))
        u[:, : len(coeffs)] = amplitude * np.outer(g, coeffs)
        return u

    return build


def boundary_pulse_modal(l_max: int, amplitude=0.05, t0=0.5, width=0.15, mode=1):
    """Time-localized boundary pulse on a single transverse mode."""
    if not 1 <= mode <= l_max:
        raise ConfigurationError(f"boundary mode {mode} outside 1..{l_max}")

    def mu(t):
        out = np.zeros(l_max)
        out[mode - 1] = amplitude * np.exp(-(((t - t0) / width) ** 2))
        return out

    return mu


def resolve_initial(spec: dict, seed: int):
    """Initial-data builder from flat config keys (kind plus parameters)."""
    kind = spec.get("kind", "zero")
    if kind == "zero":
        return None
    if kind == "gaussian_mode":
        return initial_gaussian_modes(
            amplitude=float(spec.get("amplitude", 0.1)),
            x0=float(spec.get("x0", 8.0)),
            width=float(spec.get("width", 2.0)),
            modes=(int(spec.get("mode", 1)),),
            norm=(float(spec["norm"]) if "norm" in spec else None),
        )
    if kind == "gaussian_modes":
        modes = tuple(int(s) for s in str(spec.get("modes", "1")).split(","))
        weights = spec.get("mode_weights")
        if weights is not None:
            weights = tuple(float(s) for s in str(weights).split(","))
        return initial_gaussian_modes(
            amplitude=float(spec.get("amplitude", 0.1)),
            x0=float(spec.get("x0", 8.0)),
            width=float(spec.get("width", 2.0)),
            modes=modes, mode_weights=weights,
            norm=(float(spec["norm"]) if "norm" in spec else None),
        )
    if kind == "random_band":
        return initial_random_band(
            seed=seed,
            amplitude=float(spec.get("amplitude", 0.05)),
            x0=float(spec.get("x0", 8.0)),
            width=float(spec.get("width", 3.0)),
            band=(int(spec["band"]) if "band" in spec else None),
        )
    raise ConfigurationError(f"unknown initial.kind {kind!r}")


def resolve_boundary(spec: dict, l_max: int):
    kind = spec.get("kind", "zero")
    if kind == "zero":
        return None
    if kind == "gaussian_pulse":
        return boundary_pulse_modal(
            l_max,
            amplitude=float(spec.get("amplitude", 0.05)),
            t0=float(spec.get("t0", 0.5)),
            width=float(spec.get("width", 0.15)),
            mode=int(spec.get("mode", 1)),
        )
    raise ConfigurationError(f"unknown boundary.kind {kind!r}")
