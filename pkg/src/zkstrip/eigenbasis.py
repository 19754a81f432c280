"""Transverse eigenfunction systems on [0, L].

Orthonormal eigenpairs of -psi'' under the four boundary families

    a) psi(0) = psi(L) = 0            (Dirichlet/Dirichlet)
    b) psi'(0) = psi'(L) = 0          (Neumann/Neumann)
    c) psi(0) = psi'(L) = 0           (Dirichlet/Neumann)
    d) L-periodic

together with collocation nodes and quadrature weights that make the discrete
inner products of the retained modes exact, and analysis/synthesis transforms
between node values and modal coefficients.  Everything is closed-form
trigonometric; transforms are dense matrix products (l_max <= 128 at desk
scale).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigurationError, ShapeError


class BoundaryCase(Enum):
    DIRICHLET_DIRICHLET = "a"
    NEUMANN_NEUMANN = "b"
    DIRICHLET_NEUMANN = "c"
    PERIODIC = "d"

    @classmethod
    def parse(cls, token) -> "BoundaryCase":
        if isinstance(token, cls):
            return token
        token = str(token).strip().lower()
        for member in cls:
            if token in (member.value, member.name.lower()):
                return member
        raise ConfigurationError(f"unknown boundary case {token!r}; expected one of a, b, c, d")


# per-mode shape: kind in {"const", "sin", "cos"}, angular frequency omega,
# amplitude amp; the mode is amp * kind(omega * y) with eigenvalue omega**2.
def _mode_table(case: BoundaryCase, L: float, l_max: int):
    kinds, omegas, amps = [], [], []
    if case is BoundaryCase.DIRICHLET_DIRICHLET:
        for l in range(1, l_max + 1):
            kinds.append("sin")
            omegas.append(l * np.pi / L)
            amps.append(np.sqrt(2.0 / L))
    elif case is BoundaryCase.NEUMANN_NEUMANN:
        kinds.append("const")
        omegas.append(0.0)
        amps.append(1.0 / np.sqrt(L))
        for l in range(2, l_max + 1):
            kinds.append("cos")
            omegas.append((l - 1) * np.pi / L)
            amps.append(np.sqrt(2.0 / L))
    elif case is BoundaryCase.DIRICHLET_NEUMANN:
        for l in range(1, l_max + 1):
            kinds.append("sin")
            omegas.append((2 * l - 1) * np.pi / (2 * L))
            amps.append(np.sqrt(2.0 / L))
    else:  # periodic: constant first, then (cos, sin) pairs by frequency
        kinds.append("const")
        omegas.append(0.0)
        amps.append(1.0 / np.sqrt(L))
        k = 1
        while len(kinds) < l_max:
            for kind in ("cos", "sin"):
                if len(kinds) == l_max:
                    break
                kinds.append(kind)
                omegas.append(2 * np.pi * k / L)
                amps.append(np.sqrt(2.0 / L))
            k += 1
    return kinds, np.asarray(omegas), np.asarray(amps)


def _default_node_count(case: BoundaryCase, l_max: int) -> int:
    # smallest rule with exact discrete orthonormality of the retained modes
    if case is BoundaryCase.DIRICHLET_DIRICHLET:
        return l_max
    if case is BoundaryCase.NEUMANN_NEUMANN:
        return l_max + 1
    if case is BoundaryCase.DIRICHLET_NEUMANN:
        return l_max
    k_max = (l_max + 1) // 2
    return max(2 * k_max + 1, 3)


def _quadrature(case: BoundaryCase, L: float, n_nodes: int):
    if case is BoundaryCase.DIRICHLET_DIRICHLET:
        j = np.arange(1, n_nodes + 1)
        nodes = j * L / (n_nodes + 1)
        weights = np.full(n_nodes, L / (n_nodes + 1))
    elif case is BoundaryCase.NEUMANN_NEUMANN:
        j = np.arange(n_nodes)
        nodes = j * L / (n_nodes - 1)
        weights = np.full(n_nodes, L / (n_nodes - 1))
        weights[0] *= 0.5
        weights[-1] *= 0.5
    elif case is BoundaryCase.DIRICHLET_NEUMANN:
        j = np.arange(n_nodes)
        nodes = (j + 0.5) * L / n_nodes
        weights = np.full(n_nodes, L / n_nodes)
    else:
        j = np.arange(n_nodes)
        nodes = j * L / n_nodes
        weights = np.full(n_nodes, L / n_nodes)
    return nodes, weights


@dataclass(frozen=True)
class EigenBasis:
    """Orthonormal eigenfunction system with an exact collocation rule.

    ``psi[j, l]`` holds mode l evaluated at node j, so synthesis is
    ``values = coeffs @ psi.T`` and analysis is ``coeffs = values @ (w*psi)``.
    """

    case: BoundaryCase
    L: float
    l_max: int
    lambdas: np.ndarray          # (l_max,) non-decreasing, >= 0
    nodes: np.ndarray            # (n_nodes,)
    weights: np.ndarray          # (n_nodes,)
    psi: np.ndarray              # (n_nodes, l_max)
    _kinds: tuple = field(repr=False, default=())
    _omegas: np.ndarray = field(repr=False, default=None)
    _amps: np.ndarray = field(repr=False, default=None)

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def analysis(self) -> np.ndarray:
        """(n_nodes, l_max) matrix such that coeffs = values @ analysis."""
        return self.weights[:, None] * self.psi

    def eval_psi(self, l: int, y) -> np.ndarray:
        """Mode l (1-based) evaluated at arbitrary y."""
        return self._eval(l, y, deriv=0)

    def eval_psi_d1(self, l: int, y) -> np.ndarray:
        return self._eval(l, y, deriv=1)

    def eval_psi_d2(self, l: int, y) -> np.ndarray:
        return self._eval(l, y, deriv=2)

    def _eval(self, l: int, y, deriv: int):
        if not 1 <= l <= self.l_max:
            raise ShapeError(f"mode index {l} outside 1..{self.l_max}")
        kind = self._kinds[l - 1]
        om = self._omegas[l - 1]
        amp = self._amps[l - 1]
        y = np.asarray(y, dtype=float)
        if kind == "const":
            return np.full_like(y, amp) if deriv == 0 else np.zeros_like(y)
        if kind == "sin":
            table = (np.sin, np.cos, lambda z: -np.sin(z))
        else:
            table = (np.cos, lambda z: -np.sin(z), lambda z: -np.cos(z))
        return amp * om**deriv * table[deriv](om * y)

    def with_nodes(self, n_nodes: int) -> "EigenBasis":
        """Same modal system evaluated on a different collocation rule."""
        return build_basis(self.case, self.L, self.l_max, n_nodes=n_nodes)

    def dealias(self, factor: float = 1.5) -> "EigenBasis":
        """Padded rule on which quadratic products of retained modes analyze
        exactly (3/2-rule by default)."""
        n = int(np.ceil(factor * self.l_max)) + 2
        return self.with_nodes(max(n, self.n_nodes))


def build_basis(case, L: float, l_max: int, n_nodes: int | None = None) -> EigenBasis:
    """Construct the eigenbasis for one boundary family.

    Eigenpairs are closed-form: case a sin(l pi y/L) with (l pi/L)^2, case b
    constant then cosines, case c quarter-wave sines, case d constant plus
    cos/sin pairs.  Raises ConfigurationError for L <= 0 or l_max < 1.
    """
    case = BoundaryCase.parse(case)
    if not L > 0:
        raise ConfigurationError(f"strip width L must be positive, got {L}")
    if l_max < 1:
        raise ConfigurationError(f"l_max must be >= 1, got {l_max}")
    if n_nodes is None:
        n_nodes = _default_node_count(case, l_max)
    min_nodes = _default_node_count(case, l_max)
    if n_nodes < min_nodes:
        raise ConfigurationError(
            f"case {case.value} with l_max={l_max} needs at least {min_nodes} nodes, got {n_nodes}"
        )
    kinds, omegas, amps = _mode_table(case, L, l_max)
    nodes, weights = _quadrature(case, L, n_nodes)
    psi = np.empty((n_nodes, l_max))
    for i, (kind, om, amp) in enumerate(zip(kinds, omegas, amps)):
        if kind == "const":
            psi[:, i] = amp
        elif kind == "sin":
            psi[:, i] = amp * np.sin(om * nodes)
        else:
            psi[:, i] = amp * np.cos(om * nodes)
    return EigenBasis(
        case=case,
        L=float(L),
        l_max=int(l_max),
        lambdas=omegas**2,
        nodes=nodes,
        weights=weights,
        psi=psi,
        _kinds=tuple(kinds),
        _omegas=omegas,
        _amps=amps,
    )


def analyze(values: np.ndarray, basis: EigenBasis) -> np.ndarray:
    """Modal coefficients <phi, psi_l> by quadrature; acts on the last axis."""
    values = np.asarray(values)
    if values.shape[-1] != basis.n_nodes:
        raise ShapeError(
            f"expected {basis.n_nodes} node values on the last axis, got {values.shape[-1]}"
        )
    return values @ basis.analysis


def synthesize(coeffs: np.ndarray, basis: EigenBasis) -> np.ndarray:
    """Sum_l c_l psi_l at the nodes; acts on the last axis.

    Coefficient vectors shorter than l_max are zero-extended.
    """
    coeffs = np.asarray(coeffs)
    if coeffs.shape[-1] > basis.l_max:
        raise ShapeError(
            f"got {coeffs.shape[-1]} coefficients for a basis with l_max={basis.l_max}"
        )
    if coeffs.shape[-1] < basis.l_max:
        pad = list(coeffs.shape)
        pad[-1] = basis.l_max - coeffs.shape[-1]
        coeffs = np.concatenate([coeffs, np.zeros(pad)], axis=-1)
    return coeffs @ basis.psi.T


def steklov_lambda1(basis: EigenBasis) -> float:
    """Smallest eigenvalue; reciprocal of the sharp Poincare constant for the
    active family (pi^2/L^2 in case a, pi^2/(4 L^2) in case c, 0 for b and d)."""
    return float(basis.lambdas[0])
