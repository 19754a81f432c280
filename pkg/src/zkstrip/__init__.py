"""Half-strip Zakharov-Kuznetsov laboratory.

Solver, linear oracles (group/Duhamel/boundary-potential superposition), and
the diagnostics that check conservation, localization, and decay claims.
"""

from .eigenbasis import BoundaryCase, EigenBasis, analyze, build_basis, synthesize, steklov_lambda1
from .weights import Weight, WeightKind, check_admissible, make_weight, weighted_l2
from .dispersion import Branch, DispersionRoot, kappa, phi, root_r0, root_z0
from .zk_solver import Field, SolverConfig, cutoff_eta, g_h, run, truncate_data

__all__ = [
    "BoundaryCase", "EigenBasis", "analyze", "build_basis", "synthesize",
    "steklov_lambda1", "Weight", "WeightKind", "check_admissible", "make_weight",
    "weighted_l2", "Branch", "DispersionRoot", "kappa", "phi", "root_r0",
    "root_z0", "Field", "SolverConfig", "cutoff_eta", "g_h", "run",
    "truncate_data",
]

__version__ = "0.1.0"
