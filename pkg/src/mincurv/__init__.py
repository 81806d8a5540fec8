"""Numerical toolkit for finite-total-curvature minimal ends in M^2 x R."""

__version__ = "0.1.0"

from .curvature_ledger import gauss_bonnet_end, total_curvature_formula, total_curvature_multiple
from .end_model import EndData
from .errors import MincurvError
from .lift_engine import close_polygon, lift
from .sinh_gordon import AnnulusGrid, SolverConfig, solve_xi

__all__ = [
    "AnnulusGrid",
    "EndData",
    "MincurvError",
    "SolverConfig",
    "__version__",
    "close_polygon",
    "gauss_bonnet_end",
    "lift",
    "solve_xi",
    "total_curvature_formula",
    "total_curvature_multiple",
]
