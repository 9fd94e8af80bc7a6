"""Numerical laboratory for Higgs bundles on flat model domains.

Submodules
----------
matrix     pointwise linear algebra (invariants, projectors, stability)
geometry   grids, finite differences, curvature contraction, quadrature
spectral   characteristic fields, discriminants, sheets, square roots
solver     metric heat flow and diagnostic identities
monopole   abelian reduction of rank-2 nilpotent solutions
limits     large-field scaling sweeps and decay fits
cli        command-line runner
"""

__version__ = "0.1.0"

from .geometry import Domain  # noqa: E402
from .spectral import HiggsField  # noqa: E402
from .solver import SolveConfig, SolveReport, heat_flow, vw_residual  # noqa: E402

__all__ = ["Domain", "HiggsField", "SolveConfig", "SolveReport", "heat_flow", "vw_residual",
           "__version__"]
