"""Pilot-wave (de Broglie-Bohm) trajectory simulations.

Subpackages cover the shared numerical substrate (grids, parametric
families, matrix sets), probability currents with spin, wavefunction
propagation, beable sampling and trajectory integration, Dirac and
Duffin-Kemmer-Petiau plane-wave states, bosonic field modes, and the
decaying-system / optical-imaging experiments.
"""

from .units import UnitSystem, NATURAL
from .grid import Grid
from .matrices import MatrixSet, build_matrix_set
from .wavefunction import (ParametricWaveFunction, GridWaveFunction,
                           evaluate, grid_gradient)

__version__ = "0.1.0"

__all__ = [
    "UnitSystem", "NATURAL", "Grid", "MatrixSet", "build_matrix_set",
    "ParametricWaveFunction", "GridWaveFunction", "evaluate", "grid_gradient",
    "__version__",
]
