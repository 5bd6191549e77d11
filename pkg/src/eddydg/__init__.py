"""Hybrid interior-penalty DG solver for time-harmonic eddy currents.

The conducting region carries a vector-valued broken polynomial space for
the magnetic field; the insulating region carries a scalar magnetic
potential enriched on the interface plus one harmonic cohomology amplitude.
"""

__version__ = "0.1.0"

from .config import MaterialConfig, PenaltyConfig
from .mesh import FaceKind, Mesh, MeshError, load_msh, write_msh
from .quadrature import rule_segment, rule_tet, rule_triangle

__all__ = [
    "FaceKind",
    "MaterialConfig",
    "Mesh",
    "MeshError",
    "PenaltyConfig",
    "load_msh",
    "rule_segment",
    "rule_tet",
    "rule_triangle",
    "write_msh",
]
