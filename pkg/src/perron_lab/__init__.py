"""P1 finite elements for the Dirichlet problem of elliptic operators without a maximum principle.

Modules: ``region`` (CSG geometry), ``mesh`` (criss-grid triangulation),
``assembly`` (sesquilinear-form matrices), ``linsolve`` (factorizations and
the spectral gate), ``dirichlet`` (solution operator, exhaustion, energy and
attainment), ``capacity`` (condensers and Wiener sums), ``trace`` (boundary
L2 traces), ``scenarios`` and ``cli`` (config driven experiments).
"""
from .assembly import CoefficientSet, assemble, assemble_functional
from .dirichlet import BoundaryData, DirichletSolver, Field, perron_exhaustion, variational_solve
from .mesh import Mesh, build_mesh, exhaustion_mesh
from .region import CantorBar, Complement, Disk, HalfPlane, Intersection, Point, Rect, Region, Union, difference

__version__ = "0.1.0"

__all__ = [
    "BoundaryData", "CantorBar", "CoefficientSet", "Complement", "DirichletSolver", "Disk", "Field", "HalfPlane",
    "Intersection", "Mesh", "Point", "Rect", "Region", "Union", "assemble", "assemble_functional", "build_mesh",
    "difference", "exhaustion_mesh", "perron_exhaustion", "variational_solve",
]
