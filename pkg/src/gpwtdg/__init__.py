"""
gpwtdg - Trefftz discontinuous Galerkin for the Helmholtz equation with
generalized plane waves.
"""

try:
    from ._version import version as __version__
except ModuleNotFoundError:
    # _version.py is written when building dist
    __version__ = "0.0.0+local"

from .analytic import ExactSolution, make_exact
from .assembly import AssembledSystem, Assembler, DgParameters, Variant
from .config import ConfigError, RunConfig, preset
from .epsilon import CoefficientField, field_from_name
from .gpw import GpwBasisSet, GpwFunction, Normalization, build_basis_set, build_gpw
from .harness import ConvergenceAborted, ConvergenceRecord, run_convergence
from .mesh import EdgeKind, Mesh, build_structured_mesh, refine_uniform
from .solver import SingularSystemError, SolveReport, solve_direct
