"""Scattering resonances of the one-dimensional Helmholtz operator.

Three formulations of the resonance problem on a truncated domain (a
Dirichlet-to-Neumann quadratic eigenproblem, a finite-thickness absorbing
layer linear eigenproblem, and a volume-integral nonlinear eigenproblem),
plus a pseudomode residual filter that tells true resonances from
discretization artifacts, pseudospectrum maps, and high-accuracy reference
eigenvalues for validation.
"""

__version__ = "0.1.0"

from .assembly import (DtnMatrices, PmlMatrices, ResonatorMass, assemble_dtn,
                       assemble_pml, assemble_resonator_mass)
from .eigen import (ContourConfig, EigenPair, NewtonConvergenceError,
                    ProbeTooSmallError, SolveDiagnostics, canonical_fourth_quadrant,
                    newton_root, smallest_singular_value, solve_contour, solve_dtn,
                    solve_pml)
from .lippmann import (FilterReport, LsContext, NoResonatorSupportError,
                       PseudospectrumGrid, apply_kernel, build_ls_context,
                       collocation_matrix, filter_epsilon, pseudospectrum,
                       write_grid_csv)
from .media import (MediumProfile, PmlConfig, StretchFunction,
                    air_filled_cavity_profile, bump_profile, critical_angle,
                    sigma_eval, slab_profile)
from .mesh_fe import (BoundaryCondition, Mesh1D, MeshedSpace, QuadratureRule,
                      build_mesh, build_space, evaluate_basis, evaluate_function)
from .reference import (DegenerateRelationError, ReferenceSet,
                        cavity_relation_residual, general_dtn_relation_residual,
                        layered_solutions, reference_table, slab_dtn_eigenvalues,
                        slab_pml_eigenvalues)

__all__ = [
    "__version__",
    "BoundaryCondition", "Mesh1D", "MeshedSpace", "QuadratureRule",
    "build_mesh", "build_space", "evaluate_basis", "evaluate_function",
    "MediumProfile", "PmlConfig", "StretchFunction",
    "slab_profile", "air_filled_cavity_profile", "bump_profile",
    "sigma_eval", "critical_angle",
    "DtnMatrices", "PmlMatrices", "ResonatorMass",
    "assemble_dtn", "assemble_pml", "assemble_resonator_mass",
    "EigenPair", "ContourConfig", "SolveDiagnostics",
    "NewtonConvergenceError", "ProbeTooSmallError",
    "solve_dtn", "solve_pml", "canonical_fourth_quadrant", "newton_root",
    "solve_contour", "smallest_singular_value",
    "LsContext", "FilterReport", "PseudospectrumGrid", "NoResonatorSupportError",
    "build_ls_context", "apply_kernel", "collocation_matrix", "filter_epsilon",
    "pseudospectrum", "write_grid_csv",
    "ReferenceSet", "DegenerateRelationError",
    "slab_dtn_eigenvalues", "slab_pml_eigenvalues", "cavity_relation_residual",
    "general_dtn_relation_residual", "layered_solutions", "reference_table",
]
