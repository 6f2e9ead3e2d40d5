"""Multigroup discrete-ordinates transport with a multigrid-in-energy preconditioner."""
from .krylov import gmres
from .mge import (MGEPreconditioner, build_hierarchy, grid_depth, prolong_vector,
                  restrict_material, restrict_vector)
from .operator import Discretization, TransportOperator, reduce_plus_scatter
from .problem import (CartesianMesh, ConfigurationError, EigenConfig, MaterialCrossSections,
                      ProblemSpec, SolverConfig, SourceSpec, assign_groups_to_sets,
                      fixture_problem, partition_upscatter, synth_fission_fixture,
                      synth_upscatter_fixture, validate_material)
from .problem_file import format_problem, parse_problem_file
from .quadrature import AngularQuadrature, build_quadrature
from .solvers import (ConvergenceRecord, MultigroupSolver, dominance_ratio_estimate,
                      gauss_seidel_solve, power_iteration, solve_fixed_source)
from .sweep import Sweeper, step_cell_kernel, transport_sweep

__version__ = "0.1.0"
