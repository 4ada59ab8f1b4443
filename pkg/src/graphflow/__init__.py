"""Semilinear diffusion on weighted graphs.

Solves du/dt + L u = f(u) + h on finite and infinite weighted graphs by
implicit Euler time stepping, where L is the (formal) graph Laplacian with
node measure mu and killing term kappa.  Infinite hosts are approached
through Dirichlet restrictions to growing balls.  Alongside the solvers,
the package ships the structural guarantees of the scheme as executable
checks: accretivity pairings, contraction and comparison of trajectories,
exponential decay in the linear case, scalar barriers with finite-time
extinction for weak absorption and strict positivity for strong absorption.
"""

from . import _kernels
from ._kernels import NUMBA_ENABLED, backend_name
from .errors import (ConfigError, DiscretizationError, ExhaustionError,
                     GraphError, GraphflowError, NonlinearityError,
                     SolverError)
from .graphs import (DirichletSubgraph, Exhaustion, GridFunction,
                     WeightedGraph, absorb_boundary_data, apply_laplacian,
                     boundary_sets, check_summability, dirichlet_subgraph,
                     exhaustion, format_node, load_graph_json, lp_norm,
                     save_graph_json)
from .generators import (cycle_graph, graph_from_spec, lattice, path_graph,
                         random_connected_graph, regular_tree)
from .nonlinearity import (Nonlinearity, PsiMap, from_spec as nonlinearity_from_spec,
                           linear, lipschitz, monotone_root, power_absorption,
                           solve_increment_scalar, zero)
from .resolvent import (ResolventProblem, SolveReport, accretivity_witness,
                        as_window_values, compare_solutions,
                        contraction_constant, exhaust_resolvent,
                        omega_contractivity_check, solve_resolvent,
                        solve_stationary)
from .evolution import (EpsilonDiscretization, Trajectory, contraction_check,
                        decay_check, discretization_for_eps,
                        implicit_euler_march, make_uniform_discretization,
                        mild_solve, semigroup_linear_oracle)
from .barriers import (Barrier, barrier_value, discrete_barrier,
                       extinction_time, parabolic_compare, positivity_check,
                       verify_barrier, verify_signed_barrier)

__version__ = "0.1.0"
