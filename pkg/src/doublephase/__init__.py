"""Discrete solver for -alpha Delta_p u - beta Delta_q u = lambda |u|^(q-2) u with zero Dirichlet data."""

from .eigen import EigenPair, SolverOptions, linear_spectrum, principal_eigenpair, rayleigh_quotient
from .energy import (
    EnergyParams,
    apply_r_operator,
    grad_rnorm,
    lr_norm,
    phi,
    phi_grad,
    phi_pairing,
)
from .errors import InfeasibleLambda, NonConvergence, NotProjectable
from .mesh import DiscreteFunction, Mesh, build_mesh, cell_gradients
from .nehari import SolveResult, project, solve, solve_any, solve_coercive, verify_eigenpair
from .spectrum import hausdorff_halfline, scan_lambda, sweep_beta, threshold

__version__ = "0.1.0"
