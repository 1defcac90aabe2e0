"""Quasi-Newton minimisation with batched line searches."""
from .core import (BatchConfig, ConfigurationError, ContractError, CountingObjective,
                   EvalCounters, NumericalError, Problem)
from .fd import FdScheme, directional_derivative, fd_points, set_coeffs
from .linesearch import Condition, Style, candidate_steps, check_condition
from .polyfit import Polynomial, SingularFitError, poly_real_roots, polyfit_fit, select_alpha_min
from .problems import make_curve_problem, make_expectation_problem, make_rosenbrock
from .solver import Mode, RunMetrics, SolverParams, Status, bfgs_update, minimize, search_direction

__version__ = "0.1.0"
