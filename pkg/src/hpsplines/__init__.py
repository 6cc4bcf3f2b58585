"""Inexact trajectory planning on matrix Lie groups.

Second-order splines are computed by shooting over initial momenta of a
discrete Hamilton-Pontryagin integrator built on the Cayley map, with
gradients from a backward adjoint sweep.
"""
from ._kernels import BACKEND
from .adjoint import backward_pass, cost_and_gradient, fd_gradient, gradient
from .config import RunConfig, load, loads, dumps
from .continuous import ContinuousState, convergence_study, integrate_rk4, ode_rhs
from .errors import (ConfigError, DescriptorMismatch, HPSplinesError, ImplicitSolveError,
                     SingularityError, StepSizeError, UnsupportedLagrangian)
from .groups import MatrixGroup, MetricOperator, from_name as group, se3, so3, su, abelian
from .integrator import DiscretePath, State, discrete_action, integrate, momentum_report, step
from .lagrangians import CubicReduced, SquaredVelocity
from .manifolds import CPn, Euclidean, GroupAction, Sphere2, Sphere2xR3, TargetSchedule
from .optimize import OptimizerConfig, OptimResult, descend, homotopy_solve
from .problem import ProblemSpec

__version__ = "0.1.0"
