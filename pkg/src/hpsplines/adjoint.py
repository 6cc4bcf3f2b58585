"""Gradient of the shooting cost with respect to the initial momenta.

For l = 1/2 |xi1|^2 the gradient comes from one backward sweep of the
adjoint system (multipliers P0, P1 in the dual, V0, V1 in the algebra).
Everything else falls back to central finite differences.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConfigError, UnsupportedLagrangian
from .integrator import DiscretePath, cost, discrete_action, integrate
from .problem import ProblemSpec


@dataclass
class AdjointStates:
    """Arrays of shape (N + 1, d); row 0 is unused by the recursion."""

    P0: np.ndarray
    P1: np.ndarray
    V0: np.ndarray
    V1: np.ndarray


def kappa(problem: ProblemSpec, sign: int, xi, mu, V):
    """Covector rho -> d/de <Dtau(sign h (xi + e rho))^T mu, V> at e = 0."""
    grp = problem.canonical().group
    return _kernels.kappa(grp.basis, grp.pinv, sign * problem.h, np.asarray(xi, float),
                          np.asarray(mu, float), np.asarray(V, float))


def node_force_matrices(problem: ProblemSpec, path: DiscretePath):
    """Stack of the force-derivative matrices A_k (zero off nodes)."""
    problem = problem.canonical()
    d = problem.dim
    out = np.zeros((path.N + 1, d, d))
    for n, t in zip(problem.schedule.nodes, problem.schedule.targets):
        out[n] = problem.action.node_force_matrix(path.g[n], t, problem.sigma)
    return out


def supports_adjoint(problem: ProblemSpec) -> bool:
    return problem.lagrangian.kind == "squared_velocity"


def backward_pass(problem: ProblemSpec, path: DiscretePath) -> AdjointStates:
    if not supports_adjoint(problem):
        raise UnsupportedLagrangian(
            f"adjoint sweep needs the squared-velocity Lagrangian; use fd_gradient for "
            f"{problem.lagrangian.kind}")
    problem = problem.canonical()
    grp = problem.group
    N, d = path.N, problem.dim
    P0, P1, V0, V1 = (np.zeros((N + 1, d)) for _ in range(4))
    amats = node_force_matrices(problem, path)
    _kernels.backward(grp.basis, grp.pinv, problem.metric.gamma_inv, float(problem.h),
                      path.xi0, path.mu0, path.mu1, path.forces, amats, P0, P1, V0, V1)
    return AdjointStates(P0, P1, V0, V1)


def gradient(problem: ProblemSpec, path: DiscretePath, adjoints: AdjointStates):
    """(dJ/dmu0_0, dJ/dmu1_0) in the right-reduced momenta of ``path``."""
    problem = problem.canonical()
    h = problem.h
    g0 = -h * problem.group.dtau(h * path.xi0[0], adjoints.V1[1])
    g1 = -h * adjoints.V0[1]
    return g0, g1


def fd_gradient(problem: ProblemSpec, mu0_0, mu1_0, eps: float = 1e-5):
    """Central differences of the cost over the 2d momentum coordinates."""
    if not eps > 0:
        raise ConfigError("finite-difference step must be positive")
    x = np.concatenate([np.asarray(mu0_0, float), np.asarray(mu1_0, float)])
    d = x.size // 2
    grad = np.zeros_like(x)
    for i in range(x.size):
        step = eps * max(1.0, abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += step
        xm[i] -= step
        grad[i] = (cost(problem, xp[:d], xp[d:]) - cost(problem, xm[:d], xm[d:])) / (2 * step)
    return grad[:d], grad[d:]


def cost_and_gradient(problem: ProblemSpec, mu0_0, mu1_0, method: str = "auto",
                      eps: float = 1e-5):
    """Cost, gradient and path, all in the problem's own momentum convention.

    ``method`` is "adjoint", "fd" or "auto" (adjoint when available).
    """
    if method == "auto":
        method = "adjoint" if supports_adjoint(problem) else "fd"
    sgn = 1.0 if problem.is_canonical else -1.0
    canon = problem.canonical()
    m0, m1 = sgn * np.asarray(mu0_0, float), sgn * np.asarray(mu1_0, float)
    path = integrate(canon, m0, m1)
    value = discrete_action(canon, path)
    if method == "adjoint":
        g0, g1 = gradient(canon, path, backward_pass(canon, path))
    elif method == "fd":
        g0, g1 = fd_gradient(canon, m0, m1, eps)
    else:
        raise ConfigError(f"unknown gradient method {method!r}")
    return value, sgn * g0, sgn * g1, path
