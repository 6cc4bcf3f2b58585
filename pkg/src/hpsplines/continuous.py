"""Reference integration of the continuous second-order equations.

Between nodes the right-reduced system is

    g' = xi0^ g,  xi0' = xi1,  mu0' = -ad*_{xi0} mu0,  mu1' = dl/dxi0 - mu0

with xi1 recovered from (xi0, mu1) by the inverse Legendre map. Each
reference step is a fourth-order Runge-Kutta-Munthe-Kaas step in Cayley
coordinates: g(t_n + s) = cay(u(s)) g_n with u' = dtau_inv(-u, xi0), and
the group factor is projected back onto the group afterwards.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, SingularityError
from .integrator import integrate_free
from .problem import ProblemSpec

BLOWUP = 1e12


@dataclass
class ContinuousState:
    g: np.ndarray
    xi0: np.ndarray
    mu0: np.ndarray
    mu1: np.ndarray
    t: float = 0.0


def initial_state(problem: ProblemSpec, mu0_0, mu1_0) -> ContinuousState:
    problem = problem.canonical()
    d = problem.dim
    return ContinuousState(problem.group.identity(), problem.xi0_initial.copy(),
                           np.asarray(mu0_0, float).reshape(d).copy(),
                           np.asarray(mu1_0, float).reshape(d).copy(), 0.0)


def _algebra_rhs(problem, xi0, mu0, mu1):
    lag, grp = problem.lagrangian, problem.group
    xi1 = lag.solve_xi1(xi0, mu1)
    return xi1, -grp.ad_star(xi0, mu0), lag.d_xi0(xi0, xi1) - mu0


def ode_rhs(problem: ProblemSpec, state: ContinuousState):
    """(g', xi0', mu0', mu1') at ``state``; g' is the matrix xi0^ g."""
    problem = problem.canonical()
    dxi, dmu0, dmu1 = _algebra_rhs(problem, state.xi0, state.mu0, state.mu1)
    return problem.group.wedge(state.xi0) @ state.g, dxi, dmu0, dmu1


def _rkmk_step(problem, state: ContinuousState, h: float) -> ContinuousState:
    grp = problem.group
    d = problem.dim

    def f(y):
        u, xi0, mu0, mu1 = y[:d], y[d:2 * d], y[2 * d:3 * d], y[3 * d:]
        dxi, dmu0, dmu1 = _algebra_rhs(problem, xi0, mu0, mu1)
        return np.concatenate([grp.dtau_inv(-u, xi0), dxi, dmu0, dmu1])

    y = np.concatenate([np.zeros(d), state.xi0, state.mu0, state.mu1])
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    g = grp.project(grp.cayley(y[:d]) @ state.g)
    return ContinuousState(g, y[d:2 * d], y[2 * d:3 * d], y[3 * d:], state.t + h)


def _check_finite(state: ContinuousState):
    big = max(np.abs(state.g).max(), np.abs(state.xi0).max(), np.abs(state.mu0).max(),
              np.abs(state.mu1).max())
    if not np.isfinite(big) or big > BLOWUP:
        raise SingularityError(f"reference solution blew up near t = {state.t:.6g}")


def _steps(T, h):
    m = int(round(T / h))
    if m < 0 or abs(m * h - T) > 1e-9 * max(1.0, abs(T)):
        raise ConfigError(f"T = {T} is not a multiple of h = {h}")
    return m


def trajectory_rk4(problem: ProblemSpec, initial: ContinuousState, h_ref: float, T: float,
                   apply_nodes: bool = False):
    """All reference states on the grid t = j h_ref, 0 <= t <= T.

    With ``apply_nodes`` the node impulse is added to mu0 whenever the grid
    reaches a node time N_i h (which must then lie on the reference grid).
    """
    if not h_ref > 0:
        raise ConfigError("reference step must be positive")
    problem = problem.canonical()
    m = _steps(T, h_ref)
    kicks = {}
    if apply_nodes:
        for n, target in zip(problem.schedule.nodes, problem.schedule.targets):
            j = _steps(n * problem.h, h_ref)
            if j <= m:
                kicks[j] = target
    state = initial
    out = [state]
    for j in range(m):
        if j in kicks:
            force = problem.action.node_force(state.g, kicks[j], problem.sigma)
            state = ContinuousState(state.g, state.xi0, state.mu0 + force, state.mu1, state.t)
        state = _rkmk_step(problem, state, h_ref)
        _check_finite(state)
        out.append(state)
    return out


def integrate_rk4(problem: ProblemSpec, initial: ContinuousState, h_ref: float, T: float,
                  apply_nodes: bool = False) -> ContinuousState:
    return trajectory_rk4(problem, initial, h_ref, T, apply_nodes)[-1]


def conserved_drift(problem: ProblemSpec, states) -> float:
    """max_j |Ad*_{g_j} mu0_j - Ad*_{g_0} mu0_0| along a node-free trajectory."""
    grp = problem.canonical().group
    J0 = grp.Ad_star(states[0].g, states[0].mu0)
    return max(float(np.linalg.norm(grp.Ad_star(s.g, s.mu0) - J0)) for s in states)


def euler_poincare_residual(problem: ProblemSpec, states) -> float:
    """max |(d/dt + ad*_xi)(d/dt dl/dxi1 - dl/dxi0)| by central differences.

    Meaningful for trajectories sampled finely enough that the difference
    quotients resolve the motion; the value shrinks like the squared step.
    """
    problem = problem.canonical()
    lag, grp = problem.lagrangian, problem.group
    h = states[1].t - states[0].t
    xi0 = np.array([s.xi0 for s in states])
    xi1 = np.array([lag.solve_xi1(s.xi0, s.mu1) for s in states])
    m1 = np.array([lag.d_xi1(a, b) for a, b in zip(xi0, xi1)])
    m0 = np.array([lag.d_xi0(a, b) for a, b in zip(xi0, xi1)])
    inner = (m1[2:] - m1[:-2]) / (2 * h) - m0[1:-1]
    outer = (inner[2:] - inner[:-2]) / (2 * h)
    res = outer + np.array([grp.ad_star(x, v) for x, v in zip(xi0[2:-2], inner[1:-1])])
    return float(np.abs(res).max())


def endpoint_error(problem: ProblemSpec, discrete_end, reference: ContinuousState) -> float:
    """|g_N - g(T)|_F + |xi0_N - xi0(T)|."""
    g, xi0 = discrete_end
    return float(np.linalg.norm(g - reference.g) + np.linalg.norm(xi0 - reference.xi0))


def convergence_study(problem: ProblemSpec, initial, h_list, T: float | None = None):
    """Endpoint error of the discrete flow against the reference, per step size.

    ``initial`` is a (mu0_0, mu1_0) pair. The interval [0, T] (default N h)
    is integrated without node impulses. Returns ([(h, error), ...], order)
    where order is the least-squares slope of log error against log h.
    """
    hs = sorted({float(h) for h in h_list}, reverse=True)
    if len(hs) < 2:
        raise ConfigError("a convergence study needs at least two step sizes")
    if any(not h > 0 for h in hs):
        raise ConfigError("step sizes must be positive")
    problem = problem.canonical()
    T = float(problem.N * problem.h if T is None else T)
    mu0_0, mu1_0 = initial
    h_ref = min(hs) / 100.0
    ref = integrate_rk4(problem, initial_state(problem, mu0_0, mu1_0), h_ref, T)
    rows = []
    for h in hs:
        path = integrate_free(problem, mu0_0, mu1_0, h, _steps(T, h))
        rows.append((h, endpoint_error(problem, (path.g[-1], path.xi0[-1]), ref)))
    errs = np.array([e for _, e in rows])
    if np.any(errs <= 0):
        order = float("inf")
    else:
        order = float(np.polyfit(np.log([h for h, _ in rows]), np.log(errs), 1)[0])
    return rows, order
