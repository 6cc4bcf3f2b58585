"""Forward discrete Hamilton-Pontryagin flow with the Cayley retraction.

One step from index k (right-reduced velocities, g_{k+1} = cay(h xi0_k) g_k):

    a        = mu0_k + force_k(g_k)
    muc      = Dtau(h xi0_k)^T a
    mu0_{k+1} = Dtau(-h xi0_k)^-T muc
    mu1_{k+1} = mu1_k - h muc + h dl/dxi0(xi0_k, xi1_k),  mu1_{k+1} = dl/dxi1(xi0_k, xi1_k)
    xi0_{k+1} = xi0_k + h xi1_k

The force vanishes away from node indices. For the shipped Lagrangians the
coupled (xi1_k, mu1_{k+1}) pair is one linear solve.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import StepSizeError
from .problem import ProblemSpec


@dataclass
class State:
    g: np.ndarray
    xi0: np.ndarray
    mu0: np.ndarray
    mu1: np.ndarray
    k: int = 0


@dataclass
class DiscretePath:
    """Arrays of a discrete trajectory in right-reduced form.

    ``forces[k]`` is the node force applied at index k (zero elsewhere).
    ``xi1`` has N rows; every other array has N + 1.
    """

    h: float
    g: np.ndarray
    xi0: np.ndarray
    xi1: np.ndarray
    mu0: np.ndarray
    mu1: np.ndarray
    forces: np.ndarray
    nodes: tuple

    @property
    def N(self):
        return self.xi1.shape[0]

    def state(self, k: int) -> State:
        return State(self.g[k].copy(), self.xi0[k].copy(), self.mu0[k].copy(),
                     self.mu1[k].copy(), k)


def _kernel_args(problem: ProblemSpec):
    grp, lag = problem.group, problem.lagrangian
    return (grp.basis, grp.pinv, grp.structure_constants, problem.metric.gamma,
            problem.metric.gamma_inv, float(lag.sign), np.ascontiguousarray(lag.z, dtype=float),
            float(problem.h), float(problem.radius), grp.n_complex)


def seed_from_initial(problem: ProblemSpec, mu0_0, mu1_0) -> State:
    problem = problem.canonical()
    d = problem.dim
    mu0_0 = np.asarray(mu0_0, dtype=float).reshape(d)
    mu1_0 = np.asarray(mu1_0, dtype=float).reshape(d)
    return State(problem.group.identity(), problem.xi0_initial.copy(), mu0_0.copy(),
                 mu1_0.copy(), 0)


def seed_momentum(problem: ProblemSpec, state: State):
    """The transported momentum Dtau(h xi0_0)^T mu0_0 entering the first step."""
    return problem.group.dtau_star(problem.h * state.xi0, state.mu0)


def step(problem: ProblemSpec, state: State, force=None):
    """Advance one step; ``force`` defaults to the node force at ``state.k``."""
    problem = problem.canonical()
    d, m = problem.dim, problem.group.size
    if force is None:
        target = problem.schedule.target_at(state.k)
        force = (np.zeros(d) if target is None
                 else problem.action.node_force(state.g, target, problem.sigma))
    g = np.zeros((2, m, m))
    g[0] = state.g
    xi0 = np.zeros((2, d))
    xi0[0] = state.xi0
    mu0 = np.zeros((2, d))
    mu0[0] = state.mu0
    mu1 = np.zeros((2, d))
    mu1[0] = state.mu1
    xi1 = np.zeros((1, d))
    status = _kernels.forward(*_kernel_args(problem), g, xi0, mu0, mu1, xi1,
                              np.asarray(force, dtype=float), 0, 1)
    if status >= 0:
        raise StepSizeError(f"|h xi0| exceeds the Cayley radius at step {state.k}",
                            index=state.k)
    return State(g[1], xi0[1], mu0[1], mu1[1], state.k + 1), xi1[0]


def integrate(problem: ProblemSpec, mu0_0, mu1_0) -> DiscretePath:
    """Run N steps from the seeded state, applying node forces at node indices."""
    problem = problem.canonical()
    grp, N, d, m = problem.group, problem.N, problem.dim, problem.group.size
    s0 = seed_from_initial(problem, mu0_0, mu1_0)
    g = np.zeros((N + 1, m, m))
    xi0 = np.zeros((N + 1, d))
    mu0 = np.zeros((N + 1, d))
    mu1 = np.zeros((N + 1, d))
    xi1 = np.zeros((N, d))
    forces = np.zeros((N + 1, d))
    g[0], xi0[0], mu0[0], mu1[0] = s0.g, s0.xi0, s0.mu0, s0.mu1
    args = _kernel_args(problem)
    action, sigma = problem.action, problem.sigma
    start = 0
    for node, target in zip(problem.schedule.nodes, problem.schedule.targets):
        status = _kernels.forward(*args, g, xi0, mu0, mu1, xi1, forces[start], start,
                                  node - start)
        if status >= 0:
            raise StepSizeError(f"|h xi0| exceeds the Cayley radius at step {status}",
                                index=status)
        forces[node] = action.node_force(g[node], target, sigma)
        start = node
    return DiscretePath(problem.h, g, xi0, xi1, mu0, mu1, forces, problem.nodes)


def integrate_free(problem: ProblemSpec, mu0_0, mu1_0, h: float, nsteps: int) -> DiscretePath:
    """Node-free flow of ``nsteps`` steps of size ``h``; targets are ignored."""
    problem = problem.canonical()
    d, m = problem.dim, problem.group.size
    s0 = seed_from_initial(problem, mu0_0, mu1_0)
    g = np.zeros((nsteps + 1, m, m))
    xi0 = np.zeros((nsteps + 1, d))
    mu0 = np.zeros((nsteps + 1, d))
    mu1 = np.zeros((nsteps + 1, d))
    xi1 = np.zeros((nsteps, d))
    g[0], xi0[0], mu0[0], mu1[0] = s0.g, s0.xi0, s0.mu0, s0.mu1
    args = list(_kernel_args(problem))
    args[7] = float(h)
    status = _kernels.forward(*args, g, xi0, mu0, mu1, xi1, np.zeros(d), 0, nsteps)
    if status >= 0:
        raise StepSizeError(f"|h xi0| exceeds the Cayley radius at step {status}", index=status)
    return DiscretePath(float(h), g, xi0, xi1, mu0, mu1, np.zeros((nsteps + 1, d)), ())


def lagrangian_sum(problem: ProblemSpec, path: DiscretePath) -> float:
    lag = problem.canonical().lagrangian
    return problem.h * sum(lag.value(path.xi0[k], path.xi1[k]) for k in range(path.N))


def penalty_terms(problem: ProblemSpec, path: DiscretePath):
    problem = problem.canonical()
    action = problem.action
    return [action.penalty(path.g[n], t, problem.sigma)
            for n, t in zip(problem.schedule.nodes, problem.schedule.targets)]


def discrete_action(problem: ProblemSpec, path: DiscretePath) -> float:
    """h * sum_k l(xi0_k, xi1_k) + sum_i d_i^2 / (2 sigma^2)."""
    return lagrangian_sum(problem, path) + float(sum(penalty_terms(problem, path)))


def cost(problem: ProblemSpec, mu0_0, mu1_0) -> float:
    return discrete_action(problem, integrate(problem, mu0_0, mu1_0))


def multiplier_terms(problem: ProblemSpec, path: DiscretePath) -> float:
    """Momentum-weighted constraint residuals; zero on consistent paths."""
    problem = problem.canonical()
    grp, h = problem.group, problem.h
    total = 0.0
    for k in range(path.N):
        rel = path.g[k + 1] @ grp.inverse(path.g[k])
        total += path.mu0[k + 1] @ (grp.cayley_inv(rel) / h - path.xi0[k])
        total += path.mu1[k + 1] @ ((path.xi0[k + 1] - path.xi0[k]) / h - path.xi1[k])
    return h * float(total)


def spatial_momentum(problem: ProblemSpec, state: State):
    return problem.canonical().group.Ad_star(state.g, state.mu0)


def momentum_report(problem: ProblemSpec, path: DiscretePath):
    """Per-index spatial momentum and conservation residuals.

    ``residual[k]`` is J_{k+1} - J_k - Ad*_{g_k} force_k, which vanishes at
    interior indices (no force) and at nodes (jump identity). The last row
    has no successor and reports zero.
    """
    grp = problem.canonical().group
    N = path.N
    J = np.array([grp.Ad_star(path.g[k], path.mu0[k]) for k in range(N + 1)])
    jump = np.array([grp.Ad_star(path.g[k], path.forces[k]) for k in range(N + 1)])
    residual = np.zeros_like(J)
    residual[:N] = J[1:] - J[:N] - jump[:N]
    node_flag = np.zeros(N + 1, dtype=bool)
    node_flag[list(path.nodes)] = True
    return {
        "k": np.arange(N + 1),
        "J": J,
        "J_norm": np.linalg.norm(J, axis=1),
        "mu0_norm": np.linalg.norm(path.mu0, axis=1),
        "mu1_norm": np.linalg.norm(path.mu1, axis=1),
        "jump": jump,
        "residual": residual,
        "node": node_flag,
    }


def terminal_residuals(problem: ProblemSpec, path: DiscretePath):
    """(|mu0_N + force_N|, |mu1_N|): both vanish at critical points."""
    return (float(np.linalg.norm(path.mu0[-1] + path.forces[-1])),
            float(np.linalg.norm(path.mu1[-1])))


def reconstructed_mu0(problem: ProblemSpec, path: DiscretePath):
    """mu0_k rebuilt from the node forces at or after k, transported by Ad*."""
    grp = problem.canonical().group
    N = path.N
    out = np.zeros_like(path.mu0)
    acc = np.zeros(grp.dim)
    nodes = set(path.nodes)
    for k in range(N, -1, -1):
        if k in nodes:
            acc = acc + grp.Ad_star(path.g[k], path.forces[k])
        out[k] = -grp.Ad_star(grp.inverse(path.g[k]), acc)
    return out


def isotropy_pairings(problem: ProblemSpec, path: DiscretePath):
    """max over k of |<mu0_k, rho>| for rho spanning the isotropy of g_k Q0.

    Only defined for the left action; returns None otherwise, since with
    the inverse action the annihilated directions change from node to node.
    """
    from .manifolds import isotropy_basis

    problem = problem.canonical()
    if problem.action_side != "left":
        return None
    action = problem.action
    worst = 0.0
    for k in range(path.N + 1):
        iso = isotropy_basis(problem.group, problem.manifold, action.orbit_point(path.g[k]))
        if iso.size:
            worst = max(worst, float(np.abs(iso @ path.mu0[k]).max()))
    return worst


def original_arrays(problem: ProblemSpec, path: DiscretePath):
    """Path arrays in the problem's own reduction convention."""
    if problem.reduction_side == "right":
        return {"g": path.g, "xi0": path.xi0, "xi1": path.xi1, "mu0": path.mu0,
                "mu1": path.mu1, "forces": path.forces}
    grp = problem.group
    return {"g": np.array([grp.inverse(x) for x in path.g]), "xi0": -path.xi0,
            "xi1": -path.xi1, "mu0": -path.mu0, "mu1": -path.mu1, "forces": -path.forces}


def _fmt(x):
    return "%.17g" % x


def path_csv_rows(problem: ProblemSpec, path: DiscretePath):
    arr = original_arrays(problem, path)
    report = momentum_report(problem, path)
    d, m = problem.dim, problem.group.size
    header = (["k", "t"] + [f"g{i}{j}" for i in range(m) for j in range(m)]
              + [f"xi0_{i}" for i in range(d)] + [f"xi1_{i}" for i in range(d)]
              + [f"mu0_{i}" for i in range(d)] + [f"mu1_{i}" for i in range(d)]
              + ["J_norm", "node"])
    rows = [header]
    for k in range(path.N + 1):
        xi1 = arr["xi1"][k] if k < path.N else np.full(d, np.nan)
        row = [str(k), _fmt(k * path.h)]
        row += [_fmt(x) for x in arr["g"][k].ravel()]
        row += [_fmt(x) for x in arr["xi0"][k]] + [_fmt(x) for x in xi1]
        row += [_fmt(x) for x in arr["mu0"][k]] + [_fmt(x) for x in arr["mu1"][k]]
        row += [_fmt(report["J_norm"][k]), str(int(report["node"][k]))]
        rows.append(row)
    return rows
