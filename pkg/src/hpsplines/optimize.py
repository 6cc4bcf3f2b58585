"""Shooting over the initial momenta with projected gradient descent.

The initial mu0 is confined to the annihilator of the isotropy algebra of
Q0 (optimal momenta always live there), mu1 ranges over the whole dual.
Steps are accepted by Armijo backtracking from a Barzilai-Borwein trial
step. Close to the optimum, where cost differences sink below rounding
error, a step is also accepted if the cost stays within a rounding-level
band and the gradient-based sufficient-decrease test of Hager and Zhang
passes.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .adjoint import cost_and_gradient
from .errors import ConfigError, HPSplinesError
from .integrator import DiscretePath, terminal_residuals
from .problem import ProblemSpec

log = logging.getLogger(__name__)

# relative size of cost changes treated as rounding noise
_COST_NOISE = 1e-10
# sufficient-decrease parameter of the gradient-based test
_APPROX_DELTA = 0.1


@dataclass
class OptimizerConfig:
    max_iters: int = 5000
    grad_tol: float = 1e-8
    step_init: float = 1.0
    backtrack_factor: float = 0.5
    armijo_c: float = 1e-4
    homotopy_schedule: tuple | None = None
    homotopy_stages: int = 5
    homotopy_start_factor: float = 10.0
    gradient: str = "auto"
    fd_eps: float = 1e-5
    min_step: float = 1e-16
    barzilai_borwein: bool = True
    max_step_ratio: float = 0.25

    def __post_init__(self):
        if self.max_iters < 0:
            raise ConfigError("max_iters must be non-negative")
        if not self.grad_tol > 0:
            raise ConfigError("grad_tol must be positive")
        if not self.step_init > 0:
            raise ConfigError("step_init must be positive")
        if not 0 < self.backtrack_factor < 1:
            raise ConfigError("backtrack_factor must lie in (0, 1)")
        if not 0 < self.armijo_c < 1:
            raise ConfigError("armijo_c must lie in (0, 1)")
        if self.gradient not in ("auto", "adjoint", "fd"):
            raise ConfigError("gradient must be auto, adjoint or fd")
        if not self.max_step_ratio > 0:
            raise ConfigError("max_step_ratio must be positive")
        if self.homotopy_stages < 1:
            raise ConfigError("homotopy_stages must be at least 1")
        if self.homotopy_schedule is not None:
            self.homotopy_schedule = tuple(float(s) for s in self.homotopy_schedule)

    def schedule_for(self, sigma: float):
        """The sigma sequence for a problem whose final tolerance is ``sigma``."""
        if self.homotopy_schedule is None:
            if self.homotopy_stages == 1:
                return (float(sigma),)
            seq = np.geomspace(self.homotopy_start_factor * sigma, sigma, self.homotopy_stages)
            return tuple(float(s) for s in seq[:-1]) + (float(sigma),)
        sched = self.homotopy_schedule
        if not sched:
            raise ConfigError("homotopy schedule is empty")
        if any(b >= a for a, b in zip(sched, sched[1:])):
            raise ConfigError("homotopy schedule must be strictly decreasing")
        if any(s <= 0 for s in sched):
            raise ConfigError("homotopy schedule entries must be positive")
        if not np.isclose(sched[-1], sigma, rtol=1e-12, atol=0.0):
            raise ConfigError(f"homotopy schedule must end at sigma = {sigma}, got {sched[-1]}")
        return sched[:-1] + (float(sigma),)


@dataclass
class OptimResult:
    mu0_0: np.ndarray
    mu1_0: np.ndarray
    cost: float
    grad_norm: float
    terminal_residuals: tuple
    iterations: int
    converged: bool
    path: DiscretePath | None
    history: list = field(default_factory=list)
    stages: list = field(default_factory=list)
    message: str = ""
    step_kinds: list = field(default_factory=list)


def isotropy_annihilator_basis(problem: ProblemSpec):
    """Rows form an orthonormal basis of the allowed initial mu0 directions."""
    return problem.canonical().action.annihilator_basis()


def project(basis, mu0):
    return basis.T @ (basis @ mu0)


def descend(problem: ProblemSpec, config: OptimizerConfig | None = None,
            init_mu0=None, init_mu1=None) -> OptimResult:
    config = config or OptimizerConfig()
    d = problem.dim
    B = isotropy_annihilator_basis(problem)
    r = B.shape[0]
    mu0 = np.zeros(d) if init_mu0 is None else np.asarray(init_mu0, float)
    mu1 = np.zeros(d) if init_mu1 is None else np.asarray(init_mu1, float)
    x = np.concatenate([B @ mu0, mu1])

    def unpack(v):
        return B.T @ v[:r], v[r:]

    def evaluate(v):
        m0, m1 = unpack(v)
        c, g0, g1, path = cost_and_gradient(problem, m0, m1, config.gradient, config.fd_eps)
        return c, np.concatenate([B @ g0, g1]), path

    f, g, path = evaluate(x)
    history = [f]
    kinds = []
    t_prev = config.step_init
    s_prev = y_prev = None
    converged = bool(np.linalg.norm(g) <= config.grad_tol)
    message = "converged" if converged else ""
    it = 0
    while not converged and it < config.max_iters:
        gg = float(g @ g)
        t = t_prev
        if config.barzilai_borwein and s_prev is not None:
            sy = float(s_prev @ y_prev)
            if sy > 0:
                t = sy / float(y_prev @ y_prev) if it % 2 else float(s_prev @ s_prev) / sy
            t = float(np.clip(t, 1e-12, 1e12))
        # keep each trial move within a fraction of the current iterate's size
        t = min(t, config.max_step_ratio * max(1.0, float(np.linalg.norm(x))) / np.sqrt(gg))
        accepted = False
        while t >= config.min_step:
            x_new = x - t * g
            try:
                f_new, g_new, path_new = evaluate(x_new)
            except HPSplinesError:
                t *= config.backtrack_factor
                continue
            if f_new <= f - config.armijo_c * t * gg:
                kind = "armijo"
                accepted = True
            elif (abs(f_new - f) <= _COST_NOISE * max(1.0, abs(f))
                  and float(g_new @ g) >= (2 * _APPROX_DELTA - 1) * gg):
                kind = "approximate"
                accepted = True
            if accepted:
                break
            t *= config.backtrack_factor
        if not accepted:
            message = "line search failed: step underflow"
            break
        s_prev, y_prev = x_new - x, g_new - g
        x, f, g, path = x_new, f_new, g_new, path_new
        t_prev = t
        it += 1
        history.append(f)
        kinds.append(kind)
        if np.linalg.norm(g) <= config.grad_tol:
            converged = True
            message = "converged"
    if not converged and not message:
        message = "iteration limit reached"
    m0, m1 = unpack(x)
    log.debug("descend sigma=%g: %s after %d iterations, cost %.6g", problem.sigma,
              message, it, f)
    return OptimResult(m0, m1, float(f), float(np.linalg.norm(g)),
                      terminal_residuals(problem, path), it, converged, path, history,
                      message=message, step_kinds=kinds)


def homotopy_solve(problem: ProblemSpec, config: OptimizerConfig | None = None,
                   init_mu0=None, init_mu1=None) -> OptimResult:
    """Descend at each sigma of the schedule, warm-starting from the previous optimum."""
    config = config or OptimizerConfig()
    schedule = config.schedule_for(problem.sigma)
    mu0 = np.zeros(problem.dim) if init_mu0 is None else np.asarray(init_mu0, float)
    mu1 = np.zeros(problem.dim) if init_mu1 is None else np.asarray(init_mu1, float)
    stages = []
    result = None
    total_iters = 0
    for sigma in schedule:
        try:
            result = descend(problem.with_sigma(sigma), config, mu0, mu1)
        except HPSplinesError as exc:
            stages.append({"sigma": sigma, "error": str(exc)})
            log.warning("homotopy stage sigma=%g aborted: %s", sigma, exc)
            if result is None:
                return OptimResult(mu0, mu1, float("nan"), float("nan"), (np.nan, np.nan),
                                   total_iters, False, None, stages=stages,
                                   message=f"stage sigma={sigma} failed: {exc}")
            result.converged = False
            result.stages = stages
            result.iterations = total_iters
            result.message = f"stage sigma={sigma} failed: {exc}"
            return result
        total_iters += result.iterations
        stages.append({"sigma": sigma, "cost": result.cost, "grad_norm": result.grad_norm,
                       "iterations": result.iterations, "converged": result.converged})
        mu0, mu1 = result.mu0_0, result.mu1_0
    result.stages = stages
    result.iterations = total_iters
    return result
