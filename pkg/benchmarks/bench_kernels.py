"""Time the compiled and pure-Python kernels on the same inputs.

    python benchmarks/bench_kernels.py [--steps 2000] [--repeat 5]

Each row reports the best wall time over the repeats for one forward sweep,
one backward adjoint sweep and a batch of kappa evaluations, plus the
speedup of the compiled backend. Results from both backends are compared
so a mismatch shows up in the relative max_diff column.
"""
import argparse
import time

import numpy as np

from hpsplines import _kernels, groups
from hpsplines.integrator import _kernel_args
from hpsplines.lagrangians import CubicReduced, SquaredVelocity
from hpsplines.manifolds import Sphere2, Sphere2xR3, TargetSchedule
from hpsplines.problem import ProblemSpec


def make_problem(name, steps, rng):
    if name == "so3":
        grp, man = groups.so3(), Sphere2()
        q0 = np.array([0.0, 0.0, 1.0])
        metric = groups.MetricOperator(np.diag([1.0, 2.0, 3.0]))
        lag = SquaredVelocity(grp, metric)
    else:
        grp, man = groups.se3(), Sphere2xR3()
        q0 = np.array([0.0, 0.0, 1.0, 0.0, 0.0, 0.0])
        metric = groups.MetricOperator(np.diag([1.0, 1.0, 0.5, 4.0, 4.0, 2.0]))
        lag = CubicReduced(grp, metric, 1.0, rng.standard_normal(6))
    sched = TargetSchedule(q0, (steps,), (q0,))
    return ProblemSpec(grp, metric, lag, man, sched, 0.1, 1.0 / steps, steps,
                       0.3 * rng.standard_normal(grp.dim))


def forward(mod, problem, mu0, mu1):
    grp, N, d, m = problem.group, problem.N, problem.dim, problem.group.size
    g = np.zeros((N + 1, m, m))
    g[0] = np.eye(m)
    xi0 = np.zeros((N + 1, d))
    xi0[0] = problem.xi0_initial
    mu0a, mu1a = np.zeros((N + 1, d)), np.zeros((N + 1, d))
    mu0a[0], mu1a[0] = mu0, mu1
    xi1 = np.zeros((N, d))
    mod.forward(*_kernel_args(problem), g, xi0, mu0a, mu1a, xi1, np.zeros(d), 0, N)
    return g, xi0, mu0a, mu1a


def backward(mod, problem, arrays, rng):
    grp, N, d = problem.group, problem.N, problem.dim
    g, xi0, mu0, mu1 = arrays
    deltas = 0.1 * rng.standard_normal((N + 1, d))
    amats = 0.1 * rng.standard_normal((N + 1, d, d))
    out = [np.zeros((N + 1, d)) for _ in range(4)]
    mod.backward(grp.basis, grp.pinv, problem.metric.gamma_inv, problem.h, xi0, mu0, mu1,
                 deltas, amats, *out)
    return out


def kappa_batch(mod, problem, rng, count=500):
    grp, d = problem.group, problem.dim
    xs = 0.3 * rng.standard_normal((count, 3, d))
    return np.array([mod.kappa(grp.basis, grp.pinv, problem.h, x[0], x[1], x[2]) for x in xs])


def best_time(fn, repeat):
    best, result = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def run(steps, repeat):
    if _kernels.compiled is None:
        print("compiled kernels are not built; only the python backend is available")
    rows = []
    for name in ("so3", "se3"):
        problem = make_problem(name, steps, np.random.default_rng(0))
        mu0 = 0.2 * np.random.default_rng(1).standard_normal(problem.dim)
        mu1 = 0.2 * np.random.default_rng(2).standard_normal(problem.dim)
        if problem.lagrangian.kind != "squared_velocity":
            kinds = ("forward", "kappa")
        else:
            kinds = ("forward", "backward", "kappa")
        for kind in kinds:
            timings, results = {}, {}
            for label, mod in (("python", _kernels.py), ("cython", _kernels.compiled)):
                if mod is None:
                    continue
                if kind == "forward":
                    fn = lambda mod=mod: forward(mod, problem, mu0, mu1)
                elif kind == "backward":
                    arrays = forward(_kernels.py, problem, mu0, mu1)
                    fn = lambda mod=mod, a=arrays: backward(mod, problem, a,
                                                            np.random.default_rng(3))
                else:
                    fn = lambda mod=mod: kappa_batch(mod, problem, np.random.default_rng(4))
                timings[label], results[label] = best_time(fn, repeat)
            diff = np.nan
            if len(results) == 2:
                pr, cr = results["python"], results["cython"]
                if isinstance(pr, np.ndarray):
                    pr, cr = [pr], [cr]
                diff = max(float(np.abs(a - b).max() / max(1.0, np.abs(a).max()))
                           for a, b in zip(pr, cr))
            rows.append((name, kind, timings.get("python"), timings.get("cython"), diff))
    print(f"{'group':<6}{'kernel':<10}{'python s':>12}{'cython s':>12}{'speedup':>10}"
          f"{'rel_diff':>12}")
    for name, kind, tp, tc, diff in rows:
        speed = tp / tc if tc else float("nan")
        tc_s = f"{tc:12.5f}" if tc is not None else f"{'n/a':>12}"
        print(f"{name:<6}{kind:<10}{tp:12.5f}{tc_s}{speed:10.1f}{diff:12.2e}")
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    run(args.steps, args.repeat)


if __name__ == "__main__":
    main()
