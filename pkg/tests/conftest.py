from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from hpsplines import groups
from hpsplines.lagrangians import CubicReduced, SquaredVelocity
from hpsplines.manifolds import CPn, Euclidean, Sphere2, Sphere2xR3, TargetSchedule
from hpsplines.problem import ProblemSpec

settings.register_profile("hpsplines", max_examples=40, deadline=None)
settings.load_profile("hpsplines")

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

GROUP_NAMES = ["so3", "se3", "sun:2", "sun:3", "abelian:3"]

Q0 = {
    "so3": np.array([0.0, 0.0, 1.0]),
    "se3": np.array([0.0, 0.0, 1.0, 0.0, 0.0, 0.0]),
    "sun:2": np.array([1.0, 0.0, 0.0, 0.0]),
    "abelian:3": np.zeros(3),
    "abelian:1": np.zeros(1),
}


def manifold_for(name):
    if name == "so3":
        return Sphere2()
    if name == "se3":
        return Sphere2xR3()
    if name.startswith("sun"):
        return CPn(int(name.split(":")[1]) - 1)
    return Euclidean(int(name.split(":")[1]))


def random_point(manifold, rng):
    q = rng.standard_normal(manifold.ambient_dim)
    return manifold.normalize(q)


def random_metric(dim, rng):
    A = rng.standard_normal((dim, dim))
    return groups.MetricOperator(A @ A.T + dim * np.eye(dim))


def make_problem(name="so3", N=40, nodes=(20, 40), sigma=0.3, h=0.025, rng=None,
                 metric=None, lagrangian="squared", action_side="left",
                 reduction_side="right", targets=None, xi0=None):
    rng = np.random.default_rng(0) if rng is None else rng
    grp = groups.from_name(name)
    man = manifold_for(name)
    metric = metric or groups.MetricOperator.identity(grp.dim)
    if lagrangian == "squared":
        lag = SquaredVelocity(grp, metric)
    else:
        lag = CubicReduced(grp, metric, lagrangian[0], lagrangian[1])
    q0 = Q0.get(name)
    if q0 is None:
        q0 = random_point(man, rng)
    if targets is None:
        targets = tuple(random_point(man, rng) for _ in nodes)
    xi0 = 0.3 * rng.standard_normal(grp.dim) if xi0 is None else np.asarray(xi0, float)
    return ProblemSpec(grp, metric, lag, man, TargetSchedule(q0, tuple(nodes), tuple(targets)),
                       sigma, h, N, xi0, action_side, reduction_side)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(test_acceptance.RESULTS[key])
