import numpy as np
import pytest

from hpsplines import _kernels, groups
from hpsplines import adjoint as A
from hpsplines import integrator as I
from hpsplines.errors import ConfigError, UnsupportedLagrangian

from .conftest import make_problem, random_metric
from .oracles import abelian_quadratic
from .test_integrator import line_problem


def rel_l2(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)


# kappa

def test_kappa_frozen_so3():
    # exact rational value from a symbolic derivation of <Dtau(h(xi + e rho))^T mu, V>
    p = make_problem("so3", h=0.1)
    k = A.kappa(p, 1, [0.5, -0.25, 1.0], [0.3, -0.7, 0.4], [-0.5, 0.2, 0.9])
    expect = np.array([-7316592, -4817424, -3024016]) / 206146205
    assert np.allclose(k, expect, atol=1e-15)


@pytest.mark.parametrize("name", ["so3", "se3", "sun:2", "sun:3"])
@pytest.mark.parametrize("sign", [1, -1])
def test_kappa_against_differences(name, sign, rng):
    p = make_problem(name, h=0.1, rng=rng)
    grp = p.group
    for _ in range(100):
        xi, mu, V, rho = rng.standard_normal((4, grp.dim))
        eps = 1e-6

        def f(e):
            return grp.dtau_star(sign * p.h * (xi + e * rho), mu) @ V

        fd = (f(eps) - f(-eps)) / (2 * eps)
        assert abs(A.kappa(p, sign, xi, mu, V) @ rho - fd) <= 1e-7 * (1 + abs(fd))


def test_kappa_zero_cases(rng):
    p = make_problem("se3", rng=rng)
    xi, mu, V = rng.standard_normal((3, 6))
    assert np.array_equal(A.kappa(p, 1, xi, np.zeros(6), V), np.zeros(6))
    assert np.array_equal(A.kappa(p, 1, xi, mu, np.zeros(6)), np.zeros(6))


def test_kappa_vanishes_on_abelian(rng):
    p = make_problem("abelian:3", rng=rng)
    for _ in range(10):
        assert np.allclose(A.kappa(p, 1, *rng.standard_normal((3, 3))), 0, atol=1e-15)


# gradient

@pytest.mark.parametrize("name,count", [("so3", 25), ("se3", 10), ("sun:2", 10)])
def test_adjoint_matches_differences(name, count, rng):
    d = groups.from_name(name).dim
    for i in range(count):
        nodes = tuple(sorted(rng.choice(np.arange(5, 40), size=rng.integers(1, 4),
                                        replace=False))) + (40,)
        p = make_problem(name, rng=rng, nodes=nodes, metric=random_metric(d, rng),
                         action_side=("left", "right")[i % 2])
        mu0, mu1 = 0.5 * rng.standard_normal((2, d))
        _, g0, g1, _ = A.cost_and_gradient(p, mu0, mu1, "adjoint")
        f0, f1 = A.fd_gradient(p, mu0, mu1, 1e-6)
        assert rel_l2(np.concatenate([g0, g1]), np.concatenate([f0, f1])) <= 1e-5


def test_adjoint_left_reduction_convention(rng):
    p = make_problem("so3", rng=rng, reduction_side="left")
    mu0, mu1 = 0.4 * rng.standard_normal((2, 3))
    c, g0, g1, _ = A.cost_and_gradient(p, mu0, mu1, "adjoint")
    # differentiate the cost as a function of the problem's own momenta
    c_fd, f0, f1, _ = A.cost_and_gradient(p, mu0, mu1, "fd", eps=1e-6)
    assert c == c_fd
    assert rel_l2(np.concatenate([g0, g1]), np.concatenate([f0, f1])) <= 1e-6
    assert np.isclose(I.cost(p.canonical(), -mu0, -mu1), c, rtol=0)


def test_abelian_gradient_is_the_oracle_gradient(rng):
    p = line_problem()
    H, b, _, _ = abelian_quadratic(0.1, 10, 0.3, 0.1, (3, 7, 10), (0.4, -0.2, 0.9), 0.5)
    for _ in range(10):
        m = rng.standard_normal(2)
        _, g0, g1, _ = A.cost_and_gradient(p, m[:1], m[1:], "adjoint")
        assert np.allclose(np.concatenate([g0, g1]), H @ m + b, atol=1e-11)


def test_backends_agree(rng):
    if _kernels.compiled is None:
        pytest.skip("compiled kernels not built")
    p = make_problem("so3", rng=rng, metric=random_metric(3, rng), nodes=(9, 30, 40))
    path = I.integrate(p, *(0.4 * rng.standard_normal((2, 3))))
    amats = A.node_force_matrices(p, path)
    outs = []
    for mod in (_kernels.py, _kernels.compiled):
        arrs = [np.zeros((p.N + 1, 3)) for _ in range(4)]
        mod.backward(p.group.basis, p.group.pinv, p.metric.gamma_inv, p.h, path.xi0,
                     path.mu0, path.mu1, path.forces, amats, *arrs)
        outs.append(np.array(arrs))
    assert np.abs(outs[0] - outs[1]).max() <= 1e-12 * (1 + np.abs(outs[0]).max())


def test_unsupported_lagrangian(rng):
    p = make_problem("se3", rng=rng, lagrangian=(1.0, rng.standard_normal(6)))
    assert not A.supports_adjoint(p)
    path = I.integrate(p, np.zeros(6), np.zeros(6))
    with pytest.raises(UnsupportedLagrangian):
        A.backward_pass(p, path)
    # auto falls back to differences
    _, g0, g1, _ = A.cost_and_gradient(p, np.zeros(6), np.zeros(6))
    f0, f1 = A.fd_gradient(p, np.zeros(6), np.zeros(6))
    assert np.array_equal(g0, f0) and np.array_equal(g1, f1)


def test_gradient_method_errors(rng):
    p = make_problem("so3", rng=rng)
    with pytest.raises(ConfigError):
        A.cost_and_gradient(p, np.zeros(3), np.zeros(3), "newton")
    with pytest.raises(ConfigError):
        A.fd_gradient(p, np.zeros(3), np.zeros(3), eps=0.0)


def test_fd_gradient_exact_on_the_quadratic(rng):
    # central differences are exact on quadratics up to rounding
    p = line_problem()
    H, b, _, _ = abelian_quadratic(0.1, 10, 0.3, 0.1, (3, 7, 10), (0.4, -0.2, 0.9), 0.5)
    m = rng.standard_normal(2)
    f0, f1 = A.fd_gradient(p, m[:1], m[1:], eps=1e-3)
    assert np.allclose(np.concatenate([f0, f1]), H @ m + b, atol=1e-8)


def test_fd_error_shrinks_quadratically(rng):
    p = make_problem("so3", rng=rng, sigma=0.5)
    mu0, mu1 = 0.5 * rng.standard_normal((2, 3))
    _, g0, g1, _ = A.cost_and_gradient(p, mu0, mu1, "adjoint")
    exact = np.concatenate([g0, g1])
    errs = [np.linalg.norm(np.concatenate(A.fd_gradient(p, mu0, mu1, eps)) - exact)
            for eps in (4e-2, 2e-2)]
    assert 3.0 <= errs[0] / errs[1] <= 5.0
