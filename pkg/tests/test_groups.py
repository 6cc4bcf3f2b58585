import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from hpsplines import groups
from hpsplines.errors import ConfigError, DescriptorMismatch, SingularityError

from .conftest import GROUP_NAMES

vec3 = arrays(np.float64, 3, elements=st.floats(-3, 3))


def so3_rot_z(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


# hat / vee

def test_hat_zero():
    assert np.array_equal(groups.hat([0, 0, 0]), np.zeros((3, 3)))


def test_hat_e_z():
    assert np.array_equal(groups.hat([0, 0, 1]), [[0, -1, 0], [1, 0, 0], [0, 0, 0]])


@given(vec3, vec3)
def test_hat_cross_product_and_bracket(u, v):
    H = groups.hat(u)
    assert np.allclose(H @ v, np.cross(u, v), atol=1e-12)
    comm = groups.hat(u) @ groups.hat(v) - groups.hat(v) @ groups.hat(u)
    assert np.allclose(groups.hat(np.cross(u, v)), comm, atol=1e-12)
    assert np.allclose(groups.vee(H), u)


def test_hat_rejects_other_groups():
    with pytest.raises(DescriptorMismatch):
        groups.hat([1, 2, 3], groups.se3())
    with pytest.raises(DescriptorMismatch):
        groups.hat([1, 2])


# descriptors

@pytest.mark.parametrize("name", GROUP_NAMES)
def test_structure_constants(name):
    g = groups.from_name(name)
    c = g.structure_constants
    assert np.allclose(c, -c.transpose(1, 0, 2), atol=0)
    # Jacobi: [[Ei,Ej],Ek] + cyclic = 0
    jac = (np.einsum("ijm,mkn->ijkn", c, c) + np.einsum("jkm,min->ijkn", c, c)
           + np.einsum("kim,mjn->ijkn", c, c))
    assert np.abs(jac).max() <= 1e-12
    for E in g.basis:
        g.check_element(g.cayley(g.vee(E)))


def test_basis_membership():
    for E in groups.so3().basis:
        assert np.allclose(E, -E.T)
    se = groups.se3()
    for E in se.basis:
        assert np.allclose(E[:3, :3], -E[:3, :3].T) and np.allclose(E[3], 0)
    for n in (2, 3):
        for E in groups.su(n).basis:
            Z = groups.complexify(E, n)
            assert np.allclose(Z, -Z.conj().T) and abs(np.trace(Z)) < 1e-14


def test_from_name_errors():
    for bad in ("so4", "sun:x", "foo:3"):
        with pytest.raises(ConfigError):
            groups.from_name(bad)


# ad and coadjoint

def test_ad_examples():
    so, se = groups.so3(), groups.se3()
    assert np.allclose(so.ad([1, 0, 0], [0, 1, 0]), [0, 0, 1])
    assert np.allclose(se.ad([0, 0, 1, 0, 0, 0], [0, 0, 0, 1, 0, 0]), [0, 0, 0, 0, 1, 0])
    xi = np.array([0.3, -1.2, 0.7, 0.1, 0.4, -0.5])
    assert np.allclose(se.ad(xi, xi), 0)


def test_se3_ad_matches_printed_formula(rng):
    se = groups.se3()
    for _ in range(10):
        x1, x2 = rng.standard_normal(6), rng.standard_normal(6)
        O1, v1, O2, v2 = x1[:3], x1[3:], x2[:3], x2[3:]
        expect = np.concatenate([np.cross(O1, O2), np.cross(O1, v2) - np.cross(O2, v1)])
        assert np.allclose(se.ad(x1, x2), expect, atol=1e-13)
        mu = rng.standard_normal(6)
        m, a = mu[:3], mu[3:]
        expect = np.concatenate([-np.cross(O1, m) - np.cross(v1, a), -np.cross(O1, a)])
        assert np.allclose(se.ad_star(x1, mu), expect, atol=1e-13)


def test_ad_star_examples():
    so, se = groups.so3(), groups.se3()
    assert np.allclose(se.ad_star([0, 0, 1, 0, 0, 0], [1, 0, 0, 0, 0, 0]), [0, -1, 0, 0, 0, 0])
    om, mu = np.array([0.2, -0.4, 1.1]), np.array([1.0, 0.5, -0.3])
    assert np.allclose(so.ad_star(om, mu), -np.cross(om, mu))
    assert np.allclose(so.ad_star(np.zeros(3), mu), 0)


@pytest.mark.parametrize("name", GROUP_NAMES)
def test_pairing_identities(name, rng):
    g = groups.from_name(name)
    d = g.dim
    for _ in range(100):
        xi, eta, mu = rng.standard_normal((3, d))
        assert abs(g.ad_star(xi, mu) @ eta - mu @ g.ad(xi, eta)) <= 1e-12
        G = g.random_element(rng)
        assert abs(g.Ad_star(G, mu) @ xi - mu @ g.Ad(G, xi)) <= 1e-12 * (1 + np.abs(mu).max())
        back = g.Ad_star(g.inverse(G), g.Ad_star(G, mu))
        assert np.allclose(back, mu, atol=1e-12)


def test_Ad_identity_and_so3_form(rng):
    so = groups.so3()
    xi = rng.standard_normal(3)
    assert np.allclose(so.Ad(so.identity(), xi), xi)
    R = so.random_element(rng)
    mu = rng.standard_normal(3)
    assert np.allclose(so.Ad(R, xi), R @ xi, atol=1e-13)
    assert np.allclose(so.Ad_star(R, mu), R.T @ mu, atol=1e-13)


# Cayley map

def test_cayley_zero_and_quarter_turn():
    so = groups.so3()
    assert np.array_equal(so.cayley(np.zeros(3)), np.eye(3))
    assert np.allclose(so.cayley([0, 0, 2]), [[0, -1, 0], [1, 0, 0], [0, 0, 1]], atol=1e-15)


def test_cayley_singular_at_half_turn():
    so = groups.so3()
    with pytest.raises(SingularityError):
        so.cayley_inv(so3_rot_z(np.pi))


@pytest.mark.parametrize("name", GROUP_NAMES)
def test_cayley_pair_and_residual(name, rng):
    g = groups.from_name(name)
    for _ in range(100):
        xi = g.random_algebra(rng, scale=0.5)
        G = g.cayley(xi)
        assert np.allclose(g.cayley_inv(G), xi, atol=1e-12)
        assert np.abs(G @ g.cayley(-xi) - g.identity()).max() <= 1e-12
    for _ in range(20):
        xi = rng.standard_normal(g.dim)
        xi *= rng.uniform(0, 10) / np.linalg.norm(xi)
        assert g.residual(g.cayley(xi)) <= 1e-12


def test_dtau_frozen_so3():
    # exact rational derivative of the Cayley map at (1/2, -1/4, 1), computed symbolically
    D = np.array([[64, 32, 8], [-32, 64, 16], [-8, -16, 64]]) / 85
    assert np.allclose(groups.so3().dtau_matrix([0.5, -0.25, 1.0]), D, atol=1e-15)


@pytest.mark.parametrize("name", GROUP_NAMES)
def test_dtau_against_differences(name, rng):
    g = groups.from_name(name)
    assert np.allclose(g.dtau(np.zeros(g.dim), np.arange(g.dim)), np.arange(g.dim))
    for _ in range(10):
        xi, eta = g.random_algebra(rng, 0.6), rng.standard_normal(g.dim)
        eps = 1e-6
        diff = (g.cayley(xi + eps * eta) - g.cayley(xi - eps * eta)) / (2 * eps)
        fd = g.vee(np.linalg.solve(g.cayley(xi), diff))
        assert np.allclose(fd, g.dtau(xi, eta), atol=1e-8)


@pytest.mark.parametrize("name", GROUP_NAMES)
def test_dtau_identities(name, rng):
    g = groups.from_name(name)
    for _ in range(100):
        xi, eta, mu = g.random_algebra(rng, 0.8), *rng.standard_normal((2, g.dim))
        left = g.dtau_inv(xi, eta)
        right = g.dtau_inv(-xi, g.Ad(g.cayley(xi), eta))
        assert np.abs(left - right).max() <= 1e-12 * max(1, np.abs(left).max())
        starred = g.dtau_inv_star(-xi, g.dtau_star(xi, mu))
        assert np.abs(starred - g.Ad_star(g.cayley(-xi), mu)).max() <= 1e-12
        assert abs(g.dtau_star(xi, mu) @ eta - mu @ g.dtau(xi, eta)) <= 1e-12
        assert np.allclose(g.dtau_inv(xi, g.dtau(xi, eta)), eta, atol=1e-12)


# metrics

def test_metric_validation():
    with pytest.raises(ConfigError):
        groups.MetricOperator(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ConfigError):
        groups.MetricOperator(-np.eye(2))


def test_flat_sharp_and_dagger(rng):
    so = groups.so3()
    I = groups.MetricOperator.identity(3)
    om = rng.standard_normal(3)
    assert np.allclose(groups.ad_dagger(so, I, om, om), 0)
    K = groups.MetricOperator(np.diag([1.0, 1.0, 0.5, 4.0, 4.0, 2.0]))
    se = groups.se3()
    z = np.array([0, 0, 2 * np.pi, 0, 0, 1])
    xi = rng.standard_normal(6)
    assert np.allclose(K.sharp(K.flat(xi)), xi)
    expect = np.linalg.solve(K.gamma, se.ad_star(xi, K.gamma @ (xi - z)))
    assert np.allclose(groups.ad_dagger(se, K, xi, xi - z), expect)


def test_trace_metric_su2_is_identity():
    assert np.allclose(groups.trace_metric(groups.su(2)).gamma, np.eye(3))
    with pytest.raises(DescriptorMismatch):
        groups.trace_metric(groups.so3())


def test_descriptor_mismatch():
    so = groups.so3()
    with pytest.raises(DescriptorMismatch):
        so.ad(np.zeros(3), np.zeros(6))


def test_su3_cayley_is_special_unitary(rng):
    g = groups.su(3)
    Z = groups.complexify(g.cayley(g.random_algebra(rng, 2.0)), 3)
    assert np.allclose(Z @ Z.conj().T, np.eye(3), atol=1e-12)
    assert abs(np.linalg.det(Z) - 1) < 1e-12
