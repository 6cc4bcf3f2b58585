import os
import subprocess
import sys

import numpy as np
import pytest

from hpsplines import _kernels
from hpsplines.integrator import _kernel_args

from .conftest import make_problem, random_metric

compiled = pytest.mark.skipif(_kernels.compiled is None, reason="compiled kernels not built")


def run_forward(mod, p, mu0, mu1, force):
    N, d, m = p.N, p.dim, p.group.size
    g = np.zeros((N + 1, m, m))
    g[0] = np.eye(m)
    xi0, mu0a, mu1a = np.zeros((N + 1, d)), np.zeros((N + 1, d)), np.zeros((N + 1, d))
    xi0[0], mu0a[0], mu1a[0] = p.xi0_initial, mu0, mu1
    xi1 = np.zeros((N, d))
    status = mod.forward(*_kernel_args(p), g, xi0, mu0a, mu1a, xi1, force, 0, N)
    return status, np.concatenate([g.ravel(), xi0.ravel(), mu0a.ravel(), mu1a.ravel(),
                                   xi1.ravel()])


@compiled
@pytest.mark.parametrize("name", ["so3", "se3", "abelian:3"])
@pytest.mark.parametrize("cubic", [False, True])
def test_forward_parity(name, cubic, rng):
    d = {"so3": 3, "se3": 6, "abelian:3": 3}[name]
    lag = (-1.0, rng.standard_normal(d)) if cubic else "squared"
    p = make_problem(name, rng=rng, metric=random_metric(d, rng), lagrangian=lag)
    mu0, mu1, force = 0.3 * rng.standard_normal((3, d))
    sp, a = run_forward(_kernels.py, p, mu0, mu1, force)
    sc, b = run_forward(_kernels.compiled, p, mu0, mu1, force)
    assert sp == sc == -1
    assert np.abs(a - b).max() <= 1e-12 * (1 + np.abs(a).max())


@compiled
def test_forward_parity_on_step_failure(rng):
    # h |xi0| = 1.25 leaves the Cayley radius at the first step
    p = make_problem("so3", rng=rng, xi0=[50.0, 0, 0], h=0.025)
    z = np.zeros(3)
    assert run_forward(_kernels.py, p, z, z, z)[0] == 0
    assert run_forward(_kernels.compiled, p, z, z, z)[0] == 0


@compiled
@pytest.mark.parametrize("name", ["so3", "se3", "sun:2"])
def test_small_kernel_parity(name, rng):
    p = make_problem(name, rng=rng)
    E, P = p.group.basis, p.group.pinv
    for _ in range(20):
        xi, mu, V = rng.standard_normal((3, p.dim))
        assert np.allclose(_kernels.py.kappa(E, P, 0.1, xi, mu, V),
                           _kernels.compiled.kappa(E, P, 0.1, xi, mu, V), rtol=1e-12, atol=1e-14)
        assert np.allclose(_kernels.py.dtau_matrix(E, P, xi),
                           _kernels.compiled.dtau_matrix(E, P, xi), rtol=1e-12, atol=1e-14)
        if not p.group.n_complex:
            assert np.allclose(_kernels.py.cayley(E, xi, 0), _kernels.compiled.cayley(E, xi, 0),
                               rtol=1e-12, atol=1e-14)


def test_backend_selection():
    assert _kernels.BACKEND in ("cython", "python")
    assert _kernels._pick(2) is _kernels.py


def test_pure_python_fallback():
    code = ("import numpy as np, hpsplines\n"
            "from hpsplines import config, integrator\n"
            "cfg = config.load(%r)\n"
            "print(hpsplines.BACKEND)\n"
            "print(repr(integrator.cost(cfg.problem, np.full(3, 0.1), np.full(3, -0.2))))\n")
    cfg = os.path.join(os.path.dirname(__file__), "..", "configs", "free_cubic.json")
    outs = {}
    for flag in ("1", "0"):
        env = dict(os.environ, HPSPLINES_PURE_PYTHON=flag)
        proc = subprocess.run([sys.executable, "-c", code % cfg], env=env,
                              capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        outs[flag] = proc.stdout.split()
    assert outs["1"][0] == "python"
    assert outs["0"][0] == ("cython" if _kernels.compiled is not None else "python")
    assert np.isclose(float(outs["1"][1]), float(outs["0"][1]), rtol=1e-12)
