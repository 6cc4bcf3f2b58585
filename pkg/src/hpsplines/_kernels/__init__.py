"""Kernel backend selection.

The compiled module is used when it imports cleanly and the environment
variable ``HPSPLINES_PURE_PYTHON`` is unset or "0". Groups that need the
determinant phase correction always go through numpy.
"""
import os

from . import _pykernels as py

try:
    from . import _ckernels as compiled
except ImportError:  # extension not built
    compiled = None

if compiled is not None and os.environ.get("HPSPLINES_PURE_PYTHON", "0") in ("", "0"):
    BACKEND = "cython"
    _impl = compiled
else:
    BACKEND = "python"
    _impl = py


def _pick(n_complex):
    return py if n_complex else _impl


def cayley(E, xi, n_complex=0):
    return _pick(n_complex).cayley(E, xi, n_complex)


def dtau_matrix(E, P, xi):
    return _impl.dtau_matrix(E, P, xi)


def kappa(E, P, sh, xi, mu, V):
    return _impl.kappa(E, P, sh, xi, mu, V)


def forward(E, P, c, gamma, gamma_inv, sign, z, h, radius, n_complex,
            g, xi0, mu0, mu1, xi1, impulse, start, nsteps):
    return _pick(n_complex).forward(E, P, c, gamma, gamma_inv, sign, z, h, radius,
                                    n_complex, g, xi0, mu0, mu1, xi1, impulse,
                                    start, nsteps)


def backward(E, P, gamma_inv, h, xi0, mu0, mu1, deltas, amats, P0, P1, V0, V1):
    return _impl.backward(E, P, gamma_inv, h, xi0, mu0, mu1, deltas, amats,
                          P0, P1, V0, V1)
