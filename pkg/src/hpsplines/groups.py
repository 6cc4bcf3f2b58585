"""Matrix Lie groups, their algebras and the Cayley retraction.

Algebra elements are coordinate vectors in a fixed basis ``E_i`` of the
working matrix representation, and dual elements are coordinate vectors in
the dual basis, so the pairing is the plain dot product. SU(n) is stored in
realified form: a complex n x n matrix Z = X + iY is the real 2n x 2n matrix
[[X, -Y], [Y, X]].
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from . import _kernels
from .errors import ConfigError, DescriptorMismatch, SingularityError

# |cay^-1(g)| beyond this is treated as leaving the chart
_CHART_LIMIT = 1e12


def _hat3(v):
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def realify(Z):
    Z = np.asarray(Z, dtype=complex)
    return np.block([[Z.real, -Z.imag], [Z.imag, Z.real]])


def complexify(M, n):
    return M[:n, :n] + 1j * M[n:, :n]


def _frozen(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


class MatrixGroup:
    """Descriptor of a matrix Lie group with a fixed algebra basis.

    ``basis`` has shape (d, m, m). Structure constants are derived from the
    basis by taking commutators and reading off coordinates.
    """

    def __init__(self, name: str, basis, complex_n: int = 0, phase_fix: bool = False):
        self.name = name
        basis = np.asarray(basis, dtype=float)
        self.dim = basis.shape[0]
        self.size = basis.shape[1]
        self.complex_n = complex_n
        # SU(n), n >= 3: the Cayley image has to be rescaled into det = 1
        self.n_complex = complex_n if phase_fix else 0
        flat = basis.reshape(self.dim, -1)
        self.basis = _frozen(basis)
        self.pinv = _frozen(np.linalg.pinv(flat.T))
        c = np.empty((self.dim, self.dim, self.dim))
        for i in range(self.dim):
            for j in range(self.dim):
                br = basis[i] @ basis[j] - basis[j] @ basis[i]
                c[i, j] = self.pinv @ br.reshape(-1)
        c[np.abs(c) < 1e-15] = 0.0
        self.structure_constants = _frozen(c)

    def __repr__(self):
        return f"MatrixGroup({self.name!r}, dim={self.dim})"

    def __eq__(self, other):
        return isinstance(other, MatrixGroup) and other.name == self.name

    def __hash__(self):
        return hash(self.name)

    # -- coordinates ---------------------------------------------------
    def check(self, *vectors):
        for v in vectors:
            if np.shape(v) != (self.dim,):
                raise DescriptorMismatch(
                    f"{self.name} expects vectors of length {self.dim}, got shape {np.shape(v)}")

    def check_element(self, g):
        if np.shape(g) != (self.size, self.size):
            raise DescriptorMismatch(
                f"{self.name} expects {self.size}x{self.size} matrices, got {np.shape(g)}")

    def wedge(self, xi):
        self.check(xi)
        return np.tensordot(np.asarray(xi, dtype=float), self.basis, axes=1)

    def vee(self, M):
        return self.pinv @ np.asarray(M, dtype=float).reshape(-1)

    def identity(self):
        return np.eye(self.size)

    def inverse(self, g):
        return np.linalg.inv(g)

    # -- brackets and (co)adjoint actions ------------------------------
    def ad(self, xi, eta):
        self.check(xi, eta)
        return np.einsum("ijk,i,j->k", self.structure_constants, xi, eta)

    def ad_matrix(self, xi):
        self.check(xi)
        return np.einsum("i,ijk->kj", xi, self.structure_constants)

    def ad_star(self, xi, mu):
        self.check(xi, mu)
        return np.einsum("ijk,i,k->j", self.structure_constants, xi, mu)

    def Ad_matrix(self, g):
        self.check_element(g)
        gi = self.inverse(g)
        cols = np.matmul(np.matmul(g, self.basis), gi)
        return self.pinv @ cols.reshape(self.dim, -1).T

    def Ad(self, g, xi):
        self.check(xi)
        return self.vee(g @ self.wedge(xi) @ self.inverse(g))

    def Ad_star(self, g, mu):
        self.check(mu)
        return self.Ad_matrix(g).T @ mu

    # -- Cayley retraction ---------------------------------------------
    def cayley(self, xi):
        self.check(xi)
        return _kernels.cayley(self.basis, np.asarray(xi, dtype=float), self.n_complex)

    def cayley_inv(self, g):
        self.check_element(g)
        if self.n_complex:
            return self._cayley_inv_phase(g)
        e = np.eye(self.size)
        try:
            X = 2.0 * np.linalg.solve((g + e).T, (g - e).T).T
        except np.linalg.LinAlgError as exc:
            raise SingularityError("e + g is singular; outside the Cayley chart") from exc
        if not np.all(np.isfinite(X)) or np.abs(X).max() > _CHART_LIMIT:
            raise SingularityError("e + g is numerically singular; outside the Cayley chart")
        return self.vee(X)

    def _cayley_inv_phase(self, g):
        # Find the scalar phase exp(i t) with g exp(i t) = cay(X) for traceless X.
        n = self.complex_n
        U = complexify(g, n)
        lam = np.angle(np.linalg.eigvals(U))
        lo = max(-np.pi / n, -np.pi - lam.min()) + 1e-14
        hi = min(np.pi / n, np.pi - lam.max()) - 1e-14
        f = lambda t: np.sum(np.tan(0.5 * (lam + t)))
        if not lo < hi or f(lo) * f(hi) > 0:
            raise SingularityError("element lies outside the phase-corrected Cayley chart")
        t = brentq(f, lo, hi, xtol=1e-15, rtol=1e-15)
        W = U * np.exp(1j * t)
        e = np.eye(n)
        X = 2.0 * np.linalg.solve((W + e).T, (W - e).T).T
        if not np.all(np.isfinite(X)) or np.abs(X).max() > _CHART_LIMIT:
            raise SingularityError("element lies outside the phase-corrected Cayley chart")
        return self.vee(realify(X))

    def dtau_matrix(self, xi):
        """Matrix of the left-trivialized Cayley differential at ``xi``."""
        self.check(xi)
        return _kernels.dtau_matrix(self.basis, self.pinv, np.asarray(xi, dtype=float))

    def dtau(self, xi, eta):
        return self.dtau_matrix(xi) @ eta

    def dtau_inv(self, xi, eta):
        return np.linalg.solve(self.dtau_matrix(xi), eta)

    def dtau_star(self, xi, mu):
        return self.dtau_matrix(xi).T @ mu

    def dtau_inv_star(self, xi, mu):
        return np.linalg.solve(self.dtau_matrix(xi).T, mu)

    # -- manifold structure -------------------------------------------
    def residual(self, g):
        """Distance of ``g`` from the defining relations of the group."""
        g = np.asarray(g, dtype=float)
        kind = self.name.split(":")[0]
        if kind == "abelian":
            m = self.size - 1
            ref = np.eye(self.size)
            ref[:m, m] = g[:m, m]
            return float(np.abs(g - ref).max())
        if kind == "se3":
            R = g[:3, :3]
            res = np.abs(R.T @ R - np.eye(3)).max()
            res = max(res, abs(np.linalg.det(R) - 1.0))
            return float(max(res, np.abs(g[3] - [0, 0, 0, 1]).max()))
        res = np.abs(g.T @ g - np.eye(self.size)).max()
        if kind == "sun":
            Z = complexify(g, self.complex_n)
            res = max(res, abs(np.linalg.det(Z) - 1.0),
                      np.abs(g - realify(Z)).max())
        else:
            res = max(res, abs(np.linalg.det(g) - 1.0))
        return float(res)

    def is_element(self, g, tol=1e-10):
        return np.shape(g) == (self.size, self.size) and self.residual(g) <= tol

    def project(self, g):
        """Nearest group element (polar factor on the compact part)."""
        g = np.array(g, dtype=float)
        kind = self.name.split(":")[0]
        if kind == "abelian":
            m = self.size - 1
            out = np.eye(self.size)
            out[:m, m] = g[:m, m]
            return out
        if kind == "se3":
            out = np.eye(4)
            out[:3, :3] = _polar(g[:3, :3])
            out[:3, 3] = g[:3, 3]
            return out
        if kind == "sun":
            n = self.complex_n
            U, _, Vh = np.linalg.svd(complexify(g, n))
            Z = U @ Vh
            Z = Z * np.exp(-1j * np.angle(np.linalg.det(Z)) / n)
            return realify(Z)
        return _polar(g)

    def to_natural(self, g):
        """Complex matrix for SU(n), the working matrix otherwise."""
        return complexify(g, self.complex_n) if self.complex_n else np.asarray(g)

    def from_natural(self, g):
        return realify(g) if self.complex_n else np.asarray(g, dtype=float)

    def random_algebra(self, rng, scale=1.0):
        return scale * rng.standard_normal(self.dim)

    def random_element(self, rng, scale=0.8):
        xi = rng.standard_normal(self.dim)
        xi *= scale / max(np.linalg.norm(xi), 1e-300)
        return self.cayley(xi)


def _polar(A):
    U, _, Vh = np.linalg.svd(A)
    R = U @ Vh
    if np.linalg.det(R) < 0:
        U[:, -1] *= -1
        R = U @ Vh
    return R


def _gell_mann(n):
    mats = []
    for a in range(n):
        for b in range(a + 1, n):
            S = np.zeros((n, n), dtype=complex)
            S[a, b] = S[b, a] = 1.0
            mats.append(S)
            A = np.zeros((n, n), dtype=complex)
            A[a, b] = -1j
            A[b, a] = 1j
            mats.append(A)
    for l in range(1, n):
        D = np.zeros((n, n), dtype=complex)
        D[np.arange(l), np.arange(l)] = 1.0
        D[l, l] = -l
        mats.append(D * np.sqrt(2.0 / (l * (l + 1))))
    return mats


@lru_cache(maxsize=None)
def so3():
    return MatrixGroup("so3", [_hat3(e) for e in np.eye(3)])


@lru_cache(maxsize=None)
def se3():
    basis = []
    for e in np.eye(3):
        M = np.zeros((4, 4))
        M[:3, :3] = _hat3(e)
        basis.append(M)
    for e in np.eye(3):
        M = np.zeros((4, 4))
        M[:3, 3] = e
        basis.append(M)
    return MatrixGroup("se3", basis)


@lru_cache(maxsize=None)
def su(n: int):
    if n < 2:
        raise ConfigError("su(n) needs n >= 2")
    if n == 2:
        paulis = [np.array([[0, 1], [1, 0]], dtype=complex),
                  np.array([[0, -1j], [1j, 0]]),
                  np.array([[1, 0], [0, -1]], dtype=complex)]
    else:
        paulis = _gell_mann(n)
    basis = [realify(-0.5j * lam) for lam in paulis]
    return MatrixGroup(f"sun:{n}", basis, complex_n=n, phase_fix=n >= 3)


@lru_cache(maxsize=None)
def abelian(m: int):
    if m < 1:
        raise ConfigError("abelian group needs m >= 1")
    basis = []
    for i in range(m):
        M = np.zeros((m + 1, m + 1))
        M[i, m] = 1.0
        basis.append(M)
    return MatrixGroup(f"abelian:{m}", basis)


def from_name(name: str) -> MatrixGroup:
    """Build a descriptor from "so3", "se3", "sun:<n>" or "abelian:<m>"."""
    key = str(name).strip().lower()
    if key == "so3":
        return so3()
    if key == "se3":
        return se3()
    head, _, tail = key.partition(":")
    try:
        arg = int(tail)
    except ValueError:
        raise ConfigError(f"unknown group {name!r}") from None
    if head == "sun":
        return su(arg)
    if head == "abelian":
        return abelian(arg)
    raise ConfigError(f"unknown group {name!r}")


def hat(v, group: MatrixGroup | None = None):
    """so(3) hat map with hat(v) @ x == cross(v, x)."""
    if group is not None and group.name != "so3":
        raise DescriptorMismatch(f"hat map is defined for so3, not {group.name}")
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise DescriptorMismatch("hat map takes a 3-vector")
    return _hat3(v)


def vee(M, group: MatrixGroup | None = None):
    if group is not None and group.name != "so3":
        raise DescriptorMismatch(f"vee map is defined for so3, not {group.name}")
    M = np.asarray(M, dtype=float)
    return np.array([M[2, 1], M[0, 2], M[1, 0]])


@dataclass(frozen=True)
class MetricOperator:
    """Symmetric positive-definite inner product on the algebra."""

    gamma: np.ndarray
    gamma_inv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        G = np.array(self.gamma, dtype=float)
        if G.ndim != 2 or G.shape[0] != G.shape[1]:
            raise ConfigError("metric must be a square matrix")
        if not np.allclose(G, G.T, rtol=0, atol=1e-12 * max(1.0, np.abs(G).max())):
            raise ConfigError("metric must be symmetric")
        G = 0.5 * (G + G.T)
        if np.linalg.eigvalsh(G).min() <= 0:
            raise ConfigError("metric must be positive definite")
        object.__setattr__(self, "gamma", _frozen(G))
        object.__setattr__(self, "gamma_inv", _frozen(np.linalg.inv(G)))

    @classmethod
    def identity(cls, dim):
        return cls(np.eye(dim))

    @property
    def dim(self):
        return self.gamma.shape[0]

    def flat(self, xi):
        return self.gamma @ xi

    def sharp(self, mu):
        return self.gamma_inv @ mu

    def norm_sq(self, xi):
        return float(xi @ self.gamma @ xi)


def trace_metric(group: MatrixGroup) -> MetricOperator:
    """The metric -2 tr(AB) on su(n) expressed in ``group``'s basis."""
    if not group.complex_n:
        raise DescriptorMismatch("trace metric is defined for su(n)")
    n = group.complex_n
    Z = [complexify(E, n) for E in group.basis]
    G = np.array([[-2.0 * np.trace(a @ b).real for b in Z] for a in Z])
    return MetricOperator(G)


def ad_dagger(group: MatrixGroup, metric: MetricOperator, xi, eta):
    """Metric transpose of ad: sharp(ad_star(xi, flat(eta)))."""
    return metric.sharp(group.ad_star(xi, metric.flat(eta)))
