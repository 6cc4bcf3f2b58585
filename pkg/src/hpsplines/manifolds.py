"""Object manifolds acted on by the groups, distances and node forces.

Points are stored in real ambient coordinates. CP^n representatives are unit
vectors of C^(n+1) stored as [Re psi; Im psi]. Every shipped action has the
affine form q -> lin(g) q + trans(g) where lin and trans are linear in the
entries of the working matrix, so infinitesimal generators are obtained by
applying the same maps to basis matrices.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, SingularityError
from .groups import MatrixGroup


class Manifold:
    name = "manifold"
    ambient_dim = 0
    group_kind = ""

    def to_ambient(self, coords):
        """Config coordinates to an ambient vector, without normalizing."""
        q = np.asarray(coords, dtype=float).reshape(-1)
        if q.shape != (self.ambient_dim,):
            raise ConfigError(f"{self.name} points have {self.ambient_dim} coordinates")
        return q

    def parse(self, coords):
        return self.normalize(self.to_ambient(coords))

    def serialize(self, q):
        return [float(x) for x in q]

    def normalize(self, q):
        return np.asarray(q, dtype=float)

    def residual(self, q):
        return 0.0

    def tangent_project(self, q, v):
        return np.asarray(v, dtype=float)

    def lin(self, M):
        raise NotImplementedError

    def trans(self, M):
        return np.zeros(self.ambient_dim)

    # squared-distance model: 1/2 d^2 and its ambient derivatives
    def distance(self, q1, q2):
        return float(np.linalg.norm(np.asarray(q1) - np.asarray(q2)))

    def half_sq(self, q, t):
        return 0.5 * self.distance(q, t) ** 2

    def grad_half_sq(self, q, t):
        return np.asarray(q, dtype=float) - t

    def hess_half_sq(self, q, t):
        return np.eye(self.ambient_dim)

    def d1_distance(self, q1, q2):
        """Gradient covector of d(., q2) at q1, tangential part; zero at d = 0."""
        d = self.distance(q1, q2)
        if d == 0.0:
            return np.zeros(self.ambient_dim)
        return self.tangent_project(q1, self.grad_half_sq(q1, q2)) / d


class Sphere2(Manifold):
    """Unit sphere in R^3 with the chordal distance, acted on by SO(3)."""

    name = "sphere2"
    ambient_dim = 3
    group_kind = "so3"

    def normalize(self, q):
        q = np.asarray(q, dtype=float)
        n = np.linalg.norm(q)
        if n == 0:
            raise ConfigError("zero vector is not a point of the sphere")
        return q / n

    def residual(self, q):
        return abs(np.linalg.norm(q) - 1.0)

    def tangent_project(self, q, v):
        return v - q * (q @ v)

    def lin(self, M):
        return M


class Euclidean(Manifold):
    """R^m with translations by the abelian group."""

    group_kind = "abelian"

    def __init__(self, m: int):
        self.m = m
        self.ambient_dim = m
        self.name = f"r{m}"

    def lin(self, M):
        return M[:self.m, :self.m]

    def trans(self, M):
        return M[:self.m, self.m]


class Sphere2xR3(Manifold):
    """Pairs (unit vector, point) acted on by SE(3) as (R x, R y + r)."""

    name = "sphere2xr3"
    ambient_dim = 6
    group_kind = "se3"

    def normalize(self, q):
        q = np.array(q, dtype=float)
        q[:3] = Sphere2().normalize(q[:3])
        return q

    def residual(self, q):
        return abs(np.linalg.norm(q[:3]) - 1.0)

    def tangent_project(self, q, v):
        v = np.array(v, dtype=float)
        v[:3] -= q[:3] * (q[:3] @ v[:3])
        return v

    def lin(self, M):
        out = np.zeros((6, 6))
        out[:3, :3] = M[:3, :3]
        out[3:, 3:] = M[:3, :3]
        return out

    def trans(self, M):
        return np.concatenate([np.zeros(3), M[:3, 3]])


class CPn(Manifold):
    """Complex projective space with the Fubini-Study distance, acted on by SU(n+1)."""

    group_kind = "sun"

    def __init__(self, n: int):
        self.n = n
        self.k = n + 1
        self.ambient_dim = 2 * (n + 1)
        self.name = f"cp{n}"

    def to_ambient(self, coords):
        arr = np.asarray(coords, dtype=float)
        if arr.shape == (self.k, 2):
            return np.concatenate([arr[:, 0], arr[:, 1]])
        if arr.shape == (self.k,):
            return np.concatenate([arr, np.zeros(self.k)])
        if arr.shape == (self.ambient_dim,):
            return arr
        raise ConfigError(f"{self.name} points need {self.k} complex entries as [re, im]")

    def serialize(self, q):
        return [[float(q[j]), float(q[self.k + j])] for j in range(self.k)]

    def to_complex(self, q):
        return q[:self.k] + 1j * q[self.k:]

    def from_complex(self, z):
        return np.concatenate([z.real, z.imag])

    def normalize(self, q):
        q = np.asarray(q, dtype=float)
        n = np.linalg.norm(q)
        if n == 0:
            raise ConfigError("zero vector is not a state")
        return q / n

    def residual(self, q):
        return abs(np.linalg.norm(q) - 1.0)

    def tangent_project(self, q, v):
        psi = self.to_complex(q)
        w = self.to_complex(np.asarray(v, dtype=float))
        return self.from_complex(w - psi * np.vdot(psi, w))

    def lin(self, M):
        return M

    def _overlap(self, q, t):
        psi, phi = self.to_complex(q), self.to_complex(t)
        c = np.vdot(phi, psi)
        return psi, phi, c

    def _theta(self, psi, phi, c):
        s = abs(c)
        if s == 0.0:
            return 0.5 * np.pi
        aligned = psi * (np.conj(c) / s) / np.linalg.norm(psi)
        r = np.linalg.norm(phi / np.linalg.norm(phi) - aligned)
        return 2.0 * np.arcsin(min(1.0, 0.5 * r))

    def distance(self, q1, q2):
        psi, phi, c = self._overlap(q1, q2)
        return float(2.0 * self._theta(psi, phi, c))

    def half_sq(self, q, t):
        return 0.5 * self.distance(q, t) ** 2

    def _pieces(self, q, t):
        psi, phi, c = self._overlap(q, t)
        s = abs(c)
        if s < 1e-14:
            raise SingularityError("Fubini-Study distance is not differentiable at d = pi")
        theta = self._theta(psi, phi, c)
        grad_s = self.from_complex(c * phi) / s
        if theta < 1e-4:
            dP = -4.0 * (1.0 + theta**2 / 6.0)
            d2P = 4.0 * (1.0 / 3.0 + 2.0 * theta**2 / 15.0)
        else:
            st = np.sin(theta)
            dP = -4.0 * theta / st
            d2P = 4.0 * (1.0 / st**2 - theta * np.cos(theta) / st**3)
        return phi, s, grad_s, dP, d2P

    def grad_half_sq(self, q, t):
        _, _, grad_s, dP, _ = self._pieces(q, t)
        return dP * grad_s

    def hess_half_sq(self, q, t):
        phi, s, grad_s, dP, d2P = self._pieces(q, t)
        aR = np.concatenate([phi.real, phi.imag])
        aI = np.concatenate([-phi.imag, phi.real])
        hess_s = (np.outer(aR, aR) + np.outer(aI, aI) - np.outer(grad_s, grad_s)) / s
        return d2P * np.outer(grad_s, grad_s) + dP * hess_s

    def d1_distance(self, q1, q2):
        d = self.distance(q1, q2)
        if d == 0.0:
            return np.zeros(self.ambient_dim)
        return self.tangent_project(q1, self.grad_half_sq(q1, q2)) / d


def from_name(name: str) -> Manifold:
    key = str(name).strip().lower()
    if key in ("sphere2", "s2"):
        return Sphere2()
    if key in ("sphere2xr3", "s2xr3"):
        return Sphere2xR3()
    if key.startswith("cp"):
        try:
            return CPn(int(key[2:].lstrip(":")))
        except ValueError:
            pass
    if key.startswith("r"):
        try:
            return Euclidean(int(key[1:].lstrip(":")))
        except ValueError:
            pass
    raise ConfigError(f"unknown manifold {name!r}")


def check_pair(group: MatrixGroup, manifold: Manifold):
    kind = group.name.split(":")[0]
    ok = kind == manifold.group_kind
    if ok and kind == "abelian":
        ok = group.dim == manifold.m
    if ok and kind == "sun":
        ok = group.complex_n == manifold.k
    if not ok:
        raise ConfigError(f"{group.name} does not act on {manifold.name}")


def act(group: MatrixGroup, manifold: Manifold, g, q):
    check_pair(group, manifold)
    return manifold.normalize(manifold.lin(g) @ q + manifold.trans(g))


def generators(group: MatrixGroup, manifold: Manifold, q):
    """Ambient matrix whose column i is the infinitesimal action of E_i at q."""
    return np.stack([manifold.lin(E) @ q + manifold.trans(E) for E in group.basis], axis=1)


def momentum_map(group: MatrixGroup, manifold: Manifold, q, alpha):
    return generators(group, manifold, q).T @ alpha


def isotropy_basis(group: MatrixGroup, manifold: Manifold, q, tol=1e-10):
    """Orthonormal coordinates spanning the algebra of the stabilizer of q.

    Generators are projected onto the tangent space first, so on CP^n a
    pure phase rotation of the representative counts as fixing the point.
    """
    G = np.stack([manifold.tangent_project(q, col) for col in generators(group, manifold, q).T],
                 axis=1)
    _, s, Vh = np.linalg.svd(G)
    rank = int(np.sum(s > tol * max(1.0, s.max() if s.size else 1.0)))
    return Vh[rank:].copy()


@dataclass(frozen=True)
class TargetSchedule:
    """Initial point and (node index, target point) pairs."""

    initial: np.ndarray
    nodes: tuple
    targets: tuple

    def validate(self, N: int):
        nodes = list(self.nodes)
        if len(nodes) != len(self.targets):
            raise ConfigError("each node index needs one target")
        if not nodes:
            raise ConfigError("at least one target is required")
        if any(b <= a for a, b in zip(nodes, nodes[1:])) or nodes[0] <= 0:
            raise ConfigError("node indices must satisfy 0 < N_1 < ... < N_l")
        if nodes[-1] != N:
            raise ConfigError(f"last node index must equal N = {N}, got {nodes[-1]}")

    def target_at(self, k: int):
        try:
            return self.targets[self.nodes.index(k)]
        except ValueError:
            return None


class GroupAction:
    """A group acting on an object manifold from the left or through inverses.

    For ``side == "left"`` the orbit point of g is g Q0; for ``"right"`` it
    is g^-1 Q0. Node forces are derivatives of the penalty along
    perturbations g -> exp(e eta) g.
    """

    def __init__(self, group: MatrixGroup, manifold: Manifold, initial, side: str = "left"):
        check_pair(group, manifold)
        if side not in ("left", "right"):
            raise ConfigError(f"action side must be left or right, got {side!r}")
        self.group = group
        self.manifold = manifold
        self.initial = np.asarray(initial, dtype=float)
        self.side = side
        self._gen0 = generators(group, manifold, self.initial)
        self._lin_basis = np.stack([manifold.lin(E) for E in group.basis])

    def orbit_point(self, g):
        if self.side == "right":
            g = self.group.inverse(g)
        return act(self.group, self.manifold, g, self.initial)

    def penalty(self, g, target, sigma):
        return self.manifold.half_sq(self.orbit_point(g), target) / sigma**2

    def node_force(self, g, target, sigma):
        if sigma <= 0:
            raise ConfigError("sigma must be positive")
        q = self.orbit_point(g)
        if self.manifold.distance(q, target) == 0.0:
            return np.zeros(self.group.dim)
        alpha = self.manifold.grad_half_sq(q, target) / sigma**2
        if self.side == "left":
            return generators(self.group, self.manifold, q).T @ alpha
        M = self.manifold.lin(self.group.inverse(g))
        return -self._gen0.T @ (M.T @ alpha)

    def node_force_matrix(self, g, target, sigma):
        """Matrix A with (A @ rho)[eta] = d/de <force(exp(e eta) g), rho> at e = 0."""
        if sigma <= 0:
            raise ConfigError("sigma must be positive")
        q = self.orbit_point(g)
        alpha = self.manifold.grad_half_sq(q, target) / sigma**2
        H = self.manifold.hess_half_sq(q, target) / sigma**2
        if self.side == "left":
            Gq = generators(self.group, self.manifold, q)
            # C[eta, rho] = alpha . lin(E_rho) Gq[:, eta]
            C = np.einsum("a,rab,be->er", alpha, self._lin_basis, Gq)
            return Gq.T @ H @ Gq + C
        M = self.manifold.lin(self.group.inverse(g))
        Gb = self._gen0
        alpha_t = M.T @ alpha
        C = np.einsum("a,eab,br->er", alpha_t, self._lin_basis, Gb)
        return Gb.T @ (M.T @ H @ M) @ Gb + C

    def momentum(self, q, alpha):
        return momentum_map(self.group, self.manifold, q, alpha)

    def annihilator_basis(self):
        """Orthonormal basis of the dual directions killing the isotropy of Q0.

        Only meaningful for the left action; with the inverse action the
        constraint is not a fixed subspace and the whole dual space is used.
        """
        d = self.group.dim
        if self.side == "right":
            return np.eye(d)
        iso = isotropy_basis(self.group, self.manifold, self.initial)
        if iso.shape[0] == 0:
            return np.eye(d)
        _, _, Vh = np.linalg.svd(iso)
        return Vh[iso.shape[0]:].copy()


def node_force(k: int, g, schedule: TargetSchedule, sigma: float, action: GroupAction):
    """Force at time index k; zero unless k is a node index."""
    if sigma <= 0:
        raise ConfigError("sigma must be positive")
    target = schedule.target_at(k)
    if target is None:
        return np.zeros(action.group.dim)
    return action.node_force(g, target, sigma)


def script_A(k: int, g, rho, schedule: TargetSchedule, sigma: float, action: GroupAction):
    """Covector eta -> derivative of <force_k(exp(e eta) g), rho>; zero off nodes."""
    target = schedule.target_at(k)
    if target is None:
        return np.zeros(action.group.dim)
    return action.node_force_matrix(g, target, sigma) @ rho
