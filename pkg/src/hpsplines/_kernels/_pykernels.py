"""Reference numpy implementation of the hot loops.

Every function here has a twin in ``_ckernels.pyx`` with the same signature.
Groups are passed as raw arrays:

    E : (d, m, m)  basis of the algebra in the real working representation
    P : (d, m*m)   left inverse of the flattened basis (coordinate extraction)
    c : (d, d, d)  structure constants, [E_i, E_j] = sum_k c[i, j, k] E_k

``n_complex > 0`` marks SU(n) with n >= 3, where the plain Cayley transform
leaves the determinant-one subgroup and has to be rescaled by a phase.
"""
import numpy as np

from ..errors import ImplicitSolveError, SingularityError

_COND_LIMIT = 1e12


def wedge(E, xi):
    return np.tensordot(xi, E, axes=1)


def vee(P, M):
    return P @ M.reshape(-1)


def _inv(M):
    try:
        out = np.linalg.inv(M)
    except np.linalg.LinAlgError as exc:
        raise SingularityError("singular matrix in Cayley chart") from exc
    if not np.all(np.isfinite(out)) or np.abs(out).max() > _COND_LIMIT:
        raise SingularityError("singular matrix in Cayley chart")
    return out


def cayley_factors(E, xi):
    """Return ((e + X/2)^-1, (e - X/2)^-1) for X = wedge(xi)."""
    m = E.shape[1]
    half = 0.5 * wedge(E, xi)
    eye = np.eye(m)
    return _inv(eye + half), _inv(eye - half)


def _phase_fix(T, n_complex):
    n = n_complex
    Z = T[:n, :n] + 1j * T[n:, :n]
    phase = np.angle(np.linalg.det(Z)) / n
    c, s = np.cos(phase), np.sin(phase)
    # multiply by exp(-i*phase) in realified form
    return np.block([[c * T[:n, :n] + s * T[n:, :n], c * T[:n, n:] + s * T[n:, n:]],
                     [c * T[n:, :n] - s * T[:n, :n], c * T[n:, n:] - s * T[:n, n:]]])


def cayley(E, xi, n_complex=0):
    m = E.shape[1]
    _, B = cayley_factors(E, xi)
    T = B @ (np.eye(m) + 0.5 * wedge(E, xi))
    if n_complex:
        T = _phase_fix(T, n_complex)
    return T


def _dtau_from_factors(E, P, A, B):
    d = E.shape[0]
    cols = np.matmul(np.matmul(A, E), B)
    return P @ cols.reshape(d, -1).T


def dtau_matrix(E, P, xi):
    """Matrix of eta -> tau(xi)^-1 T tau(eta) in basis coordinates."""
    A, B = cayley_factors(E, xi)
    return _dtau_from_factors(E, P, A, B)


def ad_matrix(c, xi):
    """ad_xi as a (d, d) matrix: ad(xi, eta) = ad_matrix(c, xi) @ eta."""
    return np.einsum("i,ijk->kj", xi, c)


def ad_star(c, xi, mu):
    return np.einsum("ijk,i,k->j", c, xi, mu)


def ad_dagger(c, gamma, gamma_inv, xi, eta):
    return gamma_inv @ ad_star(c, xi, gamma @ eta)


def ad_dagger_jacobian(c, gamma, gamma_inv, xi, z):
    """Jacobian of xi -> ad_dagger(xi, xi - z)."""
    u = gamma @ (xi - z)
    first = np.einsum("pjk,k->jp", c, u)
    second = np.einsum("ijk,i->jk", c, xi) @ gamma
    return gamma_inv @ (first + second)


def kappa(E, P, sh, xi, mu, V):
    """Covector rho -> d/de <mu, D(sh*(xi + e*rho)) V> at e = 0."""
    m = E.shape[1]
    A, B = cayley_factors(E, sh * xi)
    W = (P.T @ mu).reshape(m, m)
    Vh = wedge(E, V)
    AVB = A @ Vh @ B
    C = B @ W.T @ AVB - AVB @ W.T @ A
    return 0.5 * sh * np.einsum("iab,ba->i", E, C)


def forward(E, P, c, gamma, gamma_inv, sign, z, h, radius, n_complex,
            g, xi0, mu0, mu1, xi1, impulse, start, nsteps):
    """Advance the discrete flow ``nsteps`` steps from index ``start`` in place.

    ``impulse`` is added to mu0 on the first step only (node force). Returns
    -1 on success or the index k at which |h xi0_k| exceeded ``radius``.
    """
    m = E.shape[1]
    d = E.shape[0]
    eye_m = np.eye(m)
    eye_d = np.eye(d)
    for k in range(start, start + nsteps):
        hx = h * xi0[k]
        if np.sqrt(hx @ hx) > radius:
            return k
        A, B = cayley_factors(E, hx)
        Dp = _dtau_from_factors(E, P, A, B)
        Dm = _dtau_from_factors(E, P, B, A)
        a = mu0[k] + impulse if k == start else mu0[k]
        mu_check = Dp.T @ a
        mu0[k + 1] = np.linalg.solve(Dm.T, mu_check)
        rhs = mu1[k] - h * mu_check
        if sign != 0.0:
            Ja = ad_dagger_jacobian(c, gamma, gamma_inv, xi0[k], z)
            try:
                mu1[k + 1] = np.linalg.solve(eye_d - h * sign * Ja.T, rhs)
            except np.linalg.LinAlgError as exc:
                raise ImplicitSolveError(f"Legendre update singular at step {k}") from exc
            xi1[k] = gamma_inv @ mu1[k + 1] - sign * ad_dagger(c, gamma, gamma_inv,
                                                               xi0[k], xi0[k] - z)
        else:
            mu1[k + 1] = rhs
            xi1[k] = gamma_inv @ rhs
        T = B @ (eye_m + 0.5 * wedge(E, hx))
        if n_complex:
            T = _phase_fix(T, n_complex)
        g[k + 1] = T @ g[k]
        xi0[k + 1] = xi0[k] + h * xi1[k]
    return -1


def backward(E, P, gamma_inv, h, xi0, mu0, mu1, deltas, amats, P0, P1, V0, V1):
    """Adjoint sweep for the squared-velocity Lagrangian, k = N .. 1, in place.

    ``deltas[k]`` is the node force at index k (zero off nodes) and
    ``amats[k]`` the matrix of rho -> A_k(g_k, rho) (zero off nodes).
    """
    N = xi0.shape[0] - 1
    A_prev, B_prev = cayley_factors(E, h * xi0[N - 1])
    Dm_prev = _dtau_from_factors(E, P, B_prev, A_prev)
    P0[N] = -(Dm_prev.T @ deltas[N]) / h
    P1[N] = 0.0
    V0[N] = -(gamma_inv @ mu1[N])
    V1[N] = -h * V0[N]
    for k in range(N - 1, 0, -1):
        Ak, Bk = A_prev, B_prev
        Dp = _dtau_from_factors(E, P, Ak, Bk)
        A_prev, B_prev = cayley_factors(E, h * xi0[k - 1])
        Dm_prev = _dtau_from_factors(E, P, B_prev, A_prev)
        DV = Dp @ V1[k + 1]
        inner = np.linalg.solve(Dp.T, P0[k + 1]) + amats[k] @ DV - deltas[k] / h
        P0[k] = Dm_prev.T @ inner
        P1[k] = (P1[k + 1] + h * P0[k + 1]
                 - kappa(E, P, -h, xi0[k], mu0[k + 1], h * V0[k + 1] + V1[k + 1])
                 + kappa(E, P, h, xi0[k], mu0[k] + deltas[k], V1[k + 1]))
        V0[k] = V0[k + 1] - gamma_inv @ mu1[k] + h * (gamma_inv @ P1[k])
        V1[k] = -h * V0[k] + np.linalg.solve(Dm_prev, DV)
