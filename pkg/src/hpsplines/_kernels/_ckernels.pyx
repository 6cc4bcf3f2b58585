# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of ``_pykernels`` for groups without a determinant phase fix.

Small dense matrices are handled with plain loops on contiguous buffers; the
sizes involved (m <= 8, d <= 15) are far below where BLAS pays off.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs

from ..errors import ImplicitSolveError, SingularityError

cnp.import_array()

cdef double COND_LIMIT = 1e12


cdef void _wedge(const double* E, const double* xi, int d, int m, double scale,
                 double* out) noexcept nogil:
    cdef int i, a, mm = m * m
    for a in range(mm):
        out[a] = 0.0
    for i in range(d):
        for a in range(mm):
            out[a] += scale * xi[i] * E[i * mm + a]


cdef void _matmul(const double* A, const double* B, int n, int k, int m,
                  double* out) noexcept nogil:
    cdef int i, j, l
    cdef double s
    for i in range(n):
        for j in range(m):
            s = 0.0
            for l in range(k):
                s += A[i * k + l] * B[l * m + j]
            out[i * m + j] = s


cdef int _inv(const double* M, int n, double* out, double* work) noexcept nogil:
    """Gauss-Jordan with partial pivoting; returns -1 when singular."""
    cdef int i, j, r, piv, w = 2 * n
    cdef double best, f, tmp
    for i in range(n):
        for j in range(n):
            work[i * w + j] = M[i * n + j]
            work[i * w + n + j] = 1.0 if i == j else 0.0
    for j in range(n):
        piv = j
        best = fabs(work[j * w + j])
        for r in range(j + 1, n):
            if fabs(work[r * w + j]) > best:
                best = fabs(work[r * w + j])
                piv = r
        if best < 1e-300:
            return -1
        if piv != j:
            for i in range(w):
                tmp = work[j * w + i]
                work[j * w + i] = work[piv * w + i]
                work[piv * w + i] = tmp
        f = 1.0 / work[j * w + j]
        for i in range(w):
            work[j * w + i] *= f
        for r in range(n):
            if r != j:
                f = work[r * w + j]
                if f != 0.0:
                    for i in range(w):
                        work[r * w + i] -= f * work[j * w + i]
    for i in range(n):
        for j in range(n):
            tmp = work[i * w + n + j]
            if tmp != tmp or fabs(tmp) > COND_LIMIT:
                return -1
            out[i * n + j] = tmp
    return 0


cdef int _factors(const double* E, const double* xi, int d, int m, double scale,
                  double* A, double* B, double* X, double* tmp, double* work) noexcept nogil:
    """A = (I + X/2)^-1, B = (I - X/2)^-1 with X = scale * wedge(xi)."""
    cdef int a, b
    _wedge(E, xi, d, m, 0.5 * scale, X)
    for a in range(m):
        for b in range(m):
            tmp[a * m + b] = (1.0 if a == b else 0.0) + X[a * m + b]
    if _inv(tmp, m, A, work) != 0:
        return -1
    for a in range(m):
        for b in range(m):
            tmp[a * m + b] = (1.0 if a == b else 0.0) - X[a * m + b]
    if _inv(tmp, m, B, work) != 0:
        return -1
    return 0


cdef void _dtau(const double* E, const double* P, const double* A, const double* B,
                int d, int m, double* out, double* t1, double* t2) noexcept nogil:
    """out[:, j] = vee(A E_j B), stored row-major (d, d)."""
    cdef int i, j, a, mm = m * m
    cdef double s
    for j in range(d):
        _matmul(A, &E[j * mm], m, m, m, t1)
        _matmul(t1, B, m, m, m, t2)
        for i in range(d):
            s = 0.0
            for a in range(mm):
                s += P[i * mm + a] * t2[a]
            out[i * d + j] = s


cdef void _matvec(const double* M, const double* v, int n, int k, bint trans,
                  double* out) noexcept nogil:
    cdef int i, j
    cdef double s
    if trans:
        for j in range(k):
            s = 0.0
            for i in range(n):
                s += M[i * k + j] * v[i]
            out[j] = s
    else:
        for i in range(n):
            s = 0.0
            for j in range(k):
                s += M[i * k + j] * v[j]
            out[i] = s


cdef void _transpose(const double* M, int n, double* out) noexcept nogil:
    cdef int i, j
    for i in range(n):
        for j in range(n):
            out[j * n + i] = M[i * n + j]


cdef void _kappa(const double* E, const double* P, int d, int m, double sh,
                 const double* A, const double* B, const double* mu, const double* V,
                 double* out, double* W, double* Vh, double* t1, double* t2,
                 double* t3, double* AVB) noexcept nogil:
    """Same contraction as the numpy version, given the Cayley factors of sh*xi."""
    cdef int i, a, b, mm = m * m
    cdef double s
    # W^T = unvec(P^T mu)^T
    for a in range(mm):
        s = 0.0
        for i in range(d):
            s += P[i * mm + a] * mu[i]
        t1[a] = s
    _transpose(t1, m, W)
    _wedge(E, V, d, m, 1.0, Vh)
    _matmul(A, Vh, m, m, m, t1)
    _matmul(t1, B, m, m, m, AVB)
    # C = B W^T AVB - AVB W^T A
    _matmul(B, W, m, m, m, t1)
    _matmul(t1, AVB, m, m, m, t2)
    _matmul(AVB, W, m, m, m, t1)
    _matmul(t1, A, m, m, m, t3)
    for a in range(mm):
        t2[a] -= t3[a]
    for i in range(d):
        s = 0.0
        for a in range(m):
            for b in range(m):
                s += E[i * mm + a * m + b] * t2[b * m + a]
        out[i] = 0.5 * sh * s


def _c(arr):
    return np.ascontiguousarray(arr, dtype=np.float64)


def cayley(E, xi, n_complex=0):
    if n_complex:
        raise NotImplementedError("phase-corrected Cayley map is numpy only")
    cdef const double[:, :, ::1] Ev = _c(E)
    cdef const double[::1] xv = _c(xi)
    cdef int d = Ev.shape[0], m = Ev.shape[1], a, b
    cdef double[::1] A = np.empty(m * m), B = np.empty(m * m), X = np.empty(m * m)
    cdef double[::1] tmp = np.empty(m * m), work = np.empty(2 * m * m)
    cdef double[:, ::1] out = np.empty((m, m))
    if _factors(&Ev[0, 0, 0], &xv[0], d, m, 1.0, &A[0], &B[0], &X[0], &tmp[0], &work[0]) != 0:
        raise SingularityError("singular matrix in Cayley chart")
    for a in range(m):
        for b in range(m):
            tmp[a * m + b] = (1.0 if a == b else 0.0) + X[a * m + b]
    _matmul(&B[0], &tmp[0], m, m, m, &out[0, 0])
    return np.asarray(out)


def dtau_matrix(E, P, xi):
    cdef const double[:, :, ::1] Ev = _c(E)
    cdef const double[:, ::1] Pv = _c(P)
    cdef const double[::1] xv = _c(xi)
    cdef int d = Ev.shape[0], m = Ev.shape[1]
    cdef double[::1] A = np.empty(m * m), B = np.empty(m * m), X = np.empty(m * m)
    cdef double[::1] t1 = np.empty(m * m), t2 = np.empty(m * m), work = np.empty(2 * m * m)
    cdef double[:, ::1] out = np.empty((d, d))
    if _factors(&Ev[0, 0, 0], &xv[0], d, m, 1.0, &A[0], &B[0], &X[0], &t1[0], &work[0]) != 0:
        raise SingularityError("singular matrix in Cayley chart")
    _dtau(&Ev[0, 0, 0], &Pv[0, 0], &A[0], &B[0], d, m, &out[0, 0], &t1[0], &t2[0])
    return np.asarray(out)


def kappa(E, P, double sh, xi, mu, V):
    cdef const double[:, :, ::1] Ev = _c(E)
    cdef const double[:, ::1] Pv = _c(P)
    cdef const double[::1] xv = _c(xi), mv = _c(mu), Vv = _c(V)
    cdef int d = Ev.shape[0], m = Ev.shape[1]
    cdef int mm = m * m
    cdef double[::1] A = np.empty(mm), B = np.empty(mm), X = np.empty(mm)
    cdef double[::1] W = np.empty(mm), Vh = np.empty(mm), t1 = np.empty(mm)
    cdef double[::1] t2 = np.empty(mm), t3 = np.empty(mm), AVB = np.empty(mm)
    cdef double[::1] work = np.empty(2 * mm), out = np.empty(d)
    if _factors(&Ev[0, 0, 0], &xv[0], d, m, sh, &A[0], &B[0], &X[0], &t1[0], &work[0]) != 0:
        raise SingularityError("singular matrix in Cayley chart")
    _kappa(&Ev[0, 0, 0], &Pv[0, 0], d, m, sh, &A[0], &B[0], &mv[0], &Vv[0], &out[0],
           &W[0], &Vh[0], &t1[0], &t2[0], &t3[0], &AVB[0])
    return np.asarray(out)


def forward(E, P, c, gamma, gamma_inv, double sign, z, double h, double radius,
            int n_complex, g, xi0, mu0, mu1, xi1, impulse, int start, int nsteps):
    if n_complex:
        raise NotImplementedError("phase-corrected Cayley map is numpy only")
    cdef const double[:, :, ::1] Ev = E, cv = c
    cdef double[:, :, ::1] gv = g
    cdef const double[:, ::1] Pv = P, Gm = gamma, Gi = gamma_inv
    cdef double[:, ::1] x0 = xi0, m0 = mu0, m1 = mu1, x1 = xi1
    cdef const double[::1] zv = _c(z), imp = _c(impulse)
    cdef int d = Ev.shape[0], m = Ev.shape[1]
    cdef int mm = m * m, dd = d * d
    cdef double[::1] A = np.empty(mm), B = np.empty(mm), X = np.empty(mm)
    cdef double[::1] t1 = np.empty(mm), t2 = np.empty(mm), work = np.empty(2 * max(mm, dd))
    cdef double[::1] Dp = np.empty(dd), Dm = np.empty(dd), M = np.empty(dd), Mi = np.empty(dd)
    cdef double[::1] Ja = np.empty(dd), T1 = np.empty(dd)
    cdef double[::1] hx = np.empty(d), a = np.empty(d), chk = np.empty(d), rhs = np.empty(d)
    cdef double[::1] u = np.empty(d), w = np.empty(d), w2 = np.empty(d)
    cdef int k, i, j, l, p
    cdef double nrm, s
    for k in range(start, start + nsteps):
        nrm = 0.0
        for i in range(d):
            hx[i] = h * x0[k, i]
            nrm += hx[i] * hx[i]
        if sqrt(nrm) > radius:
            return k
        if _factors(&Ev[0, 0, 0], &hx[0], d, m, 1.0, &A[0], &B[0], &X[0], &t1[0], &work[0]) != 0:
            raise SingularityError("singular matrix in Cayley chart")
        _dtau(&Ev[0, 0, 0], &Pv[0, 0], &A[0], &B[0], d, m, &Dp[0], &t1[0], &t2[0])
        _dtau(&Ev[0, 0, 0], &Pv[0, 0], &B[0], &A[0], d, m, &Dm[0], &t1[0], &t2[0])
        for i in range(d):
            a[i] = m0[k, i] + (imp[i] if k == start else 0.0)
        _matvec(&Dp[0], &a[0], d, d, True, &chk[0])
        # mu0_{k+1} = Dm^-T chk
        _transpose(&Dm[0], d, &M[0])
        if _inv(&M[0], d, &Mi[0], &work[0]) != 0:
            raise SingularityError("singular Cayley derivative")
        _matvec(&Mi[0], &chk[0], d, d, False, &m0[k + 1, 0])
        for i in range(d):
            rhs[i] = m1[k, i] - h * chk[i]
        if sign != 0.0:
            for i in range(d):
                s = 0.0
                for j in range(d):
                    s += Gm[i, j] * (x0[k, j] - zv[j])
                u[i] = s
            # T1[j, p] = sum_l c[p, j, l] u_l + sum_i c[i, j, l] xi_i gamma[l, p]
            for j in range(d):
                for p in range(d):
                    s = 0.0
                    for l in range(d):
                        s += cv[p, j, l] * u[l]
                    T1[j * d + p] = s
                for l in range(d):
                    s = 0.0
                    for i in range(d):
                        s += cv[i, j, l] * x0[k, i]
                    w[l] = s
                for p in range(d):
                    s = 0.0
                    for l in range(d):
                        s += w[l] * Gm[l, p]
                    T1[j * d + p] += s
            _matmul(&Gi[0, 0], &T1[0], d, d, d, &Ja[0])
            for i in range(d):
                for j in range(d):
                    M[i * d + j] = (1.0 if i == j else 0.0) - h * sign * Ja[j * d + i]
            if _inv(&M[0], d, &Mi[0], &work[0]) != 0:
                raise ImplicitSolveError(f"Legendre update singular at step {k}")
            _matvec(&Mi[0], &rhs[0], d, d, False, &m1[k + 1, 0])
            # xi1 = Gi mu1_{k+1} - sign * Gi ad*(xi, u)
            for j in range(d):
                s = 0.0
                for i in range(d):
                    for l in range(d):
                        s += cv[i, j, l] * x0[k, i] * u[l]
                w[j] = m1[k + 1, j] - sign * s
            _matvec(&Gi[0, 0], &w[0], d, d, False, &w2[0])
            for i in range(d):
                x1[k, i] = w2[i]
        else:
            for i in range(d):
                m1[k + 1, i] = rhs[i]
            _matvec(&Gi[0, 0], &rhs[0], d, d, False, &w2[0])
            for i in range(d):
                x1[k, i] = w2[i]
        for i in range(m):
            for j in range(m):
                t1[i * m + j] = (1.0 if i == j else 0.0) + X[i * m + j]
        _matmul(&B[0], &t1[0], m, m, m, &t2[0])
        _matmul(&t2[0], &gv[k, 0, 0], m, m, m, &gv[k + 1, 0, 0])
        for i in range(d):
            x0[k + 1, i] = x0[k, i] + h * x1[k, i]
    return -1


def backward(E, P, gamma_inv, double h, xi0, mu0, mu1, deltas, amats, P0, P1, V0, V1):
    cdef const double[:, :, ::1] Ev = E, Am = amats
    cdef const double[:, ::1] Pv = P, Gi = gamma_inv
    cdef const double[:, ::1] x0 = xi0, m0 = mu0, m1 = mu1, dl = deltas
    cdef double[:, ::1] p0 = P0, p1 = P1, v0 = V0, v1 = V1
    cdef int d = Ev.shape[0], m = Ev.shape[1]
    cdef int mm = m * m, dd = d * d
    cdef int N = x0.shape[0] - 1
    cdef double[::1] Ak = np.empty(mm), Bk = np.empty(mm), Ap = np.empty(mm), Bp = np.empty(mm)
    cdef double[::1] X = np.empty(mm), t1 = np.empty(mm), t2 = np.empty(mm), t3 = np.empty(mm)
    cdef double[::1] W = np.empty(mm), Vh = np.empty(mm), AVB = np.empty(mm)
    cdef double[::1] work = np.empty(2 * max(mm, dd))
    cdef double[::1] Dp = np.empty(dd), Dmp = np.empty(dd), M = np.empty(dd), Mi = np.empty(dd)
    cdef double[::1] DV = np.empty(d), inner = np.empty(d), tmp = np.empty(d)
    cdef double[::1] kap = np.empty(d), vec = np.empty(d), mus = np.empty(d)
    cdef double[::1] xs = np.empty(d)
    cdef int k, i, j
    cdef double s
    for i in range(d):
        xs[i] = x0[N - 1, i]
    if _factors(&Ev[0, 0, 0], &xs[0], d, m, h, &Ap[0], &Bp[0], &X[0], &t1[0], &work[0]) != 0:
        raise SingularityError("singular matrix in Cayley chart")
    _dtau(&Ev[0, 0, 0], &Pv[0, 0], &Bp[0], &Ap[0], d, m, &Dmp[0], &t1[0], &t2[0])
    _matvec(&Dmp[0], &dl[N, 0], d, d, True, &tmp[0])
    _matvec(&Gi[0, 0], &m1[N, 0], d, d, False, &vec[0])
    for i in range(d):
        p0[N, i] = -tmp[i] / h
        p1[N, i] = 0.0
        v0[N, i] = -vec[i]
        v1[N, i] = h * vec[i]
    for k in range(N - 1, 0, -1):
        Ak[:] = Ap
        Bk[:] = Bp
        _dtau(&Ev[0, 0, 0], &Pv[0, 0], &Ak[0], &Bk[0], d, m, &Dp[0], &t1[0], &t2[0])
        for i in range(d):
            xs[i] = x0[k - 1, i]
        if _factors(&Ev[0, 0, 0], &xs[0], d, m, h, &Ap[0], &Bp[0], &X[0], &t1[0], &work[0]) != 0:
            raise SingularityError("singular matrix in Cayley chart")
        _dtau(&Ev[0, 0, 0], &Pv[0, 0], &Bp[0], &Ap[0], d, m, &Dmp[0], &t1[0], &t2[0])
        _matvec(&Dp[0], &v1[k + 1, 0], d, d, False, &DV[0])
        # inner = Dp^-T P0_{k+1} + A_k DV - delta_k / h
        _transpose(&Dp[0], d, &M[0])
        if _inv(&M[0], d, &Mi[0], &work[0]) != 0:
            raise SingularityError("singular Cayley derivative")
        _matvec(&Mi[0], &p0[k + 1, 0], d, d, False, &inner[0])
        _matvec(&Am[k, 0, 0], &DV[0], d, d, False, &tmp[0])
        for i in range(d):
            inner[i] += tmp[i] - dl[k, i] / h
        _matvec(&Dmp[0], &inner[0], d, d, True, &p0[k, 0])
        # P1
        for i in range(d):
            p1[k, i] = p1[k + 1, i] + h * p0[k + 1, i]
            vec[i] = h * v0[k + 1, i] + v1[k + 1, i]
            mus[i] = m0[k, i] + dl[k, i]
        _kappa(&Ev[0, 0, 0], &Pv[0, 0], d, m, -h, &Bk[0], &Ak[0], &m0[k + 1, 0], &vec[0],
               &kap[0], &W[0], &Vh[0], &t1[0], &t2[0], &t3[0], &AVB[0])
        for i in range(d):
            p1[k, i] -= kap[i]
        _kappa(&Ev[0, 0, 0], &Pv[0, 0], d, m, h, &Ak[0], &Bk[0], &mus[0], &v1[k + 1, 0],
               &kap[0], &W[0], &Vh[0], &t1[0], &t2[0], &t3[0], &AVB[0])
        for i in range(d):
            p1[k, i] += kap[i]
        # V0, V1
        _matvec(&Gi[0, 0], &m1[k, 0], d, d, False, &tmp[0])
        _matvec(&Gi[0, 0], &p1[k, 0], d, d, False, &vec[0])
        for i in range(d):
            v0[k, i] = v0[k + 1, i] - tmp[i] + h * vec[i]
        if _inv(&Dmp[0], d, &Mi[0], &work[0]) != 0:
            raise SingularityError("singular Cayley derivative")
        _matvec(&Mi[0], &DV[0], d, d, False, &tmp[0])
        for i in range(d):
            v1[k, i] = -h * v0[k, i] + tmp[i]
