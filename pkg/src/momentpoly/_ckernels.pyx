# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: Wolfe minimum-norm point and the real double-bracket descent.

Same contracts as the numpy versions in ``_pykernels``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs
from libc.stdlib cimport malloc, free

cnp.import_array()


cdef int _solve(double* K, double* rhs, int m, int nrhs) noexcept nogil:
    # Gaussian elimination with partial pivoting; K is m x m row-major,
    # rhs is m x nrhs row-major and is overwritten by the solution.
    cdef int i, j, c, piv
    cdef double best, t, f
    for c in range(m):
        piv = c
        best = fabs(K[c * m + c])
        for i in range(c + 1, m):
            t = fabs(K[i * m + c])
            if t > best:
                best = t
                piv = i
        if best < 1e-300:
            return -1
        if piv != c:
            for j in range(m):
                t = K[c * m + j]; K[c * m + j] = K[piv * m + j]; K[piv * m + j] = t
            for j in range(nrhs):
                t = rhs[c * nrhs + j]; rhs[c * nrhs + j] = rhs[piv * nrhs + j]; rhs[piv * nrhs + j] = t
        for i in range(c + 1, m):
            f = K[i * m + c] / K[c * m + c]
            if f != 0.0:
                for j in range(c, m):
                    K[i * m + j] -= f * K[c * m + j]
                for j in range(nrhs):
                    rhs[i * nrhs + j] -= f * rhs[c * nrhs + j]
    for c in range(m - 1, -1, -1):
        for j in range(nrhs):
            t = rhs[c * nrhs + j]
            for i in range(c + 1, m):
                t -= K[c * m + i] * rhs[i * nrhs + j]
            rhs[c * nrhs + j] = t / K[c * m + c]
    return 0


cdef double _dot(const double* a, const double* b, int d) noexcept nogil:
    cdef double s = 0.0
    cdef int i
    for i in range(d):
        s += a[i] * b[i]
    return s


cdef int _affine_min_norm(const double* P, int d, int* S, int ns, double* K, double* v) noexcept nogil:
    cdef int m = ns + 1
    cdef int i, j
    for i in range(ns):
        for j in range(ns):
            K[i * m + j] = _dot(P + S[i] * d, P + S[j] * d, d)
        K[i * m + ns] = 1.0
        K[ns * m + i] = 1.0
        v[i] = 0.0
    K[ns * m + ns] = 0.0
    v[ns] = 1.0
    return _solve(K, v, m, 1)


cdef void _mnp(const double* P, int m, int d, double tol, int max_iter,
               double* x, double* wout, int* S, double* w, double* v, double* K) noexcept nogil:
    cdef int i, j, it, minor, ns, jmin, inS, ok, nkeep, argw
    cdef double scale = 1e-300, t, best, xx, theta, r, denom, wsum
    for i in range(m):
        t = _dot(P + i * d, P + i * d, d)
        if t > scale:
            scale = t
    jmin = 0
    best = _dot(P, P, d)
    for i in range(1, m):
        t = _dot(P + i * d, P + i * d, d)
        if t < best:
            best = t
            jmin = i
    ns = 1
    S[0] = jmin
    w[0] = 1.0
    for i in range(d):
        x[i] = P[jmin * d + i]
    for it in range(max_iter):
        xx = _dot(x, x, d)
        jmin = 0
        best = _dot(P, x, d)
        for i in range(1, m):
            t = _dot(P + i * d, x, d)
            if t < best:
                best = t
                jmin = i
        inS = 0
        for i in range(ns):
            if S[i] == jmin:
                inS = 1
        if xx - best <= tol * scale or inS:
            break
        S[ns] = jmin
        w[ns] = 0.0
        ns += 1
        for minor in range(ns + 2):
            if _affine_min_norm(P, d, S, ns, K, v) != 0:
                # degenerate active set: drop the newest point
                ns -= 1
                break
            ok = 1
            for i in range(ns):
                if v[i] <= 1e-15:
                    ok = 0
            if ok:
                for i in range(ns):
                    w[i] = v[i]
                break
            theta = 1.0
            for i in range(ns):
                if v[i] <= 1e-15:
                    denom = w[i] - v[i]
                    if denom > 0:
                        r = w[i] / denom
                        if r < theta:
                            theta = r
            for i in range(ns):
                w[i] = w[i] + theta * (v[i] - w[i])
            nkeep = 0
            for i in range(ns):
                if w[i] > 1e-15:
                    nkeep += 1
            if nkeep == ns:
                argw = 0
                for i in range(1, ns):
                    if w[i] < w[argw]:
                        argw = i
                w[argw] = 0.0
            j = 0
            wsum = 0.0
            for i in range(ns):
                if w[i] > 1e-15:
                    S[j] = S[i]
                    w[j] = w[i]
                    wsum += w[i]
                    j += 1
            ns = j
            for i in range(ns):
                w[i] /= wsum
        for i in range(d):
            x[i] = 0.0
        for j in range(ns):
            for i in range(d):
                x[i] += w[j] * P[S[j] * d + i]
    for i in range(m):
        wout[i] = 0.0
    for j in range(ns):
        wout[S[j]] = w[j]


def min_norm_point(double[:, ::1] P, double tol=1e-12, int max_iter=500):
    cdef int m = P.shape[0], d = P.shape[1]
    cdef int cap = m + 2
    x = np.zeros(d)
    wout = np.zeros(m)
    cdef double[::1] xv = x, wv = wout
    cdef int* S = <int*> malloc(cap * sizeof(int))
    cdef double* w = <double*> malloc(cap * sizeof(double))
    cdef double* v = <double*> malloc((cap + 1) * sizeof(double))
    cdef double* K = <double*> malloc((cap + 1) * (cap + 1) * sizeof(double))
    try:
        with nogil:
            _mnp(&P[0, 0], m, d, tol, max_iter, &xv[0], &wv[0], S, w, v, K)
    finally:
        free(S); free(w); free(v); free(K)
    return x, wout


def project_points(double[:, ::1] V, double[:, ::1] X, double tol=1e-12):
    cdef int m = V.shape[0], d = V.shape[1], N = X.shape[0]
    cdef int cap = m + 2
    cdef int i, j, a
    proj = np.empty((N, d))
    dist = np.empty(N)
    cdef double[:, ::1] pv = proj
    cdef double[::1] dv = dist
    cdef double* P = <double*> malloc(m * d * sizeof(double))
    cdef double* x = <double*> malloc(d * sizeof(double))
    cdef double* wout = <double*> malloc(m * sizeof(double))
    cdef int* S = <int*> malloc(cap * sizeof(int))
    cdef double* w = <double*> malloc(cap * sizeof(double))
    cdef double* v = <double*> malloc((cap + 1) * sizeof(double))
    cdef double* K = <double*> malloc((cap + 1) * (cap + 1) * sizeof(double))
    cdef double s
    try:
        with nogil:
            for a in range(N):
                for i in range(m):
                    for j in range(d):
                        P[i * d + j] = V[i, j] - X[a, j]
                _mnp(P, m, d, tol, 500, x, wout, S, w, v, K)
                s = 0.0
                for j in range(d):
                    pv[a, j] = x[j] + X[a, j]
                    s += x[j] * x[j]
                dv[a] = sqrt(s)
    finally:
        free(P); free(x); free(wout); free(S); free(w); free(v); free(K)
    return proj, dist


cdef void _matmul(const double* A, const double* B, double* C, int n) noexcept nogil:
    cdef int i, j, l
    cdef double s
    for i in range(n):
        for j in range(n):
            s = 0.0
            for l in range(n):
                s += A[i * n + l] * B[l * n + j]
            C[i * n + j] = s


cdef double _commutators(const double* A, const double* S, double* Om, int k, int n, double* g2) noexcept nogil:
    # Om_i = A_i S - S A_i; returns max_i ||Om_i||_F and stores sum_i ||Om_i||^2 in g2
    cdef int i, a, b, l, nn = n * n
    cdef double s, nrm, best = 0.0, tot = 0.0
    for i in range(k):
        nrm = 0.0
        for a in range(n):
            for b in range(n):
                s = 0.0
                for l in range(n):
                    s += A[i * nn + a * n + l] * S[l * n + b] - S[a * n + l] * A[i * nn + l * n + b]
                Om[i * nn + a * n + b] = s
                nrm += s * s
        tot += nrm
        nrm = sqrt(nrm)
        if nrm > best:
            best = nrm
    g2[0] = tot
    return best


cdef void _sum_factors(const double* A, double* S, int k, int n) noexcept nogil:
    cdef int i, j, nn = n * n
    for j in range(nn):
        S[j] = 0.0
    for i in range(k):
        for j in range(nn):
            S[j] += A[i * nn + j]


def double_bracket_descent(double[:, :, ::1] A0, double step=0.1, double tol=1e-9,
                           long max_steps=100000, double shrink=0.5, double grow=1.5,
                           double max_step=10.0, bint record=True):
    cdef int k = A0.shape[0], n = A0.shape[1]
    cdef int nn = n * n
    A_out = np.array(A0, copy=True)
    cdef double[:, :, ::1] Av = A_out
    cdef double* A = &Av[0, 0, 0]
    cdef long cap = (max_steps + 1) if record else 1
    f_tr = np.empty(cap)
    r_tr = np.empty(cap)
    cdef double[::1] fv = f_tr, rv = r_tr
    cdef double* S = <double*> malloc(nn * sizeof(double))
    cdef double* Om = <double*> malloc(k * nn * sizeof(double))
    cdef double* dA = <double*> malloc(k * nn * sizeof(double))
    cdef double* Km = <double*> malloc(nn * sizeof(double))
    cdef double* E = <double*> malloc(nn * sizeof(double))
    cdef double* T1 = <double*> malloc(nn * sizeof(double))
    cdef double* T2 = <double*> malloc(nn * sizeof(double))
    cdef double* dS = <double*> malloc(nn * sizeof(double))
    cdef double f, res, g2, h, df, t
    cdef long steps = 0, nrec = 0
    cdef int i, a, b, l, fail
    try:
        with nogil:
            _sum_factors(A, S, k, n)
            f = 0.5 * _dot(S, S, nn)
            res = _commutators(A, S, Om, k, n, &g2)
            if record:
                fv[0] = f; rv[0] = res; nrec = 1
            h = step
            while res > tol and steps < max_steps:
                fail = 0
                for i in range(k):
                    # E = (I - h Om/2)^{-1} (h Om) = Q - I
                    for a in range(n):
                        for b in range(n):
                            Km[a * n + b] = (1.0 if a == b else 0.0) - 0.5 * h * Om[i * nn + a * n + b]
                            E[a * n + b] = h * Om[i * nn + a * n + b]
                    if _solve(Km, E, n, n) != 0:
                        fail = 1
                        break
                    # dA = E A (I + E)^T + A E^T
                    _matmul(E, A + i * nn, T1, n)
                    for a in range(n):
                        for b in range(n):
                            t = T1[a * n + b]
                            for l in range(n):
                                t += T1[a * n + l] * E[b * n + l]
                            for l in range(n):
                                t += A[i * nn + a * n + l] * E[b * n + l]
                            T2[a * n + b] = t
                    for a in range(n):
                        for b in range(n):
                            dA[i * nn + a * n + b] = 0.5 * (T2[a * n + b] + T2[b * n + a])
                if fail:
                    h *= shrink
                    if h < 1e-14:
                        break
                    continue
                _sum_factors(dA, dS, k, n)
                df = _dot(S, dS, nn) + 0.5 * _dot(dS, dS, nn)
                if df <= -1e-4 * h * g2:
                    for l in range(k * nn):
                        A[l] += dA[l]
                    _sum_factors(A, S, k, n)
                    f = f + df
                    res = _commutators(A, S, Om, k, n, &g2)
                    steps += 1
                    if record:
                        fv[nrec] = f; rv[nrec] = res; nrec += 1
                    h = h * grow
                    if h > max_step:
                        h = max_step
                else:
                    h *= shrink
                    if h < 1e-14:
                        break
    finally:
        free(S); free(Om); free(dA); free(Km); free(E); free(T1); free(T2); free(dS)
    return A_out, f_tr[:nrec].copy(), r_tr[:nrec].copy(), steps, res <= tol, res
