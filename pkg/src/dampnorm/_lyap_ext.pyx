# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled quasi-triangular Lyapunov back-substitution.

Mirrors ``dampnorm._lyap_py.solve_quasi_triangular`` loop for loop.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef int _solve_small(double* K, double* b, int m) noexcept nogil:
    # Gaussian elimination with partial pivoting, m <= 4, row-major K.
    cdef int i, j, k, piv
    cdef double big, tmp, f
    for k in range(m):
        piv = k
        big = abs(K[k * m + k])
        for i in range(k + 1, m):
            if abs(K[i * m + k]) > big:
                big = abs(K[i * m + k])
                piv = i
        if big == 0.0:
            return 1
        if piv != k:
            for j in range(m):
                tmp = K[k * m + j]
                K[k * m + j] = K[piv * m + j]
                K[piv * m + j] = tmp
            tmp = b[k]
            b[k] = b[piv]
            b[piv] = tmp
        for i in range(k + 1, m):
            f = K[i * m + k] / K[k * m + k]
            for j in range(k, m):
                K[i * m + j] -= f * K[k * m + j]
            b[i] -= f * b[k]
    for i in range(m - 1, -1, -1):
        tmp = b[i]
        for j in range(i + 1, m):
            tmp -= K[i * m + j] * b[j]
        b[i] = tmp / K[i * m + i]
    return 0


def solve_quasi_triangular(T_in, C_in):
    """Solve ``T Y + Y T^T = C`` for quasi upper triangular ``T``, symmetric ``C``."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] Tarr = np.ascontiguousarray(T_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] Carr = np.ascontiguousarray(C_in, dtype=np.float64)
    cdef double[:, ::1] T = Tarr
    cdef double[:, ::1] C = Carr
    cdef Py_ssize_t n = T.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] Yarr = np.zeros((n, n))
    cdef double[:, ::1] Y = Yarr
    cdef cnp.ndarray[cnp.intp_t, ndim=1] bstart_arr = np.empty(n, dtype=np.intp)
    cdef cnp.ndarray[cnp.intp_t, ndim=1] bsize_arr = np.empty(n, dtype=np.intp)
    cdef Py_ssize_t[::1] bstart = bstart_arr
    cdef Py_ssize_t[::1] bsize = bsize_arr
    cdef Py_ssize_t nb = 0, k = 0
    cdef Py_ssize_t jb, ib, i0, i1, j0, j1, p, q, a, c, l, m
    cdef double s
    cdef double R[4]
    cdef double K[16]
    cdef int info = 0

    while k < n:
        bstart[nb] = k
        if k + 1 < n and T[k + 1, k] != 0.0:
            bsize[nb] = 2
            k += 2
        else:
            bsize[nb] = 1
            k += 1
        nb += 1

    with nogil:
        for jb in range(nb - 1, -1, -1):
            j0 = bstart[jb]
            q = bsize[jb]
            j1 = j0 + q
            for ib in range(jb, -1, -1):
                i0 = bstart[ib]
                p = bsize[ib]
                i1 = i0 + p
                # R[a, c] stored column-major: R[a + p * c]
                for c in range(q):
                    for a in range(p):
                        s = C[i0 + a, j0 + c]
                        for l in range(i1, n):
                            s -= T[i0 + a, l] * Y[l, j0 + c]
                        for l in range(j1, n):
                            s -= Y[i0 + a, l] * T[j0 + c, l]
                        R[a + p * c] = s
                m = p * q
                # K = I_q (x) Tii + Tjj (x) I_p, row-major m x m
                for a in range(m * m):
                    K[a] = 0.0
                for c in range(q):
                    for a in range(p):
                        for l in range(p):
                            K[(a + p * c) * m + (l + p * c)] += T[i0 + a, i0 + l]
                        for l in range(q):
                            K[(a + p * c) * m + (a + p * l)] += T[j0 + c, j0 + l]
                if _solve_small(K, R, <int>m) != 0:
                    info = 1
                    break
                for c in range(q):
                    for a in range(p):
                        Y[i0 + a, j0 + c] = R[a + p * c]
                        Y[j0 + c, i0 + a] = R[a + p * c]
            if info != 0:
                break
    if info != 0:
        raise ZeroDivisionError("singular diagonal block in Lyapunov kernel")
    return Yarr
