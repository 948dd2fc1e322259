"""NumPy implementation of the quasi-triangular Lyapunov back-substitution.

Same algorithm as the compiled ``_lyap_ext`` kernel; used when the extension
is not built or when ``DAMPNORM_PURE=1``.
"""

import numpy as np


def schur_blocks(T):
    """Return ``(start, size)`` pairs of the diagonal blocks of a real Schur form."""
    n = T.shape[0]
    blocks = []
    k = 0
    while k < n:
        if k + 1 < n and T[k + 1, k] != 0.0:
            blocks.append((k, 2))
            k += 2
        else:
            blocks.append((k, 1))
            k += 1
    return blocks


def _small_sylvester(Tii, Tjj, R):
    p, q = R.shape
    K = np.kron(np.eye(q), Tii) + np.kron(Tjj, np.eye(p))
    try:
        y = np.linalg.solve(K, R.reshape(-1, order="F"))
    except np.linalg.LinAlgError as exc:
        raise ZeroDivisionError("singular diagonal block in Lyapunov kernel") from exc
    return y.reshape((p, q), order="F")


def solve_quasi_triangular(T, C):
    """Solve ``T Y + Y T^T = C`` for quasi upper triangular ``T``, symmetric ``C``.

    Only the upper block triangle is computed; the lower one is mirrored.
    """
    T = np.ascontiguousarray(T, dtype=float)
    C = np.ascontiguousarray(C, dtype=float)
    n = T.shape[0]
    Y = np.zeros((n, n))
    blocks = schur_blocks(T)
    for jb in range(len(blocks) - 1, -1, -1):
        j0, q = blocks[jb]
        j1 = j0 + q
        Tjj = T[j0:j1, j0:j1]
        for ib in range(jb, -1, -1):
            i0, p = blocks[ib]
            i1 = i0 + p
            R = C[i0:i1, j0:j1].copy()
            if i1 < n:
                R -= T[i0:i1, i1:] @ Y[i1:, j0:j1]
            if j1 < n:
                R -= Y[i0:i1, j1:] @ T[j0:j1, j1:].T
            Yij = _small_sylvester(T[i0:i1, i0:i1], Tjj, R)
            if ib == jb:
                Yij = (Yij + Yij.T) / 2
            Y[i0:i1, j0:j1] = Yij
            Y[j0:j1, i0:i1] = Yij.T
    return Y
