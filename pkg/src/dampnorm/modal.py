"""Modal (tilde) coordinates and first-order realizations.

With ``M = L2 L2^T``, ``K = L1 L1^T`` and ``L2^{-1} L1 = U2 Omega U1^T`` the
state ``x = (U1^T L1^T q, U2^T L2^T q')`` gives

    A = [[0, Omega], [-Omega, -Dt]],   Dt = U2^T L2^{-1} D L2^{-T} U2.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag, solve_triangular

from .errors import DimensionMismatch, SingularTransform
from .linalg import cholesky, svd


@dataclass(frozen=True)
class ModalForm:
    L1: np.ndarray
    L2: np.ndarray
    U1: np.ndarray
    U2: np.ndarray
    omega: np.ndarray
    order: str = "descending"

    @property
    def n(self):
        return self.omega.size

    @property
    def Omega(self):
        return np.diag(self.omega)

    @property
    def Ttilde1(self):
        return self.U1.T @ self.L1.T

    @property
    def Ttilde2(self):
        return self.U2.T @ self.L2.T

    @property
    def T(self):
        return block_diag(self.Ttilde1, self.Ttilde2)

    def _L2inv(self, X):
        return solve_triangular(self.L2, X, lower=True)

    def to_tilde_damping(self, D):
        """``U2^T L2^{-1} D L2^{-T} U2``."""
        W = self._L2inv(np.asarray(D, dtype=float))
        W = self._L2inv(W.T).T
        Dt = self.U2.T @ W @ self.U2
        return (Dt + Dt.T) / 2

    def from_tilde_damping(self, Dt):
        """Inverse of :meth:`to_tilde_damping`."""
        F = self.L2 @ self.U2
        D = F @ np.asarray(Dt, dtype=float) @ F.T
        return (D + D.T) / 2

    def tilde_input(self, B2):
        """``U2^T L2^{-1} B2``; also maps damper geometries."""
        B2 = np.asarray(B2, dtype=float)
        return self.U2.T @ self._L2inv(B2)

    def tilde_outputs(self, C1, C2):
        """``(C1 L1^{-T} U1, C2 L2^{-T} U2)``."""
        C1 = np.atleast_2d(np.asarray(C1, dtype=float))
        C2 = np.atleast_2d(np.asarray(C2, dtype=float))
        Ct1 = solve_triangular(self.L1, C1.T, lower=True).T @ self.U1
        Ct2 = solve_triangular(self.L2, C2.T, lower=True).T @ self.U2
        return Ct1, Ct2


@dataclass(frozen=True)
class StateSpace:
    """First-order realization ``x' = A x + B u, y = C x`` with ``x = diag(T1, T2) (q, q')``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    T1: np.ndarray
    T2: np.ndarray

    def __post_init__(self):
        N = self.A.shape[0]
        if self.A.shape != (N, N) or self.B.shape[0] != N or self.C.shape[1] != N:
            raise DimensionMismatch("inconsistent state-space dimensions")
        for a in (self.A, self.B, self.C):
            if not np.all(np.isfinite(a)):
                raise ValueError("state-space matrices must be finite")

    @property
    def T(self):
        return block_diag(self.T1, self.T2)


def modal_form(M, K, order="descending"):
    """Cholesky/SVD factors defining the tilde linearization.

    ``order`` selects how the frequencies are arranged; it matters only for
    measures that single out the first ``r`` modes.
    """
    if order not in ("descending", "ascending"):
        raise ValueError(f"order must be 'descending' or 'ascending', got {order!r}")
    L1 = cholesky(K)
    L2 = cholesky(M)
    U2, w, U1 = svd(solve_triangular(L2, L1, lower=True))
    if order == "ascending":
        U2, w, U1 = U2[:, ::-1], w[::-1], U1[:, ::-1]
    return ModalForm(L1=L1, L2=L2, U1=np.ascontiguousarray(U1), U2=np.ascontiguousarray(U2),
                     omega=np.ascontiguousarray(w), order=order)


def tilde_matrix(omega, Dt):
    """``[[0, Omega], [-Omega, -Dt]]``."""
    n = omega.size
    Om = np.diag(omega)
    A = np.zeros((2 * n, 2 * n))
    A[:n, n:] = Om
    A[n:, :n] = -Om
    A[n:, n:] = -np.asarray(Dt, dtype=float)
    return A


def tilde_system(mf, D, B2, C1, C2, tilde_damping=False):
    """State-space realization in tilde coordinates.

    With ``tilde_damping=True`` the argument ``D`` is already ``Dt``.
    """
    n = mf.n
    D = np.asarray(D, dtype=float)
    B2 = np.asarray(B2, dtype=float)
    if B2.ndim == 1:
        B2 = B2.reshape(-1, 1)
    if D.shape != (n, n) or B2.shape[0] != n:
        raise DimensionMismatch("damping or input matrix incompatible with the modal form")
    C1 = np.atleast_2d(C1)
    C2 = np.atleast_2d(C2)
    if C1.shape[1] != n or C2.shape[1] != n:
        raise DimensionMismatch("output matrices must have n columns")
    Dt = D if tilde_damping else mf.to_tilde_damping(D)
    A = tilde_matrix(mf.omega, Dt)
    B = np.vstack([np.zeros((n, B2.shape[1])), mf.tilde_input(B2)])
    C = block_diag(*mf.tilde_outputs(C1, C2))
    return StateSpace(A=A, B=B, C=C, T1=mf.Ttilde1, T2=mf.Ttilde2)


def _inv(T, label):
    T = np.asarray(T, dtype=float)
    if not np.isfinite(np.linalg.cond(T)) or np.linalg.cond(T) >= 1e12:
        raise SingularTransform(f"{label} is singular or ill-conditioned")
    return np.linalg.inv(T)


def linearize(model, D=None, T1=None, T2=None):
    """Realization for the state ``x1 = T1 q``, ``x2 = T2 q'``."""
    n = model.n
    if D is None:
        from .model import assemble_damping
        D = assemble_damping(model)
    T1 = np.eye(n) if T1 is None else np.asarray(T1, dtype=float)
    T2 = np.eye(n) if T2 is None else np.asarray(T2, dtype=float)
    if T1.shape != (n, n) or T2.shape != (n, n):
        raise DimensionMismatch("transforms must be n x n")
    T1i = _inv(T1, "T1")
    T2i = _inv(T2, "T2")
    M = model.M
    MiK = np.linalg.solve(M, model.K)
    MiD = np.linalg.solve(M, D)
    A = np.block([[np.zeros((n, n)), T1 @ T2i],
                  [-T2 @ MiK @ T1i, -T2 @ MiD @ T2i]])
    B = np.vstack([np.zeros((n, model.B2.shape[1])), T2 @ np.linalg.solve(M, model.B2)])
    C = block_diag(model.C1 @ T1i, model.C2 @ T2i)
    return StateSpace(A=A, B=B, C=C, T1=T1, T2=T2)
