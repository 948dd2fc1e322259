"""Dense linear-algebra kernels.

Factorizations and eigensolvers are thin, validated wrappers around
NumPy/LAPACK. The Lyapunov solver is a Bartels-Stewart implementation on top of
the real Schur form; its back-substitution runs in ``dampnorm._kernels``.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from . import _kernels
from .errors import (
    ConvergenceFailure,
    DimensionMismatch,
    DimensionTooLarge,
    NotPositiveDefinite,
    SingularSystem,
    UnstableSystem,
)

#: stability gate applied before every Lyapunov solve
STABILITY_MARGIN = 1e-12
_FLOOR = 1e-14


def maxabs(A):
    """``max |a_ij|`` (0 for empty input)."""
    A = np.asarray(A)
    return float(np.max(np.abs(A))) if A.size else 0.0


def _square(S, name="matrix"):
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {S.shape}")
    if not np.all(np.isfinite(S)):
        raise ValueError(f"{name} has non-finite entries")
    return S


def _check_symmetric(S, tol=1e-12, name="matrix"):
    scale = max(maxabs(S), _FLOOR)
    if maxabs(S - S.T) > tol * scale:
        raise ValueError(f"{name} is not symmetric")


@dataclass(frozen=True)
class SymEig:
    """Eigen-decomposition of a symmetric matrix, values ascending."""

    values: np.ndarray
    vectors: np.ndarray


def cholesky(S):
    """Lower Cholesky factor ``L`` with ``S = L L^T``.

    Raises
    ------
    NotPositiveDefinite
        When a pivot is ``<= 1e-14 * max|S|``.
    """
    S = _square(S)
    _check_symmetric(S)
    scale = max(maxabs(S), _FLOOR)
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("matrix is not positive definite") from exc
    if np.min(np.diag(L)) ** 2 <= 1e-14 * scale:
        raise NotPositiveDefinite("Cholesky pivot below 1e-14*max|S|")
    return L


def sym_eig(S):
    """Symmetric eigen-decomposition with ascending eigenvalues."""
    S = _square(S)
    _check_symmetric(S, tol=1e-10)
    try:
        w, V = np.linalg.eigh((S + S.T) / 2)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure("symmetric eigensolver did not converge") from exc
    return SymEig(values=w, vectors=V)


def sqrtm_spd(S):
    """Principal (symmetric positive definite) square root of an SPD matrix."""
    eig = sym_eig(S)
    scale = max(maxabs(S), _FLOOR)
    if eig.values[0] <= _FLOOR * scale:
        raise NotPositiveDefinite("matrix is not positive definite")
    V = eig.vectors
    R = (V * np.sqrt(eig.values)) @ V.T
    return (R + R.T) / 2


def svd(A):
    """``(U, s, V)`` with ``A = U diag(s) V^T`` and ``s`` descending."""
    A = np.asarray(A, dtype=float)
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    try:
        U, s, Vt = np.linalg.svd(A)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure("SVD did not converge") from exc
    return U, s, Vt.T


def spectral_abscissa(A):
    """Largest real part over the eigenvalues of ``A``."""
    A = _square(A)
    try:
        ev = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure("eigenvalue iteration did not converge") from exc
    return float(np.max(ev.real))


def _check_orientation(orientation):
    if orientation not in ("control", "observe"):
        raise ValueError(f"orientation must be 'control' or 'observe', got {orientation!r}")


def _prepare(A, Q, orientation):
    _check_orientation(orientation)
    A = _square(A, "A")
    Q = _square(Q, "Q")
    if A.shape != Q.shape:
        raise DimensionMismatch(f"A is {A.shape} but Q is {Q.shape}")
    _check_symmetric(Q, tol=1e-10, name="Q")
    return A, (Q + Q.T) / 2


def solve_lyapunov(A, Q, orientation="control", check_stability=True):
    """Solve a Lyapunov equation by Bartels-Stewart.

    ``control``: ``A X + X A^T = -Q``; ``observe``: ``A^T X + X A = -Q``.
    The returned solution is symmetrized.
    """
    A, Q = _prepare(A, Q, orientation)
    if check_stability:
        alpha = spectral_abscissa(A)
        if alpha >= -STABILITY_MARGIN:
            raise UnstableSystem(f"spectral abscissa {alpha:.3e} >= -{STABILITY_MARGIN:g}")
    if orientation == "observe":
        A = A.T
    try:
        T, U = la.schur(A, output="real")
    except la.LinAlgError as exc:
        raise ConvergenceFailure("real Schur decomposition failed") from exc
    C = -(U.T @ Q @ U)
    C = (C + C.T) / 2
    try:
        Y = _kernels.solve_quasi_triangular(T, C)
    except ZeroDivisionError as exc:
        raise UnstableSystem("A and -A share an eigenvalue") from exc
    X = U @ Y @ U.T
    return (X + X.T) / 2


def lyapunov_residual(A, X, Q, orientation="control"):
    """Relative residual ``max|AX + XA^T + Q| / max(1, max|Q|)``."""
    A = np.asarray(A, dtype=float)
    if orientation == "observe":
        A = A.T
    R = A @ X + X @ A.T + Q
    return maxabs(R) / max(1.0, maxabs(Q))


def kron_lyap_oracle(A, Q, orientation="control"):
    """Solve the Lyapunov equation through its vectorized ``n^2 x n^2`` form.

    Test oracle only; limited to ``n <= 30``.
    """
    A, Q = _prepare(A, Q, orientation)
    n = A.shape[0]
    if n > 30:
        raise DimensionTooLarge(f"n={n} exceeds the oracle limit of 30")
    if orientation == "observe":
        A = A.T
    I = np.eye(n)
    # vec(AX + XA^T) = (I (x) A + A (x) I) vec(X), column-major vec
    L = np.kron(I, A) + np.kron(A, I)
    if n and np.linalg.cond(L) > 1e14:
        raise SingularSystem("Kronecker Lyapunov operator is singular")
    try:
        x = np.linalg.solve(L, -Q.reshape(-1, order="F"))
    except np.linalg.LinAlgError as exc:
        raise SingularSystem("Kronecker Lyapunov operator is singular") from exc
    X = x.reshape((n, n), order="F")
    return (X + X.T) / 2
