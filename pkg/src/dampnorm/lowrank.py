"""Fast criterion evaluation for a few dampers on a fixed base system.

For ``A(v) = A0 - Bd diag(v) Bd^T`` the solution of ``A X + X A^T = -Q`` is
``X = X0 + Y`` where ``X0`` solves the base equation and ``Y`` is driven by the
rank-``2r`` correction. Diagonalizing ``A0 = S Lam S^{-1}`` turns the base solve
into a Hadamard product with the Cauchy matrix ``1 / (lam_i + lam_j)`` and the
correction into an ``r N`` linear system, so each evaluation costs one dense
solve of size ``r N`` instead of a Schur decomposition of size ``N``.

The reduction is exact whenever ``A0`` is stable and diagonalizable. Adding
nonnegative damping to a stable mechanical base keeps it stable, so no
per-evaluation stability check is needed. Use :func:`usable` before building
an evaluator; ill-conditioned eigenvector bases fall back to the dense path.
"""

import numpy as np

from .errors import SingularTransform, UnstableSystem
from .linalg import STABILITY_MARGIN

COND_LIMIT = 1e8


class LowRankBase:
    """Spectral data of the base matrix shared by all damper geometries.

    Parameters
    ----------
    A0 : ndarray, shape (N, N)
        Stable base system matrix.
    W : ndarray, shape (N, N)
        Symmetric weight in ``Tr(W X)``.
    Q_terms : sequence of ndarray
        Right-hand-side terms; an evaluation combines them with weights.
    """

    def __init__(self, A0, W, Q_terms, cond_limit=COND_LIMIT):
        A0 = np.asarray(A0, dtype=float)
        lam, S = np.linalg.eig(A0)
        if lam.real.max() >= -STABILITY_MARGIN:
            raise UnstableSystem("base system is not stable")
        cond = np.linalg.cond(S)
        if not np.isfinite(cond) or cond > cond_limit:
            raise SingularTransform(f"eigenvector basis too ill-conditioned (cond={cond:.2e})")
        self.N = A0.shape[0]
        self.S = S
        self.Si = np.linalg.inv(S)
        self.cauchy = 1.0 / (lam[:, None] + lam[None, :])
        PC = (S.T @ np.asarray(W, dtype=float) @ S) * self.cauchy
        self._PC = PC
        self.Qh = [self.Si @ np.asarray(Q, dtype=float) @ self.Si.T for Q in Q_terms]
        self.base_traces = np.array([-np.sum(PC * Qh).real for Qh in self.Qh])

    def geometry(self, Bd):
        """Evaluator for the damper columns ``Bd`` (``N x r``)."""
        return LowRankEvaluator(self, Bd)


class LowRankEvaluator:
    """``trace(v, weights)`` for a fixed damper geometry."""

    def __init__(self, base, Bd):
        Bd = np.asarray(Bd, dtype=float)
        if Bd.ndim == 1:
            Bd = Bd[:, None]
        N, r = base.N, Bd.shape[1]
        self.r = r
        Bh = base.Si @ Bd
        Bt = base.S.T @ Bd
        Ch = base.cauchy
        # block-diagonal part: G[j, k, l] = sum_i Bt[i, k] Ch[i, j] Bh[i, l]
        G = np.einsum("ik,ij,il->jkl", Bt, Ch, Bh)
        Mt = np.einsum("ik,ij,jl->kjli", Bt, Ch, Bh).reshape(r * N, r * N)
        idx = np.arange(N)
        for k in range(r):
            for l in range(r):
                Mt[k * N + idx, l * N + idx] += G[:, k, l]
        E = (Bh.T @ base._PC).reshape(-1)
        # back to real coordinates: blockdiag(S) Mt blockdiag(S^-1)
        S, Si = base.S, base.Si
        Mr = np.empty((r * N, r * N))
        for k in range(r):
            for l in range(r):
                blk = Mt[k * N:(k + 1) * N, l * N:(l + 1) * N]
                Mr[k * N:(k + 1) * N, l * N:(l + 1) * N] = (S @ blk @ Si).real
        self.M = Mr
        self.e = np.concatenate([(E[k * N:(k + 1) * N] @ Si).real for k in range(r)])
        self.f = []
        for Qh in base.Qh:
            F = np.einsum("ik,ij,ij->kj", Bt, Ch, Qh)
            self.f.append(np.concatenate([(S @ F[k]).real for k in range(r)]))
        self.t = base.base_traces
        self.N = N
        self._eye = np.eye(r * N)

    def trace(self, v, weights=None):
        """``Tr(W X)`` for viscosities ``v``; ``weights`` combine the RHS terms."""
        v = np.asarray(v, dtype=float).reshape(-1)
        if v.size != self.r:
            raise ValueError(f"expected {self.r} viscosities, got {v.size}")
        w = np.ones(len(self.f)) if weights is None else np.asarray(weights, dtype=float)
        f = sum(wi * fi for wi, fi in zip(w, self.f))
        vv = np.repeat(v, self.N)
        T = self._eye - vv[:, None] * self.M
        y = np.linalg.solve(T, -vv * f)
        return float(w @ self.t + 2.0 * self.e @ y)

    def value(self, v, weights=None):
        """``sqrt(max(trace, 0))``."""
        return float(np.sqrt(max(self.trace(v, weights), 0.0)))


def usable(A0, cond_limit=COND_LIMIT):
    """Whether a :class:`LowRankBase` can be built for ``A0``."""
    try:
        lam, S = np.linalg.eig(np.asarray(A0, dtype=float))
    except np.linalg.LinAlgError:
        return False
    if lam.real.max() >= -STABILITY_MARGIN:
        return False
    c = np.linalg.cond(S)
    return bool(np.isfinite(c) and c <= cond_limit)
