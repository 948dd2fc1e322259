"""Standard, homogeneous and p-mixed H2 criteria.

All criteria have the form ``sqrt(Tr(W X))`` with ``A X + X A^T = -Q``:

==============  ==========================  ===========
flavor          Q                           W
==============  ==========================  ===========
standard_h2     B B^T                       C^T C
homogeneous     Z_sigma                     C^T C
mixed           p Z_sigma + (1-p) B B^T     C^T C
simplified      diag(p Z1, Z1)  (tilde)     diag(Z1, Z1)
==============  ==========================  ===========

``Z_sigma = T Zhat T^T`` is the initial-data measure expressed in the frame of
the realization ``x = T (q, q')``.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag

from .errors import InvalidP, NumericalInconsistency, ValidationError
from .linalg import maxabs, solve_lyapunov
from .modal import modal_form, tilde_matrix, tilde_system
from .model import assemble_damping

FLAVORS = ("standard_h2", "homogeneous", "mixed", "simplified")
MEASURE_KINDS = ("lebesgue", "dangerous", "explicit")
FRAMES = ("original", "tilde")


@dataclass(frozen=True)
class MeasureSpec:
    """Initial-condition measure on the unit sphere of ``(q0, q0')``.

    ``lebesgue``
        ``scale * I / (2n)`` in ``frame`` (default: original coordinates).
    ``dangerous``
        ``scale / (2n) * diag(Z1, Z1)`` in tilde coordinates,
        ``Z1 = diag(I_r, 0)``.
    ``explicit``
        ``scale * matrix`` given in ``frame``.
    """

    kind: str = "lebesgue"
    frame: str = "original"
    r: int = None
    matrix: np.ndarray = None
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in MEASURE_KINDS:
            raise ValidationError("measure", f"unknown kind {self.kind!r}")
        if self.frame not in FRAMES:
            raise ValidationError("frame", f"unknown frame {self.frame!r}")
        if self.kind == "dangerous":
            if self.r is None or self.r < 0:
                raise ValidationError("r", "dangerous-subspace measure needs r >= 0")
            object.__setattr__(self, "frame", "tilde")
        if self.kind == "explicit":
            if self.matrix is None:
                raise ValidationError("matrix", "explicit measure needs a matrix")
            Z = np.array(self.matrix, dtype=float)
            if Z.ndim != 2 or Z.shape[0] != Z.shape[1]:
                raise ValidationError("matrix", "measure matrix must be square")
            if maxabs(Z - Z.T) > 1e-12 * max(maxabs(Z), 1e-14):
                raise ValidationError("matrix", "measure matrix must be symmetric")
            if np.linalg.eigvalsh((Z + Z.T) / 2).min() < -1e-12 * max(maxabs(Z), 1e-14):
                raise ValidationError("matrix", "measure matrix must be PSD")
            Z.setflags(write=False)
            object.__setattr__(self, "matrix", Z)
        if not self.scale >= 0:
            raise ValidationError("scale", "measure scale must be >= 0")

    @classmethod
    def lebesgue(cls, frame="original", scale=1.0):
        return cls(kind="lebesgue", frame=frame, scale=scale)

    @classmethod
    def dangerous(cls, r, scale=1.0):
        return cls(kind="dangerous", r=r, scale=scale)

    @classmethod
    def explicit(cls, matrix, frame="original", scale=1.0):
        return cls(kind="explicit", matrix=matrix, frame=frame, scale=scale)

    def z1(self, n):
        """Diagonal of ``Z1`` (selected modes) for an order-``n`` system."""
        d = np.ones(n)
        if self.kind == "dangerous":
            d[min(self.r, n):] = 0.0
        return d

    def native(self, n):
        """The measure matrix in its own frame (``2n x 2n``)."""
        if self.kind == "lebesgue":
            return self.scale / (2 * n) * np.eye(2 * n)
        if self.kind == "dangerous":
            z = self.z1(n)
            return self.scale / (2 * n) * np.diag(np.r_[z, z])
        if self.matrix.shape != (2 * n, 2 * n):
            raise ValidationError("matrix", f"measure must be {2 * n}x{2 * n}")
        return self.scale * self.matrix

    def zhat(self, n, mf=None):
        """``Zhat_sigma`` in original ``(q0, q0')`` coordinates."""
        Z = self.native(n)
        if self.frame == "original":
            return Z
        if mf is None:
            raise ValueError("a tilde-frame measure needs the modal form")
        Ti = np.linalg.inv(mf.T)
        return Ti @ Z @ Ti.T

    def in_frame(self, T, mf=None):
        """``Z_sigma = T Zhat T^T`` for the realization with state transform ``T``."""
        n = T.shape[0] // 2
        if self.frame == "tilde" and mf is not None:
            R = T @ np.linalg.inv(mf.T)
            Z = R @ self.native(n) @ R.T
        else:
            Z = T @ self.zhat(n, mf) @ T.T
        return (Z + Z.T) / 2


@dataclass(frozen=True)
class CriterionSpec:
    flavor: str = "mixed"
    p: float = 0.0
    measure: MeasureSpec = MeasureSpec()

    def __post_init__(self):
        if self.flavor not in FLAVORS:
            raise ValidationError("flavor", f"unknown flavor {self.flavor!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ValidationError("p", f"p={self.p} outside [0, 1]")


def _sqrt_trace(W, X):
    tr = float(np.sum(W * X))
    if tr < 0:
        tol = 1e-12 * max(1.0, maxabs(W) * maxabs(X) * W.shape[0])
        if tr < -tol:
            raise NumericalInconsistency(f"negative trace {tr:.3e}")
        tr = 0.0
    return np.sqrt(tr)


def h2_norm(ss):
    """``sqrt(Tr(C^T C X))`` with ``A X + X A^T = -B B^T``."""
    X = solve_lyapunov(ss.A, ss.B @ ss.B.T)
    return _sqrt_trace(ss.C.T @ ss.C, X)


def h2_norm_dual(ss):
    """``sqrt(Tr(B^T X B))`` with ``A^T X + X A = -C^T C``."""
    X = solve_lyapunov(ss.A, ss.C.T @ ss.C, orientation="observe")
    return _sqrt_trace(ss.B @ ss.B.T, X)


def h2_norm_hom(ss, measure, mf=None):
    """Homogeneous H2 norm ``sqrt(Tr(C^T C Y))``, ``A Y + Y A^T = -Z_sigma``."""
    Z = measure.in_frame(ss.T, mf)
    Y = solve_lyapunov(ss.A, Z)
    return _sqrt_trace(ss.C.T @ ss.C, Y)


def mixed_h2_norm(ss, spec, mf=None):
    """p-mixed H2 norm from one Lyapunov solve on ``p Z_sigma + (1-p) B B^T``."""
    p = spec.p
    Q = (1.0 - p) * (ss.B @ ss.B.T)
    if p > 0:
        Q = Q + p * spec.measure.in_frame(ss.T, mf)
    X = solve_lyapunov(ss.A, Q)
    return _sqrt_trace(ss.C.T @ ss.C, X)


def _z1_diag(Z1, n):
    Z1 = np.asarray(Z1, dtype=float)
    z = np.diag(Z1) if Z1.ndim == 2 else Z1.reshape(-1)
    if z.size != n:
        raise ValueError(f"Z1 must have {n} diagonal entries")
    return z


def simplified_criterion(mf, Dtilde, p, Z1=None):
    """``sqrt(Tr(Z X))``, ``At X + X At^T = -diag(p Z1, Z1)``, ``Z = diag(Z1, Z1)``."""
    omega = mf.omega if hasattr(mf, "omega") else np.asarray(mf, dtype=float)
    n = omega.size
    z = np.ones(n) if Z1 is None else _z1_diag(Z1, n)
    if not 0.0 <= p <= 1.0:
        raise InvalidP(f"p={p} outside [0, 1]")
    A = tilde_matrix(omega, Dtilde)
    X = solve_lyapunov(A, np.diag(np.r_[p * z, z]))
    return _sqrt_trace(np.diag(np.r_[z, z]), X)


@dataclass(frozen=True)
class TildeProblem:
    """``A(v) = A_int - Bd diag(v) Bd^T``; criterion ``sqrt(Tr(W X))``, ``A X + X A^T = -Q``.

    ``Q = sum_k weights[k] * Q_terms[k]``; the split lets spectral setup be
    shared between different values of ``p``.
    """

    A_int: np.ndarray
    Bd: np.ndarray
    Q_terms: tuple
    weights: tuple
    W: np.ndarray

    @property
    def Q(self):
        Q = sum(w * T for w, T in zip(self.weights, self.Q_terms))
        return (Q + Q.T) / 2

    def matrix(self, v):
        v = np.asarray(v, dtype=float)
        return self.A_int - (self.Bd * v) @ self.Bd.T


def criterion_weights(spec):
    """Weights of the right-hand-side terms produced by :func:`tilde_problem`."""
    p = spec.p
    if spec.flavor == "simplified":
        return (p, 1.0)
    if spec.flavor == "standard_h2":
        return (1.0,)
    if spec.flavor == "homogeneous":
        return (1.0,)
    return (p, 1.0 - p)


def tilde_problem(model, spec, mf=None, geometry=None):
    """Criterion data in tilde coordinates for a model with variable viscosities.

    ``geometry`` overrides the damper incidence vectors (``n x r``).
    """
    mf = modal_form(model.M, model.K) if mf is None else mf
    n = model.n
    G = model.geometry if geometry is None else np.asarray(geometry, dtype=float)
    Gt = mf.tilde_input(G)
    Bd = np.vstack([np.zeros_like(Gt), Gt])
    A_int = tilde_matrix(mf.omega, mf.to_tilde_damping(model.D_int))
    wts = criterion_weights(spec)
    if spec.flavor == "simplified":
        z = spec.measure.z1(n)
        zero = np.zeros(n)
        terms = (np.diag(np.r_[z, zero]), np.diag(np.r_[zero, z]))
        return TildeProblem(A_int, Bd, terms, wts, np.diag(np.r_[z, z]))
    ss = tilde_system(mf, model.D_int, model.B2, model.C1, model.C2)
    W = ss.C.T @ ss.C
    BB = ss.B @ ss.B.T
    if spec.flavor == "standard_h2":
        terms = (BB,)
    elif spec.flavor == "homogeneous":
        terms = (spec.measure.in_frame(ss.T, mf),)
    else:
        terms = (spec.measure.in_frame(ss.T, mf), BB)
    return TildeProblem(A_int, Bd, terms, wts, W)


def criterion_value(model, spec, viscosities=None, mf=None):
    """Evaluate ``spec`` for ``model`` (dense route through the tilde realization)."""
    mf = modal_form(model.M, model.K) if mf is None else mf
    D = assemble_damping(model, viscosities)
    if spec.flavor == "simplified":
        return simplified_criterion(mf, mf.to_tilde_damping(D), spec.p, spec.measure.z1(model.n))
    ss = tilde_system(mf, D, model.B2, model.C1, model.C2)
    if spec.flavor == "standard_h2":
        return h2_norm(ss)
    if spec.flavor == "homogeneous":
        return h2_norm_hom(ss, spec.measure, mf)
    return mixed_h2_norm(ss, spec, mf)


def dense_value(problem, v):
    """Dense Bartels-Stewart evaluation of a :class:`TildeProblem`."""
    X = solve_lyapunov(problem.matrix(v), problem.Q)
    return _sqrt_trace(problem.W, X)


def block_measure(n, z):
    """``diag(z, z)`` as a ``2n x 2n`` matrix (helper for explicit measures)."""
    return block_diag(np.diag(z), np.diag(z))
