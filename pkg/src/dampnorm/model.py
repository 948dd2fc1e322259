"""Second-order vibrational models ``M q'' + D q' + K q = B2 u``.

``D = D_int + sum_k v_k g_k g_k^T``: internal damping plus rank-one external
dampers with incidence vectors ``g_k``. Positions in the public builders are
1-based.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import BadIndex, DimensionMismatch, LengthMismatch, NegativeViscosity
from .linalg import cholesky, maxabs, sqrtm_spd, sym_eig


def _frozen(a, ndim=2):
    a = np.array(a, dtype=float)
    if a.ndim == 1 and ndim == 2:
        a = a.reshape(1, -1)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DamperElement:
    """Rank-one damper contributing ``viscosity * g g^T``."""

    geometry: np.ndarray
    viscosity: float = 0.0

    def __post_init__(self):
        g = np.array(self.geometry, dtype=float).reshape(-1)
        if not np.any(g):
            raise ValueError("damper geometry must be nonzero")
        if self.viscosity < 0:
            raise NegativeViscosity(f"viscosity {self.viscosity} < 0")
        g.setflags(write=False)
        object.__setattr__(self, "geometry", g)

    @classmethod
    def grounded(cls, i, n, viscosity=0.0):
        """Damper between mass ``i`` (1-based) and the ground."""
        if not 1 <= i <= n:
            raise BadIndex(f"position {i} outside 1..{n}")
        g = np.zeros(n)
        g[i - 1] = 1.0
        return cls(g, viscosity)

    @classmethod
    def connecting(cls, i, j, n, viscosity=0.0):
        """Damper between masses ``i`` and ``j`` (1-based)."""
        if not (1 <= i <= n and 1 <= j <= n) or i == j:
            raise BadIndex(f"invalid positions ({i}, {j}) for n={n}")
        g = np.zeros(n)
        g[i - 1] = 1.0
        g[j - 1] = -1.0
        return cls(g, viscosity)


@dataclass(frozen=True)
class SecondOrderModel:
    M: np.ndarray
    K: np.ndarray
    D_int: np.ndarray
    dampers: tuple = ()
    B2: np.ndarray = None
    C1: np.ndarray = None
    C2: np.ndarray = None
    name: str = field(default="model", compare=False)

    def __post_init__(self):
        M = _frozen(self.M)
        n = M.shape[0]
        K = _frozen(self.K)
        D_int = _frozen(self.D_int if self.D_int is not None else np.zeros((n, n)))
        for label, A in (("M", M), ("K", K), ("D_int", D_int)):
            if A.shape != (n, n):
                raise DimensionMismatch(f"{label} has shape {A.shape}, expected {(n, n)}")
        cholesky(M)
        cholesky(K)
        w = sym_eig(D_int).values
        if w.size and w[0] < -1e-12 * max(maxabs(D_int), 1e-14):
            raise ValueError("D_int is not positive semidefinite")
        B2 = np.eye(n) if self.B2 is None else np.asarray(self.B2, dtype=float)
        B2 = _frozen(B2.reshape(-1, 1) if B2.ndim == 1 else B2)
        C1 = _frozen(np.eye(n) if self.C1 is None else self.C1)
        C2 = _frozen(np.eye(n) if self.C2 is None else self.C2)
        if B2.shape[0] != n:
            raise DimensionMismatch(f"B2 must have {n} rows")
        for label, C in (("C1", C1), ("C2", C2)):
            if C.shape[1] != n:
                raise DimensionMismatch(f"{label} must have {n} columns")
        dampers = tuple(self.dampers)
        for d in dampers:
            if d.geometry.shape != (n,):
                raise DimensionMismatch("damper geometry length differs from n")
        for attr, val in (("M", M), ("K", K), ("D_int", D_int), ("B2", B2),
                          ("C1", C1), ("C2", C2), ("dampers", dampers)):
            object.__setattr__(self, attr, val)

    @property
    def n(self):
        return self.M.shape[0]

    @property
    def geometry(self):
        """``n x r`` matrix whose columns are the damper incidence vectors."""
        if not self.dampers:
            return np.zeros((self.n, 0))
        return np.column_stack([d.geometry for d in self.dampers])

    @property
    def viscosities(self):
        return np.array([d.viscosity for d in self.dampers])

    def with_dampers(self, dampers):
        return replace(self, dampers=tuple(dampers))

    def with_viscosities(self, viscosities):
        v = _check_viscosities(self, viscosities)
        return self.with_dampers(
            DamperElement(d.geometry, float(x)) for d, x in zip(self.dampers, v)
        )


def _check_viscosities(model, viscosities):
    v = np.asarray(viscosities, dtype=float).reshape(-1)
    if v.size != len(model.dampers):
        raise LengthMismatch(f"{v.size} viscosities for {len(model.dampers)} dampers")
    if np.any(v < 0):
        raise NegativeViscosity(f"negative viscosity in {v}")
    return v


def internal_damping_critical(M, K, factor=0.04):
    """``factor * M^{1/2} sqrt(M^{-1/2} K M^{-1/2}) M^{1/2}``."""
    M = np.asarray(M, dtype=float)
    Mh = sqrtm_spd(M)
    Mih = np.linalg.solve(Mh, np.eye(M.shape[0]))
    Mih = (Mih + Mih.T) / 2
    inner = Mih @ np.asarray(K, dtype=float) @ Mih
    D = factor * (Mh @ sqrtm_spd((inner + inner.T) / 2) @ Mh)
    return (D + D.T) / 2


def assemble_damping(model, viscosities=None):
    """``D_int + sum_k v_k g_k g_k^T``; defaults to the dampers' own viscosities."""
    if viscosities is None:
        v = model.viscosities
    else:
        v = _check_viscosities(model, viscosities)
    D = np.array(model.D_int, dtype=float)
    for d, vk in zip(model.dampers, v):
        D += vk * np.outer(d.geometry, d.geometry)
    return D


def tapered_masses(n):
    """Oscillator masses ``200 - 2i`` for ``i <= 50`` and ``i + 50`` beyond."""
    i = np.arange(1, n + 1)
    return np.where(i <= 50, 200.0 - 2 * i, i + 50.0)


def chain_stiffness(k):
    """Tridiagonal stiffness of a chain with ``len(k) - 1`` masses and springs ``k``."""
    k = np.asarray(k, dtype=float)
    n = k.size - 1
    K = np.diag(k[:-1] + k[1:])
    off = -k[1:-1]
    K += np.diag(off, 1) + np.diag(off, -1)
    return K


def _window(rows, n, start):
    # rows x n selector with an identity block starting at column `start` (1-based)
    if start < 1 or start + rows - 1 > n:
        raise BadIndex(f"output window {start}..{start + rows - 1} outside 1..{n}")
    C = np.zeros((rows, n))
    C[:, start - 1:start - 1 + rows] = np.eye(rows)
    return C


def build_oscillator(n=100, k=100.0, mass_rule="default", damper_positions=(27, 53),
                     b2_spec="default", c_spec="default", internal_factor=0.04,
                     viscosities=(0.0, 0.0)):
    """n-mass oscillator with ``n + 1`` springs and grounded dampers.

    Parameters
    ----------
    k : float or sequence
        Spring stiffness, scalar for all ``n + 1`` springs or a vector of them.
    mass_rule : ``"default"``, callable ``i -> m_i`` or sequence of masses.
    damper_positions : pair ``(i, j)``, 1-based, ``i < j``.
    b2_spec : ``"default"`` (``B2[0:5, 0:5] = diag(5,4,3,2,1)``) or a matrix.
    c_spec : ``"default"`` (10 outputs on masses ``n/2-4 .. n/2+5``), an int
        giving the first observed mass of the 10-wide window, or a matrix
        used for both ``C1`` and ``C2``.
    """
    if n < 2:
        raise BadIndex("oscillator needs n >= 2")
    i, j = damper_positions
    if not 1 <= i < j <= n:
        raise BadIndex(f"damper positions must satisfy 1 <= i < j <= n, got ({i}, {j})")
    if isinstance(mass_rule, str):
        if mass_rule != "default":
            raise ValueError(f"unknown mass rule {mass_rule!r}")
        m = tapered_masses(n)
    elif callable(mass_rule):
        m = np.array([mass_rule(t) for t in range(1, n + 1)], dtype=float)
    else:
        m = np.asarray(mass_rule, dtype=float)
    kv = np.full(n + 1, float(k)) if np.isscalar(k) else np.asarray(k, dtype=float)
    if kv.size != n + 1 or m.size != n:
        raise LengthMismatch("need n masses and n + 1 springs")
    M = np.diag(m)
    K = chain_stiffness(kv)
    if isinstance(b2_spec, str):
        if n < 5:
            raise BadIndex("default input matrix needs n >= 5")
        B2 = np.zeros((n, 5))
        B2[:5, :5] = np.diag([5.0, 4.0, 3.0, 2.0, 1.0])
    else:
        B2 = np.asarray(b2_spec, dtype=float)
    if isinstance(c_spec, str):
        C = _window(10, n, n // 2 - 4)
    elif isinstance(c_spec, (int, np.integer)):
        C = _window(10, n, int(c_spec))
    else:
        C = np.asarray(c_spec, dtype=float)
    dampers = [DamperElement.grounded(i, n, viscosities[0]),
               DamperElement.grounded(j, n, viscosities[1])]
    return SecondOrderModel(M=M, K=K, D_int=internal_damping_critical(M, K, internal_factor),
                            dampers=dampers, B2=B2, C1=C, C2=C, name="oscillator")


FRAME_MASSES = (4000.0, 3000.0, 2000.0, 1000.0, 800.0)
FRAME_STIFFNESS = (3.375e6, 3.75e6, 3.375e6, 3e6, 2.25e6)


def build_frame(internal_factor=0.04, viscosity=0.0):
    """Five-story shear frame with one damper between floors 2 and 3."""
    k = np.array(FRAME_STIFFNESS)
    # free top: no spring above floor 5
    K = chain_stiffness(np.r_[k, 0.0])
    M = np.diag(FRAME_MASSES)
    B2 = np.array([[5000.0], [0.0], [0.0], [0.0], [0.0]])
    C = np.array([[0.0, 0.0, 0.0, 0.0, 100.0]])
    return SecondOrderModel(M=M, K=K, D_int=internal_damping_critical(M, K, internal_factor),
                            dampers=[DamperElement.connecting(2, 3, 5, viscosity)],
                            B2=B2, C1=C, C2=C.copy(), name="frame")
