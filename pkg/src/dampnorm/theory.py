"""Closed-form optimal modal damping and supporting demonstrations."""

from dataclasses import dataclass, field

import numpy as np

from .criteria import h2_norm, simplified_criterion
from .errors import DampNormError, InvalidP, UnstableSystem
from .modal import modal_form, tilde_system


@dataclass(frozen=True)
class TheoremReport:
    """Outcome of :func:`verify_global_optimum`.

    ``value_at_star`` and ``theoretical_min`` are both ``Tr X`` (the squared
    simplified criterion with all modes selected).
    """

    p: float
    omega: np.ndarray
    d_star: np.ndarray
    value_at_star: float
    theoretical_min: float
    perturbation_trials: int
    violations: int
    min_perturbed: float
    notes: tuple = field(default_factory=tuple)

    @property
    def ok(self):
        rel = abs(self.value_at_star - self.theoretical_min) / self.theoretical_min
        return self.violations == 0 and rel <= 1e-8


def _omega(Omega):
    w = np.asarray(Omega, dtype=float)
    if w.ndim == 2:
        w = np.diag(w)
    w = w.reshape(-1)
    if w.size == 0 or np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise ValueError("frequencies must be positive and finite")
    return w


def _check_p(p):
    if not (p > 0 and p <= 1):
        raise InvalidP(f"p={p} must lie in (0, 1]; for p <= 0 the optimal damping diverges")


def optimal_modal_damping(Omega, p):
    """Globally optimal tilde damping ``sqrt(2(1+p)/p) * Omega`` (diagonal matrix)."""
    _check_p(p)
    return np.diag(np.sqrt(2.0 * (1.0 + p) / p) * _omega(Omega))


def theoretical_minimum(Omega, p):
    """Minimal ``Tr X``: ``sqrt(2p(1+p)) * sum(1 / omega_i)``."""
    _check_p(p)
    return float(np.sqrt(2.0 * p * (1.0 + p)) * np.sum(1.0 / _omega(Omega)))


def verify_global_optimum(M, K, p, trials=100, seed=0, eps=None):
    """Check optimality of the closed form against random competitors.

    Competitors are ``D* + G G^T`` for random ``G`` (rank 1 to n) and random
    positive diagonal rescalings of ``D*``. A competitor whose ``Tr X`` drops
    below the minimum by more than ``1e-8`` counts as a violation.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    mf = modal_form(M, K)
    w = mf.omega
    n = w.size
    Dstar = optimal_modal_damping(w, p)
    tmin = theoretical_minimum(w, p)
    at_star = simplified_criterion(mf, Dstar, p) ** 2
    notes = ()
    if p == 1:
        notes = ("p = 1 lies outside 0 < p < 1, where the optimum is known to be unique",)

    rng = np.random.default_rng(seed)
    scale = np.max(np.diag(Dstar))
    violations = 0
    worst = np.inf
    for t in range(trials):
        if t % 2 == 0:
            k = int(rng.integers(1, n + 1))
            G = rng.standard_normal((n, k))
            amp = scale * (10.0 ** rng.uniform(-3, 0) if eps is None else eps)
            D = Dstar + amp * (G @ G.T) / k
        else:
            D = np.diag(np.diag(Dstar) * np.exp(rng.uniform(-1.0, 1.0, n)))
        val = simplified_criterion(mf, D, p) ** 2
        worst = min(worst, val)
        if val < tmin - 1e-8:
            violations += 1
    return TheoremReport(p=float(p), omega=w, d_star=np.diag(Dstar), value_at_star=float(at_star),
                         theoretical_min=tmin, perturbation_trials=int(trials),
                         violations=violations, min_perturbed=float(worst), notes=notes)


def modal_family_damping(mf, alpha):
    """Original-coordinate damping whose tilde form is ``alpha * Omega``."""
    if not alpha > 0:
        raise UnstableSystem(f"alpha={alpha} gives an undamped system")
    return mf.from_tilde_damping(alpha * mf.Omega)


def has_feedthrough(model):
    """Whether ``C2 B2 != 0`` (velocity outputs see the input directly)."""
    scale = np.max(np.abs(model.C2), initial=0.0) * np.max(np.abs(model.B2), initial=0.0)
    return bool(scale > 0 and np.max(np.abs(model.C2 @ model.B2)) > 1e-14 * scale)


def alpha_decay_curve(model, alphas):
    """Standard H2 norm along ``Dt(alpha) = alpha * Omega``.

    Returns a list of ``(alpha, norm)``. The model must have ``C2 B2 != 0``;
    otherwise the norm need not vanish and the curve shows nothing.
    """
    if not has_feedthrough(model):
        raise DampNormError("C2 B2 = 0: the decay demonstration needs velocity feed-through")
    mf = modal_form(model.M, model.K)
    out = []
    for a in alphas:
        D = modal_family_damping(mf, float(a))
        ss = tilde_system(mf, D, model.B2, model.C1, model.C2)
        out.append((float(a), h2_norm(ss)))
    return out
