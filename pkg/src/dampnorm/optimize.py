"""Bound-constrained simplex search and damper placement sweeps."""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .criteria import criterion_weights, dense_value, tilde_problem
from .errors import (DampNormError, EmptySweep, LengthMismatch, ObjectiveFailure,
                     SingularTransform, UnstableSystem, ValidationError)
from .lowrank import LowRankBase
from .modal import modal_form
from .model import DamperElement


@dataclass(frozen=True)
class Bounds:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float)).copy()
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float)).copy()
        if lo.shape != hi.shape:
            raise LengthMismatch("lo and hi differ in length")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValidationError("bounds", "bounds must be finite")
        if np.any(lo > hi):
            raise ValidationError("bounds", "lo must not exceed hi")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def uniform(cls, lo, hi, dim):
        return cls(np.full(dim, float(lo)), np.full(dim, float(hi)))

    @property
    def dim(self):
        return self.lo.size

    @property
    def midpoint(self):
        return (self.lo + self.hi) / 2

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lo) and np.all(x <= self.hi))

    def active(self, x, rtol=1e-6):
        """Per-coordinate flag: ``x`` sits on a bound (within ``rtol`` of the width)."""
        x = np.asarray(x, dtype=float)
        tol = rtol * np.maximum(self.hi - self.lo, 1e-300)
        return (x - self.lo <= tol) | (self.hi - x <= tol)


@dataclass(frozen=True)
class NMOptions:
    """Simplex search controls (``ftol`` is relative to ``max(1, |f_best|)``)."""

    xtol: float = 1e-4
    ftol: float = 1e-10
    max_evals: int = 2000
    initial_step: float = 0.05


@dataclass(frozen=True)
class OptResult:
    x_opt: np.ndarray
    f_opt: float
    evals: int
    converged: bool
    bound_active: np.ndarray = field(default=None)


def _to_x(u, lo, width):
    x = lo + width * (np.sin(u) + 1.0) / 2.0
    return np.minimum(np.maximum(x, lo), lo + width)


def _to_u(x, lo, width):
    s = np.where(width > 0, 2.0 * (x - lo) / np.where(width > 0, width, 1.0) - 1.0, 0.0)
    return np.arcsin(np.clip(s, -1.0, 1.0))


def nelder_mead_bounded(f, x0, bounds, opts=None):
    """Minimize ``f`` over a box with a Nelder-Mead search in sine coordinates.

    Each coordinate is written ``x = lo + (hi - lo) (sin u + 1) / 2`` so every
    iterate is feasible. The objective may return ``+inf`` to reject a point;
    NaN or an exception raises :class:`ObjectiveFailure` carrying the point.

    Convergence requires the simplex diameter in ``x`` to be at most ``xtol``
    and the spread of function values at most ``ftol * max(1, |f_best|)``.
    """
    opts = NMOptions() if opts is None else opts
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if x0.size != bounds.dim:
        raise LengthMismatch(f"x0 has {x0.size} entries, bounds have {bounds.dim}")
    if not bounds.contains(x0):
        raise ValidationError("x0", "starting point outside bounds")
    lo, hi = bounds.lo, bounds.hi
    width = hi - lo
    free = np.flatnonzero(width > 0)
    k = free.size
    evals = 0

    def full_x(uf):
        x = x0.copy()
        x[free] = _to_x(uf, lo[free], width[free])
        return x

    def F(x):
        nonlocal evals
        evals += 1
        try:
            val = float(f(x))
        except DampNormError as exc:
            raise ObjectiveFailure(f"objective failed: {exc}", x) from exc
        except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
            raise ObjectiveFailure(f"objective failed: {exc}", x) from exc
        if math.isnan(val) or val == -math.inf:
            raise ObjectiveFailure(f"objective returned {val}", x)
        return val

    f0 = F(x0)
    if not math.isfinite(f0):
        raise ObjectiveFailure("objective is not finite at x0", x0)
    if k == 0:
        return OptResult(x0.copy(), f0, evals, True, bounds.active(x0))

    # initial simplex: step along each free coordinate, turned inward at a bound
    xs = [x0.copy()]
    for c in free:
        x = x0.copy()
        step = opts.initial_step * width[c]
        x[c] = x0[c] + step if x0[c] + step <= hi[c] else x0[c] - step
        xs.append(x)
    U = np.array([_to_u(x[free], lo[free], width[free]) for x in xs])
    X = np.array([full_x(u) for u in U])
    fv = np.array([f0] + [F(x) for x in X[1:]])

    converged = False
    while True:
        order = np.argsort(fv, kind="stable")
        U, X, fv = U[order], X[order], fv[order]
        fb = fv[0]
        diam = np.max(np.abs(X[1:] - X[0]))
        spread = np.max(np.abs(fv[1:] - fb)) if math.isfinite(fv[-1]) else math.inf
        if diam <= opts.xtol and spread <= opts.ftol * max(1.0, abs(fb)):
            converged = True
            break
        if evals >= opts.max_evals:
            break
        cen = U[:-1].mean(axis=0)
        ur = cen + (cen - U[-1])
        xr = full_x(ur)
        fr = F(xr)
        if fr < fv[0]:
            ue = cen + 2.0 * (cen - U[-1])
            xe = full_x(ue)
            fe = F(xe)
            if fe < fr:
                U[-1], X[-1], fv[-1] = ue, xe, fe
            else:
                U[-1], X[-1], fv[-1] = ur, xr, fr
            continue
        if fr < fv[-2]:
            U[-1], X[-1], fv[-1] = ur, xr, fr
            continue
        if fr < fv[-1]:
            uc = cen + 0.5 * (ur - cen)
        else:
            uc = cen + 0.5 * (U[-1] - cen)
        xc = full_x(uc)
        fc = F(xc)
        if fc < min(fr, fv[-1]):
            U[-1], X[-1], fv[-1] = uc, xc, fc
            continue
        for t in range(1, k + 1):
            U[t] = U[0] + 0.5 * (U[t] - U[0])
            X[t] = full_x(U[t])
            fv[t] = F(X[t])

    i = int(np.argmin(fv))
    x_opt = X[i].copy()
    f_opt = float(f(x_opt))
    return OptResult(x_opt, f_opt, evals, converged, bounds.active(x_opt))


def _lowrank_evaluator(problem, base=None):
    base = LowRankBase(problem.A_int, problem.W, problem.Q_terms) if base is None else base
    return base.geometry(problem.Bd)


def criterion_objective(model, spec, mf=None, method="auto", base=None):
    """Return ``v -> criterion`` for the dampers of ``model``.

    ``method`` is ``"dense"`` (Schur solve per call), ``"lowrank"`` or
    ``"auto"`` (low-rank when the base system allows it). Unstable systems
    score ``+inf``.
    """
    if method not in ("auto", "dense", "lowrank"):
        raise ValueError(f"unknown method {method!r}")
    problem = tilde_problem(model, spec, mf)
    w = criterion_weights(spec)
    r = problem.Bd.shape[1]
    if method != "dense" and r <= 4:
        try:
            ev = _lowrank_evaluator(problem, base)
        except (UnstableSystem, SingularTransform):
            if method == "lowrank":
                raise
        else:
            def fast(v):
                v = np.asarray(v, dtype=float)
                if np.any(v < 0):
                    raise ValueError("negative viscosity")
                return ev.value(v, w)
            return fast

    def dense(v):
        try:
            return dense_value(problem, v)
        except UnstableSystem:
            return math.inf

    return dense


def optimize_viscosities(model, criterion, bounds, x0=None, opts=None, method="auto", mf=None):
    """Optimal viscosities of the dampers in ``model`` for ``criterion``."""
    r = len(model.dampers)
    if bounds.dim != r:
        raise LengthMismatch(f"{bounds.dim}-dimensional bounds for {r} dampers")
    if np.any(bounds.lo < 0):
        raise ValidationError("bounds", "viscosity bounds must be nonnegative")
    x0 = bounds.midpoint if x0 is None else np.atleast_1d(np.asarray(x0, dtype=float))
    f = criterion_objective(model, criterion, mf, method)
    if not math.isfinite(f(x0)):
        raise UnstableSystem("system is unstable at the starting viscosities")
    return nelder_mead_bounded(f, x0, bounds, opts)


@dataclass(frozen=True)
class SweepRow:
    i: int
    j: int
    v_opt: np.ndarray
    f_opt: float
    evals: int
    converged: bool
    bound_active: bool = False
    error: str = None

    @property
    def key(self):
        return (self.i, self.j)


def grounded_pair(i, j, n):
    """Two grounded dampers at 1-based positions ``i`` and ``j``."""
    return [DamperElement.grounded(i, n), DamperElement.grounded(j, n)]


def all_pairs(n):
    return [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]


def resolve_threads(threads=None):
    if threads is None:
        threads = os.environ.get("DAMPNORM_THREADS", "1")
    threads = int(threads)
    if threads < 1:
        raise ValidationError("threads", "thread count must be >= 1")
    return threads


def placement_sweep(model_template, positions, criterion, bounds, x0_policy="midpoint",
                    opts=None, threads=None, damper_factory=grounded_pair, method="auto"):
    """Optimize viscosities for every damper placement in ``positions``.

    ``x0_policy`` is ``"midpoint"``, a fixed start vector or a callable
    ``(i, j) -> x0``. Rows come back sorted by ``(i, j)``; a failed placement
    yields a row with ``f_opt = inf`` and ``converged = False``.
    """
    n = model_template.n
    pairs = sorted({(int(i), int(j)) for i, j in positions})
    for i, j in pairs:
        if not 1 <= i < j <= n:
            raise ValidationError("positions", f"invalid pair ({i}, {j}) for n={n}")
    mf = modal_form(model_template.M, model_template.K)
    base = None
    if method != "dense":
        probe = tilde_problem(model_template.with_dampers(damper_factory(*pairs[0], n)),
                              criterion, mf) if pairs else None
        if probe is not None:
            try:
                base = LowRankBase(probe.A_int, probe.W, probe.Q_terms)
            except (UnstableSystem, SingularTransform):
                if method == "lowrank":
                    raise

    def start(i, j):
        if callable(x0_policy):
            return np.asarray(x0_policy(i, j), dtype=float)
        if isinstance(x0_policy, str):
            if x0_policy != "midpoint":
                raise ValidationError("x0_policy", f"unknown policy {x0_policy!r}")
            return bounds.midpoint
        return np.asarray(x0_policy, dtype=float)

    def run(pair):
        i, j = pair
        try:
            model = model_template.with_dampers(damper_factory(i, j, n))
            meth = "lowrank" if base is not None else "dense"
            f = criterion_objective(model, criterion, mf, meth, base)
            x0 = start(i, j)
            if not math.isfinite(f(x0)):
                raise UnstableSystem("unstable at the starting point")
            res = nelder_mead_bounded(f, x0, bounds, opts)
            return SweepRow(i, j, res.x_opt, res.f_opt, res.evals, res.converged,
                            bool(np.any(res.bound_active)))
        except (DampNormError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
            return SweepRow(i, j, np.full(bounds.dim, np.nan), math.inf, 0, False, False,
                            f"{type(exc).__name__}: {exc}")

    threads = resolve_threads(threads)
    if threads == 1:
        rows = [run(p) for p in pairs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(run, pairs))
    return sorted(rows, key=lambda r: r.key)


def best_configuration(rows):
    """Row with minimal ``f_opt``; ties go to the lexicographically smallest ``(i, j)``."""
    rows = list(rows)
    if not rows:
        raise EmptySweep("no sweep rows")
    return min(rows, key=lambda r: (r.f_opt, r.i, r.j))
