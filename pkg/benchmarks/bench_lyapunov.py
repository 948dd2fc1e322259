"""Timing of the Lyapunov back-substitution backends and the criterion evaluators.

Usage: ``python3 benchmarks/bench_lyapunov.py [--sizes 20 50 100 200] [--repeat 5]``
"""

import argparse
import time

import numpy as np
import scipy.linalg as sl

from dampnorm import _kernels
from dampnorm.criteria import CriterionSpec, MeasureSpec, criterion_weights, dense_value, tilde_problem
from dampnorm.lowrank import LowRankBase
from dampnorm.model import build_oscillator


def best_time(fn, repeat):
    out = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        out = min(out, time.perf_counter() - t)
    return out


def bench_kernels(sizes, repeat):
    rng = np.random.default_rng(0)
    backends = _kernels.available_backends()
    print(f"{'n':>5} " + " ".join(f"{k + ' [ms]':>15}" for k in sorted(backends))
          + f" {'scipy full [ms]':>16} {'speedup':>8}")
    for n in sizes:
        A = rng.standard_normal((n, n))
        A -= (np.linalg.eigvals(A).real.max() + 0.5) * np.eye(n)
        G = rng.standard_normal((n, n))
        Q = G @ G.T
        T, U = sl.schur(A, output="real")
        C = -U.T @ Q @ U
        times = {k: best_time(lambda f=f: f(T, C), repeat if k == "compiled" or n <= 100 else 1)
                 for k, f in backends.items()}
        ts = best_time(lambda: sl.solve_continuous_lyapunov(A, -Q), repeat)
        speed = times["python"] / times["compiled"] if "compiled" in times else float("nan")
        print(f"{n:>5} " + " ".join(f"{1e3 * times[k]:>15.3f}" for k in sorted(times))
              + f" {1e3 * ts:>16.3f} {speed:>8.1f}")


def bench_evaluators(repeat):
    m = build_oscillator()
    spec = CriterionSpec("simplified", 1 / 3, MeasureSpec())
    prob = tilde_problem(m, spec)
    w = criterion_weights(spec)
    v = np.array([230.0, 220.0])
    t0 = time.perf_counter()
    base = LowRankBase(prob.A_int, prob.W, prob.Q_terms)
    t_base = time.perf_counter() - t0
    t0 = time.perf_counter()
    ev = base.geometry(prob.Bd)
    t_geom = time.perf_counter() - t0
    td = best_time(lambda: dense_value(prob, v), repeat)
    tl = best_time(lambda: ev.value(v, w), repeat)
    diff = abs(ev.value(v, w) - dense_value(prob, v)) / dense_value(prob, v)
    print(f"oscillator n=100, two dampers: dense {1e3 * td:.2f} ms/eval, low-rank {1e3 * tl:.2f} ms/eval "
          f"(setup {1e3 * t_base:.0f} ms once + {1e3 * t_geom:.0f} ms per placement), rel diff {diff:.1e}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[20, 50, 100, 200])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"active backend: {_kernels.BACKEND}")
    bench_kernels(args.sizes, args.repeat)
    bench_evaluators(args.repeat)


if __name__ == "__main__":
    main()
