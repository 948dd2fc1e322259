import numpy as np
import pytest

from dampnorm.criteria import simplified_criterion
from dampnorm.errors import DampNormError, InvalidP, UnstableSystem
from dampnorm.modal import modal_form
from dampnorm.model import build_frame, build_oscillator
from dampnorm.theory import (alpha_decay_curve, has_feedthrough, modal_family_damping,
                             optimal_modal_damping, theoretical_minimum, verify_global_optimum)

from conftest import random_spd, rel, sdof


def test_optimal_damping_values():
    assert optimal_modal_damping([1.0], 1.0)[0, 0] == pytest.approx(2.0)
    assert optimal_modal_damping([2.0], 0.5)[0, 0] == pytest.approx(2 * np.sqrt(6), rel=1e-12)
    small = optimal_modal_damping([1.0], 0.01)[0, 0]
    assert small == pytest.approx(14.2127, abs=1e-4)
    assert small / np.sqrt(2 / 0.01) == pytest.approx(1.0, abs=0.01)


def test_scalar_minimizer_crosscheck():
    from scipy.optimize import minimize_scalar
    p, w = 0.5, 2.0
    res = minimize_scalar(lambda d: (1 + p) / d + p * d / (2 * w ** 2), bounds=(0.1, 50), method="bounded",
                          options={"xatol": 1e-10})
    assert res.x == pytest.approx(optimal_modal_damping([w], p)[0, 0], rel=1e-6)
    assert res.fun == pytest.approx(theoretical_minimum([w], p), rel=1e-10)


def test_theoretical_minimum_values():
    assert theoretical_minimum([2.0], 0.5) == pytest.approx(np.sqrt(1.5) / 2, rel=1e-12)
    assert theoretical_minimum([1.0, 1.0], 1.0) == pytest.approx(4.0)
    assert theoretical_minimum([1.0, 2.0, 4.0], 1 / 3) == pytest.approx(1.649916, abs=1e-6)
    w = np.array([1.0, 2.0, 4.0])
    val = simplified_criterion(w, optimal_modal_damping(w, 1 / 3), 1 / 3) ** 2
    assert rel(val, 1.649916) < 1e-6


@pytest.mark.parametrize("p", [0.0, -0.1, 1.5])
def test_invalid_p(p):
    with pytest.raises(InvalidP):
        optimal_modal_damping([1.0], p)
    with pytest.raises(InvalidP):
        theoretical_minimum([1.0], p)


@pytest.mark.parametrize("n", [1, 3, 8])
@pytest.mark.parametrize("p", [0.1, 0.5, 0.9])
def test_verify_global_optimum(rng, n, p):
    rep = verify_global_optimum(random_spd(rng, n), random_spd(rng, n), p, trials=100, seed=7)
    assert rep.ok
    assert rep.violations == 0
    assert rep.min_perturbed >= rep.theoretical_min - 1e-8
    assert rep.notes == ()


def test_verify_flags_p_one(rng):
    rep = verify_global_optimum(random_spd(rng, 2), random_spd(rng, 2), 1.0, trials=4, seed=1)
    assert rep.ok and rep.notes


def test_verify_deterministic(rng):
    M, K = random_spd(rng, 3), random_spd(rng, 3)
    a = verify_global_optimum(M, K, 0.5, trials=10, seed=3)
    b = verify_global_optimum(M, K, 0.5, trials=10, seed=3)
    assert a.min_perturbed == b.min_perturbed


def test_sdof_line_scan_and_doubling():
    w, p = 1.3, 0.5
    dstar = optimal_modal_damping([w], p)[0, 0]
    f = lambda d: simplified_criterion(np.array([w]), np.array([[d]]), p) ** 2
    assert f(dstar * 0.99) > f(dstar) and f(dstar * 1.01) > f(dstar)
    assert f(2 * dstar) > f(dstar) + 1e-10


def test_strict_excess_for_large_perturbations(rng):
    M, K = random_spd(rng, 4), random_spd(rng, 4)
    mf = modal_form(M, K)
    p = 0.5
    D = optimal_modal_damping(mf.omega, p)
    tmin = theoretical_minimum(mf.omega, p)
    for _ in range(20):
        G = rng.standard_normal((4, 4))
        dD = G + G.T
        dD *= 1e-3 * np.abs(D).max() / np.abs(dD).max()
        Dp = D + dD
        if np.linalg.eigvalsh(Dp).min() <= 0:
            continue
        assert simplified_criterion(mf, Dp, p) ** 2 > tmin + 1e-10


def test_sdof_decay_closed_form():
    m = sdof(0.0, 1.0, 0.0, 1.0)
    curve = alpha_decay_curve(m, [1.0, 2.0, 4.0, 100.0])
    for a, f in curve:
        assert rel(f ** 2, 1 / (2 * a)) < 1e-12
    assert rel(curve[1][1] ** 2, curve[0][1] ** 2 / 2) < 1e-12


def test_oscillator_decay_decreasing():
    m = build_oscillator(n=30, c_spec=1, damper_positions=(7, 13))
    vals = [f for _, f in alpha_decay_curve(m, [1.0, 1e2, 1e4])]
    assert vals[0] > vals[1] > vals[2]


def test_decay_requires_feedthrough():
    fr = build_frame()
    assert not has_feedthrough(fr)
    with pytest.raises(DampNormError):
        alpha_decay_curve(fr, [1.0])
    mf = modal_form(fr.M, fr.K)
    with pytest.raises(UnstableSystem):
        modal_family_damping(mf, 0.0)
