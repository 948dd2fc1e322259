import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dampnorm.criteria import (CriterionSpec, MeasureSpec, block_measure, criterion_value,
                               dense_value, h2_norm, h2_norm_dual, h2_norm_hom, mixed_h2_norm,
                               simplified_criterion, tilde_problem)
from dampnorm.errors import UnstableSystem, ValidationError
from dampnorm.modal import StateSpace, linearize, modal_form, tilde_system
from dampnorm.model import assemble_damping, build_frame

from conftest import random_model, rel, sdof


def _T(rng, n):
    return rng.standard_normal((n, n)) + 3 * np.eye(n)


def test_sdof_standard_norm():
    d, k, c1, c2 = 0.7, 2.5, 1.3, -0.4
    ss = linearize(sdof(d, k, c1, c2))
    expect = c1 ** 2 / (2 * d * k) + c2 ** 2 / (2 * d)
    assert rel(h2_norm(ss) ** 2, expect) < 1e-12
    assert rel(h2_norm_dual(ss) ** 2, expect) < 1e-12


def test_zero_output_and_input():
    ss = linearize(sdof(1.0, 1.0, 0.0, 0.0))
    assert h2_norm(ss) == 0.0
    m = sdof(1.0)
    s = linearize(m)
    s0 = StateSpace(s.A, np.zeros_like(s.B), s.C, s.T1, s.T2)
    assert h2_norm_dual(s0) == 0.0


def test_sdof_homogeneous_norm():
    # unit mass and stiffness, C = I, Zhat = I/2: Y = [[1/(2d) + d/4, -1/4], [-1/4, 1/(2d)]]
    d = 0.3
    m = sdof(d, 1.0, 1.0, 1.0)
    ss = linearize(m)
    val = h2_norm_hom(ss, MeasureSpec.lebesgue())
    assert rel(val ** 2, 1 / d + d / 4) < 1e-12
    zero = MeasureSpec.explicit(np.zeros((2, 2)))
    assert h2_norm_hom(ss, zero) == 0.0


def test_sdof_half_mixture():
    m = sdof(0.5, 1.0, 1.0, 1.0)
    ss = linearize(m)
    meas = MeasureSpec.lebesgue()
    h2 = h2_norm(ss)
    hom = h2_norm_hom(ss, meas)
    mid = mixed_h2_norm(ss, CriterionSpec("mixed", 0.5, meas))
    assert rel(mid, np.sqrt((h2 ** 2 + hom ** 2) / 2)) < 1e-12
    assert rel(mixed_h2_norm(ss, CriterionSpec("mixed", 0.0, meas)), h2) < 1e-14
    assert rel(mixed_h2_norm(ss, CriterionSpec("mixed", 1.0, meas)), hom) < 1e-14


def test_unstable_raises():
    ss = linearize(sdof(1.0))
    bad = StateSpace(-ss.A, ss.B, ss.C, ss.T1, ss.T2)
    with pytest.raises(UnstableSystem):
        h2_norm(bad)
    with pytest.raises(UnstableSystem):
        h2_norm_hom(bad, MeasureSpec())


@pytest.mark.parametrize("seed", range(4))
def test_linearization_invariance(seed):
    rng = np.random.default_rng(seed)
    m = random_model(rng, 4)
    meas = MeasureSpec.lebesgue()
    spec = CriterionSpec("mixed", 0.4, meas)
    base = linearize(m)
    ref = (h2_norm(base), h2_norm_hom(base, meas), mixed_h2_norm(base, spec))
    for _ in range(3):
        ss = linearize(m, T1=_T(rng, 4), T2=_T(rng, 4))
        got = (h2_norm(ss), h2_norm_hom(ss, meas), mixed_h2_norm(ss, spec))
        assert all(rel(g, r) < 1e-8 for g, r in zip(got, ref))


def test_homogeneous_duality(rng):
    from dampnorm.linalg import solve_lyapunov
    m = random_model(rng, 5)
    ss = linearize(m)
    meas = MeasureSpec.lebesgue()
    Z = meas.in_frame(ss.T)
    Xo = solve_lyapunov(ss.A, ss.C.T @ ss.C, orientation="observe")
    assert rel(h2_norm_hom(ss, meas) ** 2, np.sum(Z * Xo)) < 1e-10


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), p=st.sampled_from([0.0, 0.25, 0.5, 0.75, 1.0]))
def test_convex_combination(seed, p):
    rng = np.random.default_rng(seed)
    m = random_model(rng, int(rng.integers(1, 6)))
    ss = linearize(m)
    meas = MeasureSpec.lebesgue()
    lhs = mixed_h2_norm(ss, CriterionSpec("mixed", p, meas)) ** 2
    rhs = (1 - p) * h2_norm(ss) ** 2 + p * h2_norm_hom(ss, meas) ** 2
    assert rel(lhs, rhs) < 1e-10


def test_simplified_scalar_and_optimum():
    w, d, p = 1.7, 0.9, 0.3
    val = simplified_criterion(np.array([w]), np.array([[d]]), p) ** 2
    assert rel(val, (1 + p) / d + p * d / (2 * w ** 2)) < 1e-12
    dstar = np.sqrt(2 * (1 + p) / p) * w
    val = simplified_criterion(np.array([w]), np.array([[dstar]]), p) ** 2
    assert rel(val, np.sqrt(2 * p * (1 + p)) / w) < 1e-12
    assert simplified_criterion(np.array([w]), np.array([[d]]), p, np.zeros((1, 1))) == 0.0


def test_measure_frames_agree():
    fr = build_frame()
    mf = modal_form(fr.M, fr.K)
    ss = tilde_system(mf, assemble_damping(fr, [1e5]), fr.B2, fr.C1, fr.C2)
    tilde = MeasureSpec.lebesgue(frame="tilde", scale=2.0)
    expl = MeasureSpec.explicit(tilde.zhat(5, mf), frame="original")
    assert np.allclose(tilde.in_frame(ss.T, mf), expl.in_frame(ss.T, mf))
    assert np.allclose(tilde.in_frame(ss.T, mf), 2.0 / 10 * np.eye(10))
    danger = MeasureSpec.dangerous(2)
    assert danger.frame == "tilde"
    assert np.array_equal(danger.native(3), block_measure(3, [1, 1, 0]) / 6)


def test_measure_and_spec_validation():
    with pytest.raises(ValidationError):
        MeasureSpec(kind="gauss")
    with pytest.raises(ValidationError):
        MeasureSpec.explicit(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ValidationError):
        MeasureSpec.explicit(-np.eye(2))
    with pytest.raises(ValidationError) as exc:
        CriterionSpec("mixed", 1.5)
    assert exc.value.field == "p"
    with pytest.raises(ValueError):
        MeasureSpec.lebesgue(frame="tilde").zhat(2)


@pytest.mark.parametrize("flavor", ["standard_h2", "homogeneous", "mixed", "simplified"])
def test_tilde_problem_matches_direct(rng, flavor):
    m = random_model(rng, 4, dampers=2)
    spec = CriterionSpec(flavor, 0.35, MeasureSpec.lebesgue())
    prob = tilde_problem(m, spec)
    v = np.array([0.7, 2.0])
    assert rel(dense_value(prob, v), criterion_value(m, spec, v)) < 1e-10


def test_frequency_domain_oracle(rng):
    # squared norm equals (1/pi) * integral over w > 0 of ||G(iw)||_F^2
    m = random_model(rng, 2, m=1, q=1)
    ss = linearize(m)
    w = np.logspace(-4, 4, 40001)
    vals = np.empty_like(w)
    for k, wk in enumerate(w):
        G = ss.C @ np.linalg.solve(1j * wk * np.eye(4) - ss.A, ss.B)
        vals[k] = np.sum(np.abs(G) ** 2)
    integral = np.trapezoid(vals, w) / np.pi
    assert rel(integral, h2_norm(ss) ** 2) < 1e-3
