import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from meanfreq.jacobi import (
    CurvatureProfile,
    classify_symplectic,
    conjugate_points,
    index_form_value,
    integrate_fundamental,
    poincare_map,
    symplectic_inverse,
    symplectic_J,
)


def trig_profile(base, amp, phase, period=2 * math.pi):
    return CurvatureProfile.scalar(lambda t: base + amp * math.cos(2 * math.pi * t / period + phase), period)


def test_free_equation_closed_form():
    X = integrate_fundamental(CurvatureProfile.constant(0.0, 1, 1.0), 1.0).end
    np.testing.assert_allclose(X, [[1, 1], [0, 1]], atol=1e-11)


@pytest.mark.parametrize("t", [0.3, 1.7, 4.0])
def test_unit_curvature_rotation(t):
    X = integrate_fundamental(CurvatureProfile.constant(1.0, 1, 10.0), t).end
    np.testing.assert_allclose(X, [[math.cos(t), math.sin(t)], [-math.sin(t), math.cos(t)]], atol=1e-10)


@pytest.mark.parametrize("d,w", [(1, 0.5), (2, 1.3), (3, 2.0)])
def test_constant_block_closed_form(d, w):
    t = 2.2
    X = integrate_fundamental(CurvatureProfile.constant(w * w, d, 5.0), t).end
    I = np.eye(d)
    expected = np.block([[math.cos(w * t) * I, math.sin(w * t) / w * I], [-w * math.sin(w * t) * I, math.cos(w * t) * I]])
    np.testing.assert_allclose(X, expected, atol=1e-10)


@settings(max_examples=15, deadline=None)
@given(base=st.floats(-1.0, 3.0), amp=st.floats(0.0, 1.0), phase=st.floats(0, 6.3))
def test_symplectic_defect_bound(base, amp, phase):
    T = 20.0
    fs = integrate_fundamental(trig_profile(base, amp, phase), T)
    X = fs.end
    assert fs.symplectic_defect() <= 1e-9 * (1 + T) * max(1.0, np.linalg.norm(X, 2) ** 2)


def test_conjugate_points_unit_curvature():
    rep = conjugate_points(CurvatureProfile.constant(1.0, 1, 2 * math.pi), 10.0)
    np.testing.assert_allclose(rep.times, [math.pi, 2 * math.pi, 3 * math.pi], atol=1e-9)
    assert rep.multiplicities == (1, 1, 1)
    assert rep.first == pytest.approx(math.pi)


def test_conjugate_points_curvature_four():
    rep = conjugate_points(CurvatureProfile.constant(4.0, 1, math.pi), 4.0)
    np.testing.assert_allclose(rep.times, [math.pi / 2, math.pi], atol=1e-9)


@pytest.mark.parametrize("c", [0.7, 1.0, 2.7])
def test_constant_curvature_times_exact(c):
    L = 2 * math.pi / c
    rep = conjugate_points(CurvatureProfile.constant(c * c, 1, L), 10 * L)
    k = np.arange(1, len(rep.times) + 1)
    assert len(rep.times) == 20
    assert np.max(np.abs(np.array(rep.times) - k * math.pi / c)) <= 1e-8


def test_multiplicity_equals_dimension():
    rep = conjugate_points(CurvatureProfile.constant(1.0, 3, 2 * math.pi), 7.0)
    assert rep.multiplicities == (3, 3)
    assert rep.count() == 6
    assert rep.count(4.0) == 3
    assert rep.cumulative() == [(pytest.approx(math.pi), 3), (pytest.approx(2 * math.pi), 6)]


def test_block_diagonal_is_union_of_blocks():
    f1 = lambda t: 1.0 + 0.3 * math.cos(t)
    f2 = lambda t: 2.5 + 0.5 * math.sin(2 * t)
    T = 12.0
    full = conjugate_points(CurvatureProfile.diagonal([f1, f2], 2 * math.pi), T)
    parts = [conjugate_points(CurvatureProfile.scalar(f, 2 * math.pi), T) for f in (f1, f2)]
    union = sorted(t for p in parts for t in p.times)
    expanded = sorted(t for t, m in zip(full.times, full.multiplicities) for _ in range(m))
    np.testing.assert_allclose(expanded, union, atol=1e-8)


def test_negative_curvature_has_no_conjugate_points():
    assert conjugate_points(CurvatureProfile.constant(-1.0, 2, 1.0), 10.0).times == ()


def test_poincare_round_identity():
    pd = poincare_map(CurvatureProfile.constant(1.0, 1, 2 * math.pi))
    np.testing.assert_allclose(pd.P, np.eye(2), atol=1e-9)
    assert pd.nullity == 2
    assert pd.unit_circle_flag


def test_poincare_parabolic():
    pd = poincare_map(CurvatureProfile.constant(0.0, 1, 1.0))
    np.testing.assert_allclose(pd.P, [[1, 1], [0, 1]], atol=1e-11)
    assert pd.unit_circle_flag
    np.testing.assert_allclose(pd.spectrum, [1, 1], atol=1e-6)


def test_poincare_hyperbolic():
    pd = poincare_map(CurvatureProfile.constant(-1.0, 1, 1.0))
    np.testing.assert_allclose(sorted(pd.spectrum.real), [math.exp(-1), math.e], rtol=1e-9)
    assert not pd.unit_circle_flag
    assert pd.nullity == 0
    assert pd.symplectic_defect < 1e-9


def test_poincare_with_holonomy():
    th = 0.4
    Q = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    prof = CurvatureProfile(2, 1.0, lambda t: np.eye(2), holonomy=Q)
    pd = poincare_map(prof)
    np.testing.assert_allclose(pd.P, prof.Qhat @ integrate_fundamental(prof, 1.0).end)
    assert pd.symplectic_defect < 1e-9
    assert prof.holonomy_defect() < 1e-14


def test_holonomy_must_be_orthogonal():
    with pytest.raises(ValueError):
        CurvatureProfile(2, 1.0, lambda t: np.eye(2), holonomy=np.array([[2.0, 0], [0, 1]]))


def test_classify_elliptic_rotation():
    a = 0.9
    P = np.array([[math.cos(a), math.sin(a)], [-math.sin(a), math.cos(a)]])
    pd = classify_symplectic(P)
    assert pd.unit_circle_flag and pd.nullity == 0


def test_symplectic_inverse():
    J = symplectic_J(2)
    P = integrate_fundamental(CurvatureProfile.diagonal([lambda t: 1 + 0.2 * math.sin(t), lambda t: 0.5], 2 * math.pi), 3.0).end
    np.testing.assert_allclose(symplectic_inverse(P) @ P, np.eye(4), atol=1e-9)
    assert J.shape == (4, 4)


def test_index_form_examples():
    k1 = CurvatureProfile.constant(1.0, 1, 2 * math.pi)
    k4 = CurvatureProfile.constant(4.0, 1, math.pi)
    assert index_form_value(k1, math.pi, math.sin, math.sin, math.cos, math.cos) == pytest.approx(0.0, abs=1e-10)
    y = lambda t: math.sin(2 * t)
    dy = lambda t: 2 * math.cos(2 * t)
    assert index_form_value(k1, math.pi / 2, y, y, dy, dy) == pytest.approx(3 * math.pi / 4, rel=1e-9)
    assert index_form_value(k4, math.pi, math.sin, math.sin) == pytest.approx(-1.5 * math.pi, rel=1e-8)
    with pytest.raises(ValueError):
        index_form_value(k1, 1.0, math.sin, math.sin)


def test_index_form_sign_changes_at_first_conjugate_point():
    prof = trig_profile(1.5, 0.5, 0.3)
    t1 = conjugate_points(prof, 6.0).first
    half_sine = lambda T: (lambda t: math.sin(math.pi * t / T), lambda t: math.pi / T * math.cos(math.pi * t / T))
    y, dy = half_sine(0.5 * t1)
    assert index_form_value(prof, 0.5 * t1, y, y, dy, dy) > 0
    X = integrate_fundamental(prof, t1)(t1)
    assert abs(X[0, 1]) < 1e-8


def test_invalid_horizon():
    with pytest.raises(ValueError):
        conjugate_points(CurvatureProfile.constant(1.0), -1.0)
    with pytest.raises(ValueError):
        integrate_fundamental(CurvatureProfile.constant(1.0), 0.0)
