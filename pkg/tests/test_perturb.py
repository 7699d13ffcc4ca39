import math

import numpy as np
import pytest
from scipy.linalg import expm

from meanfreq.jacobi import CurvatureProfile, integrate_fundamental
from meanfreq.perturb import (
    Bump,
    NotSymplecticError,
    PerturbationFamily,
    SymplecticElement,
    apply_curvature_bump,
    index_monotonicity_scan,
    is_plus_curve,
    length_bump,
    plus_cone_member,
    star_consistency_check,
    star_derivative,
)
from meanfreq.suites import plus_curve_suite, star_suite

PI = math.pi
ROT = np.array([[0.0, 1.0], [-1.0, 0.0]])


def test_cone_examples():
    I = np.eye(2)
    Z = np.zeros((2, 2))
    assert plus_cone_member(np.block([[Z, I], [-I, Z]]))
    assert not plus_cone_member(np.block([[Z, I], [I, Z]]))
    with pytest.raises(NotSymplecticError):
        plus_cone_member(np.array([[1.0, 0.0], [0.0, 1.0]]))


def test_symplectic_element_validation():
    SymplecticElement(expm(ROT))
    with pytest.raises(NotSymplecticError):
        SymplecticElement(np.diag([2.0, 2.0]))
    with pytest.raises(NotSymplecticError):
        SymplecticElement(np.eye(3))


def test_plus_curve_examples():
    s = np.linspace(0, 1, 9)
    assert is_plus_curve(s, [expm(t * ROT) for t in s])
    assert not is_plus_curve(s, [np.eye(2)] * len(s))
    assert not is_plus_curve(s, [expm(-t * ROT) for t in s])
    with pytest.raises(NotSymplecticError):
        is_plus_curve(s, [np.diag([2.0, 1.0])] * len(s))


def test_random_cone_conjugation_and_curves():
    res = plus_curve_suite(trials=50, seed=3, physical=1)
    assert res.passed, [r for r in res.rows if not r["ok"]]


def test_bump_profile_values():
    b = Bump.centered(2 * PI, eta=0.3)
    c = b.center
    assert b(c) == 1.0 and b(c + 0.29) == 1.0
    assert b(c + 0.61) == 0.0 and b(0.0) == 0.0
    assert 0.0 < b(c + 0.45) < 1.0
    assert b(c + 2 * PI) == b(c)
    with pytest.raises(ValueError):
        Bump(0.1, 0.3, 1.0)
    with pytest.raises(ValueError):
        Bump(0.5, 0.1, 1.0, amplitude=1.5)


def test_curvature_bump_action():
    base = CurvatureProfile.diagonal([lambda t: 1.0 + 0.2 * math.sin(t), lambda t: 0.5], 2 * PI)
    bump = Bump.centered(2 * PI, eta=0.3)
    fam = PerturbationFamily(base, bump)
    assert apply_curvature_bump(fam, 0.0) is base
    p = fam.at(0.1)
    t_in, t_out = bump.center + 0.1, bump.center + 1.0
    np.testing.assert_allclose(np.linalg.eigvalsh(p(t_in)), np.linalg.eigvalsh(base(t_in)) + 0.1, atol=1e-15)
    np.testing.assert_array_equal(p(t_out), base(t_out))
    with pytest.raises(ValueError):
        fam.at(-0.1)


def test_star_flat_closed_form():
    flat = CurvatureProfile.constant(0.0, 1, 1.0)
    form = star_derivative(flat, lambda t: 1.0)
    np.testing.assert_allclose(form.form, [[1, 0.5], [0.5, 1 / 3]], atol=1e-10)
    assert form.positive_definite
    zero = star_derivative(flat, lambda t: 0.0)
    np.testing.assert_array_equal(zero.form, np.zeros((2, 2)))
    with pytest.raises(ValueError):
        star_derivative(flat, lambda t: -1.0)


def test_star_consistency_examples():
    flat = CurvatureProfile.constant(0.0, 1, 1.0)
    assert star_consistency_check(flat, PerturbationFamily(flat, lambda t: 1.0), 1e-4) <= 1e-4
    assert star_consistency_check(flat, PerturbationFamily(flat, lambda t: 0.0), 1e-4) == 0.0
    k1 = CurvatureProfile.constant(1.0, 1, 2 * PI)
    fam = PerturbationFamily(k1, Bump.centered(2 * PI))
    assert star_consistency_check(k1, fam, 1e-4) <= 1e-4


def test_star_suite_ten_profiles():
    res = star_suite(trials=10, seed=0)
    assert res.passed
    assert max(r["relative_error"] for r in res.rows) <= 1e-4


def test_star_form_symmetric_and_psd_for_semidefinite_tau():
    prof = CurvatureProfile.diagonal([lambda t: 1.0 + 0.3 * math.cos(t), lambda t: 2.0], 2 * PI)
    tau = lambda t: np.diag([1.0, 0.0])
    f = star_derivative(prof, tau)
    assert f.symmetry_defect <= 1e-10
    assert f.min_eig >= -1e-10


def test_bump_family_is_plus_curve():
    prof = CurvatureProfile.constant(1.0, 2, 2 * PI)
    fam = PerturbationFamily(prof, Bump.centered(2 * PI))
    ss = np.linspace(0, 0.02, 5)
    mats = [fam.at(float(s)).Qhat @ integrate_fundamental(fam.at(float(s)), 2 * PI).end for s in ss]
    assert is_plus_curve(ss, mats)


def test_length_bump_period_and_transport():
    prof = CurvatureProfile.constant(1.0, 1, 2 * PI)
    assert length_bump(prof, 0.0) is prof
    p = length_bump(prof, 0.5)
    assert p.period == pytest.approx(2 * PI + 0.5, abs=1e-12)
    np.testing.assert_array_equal(p.Q, prof.Q)
    # off the bump the geometry is untouched
    assert p(0.01)[0, 0] == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        length_bump(prof, -0.1)


def test_scan_round_is_index_increasing():
    base = CurvatureProfile.constant(1.0, 1, 2 * PI)
    res = index_monotonicity_scan(PerturbationFamily(base, Bump.centered(2 * PI), s_grid=(0, 0.05, 0.1, 0.2)))
    assert res.verdict == "index-increasing"
    vals = [r.alpha_bar for r in res.records]
    assert all(b >= a - 2e-3 for a, b in zip(vals, vals[1:]))
    assert vals[0] == pytest.approx(1 / PI, abs=1e-9)


def test_scan_hyperbolic_and_zero_bump():
    hyp = CurvatureProfile.constant(-1.0, 1, 2 * PI)
    res = index_monotonicity_scan(PerturbationFamily(hyp, Bump.centered(2 * PI), s_grid=(0, 0.05, 0.1)), periods=16)
    assert res.verdict == "hyperbolic-window" and not res.both_arms_false
    k1 = CurvatureProfile.constant(1.0, 1, 2 * PI)
    flat = index_monotonicity_scan(PerturbationFamily(k1, lambda t: 0.0, s_grid=(0, 0.1, 0.2)), periods=16)
    vals = [r.alpha_bar for r in flat.records]
    assert max(vals) - min(vals) <= 1e-12
    with pytest.raises(ValueError):
        index_monotonicity_scan(PerturbationFamily(k1, lambda t: 0.0), s_grid=(0.1, 0.2))


def test_length_scan_runs():
    k1 = CurvatureProfile.constant(1.0, 1, 2 * PI)
    res = index_monotonicity_scan(PerturbationFamily(k1, Bump.centered(2 * PI), "length", (0, 0.1)), periods=16)
    assert res.verdict in ("index-increasing", "hyperbolic-window", "inconclusive")
    assert not res.contradiction
