import math
from fractions import Fraction

import numpy as np
import pytest

from meanfreq.frequency import (
    EllipseArclength,
    curvature_sandwich,
    density_slope,
    ellipse_mean_frequency,
    ellipse_profile,
    ellipsoid_chain_bounds,
    graded_intervals,
    graded_pairs,
    iterate_index_check,
    mean_frequency,
    graded_separation,
    sandwich_from_profile,
    section_profile,
)
from meanfreq.jacobi import CurvatureProfile, conjugate_points
from meanfreq.metric_models import EllipsoidModel, InvalidModelError, PlaneSection, ellipse_length

PI = math.pi


@pytest.mark.parametrize(
    "K,d,L,expected",
    [(1.0, 1, 2 * PI, 1 / PI), (4.0, 1, PI, 2 / PI), (1.0, 2, 2 * PI, 2 / PI)],
)
def test_constant_curvature_frequency(K, d, L, expected):
    est = mean_frequency(CurvatureProfile.constant(K, d, L), 50)
    assert est.mean_frequency == pytest.approx(expected, abs=1e-3)
    assert est.mean_frequency == pytest.approx(expected, abs=1e-9)
    assert est.converged and est.warning is None
    assert est.average_index == pytest.approx(expected * L, abs=1e-8)
    assert [m for m, _ in est.convergence_history] == [4, 8, 16, 32, 50]


def test_density_slope_removes_boundary_bias():
    # with a non-integer horizon the raw ratio count/T is biased, the slope is not
    rep = conjugate_points(CurvatureProfile.constant(1.0, 1, 2 * PI), 20.5)
    assert density_slope(rep, 20.5) == pytest.approx(1 / PI, rel=1e-9)
    assert abs(rep.count(20.5) / 20.5 - 1 / PI) > 1e-3


def test_mean_frequency_rejects_short_runs():
    with pytest.raises(ValueError):
        mean_frequency(CurvatureProfile.constant(1.0), 2)


def test_arclength_inverse():
    arc = EllipseArclength(1.0, 1.7)
    assert arc.length == pytest.approx(ellipse_length(1.0, 1.7))
    for t in [0.1, 1.0, 2.5, 5.9]:
        from scipy.integrate import quad

        sigma, _ = quad(lambda u: float(arc.speed(u)), 0.0, t, epsrel=1e-12)
        assert arc.t_of(sigma) == pytest.approx(t, abs=1e-9)
    assert arc.t_of(arc.length + 0.0) == pytest.approx(2 * PI, abs=1e-9)


def test_round_ellipsoid_any_ellipse():
    est = ellipse_mean_frequency(EllipsoidModel((1, 1, 1, 1)), (1, 3), 16)
    assert est.mean_frequency == pytest.approx(2 / PI, abs=1e-9)


def test_circle_of_degenerate_ellipsoid():
    est = ellipse_mean_frequency(EllipsoidModel((1, 1, 1.5)), (0, 1))
    assert est.mean_frequency == pytest.approx(1 / (1.5 * PI), abs=1e-4)


def test_ellipse_inside_chain_bounds():
    m = EllipsoidModel((1, 1.2, 1.5))
    est = ellipse_mean_frequency(m, (0, 1))
    b = ellipsoid_chain_bounds(m)[(0, 1)]
    assert (b.lower, b.upper) == (pytest.approx(1 / (PI * 1.8)), pytest.approx(1.2 / (PI * 1.5)))
    assert b.contains(est.mean_frequency)
    # frozen from this implementation; agrees with the independent full-profile run below
    assert est.mean_frequency == pytest.approx(0.21427, abs=1e-4)


def test_sandwich_examples():
    b = curvature_sandwich(3, [(1.0, 1.0)])
    assert (b.lower, b.upper) == (pytest.approx(2 / PI), pytest.approx(2 / PI))
    b = curvature_sandwich(3, [(1.0, 1.0), (2.0, 2.0)])
    assert (b.lower, b.upper) == (pytest.approx(3 / PI), pytest.approx(3 / PI))
    b = curvature_sandwich(2, [(0.5, 1.0)])
    assert (b.lower, b.upper) == (pytest.approx(0.5 / PI), pytest.approx(1 / PI))
    with pytest.raises(ValueError):
        curvature_sandwich(2, [(0.0, 1.0)])
    with pytest.raises(ValueError):
        curvature_sandwich(4, [(1.0, 1.0), (1.0, 2.0)])


@pytest.mark.parametrize("sec", [PlaneSection(1, 1.2, 1.5), PlaneSection(1.5, 1, 1.2), PlaneSection(0.8, 2.0, 1.1)])
def test_sandwich_strict_containment(sec):
    prof = section_profile(sec)
    est = mean_frequency(prof, 32)
    assert sandwich_from_profile(prof).contains(est.mean_frequency)


def test_split_matches_full_profile():
    m = EllipsoidModel((1, 1.3, 1.6, 2.0))
    est = ellipse_mean_frequency(m, (0, 2), 32)
    assert est.cross_check is not None
    assert abs(est.cross_check - est.mean_frequency) <= 2e-3
    assert len(est.parts) == 2


def test_scaling_divides_frequency():
    m = EllipsoidModel((1, 1.2, 1.5))
    a = ellipse_mean_frequency(m, (1, 2), 32).mean_frequency
    b = ellipse_mean_frequency(m.scaled(2.0), (1, 2), 32).mean_frequency
    assert b == pytest.approx(a / 2, abs=1e-6)


def test_pointwise_larger_profile_has_larger_frequency():
    rng = np.random.default_rng(11)
    for _ in range(20):
        L = rng.uniform(2.0, 6.0)
        base, amp, lift = rng.uniform(0.5, 2.0), rng.uniform(0.0, 0.4), rng.uniform(0.2, 1.0)
        w = 2 * PI / L
        k1 = CurvatureProfile.scalar(lambda t: base + amp * base * math.cos(w * t), L)
        k2 = CurvatureProfile.scalar(lambda t: base + lift + amp * base * math.cos(w * t), L)
        assert mean_frequency(k2, 16).mean_frequency > mean_frequency(k1, 16).mean_frequency


def test_chain_bounds_need_three_axes():
    with pytest.raises(InvalidModelError):
        ellipsoid_chain_bounds(EllipsoidModel((1, 2, 3, 4)))


def test_chain_bounds_degenerate_are_closed():
    b = ellipsoid_chain_bounds(EllipsoidModel((1, 1, 1.5)))
    assert not b[(0, 1)].strict
    assert b[(0, 1)].lower == pytest.approx(b[(0, 1)].upper)


def test_separation_arithmetic():
    res = graded_separation(2, 2, Fraction(105, 100))
    assert res.threshold_exact == Fraction(17, 16)
    assert res.threshold == 1.0625
    i1, i2 = res.intervals
    assert i1.lower == pytest.approx(2.05 / 1.05 * 1.25)
    assert i1.upper == pytest.approx(2.05 * 1.05 * 1.25)
    assert i1.upper == pytest.approx(2.6906, abs=1e-4)
    assert i2.lower == pytest.approx(2.9286, abs=1e-4)
    assert res.separated
    assert not graded_separation(2, 2, 1.5).separated
    with pytest.raises(ValueError):
        graded_separation(1, 2, 1.05)


def test_graded_pairs_and_intervals():
    g = EllipsoidModel.graded(2, 1.05, 2)
    assert graded_pairs(g) == [(0, 1), (2, 3)]
    iv = graded_intervals(g)
    assert iv[0].lower == pytest.approx(0.37172, abs=1e-5)
    assert iv[0].upper == pytest.approx(0.40982, abs=1e-5)
    assert iv[1].lower == pytest.approx(0.66766, abs=1e-5)
    assert iv[1].upper == pytest.approx(0.73609, abs=1e-5)


def test_iterate_index_round_s3_is_tight():
    for m in range(1, 6):
        chk = iterate_index_check(2 * PI * m, 2 / PI, 2 * (2 * m - 1), 4, 3)
        assert chk.verdict
        assert chk.slack_lower == pytest.approx(0, abs=1e-9)
        assert chk.slack_upper == pytest.approx(0, abs=1e-9)
    # only the lower inequality is claimed when the frequency vanishes
    assert iterate_index_check(1.0, 0.0, 0, 7, 3).slack_lower >= 0
    assert not iterate_index_check(2 * PI, 2 / PI, 5, 4, 3).index_ok


def test_ellipse_profile_is_diagonal_of_sections():
    m = EllipsoidModel((1, 1.3, 1.6, 2.0))
    prof = ellipse_profile(m, (0, 1))
    R = prof(0.0)
    assert R.shape == (2, 2)
    assert R[0, 1] == 0.0
    assert R[0, 0] == pytest.approx(PlaneSection(1, 1.3, 1.6).curvature(0.0))
