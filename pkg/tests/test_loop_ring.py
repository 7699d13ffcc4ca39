import itertools
import math
import random
from fractions import Fraction

import pytest

from meanfreq.loop_ring import (
    CoefficientSpec,
    CriticalTable,
    InsufficientDepthError,
    LoopRing,
    RingMismatchError,
    consecutive_coefficient_check,
    delta_level_check,
    duality_check,
    exactness_check,
    interval_check,
    mean_level,
    morse_bott_classes,
    mu_limits,
    product_level_check,
    rank_check,
    resonance_report,
    round_critical_table,
)

Z, Q, F2 = CoefficientSpec("integers"), CoefficientSpec("rationals"), CoefficientSpec("mod-p", 2)
RINGS = [LoopRing(3, Z), LoopRing(5, Z), LoopRing(4, Z), LoopRing(6, Z), LoopRing(4, Q), LoopRing(4, F2)]
ids = [repr(r) for r in RINGS]


def test_coefficient_parsing():
    assert CoefficientSpec.parse("Z") == Z
    assert CoefficientSpec.parse("q") == Q
    assert CoefficientSpec.parse("mod-2") == F2
    assert CoefficientSpec.parse("Z/3").p == 3
    with pytest.raises(ValueError):
        CoefficientSpec.parse("reals")


def test_parity_and_torsion():
    assert LoopRing(3).parity == "odd"
    assert LoopRing(4).parity == "even" and LoopRing(4).has_torsion
    assert LoopRing(4, F2).parity == "odd"
    assert not LoopRing(4, Q).has_torsion


@pytest.mark.parametrize("ring", RINGS, ids=ids)
def test_unit_and_nilpotent_A(ring):
    for mon in ring.basis(60):
        X = ring.monomial(mon)
        assert ring.E * X == X and X * ring.E == X
    assert ring.A * ring.A == ring.zero
    assert ring.delta(ring.A) == ring.zero


def test_even_integral_relations():
    r = LoopRing(4, Z)
    assert r.A * r.W == r.zero
    AT = r.A * r.Theta
    assert AT != r.zero
    assert AT * 2 == r.zero
    rq = LoopRing(4, Q)
    assert rq.A * rq.Theta == rq.zero


def test_odd_delta_and_brackets():
    r = LoopRing(3, Z)
    U = r.U
    assert r.delta(r.A * U**3) == U**2 * 3
    assert r.bracket(r.A, U) == -r.E
    for m in range(1, 30):
        assert r.bracket(r.A, U**m) == U ** (m - 1) * (-m)


def test_even_delta_and_brackets():
    r = LoopRing(4, Z)
    k = r.k
    assert r.bracket(r.W, r.Theta) == r.monomial((0, 0, 1), -k)
    for m in range(0, 20):
        assert r.delta(r.monomial((0, 1, m))) == r.monomial((0, 0, m), m * k + 1)


@pytest.mark.parametrize("ring", [LoopRing(3, Z), LoopRing(4, Z), LoopRing(4, F2)], ids=str)
def test_exactness_up_to_fifty(ring):
    res = exactness_check(ring, 50)
    assert res.ok, res.violations[:3]


def _sign(ring, x, y):
    return -1 if (ring.shifted(x) * ring.shifted(y)) % 2 else 1


@pytest.mark.parametrize("ring", RINGS, ids=ids)
def test_associative_and_graded_commutative(ring):
    basis = ring.basis(60)
    for x, y in itertools.product(basis, repeat=2):
        X, Y = ring.monomial(x), ring.monomial(y)
        assert X * Y == (Y * X) * _sign(ring, x, y)
    sample = basis[:14]
    for x, y, z in itertools.product(sample, repeat=3):
        X, Y, Z_ = (ring.monomial(m) for m in (x, y, z))
        assert (X * Y) * Z_ == X * (Y * Z_)


@pytest.mark.parametrize("ring", RINGS, ids=ids)
def test_leibniz_random_triples(ring):
    rnd = random.Random(5)
    basis = ring.basis(80)
    for _ in range(200):
        x, y, z = (rnd.choice(basis) for _ in range(3))
        X, Y, Z_ = (ring.monomial(m) for m in (x, y, z))
        lhs = ring.bracket(X, Y * Z_)
        s = -1 if ((ring.shifted(x) + 1) * ring.shifted(y)) % 2 else 1
        rhs = ring.bracket(X, Y) * Z_ + (Y * ring.bracket(X, Z_)) * s
        # on torsion classes Leibniz needs k even; reduce accordingly
        assert ring.with_even_k(lhs - rhs) == ring.zero


def test_bracket_routes_agree_up_to_even_k():
    r = LoopRing(4, Z)
    basis = r.basis(60)
    for x, y in itertools.product(basis[:12], repeat=2):
        X, Y = r.monomial(x), r.monomial(y)
        assert r.with_even_k(r.bracket(X, Y) - r.bracket_recursive(X, Y)) == r.zero


def test_mismatched_rings():
    with pytest.raises(RingMismatchError):
        LoopRing(3).A * LoopRing(5).A


@pytest.mark.parametrize("n", [3, 4, 5, 6])
@pytest.mark.parametrize("coeffs", [Z, Q, F2], ids=str)
def test_round_table_checks(n, coeffs):
    t = round_critical_table(n, 2 * math.pi, 200, coeffs)
    for chk in (delta_level_check(t), product_level_check(t), duality_check(t), rank_check(t)):
        assert chk.ok, chk.violations[:3]
        assert chk.checked > 0
    assert interval_check(t).ok


def test_round_table_levels():
    t = round_critical_table(3, 2 * math.pi, 100)
    r = t.ring
    assert t.level(r.E) == 0
    assert t.level(r.U) == 1
    assert t.level(r.U**2) == 1
    assert t.level(r.U**3) == 2
    rows = t.rows()
    assert set(rows[0]) == {"class", "degree", "critical_level", "dual_class"}
    assert [row["degree"] for row in rows] == sorted(row["degree"] for row in rows)


def test_morse_bott_counts_match_table():
    for n in (3, 4):
        t = round_critical_table(n, 1.0, 120, Q)
        mb = morse_bott_classes(n, 120, Q)
        assert len(mb) == len(t.free_entries)


def test_mean_levels():
    t = round_critical_table(3, 2 * math.pi, 400)
    r = t.ring
    assert mean_level(r.U**2, r.E, t).estimate == 1
    assert mean_level(r.U, r.A, t).estimate == Fraction(1, 2)
    assert mean_level(r.U, r.U, t).estimate == Fraction(1, 2)
    with pytest.raises(ValueError):
        mean_level(r.A, r.E, t)


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_mu_limits_equal_prime_length(n):
    L = 2 * math.pi
    t = round_critical_table(n, L, 300)
    lim = mu_limits(t)
    assert lim.equal
    assert lim.mu_plus_value == pytest.approx(L, rel=1e-15)
    assert lim.mu_minus_value == pytest.approx(L, rel=1e-15)


def test_resonance_scaling_halves_frequency():
    a = resonance_report(round_critical_table(3, 2 * math.pi, 200))
    b = resonance_report(round_critical_table(3, 4 * math.pi, 200))
    assert b.alpha_bar == pytest.approx(a.alpha_bar / 2, rel=1e-14)
    assert a.alpha_bar == pytest.approx(2 / math.pi, rel=1e-14)
    assert a.max_deviation <= 3 and a.verdict


def test_insufficient_depth():
    with pytest.raises(InsufficientDepthError):
        resonance_report(round_critical_table(5, 1.0, 10))


def test_external_point_table():
    t = CriticalTable.from_points(3, 2.0, [("x", 4, 2.0), ("y", 6, 4.0)])
    assert [e.level for e in t.entries] == [1, 2]
    assert t.rows()[1]["critical_level"] == pytest.approx(4.0)


def test_consecutive_coefficients():
    for p in (2, 3, 5, 7):
        assert consecutive_coefficient_check(p, 100).ok
