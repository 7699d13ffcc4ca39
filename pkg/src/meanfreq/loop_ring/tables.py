"""Critical-level tables, mean levels and resonance checks.

Levels are stored as exact multiples of the prime length L (``Fraction``)
so that every inequality in this module is decided without rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .algebra import INTEGERS, CoefficientSpec, LoopRing, Monomial, RingElement


class InsufficientDepthError(ValueError):
    pass


# Morse-Bott oracle ----------------------------------------------------------


def unit_tangent_homology(n: int, coefficients: CoefficientSpec = INTEGERS) -> dict[int, str]:
    """Nonzero homology of the unit tangent bundle of S^n: degree -> 'free' or 'torsion'."""
    if n % 2 or coefficients.characteristic == 2:
        return {0: "free", n - 1: "free", n: "free", 2 * n - 1: "free"}
    out = {0: "free", 2 * n - 1: "free"}
    if coefficients.kind == "integers":
        out[n - 1] = "torsion"
    return out


def morse_bott_classes(n: int, max_degree: int, coefficients: CoefficientSpec = INTEGERS) -> list[tuple[int, int, str]]:
    """(degree, level, kind) of every local homology generator of the round energy functional.

    The m-th iterate manifold sits at level m (in units of L) with index
    (2m - 1)(n - 1); the point curves contribute H_*(S^n) at level 0.
    """
    out = [(0, 0, "free"), (n, 0, "free")]
    fibre = unit_tangent_homology(n, coefficients)
    m = 1
    while (2 * m - 1) * (n - 1) <= max_degree:
        base = (2 * m - 1) * (n - 1)
        for off, kind in fibre.items():
            if base + off <= max_degree:
                out.append((base + off, m, kind))
        m += 1
    return sorted(out)


def cohomology_level(n: int, degree: int) -> int:
    """Level of a free cohomology generator in ``degree`` from the window rule.

    Degree d belongs to the unique m >= 1 with d - (2m-1)(n-1) in {0, n-1, n, 2n-1}.
    Degrees 0 and n are at level 0.
    """
    if degree in (0, n):
        return 0
    offsets = (0, n - 1, n, 2 * n - 1)
    hits = [m for m in range(1, degree // (n - 1) + 2) if degree - (2 * m - 1) * (n - 1) in offsets]
    if len(hits) != 1:
        raise ValueError(f"degree {degree} is not a generator degree for n={n}")
    return hits[0]


# tables -------------------------------------------------------------------


@dataclass(frozen=True)
class CriticalEntry:
    monomial: Monomial | None
    name: str
    degree: int
    level: Fraction
    torsion: bool = False
    dual: str | None = None
    dual_level: Fraction | None = None


@dataclass(frozen=True)
class CriticalTable:
    n: int
    L: float
    max_degree: int
    entries: tuple[CriticalEntry, ...]
    ring: LoopRing | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {e.monomial: e for e in self.entries if e.monomial is not None})

    @classmethod
    def from_points(cls, n: int, L: float, points: Iterable[tuple[str, int, float]]) -> "CriticalTable":
        """Table from externally supplied (name, degree, critical value) triples."""
        entries = tuple(
            CriticalEntry(None, name, int(deg), Fraction(cr / L).limit_denominator(10**9)) for name, deg, cr in points
        )
        max_degree = max((e.degree for e in entries), default=0)
        return cls(n, L, max_degree, tuple(sorted(entries, key=lambda e: (e.degree, e.name))))

    def entry(self, mon: Monomial) -> CriticalEntry | None:
        return self._index.get(tuple(mon))

    def level(self, x) -> Fraction | None:
        """Critical level of a monomial (or single-term element), as a multiple of L."""
        if isinstance(x, RingElement):
            x = x.leading
        e = self.entry(x)
        return None if e is None else e.level

    def cr(self, x) -> float | None:
        lev = self.level(x)
        return None if lev is None else float(lev) * self.L

    def rows(self) -> list[dict]:
        return [
            {
                "class": e.name,
                "degree": e.degree,
                "critical_level": float(e.level) * self.L,
                "dual_class": e.dual or "",
            }
            for e in self.entries
        ]

    @property
    def free_entries(self) -> list[CriticalEntry]:
        return [e for e in self.entries if not e.torsion]


def _u_form(ring: LoopRing, mon: Monomial) -> tuple[int, int]:
    """(e, m) with the class equal to A^e U^m once Theta = U^2 and W = A U."""
    e, d, m = mon
    if ring.parity == "odd":
        return e, m
    if d:
        return 1, 2 * m + 1
    return e, 2 * m


def _dual_name(ring: LoopRing, mon: Monomial) -> str | None:
    """Cohomology dual via the pairing of y * omega^m with Y * Theta^m."""
    if ring.is_torsion(mon):
        return None
    e, u = _u_form(ring, mon)
    m, r = divmod(u, 2)
    if e and r:  # W * Theta^m
        return f"omega^{m + 1}"
    base = {(1, 0): "a", (0, 0): "e", (0, 1): "u"}[(e, r)]
    return base if m == 0 else f"{base}*omega^{m}"


def round_critical_table(
    n: int, L: float, max_degree: int, coefficients: CoefficientSpec = INTEGERS
) -> CriticalTable:
    """Critical levels of all basis classes for the round metric with prime length L."""
    if n < 3:
        raise ValueError("round tables need n >= 3")
    if not L > 0:
        raise ValueError("L must be positive")
    ring = LoopRing(n, coefficients)
    entries = []
    for mon in ring.basis(max_degree):
        e, u = _u_form(ring, mon)
        level = Fraction((u + 1) // 2)
        torsion = ring.is_torsion(mon)
        deg = ring.degree(mon)
        dual = _dual_name(ring, mon)
        dual_level = None if torsion else Fraction(cohomology_level(n, deg))
        entries.append(CriticalEntry(mon, ring.name(mon), deg, level, torsion, dual, dual_level))
    return CriticalTable(n, float(L), int(max_degree), tuple(entries), ring)


# mean levels ----------------------------------------------------------------


@dataclass(frozen=True)
class MeanLevel:
    limsup: Fraction
    liminf: Fraction
    estimate: Fraction
    ratio_max: Fraction
    ratio_min: Fraction
    samples: int
    truncated: bool
    L: float

    def value(self) -> float:
        return float(self.estimate) * self.L


def _family_levels(table: CriticalTable, U: RingElement, Z: RingElement) -> tuple[list[tuple[int, Fraction]], bool]:
    ring = table.ring
    out = []
    power = Z
    m = 0
    truncated = False
    while True:
        m += 1
        power = power * U
        if power.is_zero:
            break
        mon = power.leading
        if ring.degree(mon) > table.max_degree:
            truncated = True
            break
        out.append((m, table.level(mon)))
    return out, truncated


def mean_level(U: RingElement, Z: RingElement, table: CriticalTable, window: float = 0.5) -> MeanLevel:
    """cr(U^m Z)/m along the table.

    Returns the extrema over the last window and over the whole run, plus a
    secant estimate that is exact for eventually linear level sequences.
    """
    if table.ring is None:
        raise ValueError("mean levels need a table built from a ring")
    if U.degree is None or U.degree <= table.n:
        raise ValueError("mean levels need deg U > n")
    seq, truncated = _family_levels(table, U, Z)
    if len(seq) < 2:
        raise InsufficientDepthError("table too shallow for a mean level")
    ratios = [lev / m for m, lev in seq]
    start = int(len(seq) * (1 - window))
    tail = ratios[start:]
    # secant over an even number of steps, from the middle of the run to its end
    m2, l2 = seq[-1]
    j = len(seq) // 2 - 1
    if (m2 - seq[j][0]) % 2:
        j -= 1
    m1, l1 = seq[max(j, 0)]
    secant = (l2 - l1) / (m2 - m1)
    return MeanLevel(max(tail), min(tail), secant, max(ratios), min(ratios), len(seq), truncated, table.L)


@dataclass(frozen=True)
class MuLimits:
    mu_plus: Fraction
    mu_minus: Fraction
    depth: int
    subadditive: bool
    superadditive: bool
    powers_bound: bool
    L: float

    @property
    def equal(self) -> bool:
        return self.mu_plus == self.mu_minus

    @property
    def mu_plus_value(self) -> float:
        return float(self.mu_plus) * self.L

    @property
    def mu_minus_value(self) -> float:
        return float(self.mu_minus) * self.L


def _theta(ring: LoopRing) -> Monomial:
    return (0, 0, 2) if ring.parity == "odd" else (0, 0, 1)


def _omega_dual(ring: LoopRing, m: int) -> Monomial:
    """Homology class paired with omega^m."""
    return (1, 0, 2 * m - 1) if ring.parity == "odd" else (0, 1, m - 1)


def mu_limits(table: CriticalTable, min_depth: int = 10, witness_span: int = 20) -> MuLimits:
    ring = table.ring
    if ring is None:
        raise ValueError("mu limits need a table built from a ring")
    th = _theta(ring)
    theta_levels, omega_levels = [], []
    m = 1
    while True:
        mon = (th[0], th[1], th[2] * m)
        ent = table.entry(mon)
        dual = table.entry(_omega_dual(ring, m))
        if ent is None or dual is None:
            break
        theta_levels.append(ent.level)
        omega_levels.append(dual.dual_level)
        m += 1
    depth = len(theta_levels)
    if depth < min_depth:
        raise InsufficientDepthError(f"table covers only m <= {depth}, need {min_depth}")
    # Fekete: inf of the subadditive ratios, sup of the superadditive ones
    mu_plus = min(lev / (i + 1) for i, lev in enumerate(theta_levels))
    mu_minus = max(lev / (i + 1) for i, lev in enumerate(omega_levels))
    span = min(witness_span, depth)
    sub = all(
        theta_levels[a + b - 1] <= theta_levels[a - 1] + theta_levels[b - 1]
        for a in range(1, span)
        for b in range(1, span - a + 1)
    )
    sup = all(
        omega_levels[a + b - 1] >= omega_levels[a - 1] + omega_levels[b - 1]
        for a in range(1, span)
        for b in range(1, span - a + 1)
    )
    powers = all(mu_plus <= lev / (i + 1) for i, lev in enumerate(theta_levels))
    return MuLimits(mu_plus, mu_minus, depth, sub, sup, powers, table.L)


# resonance ------------------------------------------------------------------


@dataclass(frozen=True)
class ResonanceReport:
    alpha_bar: float
    mu_plus: float
    mu_minus: float
    max_deviation: Fraction
    bound: int
    verdict: bool
    interval: tuple[float, float] | None = None
    worst_class: str = ""

    def as_dict(self) -> dict:
        out = {
            "alpha_bar": self.alpha_bar,
            "mu_plus": self.mu_plus,
            "mu_minus": self.mu_minus,
            "max_deviation": float(self.max_deviation),
            "bound": self.bound,
            "verdict": self.verdict,
        }
        if self.interval is not None:
            out["alpha_bar_interval"] = list(self.interval)
        return out


def resonance_report(table: CriticalTable, n: int | None = None) -> ResonanceReport:
    n = table.n if n is None else n
    if table.max_degree < 10 * (n - 1):
        raise InsufficientDepthError(f"resonance needs table depth >= {10 * (n - 1)}")
    lim = mu_limits(table)
    mu_bar = (lim.mu_plus + lim.mu_minus) / 2
    worst, worst_name = Fraction(0), ""
    for e in table.entries:
        if e.degree <= n:
            continue
        dev = abs(e.degree - Fraction(2 * (n - 1)) * e.level / mu_bar)
        if dev > worst:
            worst, worst_name = dev, e.name
    alpha = 2 * (n - 1) / (float(mu_bar) * table.L)
    interval = None
    if not lim.equal:
        interval = (2 * (n - 1) / lim.mu_plus_value, 2 * (n - 1) / lim.mu_minus_value)
    return ResonanceReport(
        alpha_bar=alpha,
        mu_plus=lim.mu_plus_value,
        mu_minus=lim.mu_minus_value,
        max_deviation=worst,
        bound=n,
        verdict=worst <= n,
        interval=interval,
        worst_class=worst_name,
    )


# table-wide checks -----------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    ok: bool
    checked: int
    violations: tuple[str, ...] = ()


def delta_level_check(table: CriticalTable) -> CheckResult:
    """cr(Delta X) <= cr(X) for every tabulated X with Delta X != 0."""
    ring = table.ring
    checked, bad = 0, []
    for e in table.entries:
        dx = ring.delta_monomial(e.monomial)
        for mon in dx.terms:
            lev = table.level(mon)
            if lev is None:
                continue
            checked += 1
            if lev > e.level:
                bad.append(f"Delta({e.name}) -> {ring.name(mon)}")
    return CheckResult(not bad, checked, tuple(bad))


def product_level_check(table: CriticalTable) -> CheckResult:
    """cr(X*Y) <= cr(X) + cr(Y) for every pair whose nonzero product is tabulated."""
    ring = table.ring
    checked, bad = 0, []
    entries = table.entries
    for i, x in enumerate(entries):
        for y in entries[i:]:
            res = ring.monomial_product(x.monomial, y.monomial)
            if res is None:
                continue
            ent = table.entry(res[1])
            if ent is None:
                continue
            checked += 1
            if ent.level > x.level + y.level:
                bad.append(f"{x.name}*{y.name}")
    return CheckResult(not bad, checked, tuple(bad))


def duality_check(table: CriticalTable) -> CheckResult:
    """Homology and dual cohomology levels agree in every degree of free rank one."""
    by_degree: dict[int, list[CriticalEntry]] = {}
    for e in table.free_entries:
        by_degree.setdefault(e.degree, []).append(e)
    checked, bad = 0, []
    for deg, es in sorted(by_degree.items()):
        if len(es) != 1:
            continue
        checked += 1
        if es[0].dual_level != es[0].level:
            bad.append(es[0].name)
    return CheckResult(not bad, checked, tuple(bad))


def rank_check(table: CriticalTable) -> CheckResult:
    """At most one free generator per degree, matching the Morse-Bott count."""
    ring = table.ring
    counts: dict[int, int] = {}
    for e in table.free_entries:
        counts[e.degree] = counts.get(e.degree, 0) + 1
    expected: dict[tuple[int, str], int] = {}
    for deg, lev, kind in morse_bott_classes(table.n, table.max_degree, ring.coefficients):
        expected[(deg, kind)] = lev
    bad = [f"degree {d}: rank {c}" for d, c in counts.items() if c > 1]
    for e in table.entries:
        kind = "torsion" if e.torsion else "free"
        if expected.get((e.degree, kind)) != e.level:
            bad.append(f"{e.name}: level {e.level} vs Morse-Bott {expected.get((e.degree, kind))}")
    if len(expected) != len(table.entries):
        bad.append(f"{len(expected)} Morse-Bott generators vs {len(table.entries)} table classes")
    return CheckResult(not bad, len(table.entries), tuple(bad))


@dataclass(frozen=True)
class IntervalCheck:
    ok: bool
    lower: Fraction
    upper: Fraction
    secants: tuple[Fraction, ...]
    worst_tail_excess: float


def interval_check(table: CriticalTable, limits: MuLimits | None = None, window: float = 0.5) -> IntervalCheck:
    """Ratios cr/deg against [mu-/2(n-1), mu+/2(n-1)] (in units of L).

    Along each family Y * Theta^m the exact secant slope of level against
    degree must lie in the interval. Tail ratios must approach it at the
    rate allowed by the resonance bound: distance at most n / (abar deg),
    which in units of L is n * mu+ / (2 (n-1) deg).
    """
    lim = limits or mu_limits(table)
    n = table.n
    lo = lim.mu_minus / (2 * (n - 1))
    hi = lim.mu_plus / (2 * (n - 1))
    ring = table.ring
    th = _theta(ring)
    fams: dict[Monomial, list[CriticalEntry]] = {}
    for e in table.entries:
        if e.degree <= n:
            continue
        mon = e.monomial
        steps = mon[2] // th[2]
        base = (mon[0], mon[1], mon[2] - steps * th[2])
        fams.setdefault(base, []).append(e)
    secants, excess = [], 0.0
    ok = True
    for base, es in fams.items():
        es.sort(key=lambda e: e.degree)
        for a, b in zip(es, es[1:]):
            s = (b.level - a.level) / (b.degree - a.degree)
            secants.append(s)
            ok &= lo <= s <= hi
        tail = es[int(len(es) * (1 - window)):]
        for e in tail:
            r = e.level / e.degree
            dist = max(lo - r, r - hi, Fraction(0))
            allowed = Fraction(n) * lim.mu_plus / (2 * (n - 1) * e.degree)
            excess = max(excess, float(dist - allowed))
            ok &= dist <= allowed
    return IntervalCheck(bool(ok), lo, hi, tuple(secants), excess)


def consecutive_coefficient_check(p: int, m_max: int = 200) -> CheckResult:
    """Delta coefficients never vanish mod p for two consecutive family members.

    Odd type: 2m - 1 and 2m + 1. Even type: (m-1)k + 1 and mk + 1 for every k mod p.
    """
    bad = []
    checked = 0
    for m in range(1, m_max + 1):
        checked += 1
        if (2 * m - 1) % p == 0 and (2 * m + 1) % p == 0:
            bad.append(f"odd m={m}")
        for k in range(p):
            checked += 1
            if ((m - 1) * k + 1) % p == 0 and (m * k + 1) % p == 0:
                bad.append(f"even m={m} k={k}")
    return CheckResult(not bad, checked, tuple(bad))


def exactness_check(ring: LoopRing, m_max: int = 50) -> CheckResult:
    """Closed-form Delta against the generator recursion, plus the defining relations.

    Covers every basis monomial with top exponent at most ``m_max``. Odd type
    also checks {A, U^m} = -m U^(m-1) by both bracket routes; even type checks
    A W = 0, 2 A Theta = 0, {W, Theta} = -k Theta and Delta(W Theta^m) = (mk+1) Theta^m.
    """
    bad: list[str] = []
    checked = 0

    def expect(label: str, lhs: RingElement, rhs: RingElement) -> None:
        nonlocal checked
        checked += 1
        if lhs != rhs:
            bad.append(f"{label}: {lhs!r} != {rhs!r}")

    for m in range(m_max + 1):
        for e in (0, 1):
            for d in (0, 1):
                mon = (e, d, m)
                if ring.valid(mon):
                    X = ring.monomial(mon)
                    expect(f"Delta {ring.name(mon)}", ring.delta(X), ring.delta_recursive(X))
    A = ring.A
    expect("A*A", A * A, ring.zero)
    if ring.parity == "odd":
        U = ring.U
        for m in range(1, m_max + 1):
            target = ring.monomial((0, 0, m - 1), -m)
            Um = ring.monomial((0, 0, m))
            expect(f"{{A,U^{m}}}", ring.bracket(A, Um), target)
            expect(f"{{A,U^{m}}} recursive", ring.bracket_recursive(A, Um), target)
        expect("U^2 = U*U", U * U, ring.monomial((0, 0, 2)))
    else:
        W, T = ring.W, ring.Theta
        expect("A*W", A * W, ring.zero)
        expect("2*A*Theta", (A * T) * 2, ring.zero)
        expect("{W,Theta}", ring.bracket(W, T), ring.monomial((0, 0, 1), -ring.k))
        for m in range(m_max + 1):
            expect(f"Delta W*Theta^{m}", ring.delta(ring.monomial((0, 1, m))), ring.monomial((0, 0, m), m * ring.k + 1))
    return CheckResult(not bad, checked, tuple(bad))
