"""Mean frequencies from conjugate-point density, and the bounds that sandwich them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .jacobi import ConjugateReport, CurvatureProfile, conjugate_points
from .metric_models import (
    EllipsoidModel,
    InvalidModelError,
    PlaneSection,
    _check_pair,
    ellipse_length,
    section_decomposition,
)

CONVERGENCE_RTOL = 1e-3
SPLIT_TOL = 2e-3


@dataclass(frozen=True)
class FrequencyEstimate:
    mean_frequency: float
    period: float
    periods_used: int
    convergence_history: tuple[tuple[int, float], ...]
    error_estimate: float
    converged: bool
    raw_density: float
    conjugate_count: int
    parts: tuple["FrequencyEstimate", ...] = ()
    cross_check: float | None = None
    label: str = ""

    @property
    def average_index(self) -> float:
        return self.mean_frequency * self.period

    @property
    def warning(self) -> str | None:
        if self.converged:
            return None
        return f"not converged: last two estimates differ by {self.error_estimate:.3g}"


def density_slope(report: ConjugateReport, T: float) -> float:
    """Least-squares slope of the cumulative count against conjugate time on (0, T].

    Fits N(t_k) = a*t_k + c over the jump points. Unlike count(T)/T this is
    free of the O(1/T) bias from the partially filled last period.
    """
    pts = [(t, n) for t, n in report.cumulative() if t <= T + report.tolerance]
    if len(pts) < 2:
        return report.count(T) / T
    t = np.array([p[0] for p in pts])
    n = np.array([p[1] for p in pts], dtype=float)
    tc = t - t.mean()
    return float(np.dot(tc, n - n.mean()) / np.dot(tc, tc))


def _history_points(max_periods: int) -> list[int]:
    ms, m = [], 4
    while m < max_periods:
        ms.append(m)
        m *= 2
    ms.append(max_periods)
    return ms


def mean_frequency(
    profile: CurvatureProfile,
    max_periods: int = 50,
    rtol: float = CONVERGENCE_RTOL,
    label: str = "",
) -> FrequencyEstimate:
    """Conjugate points per unit length along ``max_periods`` iterates of the geodesic."""
    if int(max_periods) != max_periods or max_periods < 4:
        raise ValueError("max_periods must be an integer >= 4")
    L = profile.period
    T = max_periods * L
    report = conjugate_points(profile, T)
    history = tuple((m, density_slope(report, m * L)) for m in _history_points(max_periods))
    value = history[-1][1]
    prev = history[-2][1] if len(history) > 1 else value
    err = abs(value - prev)
    converged = err <= rtol * max(abs(value), 1e-12) if value != 0 else err == 0
    return FrequencyEstimate(
        mean_frequency=value,
        period=L,
        periods_used=max_periods,
        convergence_history=history,
        error_estimate=err,
        converged=bool(converged),
        raw_density=report.count(T) / T,
        conjugate_count=report.count(T),
        label=label or profile.label,
    )


# ellipses -----------------------------------------------------------------


class EllipseArclength:
    """Arclength map of the ellipse t -> (a cos t, b sin t) and its inverse."""

    def __init__(self, a: float, b: float, nodes: int = 4096):
        self.a, self.b = float(a), float(b)
        self.length = ellipse_length(a, b)
        self._circle = a == b
        if self._circle:
            return
        ts = np.linspace(0.0, 2.0 * math.pi, nodes + 1)
        x, w = np.polynomial.legendre.leggauss(8)
        h = ts[1] - ts[0]
        mids = 0.5 * (ts[:-1] + ts[1:])
        nodes_t = mids[:, None] + 0.5 * h * x[None, :]
        seg = 0.5 * h * (self.speed(nodes_t) @ w)
        s = np.concatenate([[0.0], np.cumsum(seg)])
        # pin the end point to the adaptive-quadrature length
        s *= self.length / s[-1]
        self._inverse = CubicHermiteSpline(s, ts, 1.0 / self.speed(ts))

    def speed(self, t):
        return np.sqrt((self.a * np.sin(t)) ** 2 + (self.b * np.cos(t)) ** 2)

    def t_of(self, sigma: float) -> float:
        if self._circle:
            return sigma / self.a
        k, r = divmod(sigma, self.length)
        return float(self._inverse(r)) + 2.0 * math.pi * k


def section_profile(section: PlaneSection, arclength: EllipseArclength | None = None) -> CurvatureProfile:
    arc = arclength or EllipseArclength(section.a, section.b)
    lo, hi = section.curvature_bounds()
    return CurvatureProfile(
        1,
        arc.length,
        lambda s: np.array([[section.curvature(arc.t_of(s))]]),
        label=f"section({section.a:g},{section.b:g},{section.c:g})",
        _kbounds=(lo, hi),
    )


def ellipse_profile(model: EllipsoidModel, ellipse) -> CurvatureProfile:
    """Full (n-1)-dimensional curvature profile along a coordinate ellipse."""
    sections = section_decomposition(model, ellipse)
    arc = EllipseArclength(sections[0].a, sections[0].b)
    bounds = [s.curvature_bounds() for s in sections]

    def R(sigma):
        t = arc.t_of(sigma)
        return np.diag([s.curvature(t) for s in sections])

    return CurvatureProfile(
        len(sections),
        arc.length,
        R,
        label=f"ellipse{tuple(ellipse)}",
        _kbounds=(min(b[0] for b in bounds), max(b[1] for b in bounds)),
    )


def ellipse_mean_frequency(
    model: EllipsoidModel,
    ellipse,
    max_periods: int = 50,
    cross_check: bool | None = None,
) -> FrequencyEstimate:
    """Sum of the section mean frequencies along one coordinate ellipse.

    The sections are totally geodesic surfaces, so R is diagonal and the
    count splits into independent scalar problems. For n <= 4 the full
    profile is integrated as well and stored in ``cross_check``.
    """
    i, j = _check_pair(model, ellipse)
    sections = section_decomposition(model, (i, j))
    arc = EllipseArclength(sections[0].a, sections[0].b)
    parts = tuple(mean_frequency(section_profile(s, arc), max_periods) for s in sections)
    total = sum(p.mean_frequency for p in parts)
    history = tuple(
        (m, sum(p.convergence_history[k][1] for p in parts))
        for k, (m, _) in enumerate(parts[0].convergence_history)
    )
    err = abs(history[-1][1] - history[-2][1]) if len(history) > 1 else 0.0
    if cross_check is None:
        cross_check = 2 < model.n <= 4
    full = mean_frequency(ellipse_profile(model, (i, j)), max_periods).mean_frequency if cross_check else None
    return FrequencyEstimate(
        mean_frequency=total,
        period=arc.length,
        periods_used=max_periods,
        convergence_history=history,
        error_estimate=err,
        converged=all(p.converged for p in parts),
        raw_density=sum(p.raw_density for p in parts),
        conjugate_count=sum(p.conjugate_count for p in parts),
        parts=parts,
        cross_check=full,
        label=f"({i},{j})",
    )


# bounds -------------------------------------------------------------------


@dataclass(frozen=True)
class BoundInterval:
    lower: float
    upper: float
    source: str
    strict: bool = True

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError(f"empty interval [{self.lower}, {self.upper}]")

    def contains(self, x: float, tol: float = 0.0) -> bool:
        """Strict containment for a strict interval, closed with ``tol`` otherwise."""
        if self.strict:
            return self.lower - tol < x < self.upper + tol
        return self.lower - tol <= x <= self.upper + tol


def curvature_sandwich(n: int, per_direction: Sequence[tuple[float, float]], source: str = "sandwich") -> BoundInterval:
    """Interval [sum(delta)/pi, sum(Delta)/pi] for curvature delta_i^2 <= K_i <= Delta_i^2.

    A single pair is repeated over all n - 1 normal directions.
    """
    pairs = list(per_direction)
    if len(pairs) == 1 and n - 1 > 1:
        pairs = pairs * (n - 1)
    if len(pairs) != n - 1:
        raise ValueError(f"expected {n - 1} direction bounds, got {len(pairs)}")
    for lo, hi in pairs:
        if lo <= 0:
            raise ValueError("curvature sandwich needs strictly positive lower bounds")
        if hi < lo:
            raise ValueError(f"lower bound {lo} exceeds upper bound {hi}")
    lo = sum(p[0] for p in pairs) / math.pi
    hi = sum(p[1] for p in pairs) / math.pi
    return BoundInterval(lo, hi, source, strict=any(p[0] < p[1] for p in pairs))


def sandwich_from_profile(profile: CurvatureProfile) -> BoundInterval:
    kmin, kmax = profile.eigen_range()
    if kmin <= 0:
        raise ValueError("profile curvature is not positive")
    return curvature_sandwich(profile.dim + 1, [(math.sqrt(kmin), math.sqrt(kmax))])


def section_interval(model: EllipsoidModel, ellipse, source: str = "holonomy") -> BoundInterval:
    """Interval from the per-section curvature bounds along one ellipse."""
    per = [tuple(math.sqrt(x) for x in s.curvature_bounds()) for s in section_decomposition(model, ellipse)]
    return curvature_sandwich(model.n, per, source)


def ellipsoid_chain_bounds(model: EllipsoidModel) -> dict[tuple[int, int], BoundInterval]:
    if model.n != 2:
        raise InvalidModelError("the three-ellipse chain needs exactly three axes")
    a0, a1, a2 = model.axes
    pi = math.pi
    lo, mid, hi = a0 / (pi * a1 * a2), a1 / (pi * a0 * a2), a2 / (pi * a0 * a1)
    return {
        (0, 1): BoundInterval(lo, mid, "ellipsoid-chain", strict=a0 < a1),
        (0, 2): BoundInterval(lo, hi, "ellipsoid-chain", strict=a0 < a2),
        (1, 2): BoundInterval(mid, hi, "ellipsoid-chain", strict=a1 < a2),
    }


@dataclass(frozen=True)
class EllipsoidRow:
    geodesic: tuple[int, int]
    length: float
    alpha_bar: float
    lower: float
    upper: float
    verdict: bool

    def as_dict(self) -> dict:
        return {
            "geodesic": f"({self.geodesic[0]},{self.geodesic[1]})",
            "length": self.length,
            "alpha_bar": self.alpha_bar,
            "lower": self.lower,
            "upper": self.upper,
            "verdict": self.verdict,
        }


@dataclass(frozen=True)
class EllipsoidReport:
    rows: tuple[EllipsoidRow, ...]
    chain_ok: bool
    all_distinct: bool
    estimates: tuple[FrequencyEstimate, ...] = field(repr=False, default=())

    @property
    def verdict(self) -> bool:
        return self.chain_ok and all(r.verdict for r in self.rows)


def ellipsoid_report(
    model: EllipsoidModel,
    max_periods: int = 50,
    tol: float = 1e-4,
    distinct_tol: float = SPLIT_TOL,
) -> EllipsoidReport:
    """Mean frequencies of the three short geodesics of a 2-dimensional ellipsoid, checked against the chain."""
    bounds = ellipsoid_chain_bounds(model)
    rows, ests = [], []
    for pair, bound in bounds.items():
        est = ellipse_mean_frequency(model, pair, max_periods)
        ests.append(est)
        rows.append(EllipsoidRow(pair, est.period, est.mean_frequency, bound.lower, bound.upper, bound.contains(est.mean_frequency, tol=0.0 if bound.strict else tol)))
    a1, a2, a3 = (r.alpha_bar for r in rows)
    mid = bounds[(0, 1)].upper
    chain_ok = (a1 <= mid + tol) and (mid <= a3 + tol)
    if bounds[(0, 1)].strict and bounds[(1, 2)].strict:
        chain_ok = a1 < mid < a3
    distinct = min(abs(a1 - a2), abs(a1 - a3), abs(a2 - a3)) > distinct_tol
    return EllipsoidReport(tuple(rows), chain_ok, distinct, tuple(ests))


# graded family -------------------------------------------------------------


@dataclass(frozen=True)
class SeparationResult:
    intervals: tuple[BoundInterval, ...]
    threshold: float
    separated: bool
    threshold_exact: Fraction | None = None


def graded_separation(mu, m: int, lam) -> SeparationResult:
    """Interval arithmetic for the graded ellipsoid family.

    Intervals ((1+lam)/lam * S_i, (1+lam)*lam * S_i), S_i = sum over
    0 <= k <= m, k != i of mu^-k, for i = 1..m, plus the sufficient
    threshold 1 + (mu-1)^2 mu^-(m+2) on lam.
    """
    if mu <= 1 or lam <= 1:
        raise ValueError("need mu > 1 and lam > 1")
    if int(m) != m or m < 2:
        raise ValueError("need an integer m >= 2")
    mu_q, lam_q = Fraction(mu), Fraction(lam)
    intervals = []
    for i in range(1, m + 1):
        S = sum((mu_q ** -k for k in range(m + 1) if k != i), Fraction(0))
        intervals.append(BoundInterval(float((1 + lam_q) / lam_q * S), float((1 + lam_q) * lam_q * S), "graded"))
    separated = all(intervals[i].upper < intervals[i + 1].lower for i in range(m - 1))
    thr = 1 + (mu_q - 1) ** 2 * mu_q ** (-(m + 2))
    return SeparationResult(tuple(intervals), float(thr), separated, thr)


def graded_pairs(model: EllipsoidModel) -> list[tuple[int, int]]:
    """Ellipses in the (x_{2i}, x_{2i+1}) planes, ordered by i."""
    return [(2 * i, 2 * i + 1) for i in range((model.n + 1) // 2)]


def graded_intervals(model: EllipsoidModel) -> list[BoundInterval]:
    """Section-curvature intervals for each graded ellipse of the actual model."""
    return [section_interval(model, p, source="graded") for p in graded_pairs(model)]


# iterates -----------------------------------------------------------------


@dataclass(frozen=True)
class IndexCheck:
    index_ok: bool
    degree_ok: bool | None
    slack_lower: float
    slack_upper: float

    @property
    def verdict(self) -> bool:
        return self.index_ok and self.degree_ok is not False


def iterate_index_check(
    L: float, alpha_bar: float, ind: int, null: int, n: int, deg: int | None = None, tol: float = 1e-9
) -> IndexCheck:
    """Check L*abar - (n-1) <= ind <= L*abar + (n-1) - null, and ind <= deg <= ind + null + 1."""
    la = L * alpha_bar
    slack_lower = ind - (la - (n - 1))
    slack_upper = la + (n - 1) - null - ind
    ok = slack_lower >= -tol and slack_upper >= -tol
    deg_ok = None if deg is None else (ind <= deg <= ind + null + 1)
    return IndexCheck(bool(ok), deg_ok, float(slack_lower), float(slack_upper))
