"""Seeded randomized property suites shared by the CLI and the tests."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .jacobi import CurvatureProfile, conjugate_points, integrate_fundamental, symplectic_J
from .perturb import (
    SCAN_TOL,
    Bump,
    PerturbationFamily,
    index_monotonicity_scan,
    is_plus_curve,
    plus_cone_member,
    star_consistency_check,
    star_derivative,
)

STURM_TOL = 1e-8
STAR_TOL = 1e-4
STAR_DS = 1e-3


@dataclass(frozen=True)
class SuiteResult:
    name: str
    seed: int
    trials: int
    rows: tuple[dict, ...]
    violations: int
    tolerance: float
    notes: tuple[str, ...] = field(default=())

    @property
    def passed(self) -> bool:
        return self.violations == 0


def _trig_series(rng: np.random.Generator, period: float, modes: int, scale: float):
    """Random real trigonometric polynomial with period ``period`` and sup norm at most ``scale``."""
    a = rng.normal(size=modes)
    b = rng.normal(size=modes)
    norm = float(np.sum(np.abs(a)) + np.sum(np.abs(b)))
    a *= scale / norm
    b *= scale / norm
    w = 2 * math.pi / period
    terms = tuple((float(ak), float(bk), k * w) for k, (ak, bk) in enumerate(zip(a, b), start=1))

    # scalar math keeps the per-call cost low inside the ODE right-hand side
    def f(t: float) -> float:
        return sum(ak * math.cos(kw * t) + bk * math.sin(kw * t) for ak, bk, kw in terms)

    return f


def sturm_suite(trials: int = 100, seed: int = 0, tol: float = STURM_TOL) -> SuiteResult:
    """Pairs K1 <= K2 of positive periodic curvatures; the first conjugate time cannot grow."""
    rng = np.random.default_rng(seed)
    rows = []
    violations = 0
    for i in range(trials):
        period = float(rng.uniform(1.0, 8.0))
        base = float(rng.uniform(0.3, 4.0))
        wiggle = _trig_series(rng, period, int(rng.integers(1, 5)), float(rng.uniform(0.0, 0.9)) * base)
        K1 = lambda t, base=base, f=wiggle: base + f(t)
        identical = rng.random() < 0.1
        if identical:
            K2 = K1
        else:
            lift = float(rng.uniform(0.0, 2.0))
            bumpy = _trig_series(rng, period, int(rng.integers(1, 4)), lift)
            K2 = lambda t, K1=K1, lift=lift, g=bumpy: K1(t) + lift + g(t)
        # K1 >= base - 0.9 base, so its first conjugate time is at most pi / sqrt(0.1 base)
        T = math.pi / math.sqrt(0.1 * base) + 0.5
        t1 = conjugate_points(CurvatureProfile.scalar(K1, period), T).first
        t2 = conjugate_points(CurvatureProfile.scalar(K2, period), T).first
        if t1 is None or t2 is None:
            ok = False
        elif identical:
            ok = abs(t1 - t2) <= tol
        else:
            ok = t1 >= t2 - tol
        violations += not ok
        rows.append({"trial": i, "period": period, "t1_K1": t1, "t1_K2": t2, "identical": identical, "ok": ok, "tol": tol})
    return SuiteResult("sturm", seed, trials, tuple(rows), violations, tol)


def _random_profile(rng: np.random.Generator) -> CurvatureProfile:
    dim = int(rng.integers(1, 3))
    period = float(rng.uniform(2.0, 7.0))
    kind = rng.choice(["constant", "trig", "rotated"]) if dim == 2 else rng.choice(["constant", "trig"])
    if kind == "constant":
        return CurvatureProfile.constant(float(rng.uniform(-1.0, 3.0)), dim, period, label="constant")
    if kind == "rotated":
        c = float(rng.uniform(0.2, 3.0))
        th = float(rng.uniform(0.0, 2 * math.pi))
        Q = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
        M = c * np.eye(2)
        return CurvatureProfile(2, period, lambda t, M=M: M, holonomy=Q, label="rotated", _kbounds=(c, c))
    funcs = []
    for _ in range(dim):
        base = float(rng.uniform(0.2, 2.5))
        f = _trig_series(rng, period, int(rng.integers(1, 4)), float(rng.uniform(0.0, 0.8)) * base)
        funcs.append(lambda t, base=base, f=f: base + f(t))
    return CurvatureProfile.diagonal(funcs, period, label="trig")


def star_suite(trials: int = 10, seed: int = 0, ds: float = STAR_DS, tol: float = STAR_TOL) -> SuiteResult:
    """First-order formula against a finite difference, plus positivity of the form."""
    rng = np.random.default_rng(seed)
    rows = []
    violations = 0
    for i in range(trials):
        prof = _random_profile(rng)
        L = prof.period
        eta = float(rng.uniform(0.03, 0.12)) * L
        bump = Bump(float(rng.uniform(2.2 * eta, L - 2.2 * eta)), eta, L, float(rng.uniform(0.3, 1.0)))
        fam = PerturbationFamily(prof, bump, "curvature")
        err = star_consistency_check(prof, fam, ds)
        form = star_derivative(prof, bump, integrate_fundamental(prof, L), breakpoints=fam.breakpoints())
        ok = err <= tol and form.positive_definite
        violations += not ok
        rows.append(
            {
                "trial": i,
                "profile": prof.label,
                "dim": prof.dim,
                "relative_error": err,
                "min_eig": form.min_eig,
                "positive_definite": form.positive_definite,
                "ok": ok,
                "tol": tol,
            }
        )
    return SuiteResult("star", seed, trials, tuple(rows), violations, tol)


def _random_sym(rng: np.random.Generator, n: int, pd: bool) -> np.ndarray:
    M = rng.normal(size=(n, n))
    S = M @ M.T
    if pd:
        S += 0.1 * np.eye(n)
    else:
        S = 0.5 * (M + M.T)
    return S


def plus_curve_suite(trials: int = 50, seed: int = 0, physical: int = 2) -> SuiteResult:
    """Cone membership under symplectic conjugation, and plus-curve detection.

    Each trial draws A = -J S with S positive definite, so J A = S lies in the
    cone. The curve s -> P0 exp(s A) must be a plus-curve and its reversal
    must not. The first ``physical`` trials also sample Poincare maps of a
    positive curvature bump family, which must form a plus-curve.
    """
    rng = np.random.default_rng(seed)
    rows = []
    violations = 0
    for i in range(trials):
        d = int(rng.integers(1, 4))
        J = symplectic_J(d)
        A = -J @ _random_sym(rng, 2 * d, pd=True)
        # symplectic group elements: exponentials of Lie algebra elements J H
        S = expm(0.3 * J @ _random_sym(rng, 2 * d, pd=False))
        P0 = expm(0.3 * J @ _random_sym(rng, 2 * d, pd=False))
        conj = S @ A @ np.linalg.inv(S)
        in_cone = plus_cone_member(A) and plus_cone_member(conj)
        ss = np.linspace(0.0, 0.5, 7)
        curve = [P0 @ expm(s * A) for s in ss]
        forward = is_plus_curve(ss, curve)
        backward = is_plus_curve(ss, [P0 @ expm(-s * A) for s in ss])
        ok = in_cone and forward and not backward
        row = {"trial": i, "d": d, "conjugate_in_cone": in_cone, "plus_curve": forward, "reversed_plus_curve": backward}
        if i < physical:
            prof = _random_profile(rng)
            bump = Bump.centered(prof.period, amplitude=float(rng.uniform(0.3, 1.0)))
            fam = PerturbationFamily(prof, bump, "curvature")
            s_phys = np.linspace(0.0, 0.02, 5)
            mats = []
            for s in s_phys:
                p = fam.at(float(s))
                mats.append(p.Qhat @ integrate_fundamental(p, p.period).end)
            phys = is_plus_curve(s_phys, mats)
            row["bump_family_plus_curve"] = phys
            ok = ok and phys
        row["ok"] = ok
        violations += not ok
        rows.append(row)
    return SuiteResult("plus-curve", seed, trials, tuple(rows), violations, 0.0)


def dichotomy_suite(trials: int = 2, seed: int = 0, periods: int = 50, tol: float = SCAN_TOL) -> SuiteResult:
    """Index-monotonicity scans: the two reference families plus random constant bases.

    A violation is a scan with both arms false, or a reference family whose
    verdict differs from the expected one.
    """
    rng = np.random.default_rng(seed)
    grid = (0.0, 0.05, 0.1, 0.2)
    two_pi = 2 * math.pi
    cases: list[tuple[str, CurvatureProfile, str | None]] = [
        ("K=1", CurvatureProfile.constant(1.0, 1, two_pi, label="K=1"), "index-increasing"),
        ("R=-1", CurvatureProfile.constant(-1.0, 1, two_pi, label="R=-1"), "hyperbolic-window"),
    ]
    for j in range(trials):
        K = float(rng.uniform(0.3, 3.0))
        L = float(rng.uniform(2.0, 8.0))
        cases.append((f"random{j}", CurvatureProfile.constant(K, 1, L, label=f"K={K:.6g}"), None))
    rows = []
    violations = 0
    for name, prof, expected in cases:
        fam = PerturbationFamily(prof, Bump.centered(prof.period), "curvature", grid)
        res = index_monotonicity_scan(fam, periods=periods, tol=tol)
        ok = not res.both_arms_false and (expected is None or res.verdict == expected)
        violations += not ok
        alphas = [r.alpha_bar for r in res.records]
        rows.append(
            {
                "family": name,
                "period": prof.period,
                "verdict": res.verdict,
                "nondecreasing": res.nondecreasing,
                "hyperbolic": res.hyperbolic,
                "alpha_bar_first": alphas[0],
                "alpha_bar_last": alphas[-1],
                "expected": expected,
                "ok": ok,
                "tol": tol,
            }
        )
    return SuiteResult("dichotomy", seed, len(cases), tuple(rows), violations, tol)


SUITES = {
    "sturm": sturm_suite,
    "star": star_suite,
    "plus-curve": plus_curve_suite,
    "dichotomy": dichotomy_suite,
}
