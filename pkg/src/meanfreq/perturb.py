"""Perturbation calculus for Poincare maps of closed geodesics.

Perturbations act on curvature profiles: a curvature bump adds
s*a(t)*I to R(t), and a length bump stretches the geodesic by a
reparametrization that leaves parallel transport unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal, Sequence

import numpy as np
from scipy.integrate import quad, quad_vec, solve_ivp
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from .frequency import mean_frequency
from .jacobi import (
    CurvatureProfile,
    FundamentalSolution,
    IntegrationError,
    integrate_fundamental,
    poincare_map,
    symplectic_inverse,
    symplectic_J,
)

GROUP_TOL = 1e-8
ALGEBRA_TOL = 1e-10
PD_TOL = 1e-10
SCAN_TOL = 2e-3


class NotSymplecticError(ValueError):
    pass


@dataclass(frozen=True)
class SymplecticElement:
    matrix: np.ndarray
    kind: Literal["group", "algebra"] = "group"

    def __post_init__(self):
        M = np.asarray(self.matrix, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] % 2:
            raise NotSymplecticError("symplectic elements are square of even size")
        object.__setattr__(self, "matrix", M)
        J = symplectic_J(M.shape[0] // 2)
        if self.kind == "group":
            defect = np.max(np.abs(M.T @ J @ M - J))
            if defect > GROUP_TOL * max(1.0, np.linalg.norm(M, 2) ** 2):
                raise NotSymplecticError(f"matrix is not symplectic (defect {defect:.3g})")
        elif self.kind == "algebra":
            defect = np.max(np.abs(M.T @ J + J @ M))
            if defect > ALGEBRA_TOL * max(1.0, np.linalg.norm(M, 2)):
                raise NotSymplecticError(f"matrix is not in the symplectic Lie algebra (defect {defect:.3g})")
        else:
            raise ValueError(f"unknown kind {self.kind!r}")

    @property
    def d(self) -> int:
        return self.matrix.shape[0] // 2


def _min_sym_eig(M: np.ndarray) -> tuple[float, float]:
    S = 0.5 * (M + M.T)
    return float(np.linalg.eigvalsh(S)[0]), float(np.linalg.norm(S, 2))


def plus_cone_member(A) -> bool:
    """True iff J A is positive definite (after symmetrization)."""
    el = A if isinstance(A, SymplecticElement) else SymplecticElement(A, "algebra")
    if el.kind != "algebra":
        raise NotSymplecticError("cone membership is defined for Lie algebra elements")
    lo, _ = _min_sym_eig(symplectic_J(el.d) @ el.matrix)
    return lo > PD_TOL


def is_plus_curve(s_values: Sequence[float], matrices: Sequence) -> bool:
    """Central-difference test of J P^{-1} dP/ds > 0 at every interior sample."""
    s = np.asarray(s_values, dtype=float)
    if s.ndim != 1 or len(s) < 3:
        raise ValueError("need at least three samples")
    if np.any(np.diff(s) <= 0):
        raise ValueError("parameter samples must be strictly increasing")
    mats = [m.matrix if isinstance(m, SymplecticElement) else SymplecticElement(m).matrix for m in matrices]
    if len(mats) != len(s):
        raise ValueError("one matrix per parameter sample")
    J = symplectic_J(mats[0].shape[0] // 2)
    for k in range(1, len(s) - 1):
        dP = (mats[k + 1] - mats[k - 1]) / (s[k + 1] - s[k - 1])
        lo, norm = _min_sym_eig(J @ symplectic_inverse(mats[k]) @ dP)
        if not (norm > 0 and lo > PD_TOL * norm):
            return False
    return True


@dataclass(frozen=True)
class Bump:
    """C^2 plateau bump: value ``amplitude`` for |t - center| <= eta, zero beyond 2*eta.

    Extended periodically with period ``period``.
    """

    center: float
    eta: float
    period: float
    amplitude: float = 1.0

    def __post_init__(self):
        if self.eta <= 0:
            raise ValueError("eta must be positive")
        if not (0.0 <= self.amplitude <= 1.0):
            raise ValueError("amplitude must lie in [0, 1]")
        lo, hi = self.support
        if not (0.0 < lo and hi < self.period):
            raise ValueError("bump support must lie strictly inside (0, period)")

    @classmethod
    def centered(cls, period: float, eta: float | None = None, amplitude: float = 1.0) -> "Bump":
        return cls(0.5 * period, period / 16.0 if eta is None else eta, period, amplitude)

    @property
    def support(self) -> tuple[float, float]:
        return self.center - 2 * self.eta, self.center + 2 * self.eta

    @property
    def plateau(self) -> tuple[float, float]:
        return self.center - self.eta, self.center + self.eta

    def __call__(self, t: float) -> float:
        u = abs((t - self.center + 0.5 * self.period) % self.period - 0.5 * self.period)
        if u <= self.eta:
            return self.amplitude
        if u >= 2 * self.eta:
            return 0.0
        x = (2 * self.eta - u) / self.eta
        return self.amplitude * x * x * x * (10.0 + x * (-15.0 + 6.0 * x))


@dataclass(frozen=True)
class PerturbationFamily:
    base: CurvatureProfile
    bump: Callable[[float], float]
    kind: Literal["curvature", "length"] = "curvature"
    s_grid: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("curvature", "length"):
            raise ValueError(f"unknown perturbation kind {self.kind!r}")
        object.__setattr__(self, "s_grid", tuple(float(s) for s in self.s_grid))

    def at(self, s: float) -> CurvatureProfile:
        if self.kind == "curvature":
            return apply_curvature_bump(self, s)
        return length_bump(self.base, s, self.bump)

    def breakpoints(self) -> list[float]:
        if isinstance(self.bump, Bump):
            return [*self.bump.support, *self.bump.plateau]
        return []


def _check_s(s: float) -> None:
    if s < 0:
        raise ValueError("perturbation parameter must be nonnegative")


def apply_curvature_bump(family: PerturbationFamily, s: float) -> CurvatureProfile:
    _check_s(s)
    base = family.base
    if s == 0:
        return base
    a = family.bump
    eye = np.eye(base.dim)
    lo, hi = base.eigen_range()
    amp = getattr(a, "amplitude", 1.0)
    return CurvatureProfile(
        base.dim,
        base.period,
        lambda t: base(t) + (s * a(t)) * eye,
        holonomy=base.holonomy,
        label=f"{base.label}+bump({s:g})",
        _kbounds=(lo, hi + s * amp),
    )


# first-order formula -------------------------------------------------------


@dataclass(frozen=True)
class StarForm:
    form: np.ndarray
    min_eig: float
    symmetry_defect: float

    @property
    def positive_definite(self) -> bool:
        return self.min_eig > PD_TOL * max(1.0, float(np.linalg.norm(self.form, 2)))


def star_derivative(
    profile: CurvatureProfile,
    tau: Callable[[float], np.ndarray | float],
    fundamental: FundamentalSolution | None = None,
    ell: float | None = None,
    breakpoints: Sequence[float] = (),
    psd_samples: int = 257,
) -> StarForm:
    """Integral over [0, ell] of X0^T blockdiag(tau, 0) X0.

    For R_s = R + s*tau this equals J X_0(ell)^{-1} dX_s(ell)/ds at s = 0.

    ``tau`` returns a symmetric positive semidefinite (d, d) matrix or a
    scalar multiple of the identity.
    """
    d = profile.dim
    ell = profile.period if ell is None else ell
    if fundamental is None or fundamental.T < ell:
        fundamental = integrate_fundamental(profile, ell)

    def tau_mat(t):
        v = np.asarray(tau(t), dtype=float)
        return v * np.eye(d) if v.ndim == 0 else v.reshape(d, d)

    for t in np.linspace(0.0, ell, psd_samples):
        if np.linalg.eigvalsh(0.5 * (tau_mat(t) + tau_mat(t).T))[0] < -1e-12:
            raise ValueError(f"tau is not positive semidefinite at t={t:.6g}")

    def integrand(t):
        X = fundamental(t)
        top = X[:d]
        return top.T @ tau_mat(t) @ top

    pts = sorted(p for p in breakpoints if 0.0 < p < ell)
    form, _ = quad_vec(integrand, 0.0, ell, epsabs=1e-13, epsrel=1e-11, points=pts or None, limit=400)
    defect = float(np.max(np.abs(form - form.T)))
    form = 0.5 * (form + form.T)
    return StarForm(form, float(np.linalg.eigvalsh(form)[0]), defect)


def _stacked_endpoints(profile: CurvatureProfile, bump, hs: Sequence[float], ell: float, rtol: float = 1e-12) -> np.ndarray:
    """X_h(ell) for every h in ``hs`` from one stacked integration.

    Sharing the step sequence keeps the integration error correlated across
    the family, so differences X_h - X_0 are accurate well below the
    single-run tolerance.
    """
    d = profile.dim
    n = 2 * d
    k = len(hs)
    eye = np.eye(d)

    def rhs(t, y):
        Y = y.reshape(k, n, n)
        out = np.empty_like(Y)
        R = profile(t)
        a = bump(t)
        for i, h in enumerate(hs):
            out[i, :d] = Y[i, d:]
            out[i, d:] = -(R + (h * a) * eye) @ Y[i, :d]
        return out.reshape(-1)

    y0 = np.tile(np.eye(n), (k, 1, 1)).reshape(-1)
    res = solve_ivp(rhs, (0.0, ell), y0, method="DOP853", rtol=rtol, atol=rtol)
    if res.status != 0:
        raise IntegrationError(f"stacked integration failed: {res.message}")
    return res.y[:, -1].reshape(k, n, n)


def star_consistency_check(profile: CurvatureProfile, family: PerturbationFamily, ds: float) -> float:
    """Relative Frobenius gap between the integral formula and a finite difference.

    The finite difference J X_0(ell)^{-1} (X_h(ell) - X_0(ell)) / h uses the
    one-sided family at h = ds and ds/2 combined by Richardson extrapolation.
    """
    if not (1e-6 < ds < 1e-2):
        raise ValueError("ds must lie in (1e-6, 1e-2)")
    if family.kind != "curvature":
        raise ValueError("the consistency check applies to curvature bumps")
    ell = profile.period
    J = symplectic_J(profile.dim)
    X0, Xhalf, Xfull = _stacked_endpoints(profile, family.bump, (0.0, 0.5 * ds, ds), ell)
    X0inv = symplectic_inverse(X0)
    numeric = 2.0 * (J @ X0inv @ (Xhalf - X0) / (0.5 * ds)) - J @ X0inv @ (Xfull - X0) / ds
    fam = PerturbationFamily(profile, family.bump, "curvature")
    analytic = star_derivative(profile, family.bump, ell=ell, breakpoints=fam.breakpoints()).form
    scale = np.linalg.norm(analytic)
    gap = np.linalg.norm(numeric - analytic)
    if scale == 0.0:
        return float(gap)
    return float(gap / scale)


# length bump -------------------------------------------------------------


def length_bump(profile: CurvatureProfile, s: float, bump: Callable[[float], float] | None = None) -> CurvatureProfile:
    """Stretch the geodesic to length L + s without changing parallel transport.

    The metric along the geodesic gains (1 + c*a(t)) dt^2 in the tangent
    direction. Arclength then runs at rate sqrt(1 + c*a) and the transverse
    curvature becomes R / (1 + c*a). The constant c is chosen so that the
    new length is exactly L + s.
    """
    _check_s(s)
    if s == 0:
        return profile
    L = profile.period
    a = bump or Bump.centered(L)
    pts = [*a.support, *a.plateau] if isinstance(a, Bump) else None

    def length(c):
        val, _ = quad(lambda t: math.sqrt(1.0 + c * a(t)), 0.0, L, points=pts, epsabs=1e-13, epsrel=1e-12, limit=400)
        return val

    hi = 1.0
    while length(hi) < L + s:
        hi *= 2.0
        if hi > 1e12:
            raise ValueError("bump support too small to reach the requested length")
    c = brentq(lambda c: length(c) - L - s, 0.0, hi, xtol=1e-14, rtol=1e-14)

    nodes = 4096
    ts = np.linspace(0.0, L, nodes + 1)
    x, w = np.polynomial.legendre.leggauss(8)
    h = ts[1] - ts[0]
    rate = lambda t: np.sqrt(1.0 + c * np.vectorize(a)(t))
    seg = 0.5 * h * (rate((0.5 * (ts[:-1] + ts[1:]))[:, None] + 0.5 * h * x[None, :]) @ w)
    sig = np.concatenate([[0.0], np.cumsum(seg)])
    new_L = L + s
    sig *= new_L / sig[-1]
    inverse = CubicHermiteSpline(sig, ts, 1.0 / rate(ts))

    def t_of(sigma):
        k, r = divmod(sigma, new_L)
        return float(inverse(r)) + k * L

    def R(sigma):
        t = t_of(sigma)
        return profile(t) / (1.0 + c * a(t))

    lo, hi_k = profile.eigen_range()
    return CurvatureProfile(
        profile.dim,
        new_L,
        R,
        holonomy=profile.holonomy,
        label=f"{profile.label}+stretch({s:g})",
        _kbounds=(min(lo, lo / (1 + c)), max(hi_k, hi_k / (1 + c))),
    )


# dichotomy scan ------------------------------------------------------------


@dataclass(frozen=True)
class ScanRecord:
    s: float
    alpha_bar: float
    average_index: float
    unit_circle_flag: bool
    converged: bool


@dataclass(frozen=True)
class ScanResult:
    records: tuple[ScanRecord, ...]
    nondecreasing: bool
    strictly_increasing: bool
    hyperbolic: bool
    verdict: Literal["index-increasing", "hyperbolic-window", "inconclusive"]
    tolerance: float = SCAN_TOL

    @property
    def both_arms_false(self) -> bool:
        return not (self.nondecreasing or self.hyperbolic)

    @property
    def contradiction(self) -> bool:
        """Both arms fail although every estimate converged."""
        return self.both_arms_false and all(r.converged for r in self.records)


def index_monotonicity_scan(
    family: PerturbationFamily,
    s_grid: Sequence[float] | None = None,
    periods: int = 50,
    tol: float = SCAN_TOL,
) -> ScanResult:
    grid = tuple(family.s_grid if s_grid is None else s_grid)
    if not grid or grid[0] != 0 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("s_grid must start at 0 and increase strictly")
    L0 = family.base.period
    records = []
    for s in grid:
        prof = family.at(s)
        est = mean_frequency(prof, periods)
        pd = poincare_map(prof)
        records.append(ScanRecord(s, est.mean_frequency, est.average_index, pd.unit_circle_flag, est.converged))
    # average index per unit of base length; equals the mean frequency for curvature bumps
    vals = [r.average_index / L0 for r in records]
    steps = [b - a for a, b in zip(vals, vals[1:])]
    nondecreasing = all(st >= -tol for st in steps)
    strictly = all(st > tol for st in steps)
    hyperbolic = all(not r.unit_circle_flag for r in records if r.s > 0)
    if hyperbolic:
        verdict = "hyperbolic-window"
    elif nondecreasing:
        verdict = "index-increasing"
    else:
        verdict = "inconclusive"
    return ScanResult(tuple(records), nondecreasing, strictly, hyperbolic, verdict, tol)
